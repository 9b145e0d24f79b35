//! Fast-subsystem phase portraits at the four reference frozen values of a
//! system: nullclines, classified equilibria and limit cycles, as CSV and SVG.
//!
//! ```text
//! cargo run --release --example phase_portrait -- model-b [out-dir]
//! ```

use burstdissect::cli::run;
use burstdissect::presets::SystemKind;

fn main() {
    let system = std::env::args().nth(1).unwrap_or_else(|| "model-a".into());
    let out = std::env::args().nth(2).unwrap_or_else(|| format!("out/phase_portrait/{system}"));
    let kind: SystemKind = match system.parse() {
        Ok(k) => k,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let flag = if kind.is_circuit() { "--vgs2" } else { "--nM" };
    let values: Vec<String> = kind.panel_values().iter().map(|v| v.to_string()).collect();
    let code = run(["burstdissect", "phase", "--system", &system, flag, &values.join(","), "--out", &out, "--svg"]);
    std::process::exit(code);
}
