//! Fits the M-current conductance of both model parameter sets and writes
//! `configs/calibration-report.txt`.
//!
//! ```text
//! cargo run --release --example calibrate_gm
//! ```

use burstdissect::calibrate::{calibrate_g_m, CalibrationOptions, CalibrationTargets};
use burstdissect::io::write_atomic;
use burstdissect::neuron::InapIkIkmParams;
use std::path::Path;

fn main() -> burstdissect::Result<()> {
    let opts = CalibrationOptions::default();
    let mut text = String::from("# g_M calibration (regenerate with `cargo run --release --example calibrate_gm`)\n");
    for (name, base, targets) in [
        ("model-a", InapIkIkmParams::set_a(), CalibrationTargets::set_a()),
        ("model-b", InapIkIkmParams::set_b(), CalibrationTargets::set_b()),
    ] {
        let report = calibrate_g_m(&base, &targets, &opts)?;
        println!("{name}: g_M = {:.6} (shipped {:.6})", report.g_m, base.g_m);
        for (k, t, a) in &report.achieved {
            println!("  {k}: target {t}, achieved {a:.6}");
        }
        text.push_str(&format!("\n## {name}\n{}", report.to_text()));
    }
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/calibration-report.txt");
    write_atomic(&path, text.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}
