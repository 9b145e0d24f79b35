//! Fast-subsystem bifurcation diagram of one system at its operating current:
//! equilibrium and cycle branches, located bifurcations, bistable intervals.
//!
//! ```text
//! cargo run --release --example bifurcation_diagram -- circuit-a [out-dir]
//! ```

use burstdissect::bifurcation::{build_diagram, AnalysisOptions};
use burstdissect::presets::SystemKind;
use burstdissect::slowfast::SlowFast;
use burstdissect::with_system;
use std::path::PathBuf;

fn main() -> burstdissect::Result<()> {
    let kind: SystemKind = std::env::args().nth(1).unwrap_or_else(|| "model-b".into()).parse()?;
    let out = PathBuf::from(std::env::args().nth(2).unwrap_or_else(|| format!("out/bifurcation_diagram/{kind}")));
    let sys = kind.system().with_current(kind.operating_current());
    let range = kind.sweep_range();
    let d = with_system!(&sys, s => build_diagram(s, range, 300, &AnalysisOptions::for_system(s, range)))?;
    for br in &d.sweep.branches {
        let (a, b) = (br.points.first().unwrap().param, br.points.last().unwrap().param);
        println!("equilibrium branch over [{a:.4}, {b:.4}]");
    }
    for c in &d.cycles {
        let (a, b) = c.param_range();
        println!("{} cycle branch over [{a:.4}, {b:.4}]", c.stability);
    }
    for p in &d.points {
        println!("{} at {} = {:.6} (bracket width {:.1e})", p.kind, d.parameter, p.param, p.bracket.1 - p.bracket.0);
    }
    for (lo, hi) in &d.bistable {
        println!("bistable for {lo:.4} < {} < {hi:.4}", d.parameter);
    }
    d.write_csv(&out)?;
    println!("branches in {} (I = {:e})", out.display(), with_system!(&sys, s => s.injected_current()));
    Ok(())
}
