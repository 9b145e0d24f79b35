//! End-to-end dissection of all four systems: bifurcation diagram, burster
//! label, and the cross-check of predicted against measured subthreshold
//! oscillations.
//!
//! ```text
//! cargo run --release --example dissect
//! ```

use burstdissect::bifurcation::{build_diagram, classify_burster, AnalysisOptions};
use burstdissect::burst::simulate_and_analyze;
use burstdissect::presets::SystemKind;
use burstdissect::with_system;

fn main() -> burstdissect::Result<()> {
    for kind in SystemKind::ALL {
        let sys = kind.system().with_current(kind.operating_current());
        let range = kind.sweep_range();
        let (t_end, transient) = kind.horizon();
        let (d, r) = with_system!(&sys, s => {
            let d = build_diagram(s, range, 300, &AnalysisOptions::for_system(s, range))?;
            (d, simulate_and_analyze(s, t_end, transient)?.1)
        });
        let class = classify_burster(&d);
        println!("{kind}: {}", class.label());
        println!(
            "  predicted oscillations ({}, {}), measured ({:?}, {:?}) over {} bursts",
            class.onset_oscillations,
            class.offset_oscillations,
            r.stats.onset_oscillations,
            r.stats.offset_oscillations,
            r.stats.n_bursts
        );
        for note in &class.diagnostics {
            println!("  note: {note}");
        }
    }
    Ok(())
}
