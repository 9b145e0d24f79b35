//! Integrates both neuron models at their resting and bursting currents and
//! writes the bursting trajectories as CSV.
//!
//! ```text
//! cargo run --release --example simulate_model -- [out-dir]
//! ```

use burstdissect::burst::simulate_and_analyze;
use burstdissect::io::write_atomic;
use burstdissect::presets::SystemKind;
use burstdissect::with_system;
use std::path::PathBuf;

fn main() -> burstdissect::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/simulate_model".into()));
    for kind in [SystemKind::ModelA, SystemKind::ModelB] {
        let (t_end, transient) = kind.horizon();
        let (rest, burst) = kind.reference_currents();
        for i in [rest, burst] {
            let sys = kind.system().with_current(i);
            let (traj, report) = with_system!(&sys, s => simulate_and_analyze(s, t_end, transient))?;
            println!(
                "{kind} I = {i}: {} samples, {} spikes in {} bursts",
                traj.len(),
                report.stats.n_spikes,
                report.stats.n_bursts
            );
            let mut csv = Vec::new();
            traj.write_csv(&mut csv, 1.0)?;
            write_atomic(&out.join(format!("{kind}_I{i}.csv")), &csv)?;
        }
    }
    println!("trajectories in {}", out.display());
    Ok(())
}
