//! Spike, burst and subthreshold-oscillation statistics of all four systems
//! at their operating currents.
//!
//! ```text
//! cargo run --release --example burst_metrics
//! ```

use burstdissect::burst::simulate_and_analyze;
use burstdissect::presets::SystemKind;
use burstdissect::with_system;

fn main() -> burstdissect::Result<()> {
    for kind in SystemKind::ALL {
        let (t_end, transient) = kind.horizon();
        let sys = kind.system().with_current(kind.operating_current());
        let (_, r) = with_system!(&sys, s => simulate_and_analyze(s, t_end, transient))?;
        let st = &r.stats;
        println!("{kind} (threshold {:.4}):", r.train.threshold);
        println!("  {} spikes, {} bursts, spikes per burst {:?}", st.n_spikes, st.n_bursts, st.spikes_per_burst);
        if let (Some(p), Some(d)) = (st.burst_period, st.duty_cycle) {
            println!("  burst period {p:.3} ms, duty cycle {d:.3}");
        }
        println!(
            "  oscillations at onset {:?} ({}/{}), at offset {:?} ({}/{})",
            st.onset_oscillations,
            st.onset_counts.0,
            st.onset_counts.1,
            st.offset_oscillations,
            st.offset_counts.0,
            st.offset_counts.1
        );
    }
    Ok(())
}
