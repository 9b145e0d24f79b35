//! Scans the injected current of a system and reports where the full model
//! rests, bursts or fires tonically.
//!
//! ```text
//! cargo run --release --example scan_currents -- circuit-b 60e-6 80e-6 11
//! ```

use burstdissect::presets::{scan_currents, SystemKind};

fn main() -> burstdissect::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: SystemKind = args.first().map_or("circuit-b", String::as_str).parse()?;
    let (rest, burst) = kind.reference_currents();
    let arg = |k: usize, d: f64| args.get(k).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (a, b) = (arg(1, rest), arg(2, kind.operating_current()));
    let n = arg(3, 6.0).max(2.0) as usize;
    let currents: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    println!("{kind}: reference currents rest {rest:e}, burst {burst:e}");
    for (i, bursts) in scan_currents(kind, &currents)? {
        println!("  I = {i:.4e}: {bursts} bursts of two or more spikes");
    }
    Ok(())
}
