//! Sweeps the output voltage of each circuit's negative-differential-resistance
//! branch and reports the turning points of its N-shaped current curve.
//!
//! ```text
//! cargo run --release --example circuit_nndr
//! ```

use burstdissect::circuit::{nndr_current, CircuitParams};

fn main() -> burstdissect::Result<()> {
    for (name, p) in [("circuit-a", CircuitParams::circuit_a()), ("circuit-b", CircuitParams::circuit_b())] {
        let b = &p.nndr;
        let n = 10_000;
        let vs: Vec<f64> = (0..=n).map(|k| b.v_dc * k as f64 / n as f64).collect();
        let is: Vec<f64> = vs.iter().map(|&v| nndr_current(b, v)).collect::<Result<_, _>>()?;
        println!("{name}: v_dc = {} V", b.v_dc);
        for k in 1..n {
            let (a, c, d) = (is[k - 1], is[k], is[k + 1]);
            if c > a && c >= d {
                println!("  local maximum {:.4e} A at v_out = {:.4} V", c, vs[k]);
            } else if c < a && c <= d {
                println!("  local minimum {:.4e} A at v_out = {:.4} V", c, vs[k]);
            }
        }
        println!("  {:.4e} A at v_out = 0, {:.4e} A at v_out = v_dc", is[0], is[n]);
    }
    Ok(())
}
