//! Three-variable slow-fast systems and their dissected planar fast
//! subsystems.
//!
//! Every shipped system orders its state as `(membrane, fast gate, slow
//! gate)`. Freezing the third component turns it into a bifurcation
//! parameter of the remaining planar system.

use crate::error::Result;
use crate::phase::Window2D;
use crate::system::DynamicalSystem;

/// A 3-D system whose last state component is slow.
pub trait SlowFast: DynamicalSystem + Clone {
    /// Label of the membrane-potential component.
    fn membrane_label(&self) -> &'static str {
        "V"
    }

    /// Label of the frozen slow component.
    fn slow_label(&self) -> &'static str;

    /// Default window for planar analysis of the fast subsystem.
    fn fast_window(&self) -> Window2D;

    /// Time scale of the fast subsystem, used to size integration budgets.
    fn characteristic_time(&self) -> f64;

    /// Default initial state for full-system simulation.
    fn default_state(&self) -> Vec<f64>;

    /// Multiplier that converts the system's time unit to milliseconds.
    fn time_to_ms(&self) -> f64 {
        1.0
    }

    /// Smallest membrane excursion (system units) counted as spiking.
    fn spike_min_range(&self) -> f64;

    /// Fast/slow time-constant ratio μ.
    fn mu(&self) -> f64;

    /// Injected current (system units).
    fn injected_current(&self) -> f64;

    /// Copy with a different injected current.
    fn with_current(&self, i: f64) -> Self;

    fn fast_subsystem(&self, frozen: f64) -> FastSubsystem<Self> {
        FastSubsystem::new(self.clone(), frozen)
    }
}

/// Planar system on the first two components with the slow variable pinned.
#[derive(Debug, Clone)]
pub struct FastSubsystem<S> {
    base: S,
    frozen: f64,
}

impl<S: DynamicalSystem> FastSubsystem<S> {
    pub fn new(base: S, frozen: f64) -> Self {
        debug_assert_eq!(base.dimension(), 3);
        Self { base, frozen }
    }

    pub fn base(&self) -> &S {
        &self.base
    }

    pub fn frozen(&self) -> f64 {
        self.frozen
    }
}

impl<S: DynamicalSystem> DynamicalSystem for FastSubsystem<S> {
    fn dimension(&self) -> usize {
        2
    }

    fn labels(&self) -> Vec<String> {
        self.base.labels().into_iter().take(2).collect()
    }

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let full = [x[0], x[1], self.frozen];
        let mut d = [0.0; 3];
        self.base.rhs(t, &full, &mut d)?;
        dx[0] = d[0];
        dx[1] = d[1];
        Ok(())
    }

    fn params(&self) -> Vec<(String, f64)> {
        let mut p = self.base.params();
        let slow = self.base.labels().pop().unwrap_or_default();
        p.push((format!("{slow}_frozen"), self.frozen));
        p
    }
}
