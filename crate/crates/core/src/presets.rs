//! The four shipped systems with their reference operating points, figure
//! panel values and analysis ranges.

use crate::circuit::{Circuit, CircuitParams};
use crate::error::{Error, Result};
use crate::io::KeyValues;
use crate::neuron::{InapIkIkm, InapIkIkmParams};
use crate::phase::EqClass;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    ModelA,
    ModelB,
    CircuitA,
    CircuitB,
}

impl SystemKind {
    pub const ALL: [SystemKind; 4] =
        [SystemKind::ModelA, SystemKind::ModelB, SystemKind::CircuitA, SystemKind::CircuitB];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::ModelA => "model-a",
            SystemKind::ModelB => "model-b",
            SystemKind::CircuitA => "circuit-a",
            SystemKind::CircuitB => "circuit-b",
        }
    }

    pub fn is_circuit(self) -> bool {
        matches!(self, SystemKind::CircuitA | SystemKind::CircuitB)
    }

    /// Shipped parameter set, including its reference injected current.
    pub fn system(self) -> AnySystem {
        match self {
            SystemKind::ModelA => AnySystem::Model(InapIkIkm::set_a()),
            SystemKind::ModelB => AnySystem::Model(InapIkIkm::set_b()),
            SystemKind::CircuitA => AnySystem::Circuit(Circuit::circuit_a()),
            SystemKind::CircuitB => AnySystem::Circuit(Circuit::circuit_b()),
        }
    }

    /// Published `(resting, bursting)` injected currents (system units).
    pub fn reference_currents(self) -> (f64, f64) {
        match self {
            SystemKind::ModelA => (4.0, 5.0),
            SystemKind::ModelB => (45.0, 55.0),
            SystemKind::CircuitA => (0.8e-6, 1.2e-6),
            SystemKind::CircuitB => (5e-6, 5.6e-6),
        }
    }

    /// Current at which the shipped system bursts and is dissected. Equal
    /// to the reference bursting current except for circuit B, whose
    /// reconstructed branch only bursts in a narrow band found by scanning
    /// (see [`crate::presets::scan_currents`]).
    pub fn operating_current(self) -> f64 {
        match self {
            SystemKind::CircuitB => 71e-6,
            other => other.reference_currents().1,
        }
    }

    /// Frozen slow values of the four nullcline panels.
    pub fn panel_values(self) -> [f64; 4] {
        match self {
            SystemKind::ModelA => [-0.05, 0.05, 0.062, 0.07],
            SystemKind::ModelB => [0.055, 0.065, 0.14, 0.15],
            SystemKind::CircuitA => [1.12, 1.16, 1.227, 1.23],
            SystemKind::CircuitB => [0.61, 0.62, 0.6583, 0.66],
        }
    }

    /// Equilibria described for each panel, left to right in the membrane
    /// variable.
    pub fn panel_narratives(self) -> [Vec<EqClass>; 4] {
        use EqClass::*;
        let three = || vec![StableNode, Saddle, UnstableFocus];
        match self {
            SystemKind::ModelA | SystemKind::CircuitA => [vec![UnstableFocus], three(), three(), three()],
            SystemKind::ModelB | SystemKind::CircuitB => {
                [vec![UnstableFocus], vec![StableFocus], vec![StableFocus], vec![StableFocus]]
            }
        }
    }

    /// Parameter range of the fast-subsystem bifurcation sweep.
    pub fn sweep_range(self) -> (f64, f64) {
        match self {
            SystemKind::ModelA => (-0.05, 0.1),
            SystemKind::ModelB => (0.0, 0.2),
            SystemKind::CircuitA => (1.0, 1.4),
            SystemKind::CircuitB => (0.8, 1.3),
        }
    }

    /// Simulated horizon and discarded transient (system time units).
    pub fn horizon(self) -> (f64, f64) {
        match self {
            SystemKind::ModelA => (400.0, 100.0),
            SystemKind::ModelB => (1000.0, 100.0),
            SystemKind::CircuitA => (0.5, 0.1),
            SystemKind::CircuitB => (1.5, 0.1),
        }
    }

    /// Reference burster type, as `(onset, offset)`.
    pub fn expected_label(self) -> &'static str {
        match self {
            SystemKind::ModelA | SystemKind::CircuitA => "(saddle-node off invariant circle, saddle homoclinic orbit)",
            SystemKind::ModelB | SystemKind::CircuitB => "(subcritical Andronov-Hopf, fold limit cycle)",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidConfig(format!("unknown system `{s}` (model-a, model-b, circuit-a, circuit-b)"))
        })
    }
}

/// Either family of shipped system.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySystem {
    Model(InapIkIkm),
    Circuit(Circuit),
}

/// Runs `$body` with `$v` bound to the concrete system.
#[macro_export]
macro_rules! with_system {
    ($sys:expr, $v:ident => $body:expr) => {
        match $sys {
            $crate::presets::AnySystem::Model($v) => $body,
            $crate::presets::AnySystem::Circuit($v) => $body,
        }
    };
}

impl AnySystem {
    /// Overlays config entries on this system's parameters.
    pub fn with_overrides(&self, kv: &KeyValues) -> Result<Self> {
        Ok(match self {
            AnySystem::Model(m) => AnySystem::Model(InapIkIkm::new(InapIkIkmParams::from_key_values(kv, Some(&m.p))?)?),
            AnySystem::Circuit(c) => AnySystem::Circuit(Circuit::new(CircuitParams::from_key_values(kv, Some(&c.p))?)?),
        })
    }

    /// A complete config of either family; the family is recognised from
    /// its keys.
    pub fn from_full_config(kv: &KeyValues) -> Result<Self> {
        if kv.get("g_M").is_some() {
            Ok(AnySystem::Model(InapIkIkm::new(InapIkIkmParams::from_key_values(kv, None)?)?))
        } else if kv.get("C1").is_some() {
            Ok(AnySystem::Circuit(Circuit::new(CircuitParams::from_key_values(kv, None)?)?))
        } else {
            Err(Error::InvalidConfig("custom system config needs either g_M (model) or C1 (circuit)".into()))
        }
    }

    pub fn to_config_string(&self) -> String {
        match self {
            AnySystem::Model(m) => m.p.to_config_string(),
            AnySystem::Circuit(c) => c.p.to_config_string(),
        }
    }

    pub fn with_current(&self, i: f64) -> Self {
        use crate::slowfast::SlowFast;
        with_system!(self, s => s.with_current(i).into())
    }
}

impl From<InapIkIkm> for AnySystem {
    fn from(m: InapIkIkm) -> Self {
        AnySystem::Model(m)
    }
}

impl From<Circuit> for AnySystem {
    fn from(c: Circuit) -> Self {
        AnySystem::Circuit(c)
    }
}

/// Burst verdict of the full system at each current: `(current, bursts with
/// at least two spikes)` over the preset horizon.
pub fn scan_currents(kind: SystemKind, currents: &[f64]) -> Result<Vec<(f64, usize)>> {
    let (t_end, transient) = kind.horizon();
    let sys = kind.system();
    currents
        .iter()
        .map(|&i| {
            let s = sys.with_current(i);
            let (_, r) = with_system!(&s, x => crate::burst::simulate_and_analyze(x, t_end, transient))?;
            Ok((i, r.segmentation.bursts.iter().filter(|b| b.len() >= 2).count()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slowfast::SlowFast;

    #[test]
    fn names_round_trip() {
        for k in SystemKind::ALL {
            assert_eq!(k.name().parse::<SystemKind>().unwrap(), k);
        }
        assert!("model-c".parse::<SystemKind>().is_err());
    }

    #[test]
    fn overrides_and_full_configs() {
        let kv = KeyValues::parse("I = 4\n").unwrap();
        let s = SystemKind::ModelA.system().with_overrides(&kv).unwrap();
        assert_eq!(with_system!(&s, x => x.injected_current()), 4.0);
        let full = KeyValues::parse(&SystemKind::CircuitB.system().to_config_string()).unwrap();
        assert_eq!(AnySystem::from_full_config(&full).unwrap(), SystemKind::CircuitB.system());
        assert!(AnySystem::from_full_config(&KeyValues::parse("x = 1\n").unwrap()).is_err());
        let bad = KeyValues::parse("C1 = 1\n").unwrap();
        assert!(SystemKind::ModelA.system().with_overrides(&bad).is_err());
    }

    #[test]
    fn panels_lie_in_sweep_ranges_for_the_models() {
        for k in [SystemKind::ModelA, SystemKind::ModelB] {
            let (a, b) = k.sweep_range();
            assert!(k.panel_values().iter().all(|v| (a..=b).contains(v)));
        }
    }
}
