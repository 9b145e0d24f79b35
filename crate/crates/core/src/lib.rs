//! Simulation and slow-fast dissection of minimal bursting neuron models and
//! MOSFET bursting circuits.
//!
//! The crate is organised along the analysis pipeline:
//!
//! * [`system`]: ODE contract, Runge–Kutta integrators, trajectories.
//! * [`neuron`] and [`circuit`]: the bursting models as 3-D systems.
//! * [`slowfast`]: freezing the slow variable to obtain planar fast subsystems.
//! * [`phase`]: nullclines, equilibria, limit cycles, basins.
//! * [`bifurcation`]: branch sweeps, bifurcation detectors, burster labels.
//! * [`burst`]: spike detection, burst segmentation and statistics.
//! * [`calibrate`]: fitting the M-current conductance.
//! * [`presets`]: the four shipped systems and their reference operating points.
//! * [`cli`]: the `burstdissect` command line.
//!
//! [`io`], [`svg`] and [`numeric`] hold config parsing, plotting and small
//! numerical helpers. The `examples/` directory has one runnable program per
//! capability.

pub mod bifurcation;
pub mod burst;
pub mod calibrate;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod io;
pub mod neuron;
pub mod numeric;
pub mod phase;
pub mod presets;
pub mod slowfast;
pub mod svg;
pub mod system;

pub use error::{Error, Result};
