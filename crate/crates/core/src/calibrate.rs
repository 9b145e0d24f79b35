//! Fitting the M-current conductance `g_M`, which neither reference parameter set
//! provides.
//!
//! The fast subsystem sees `g_M` and the frozen `nM` only through the
//! product `u = g_M·nM`, so its bifurcations sit at `nM = c/g_M` for fixed
//! locations `c` in `u`. One diagram at `g_M = 1` therefore serves the whole
//! search; only the rest/burst feasibility check needs per-candidate
//! simulation.

use crate::bifurcation::{build_diagram, AnalysisOptions, BifurcationKind};
use crate::burst::simulate_and_analyze;
use crate::error::{Error, Result};
use crate::neuron::{InapIkIkm, InapIkIkmParams};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTargets {
    /// Target bifurcation locations in `nM`.
    pub locations: Vec<(BifurcationKind, f64)>,
    pub rest_current: f64,
    pub burst_current: f64,
    /// Simulated horizon and discarded transient for the feasibility check.
    pub horizon: f64,
    pub transient: f64,
    pub min_bursts: usize,
    pub min_spikes: usize,
}

impl CalibrationTargets {
    /// Fold near 0.01 and homoclinic orbit near 0.065; rest at 4, bursting at 5.
    pub fn set_a() -> Self {
        Self {
            locations: vec![(BifurcationKind::SaddleNode, 0.01), (BifurcationKind::SaddleHomoclinic, 0.065)],
            rest_current: 4.0,
            burst_current: 5.0,
            horizon: 400.0,
            transient: 100.0,
            min_bursts: 3,
            min_spikes: 2,
        }
    }

    /// Subcritical Hopf near 0.06; rest at 45, bursting at 55.
    pub fn set_b() -> Self {
        Self {
            locations: vec![(BifurcationKind::SubcriticalHopf, 0.06)],
            rest_current: 45.0,
            burst_current: 55.0,
            horizon: 1000.0,
            transient: 100.0,
            min_bursts: 3,
            min_spikes: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.locations.is_empty() {
            return Err(Error::CalibrationFailed("no target locations".into()));
        }
        for (i, a) in self.locations.iter().enumerate() {
            for b in &self.locations[i + 1..] {
                if (a.1 - b.1).abs() < 1e-12 {
                    return Err(Error::CalibrationFailed(format!(
                        "targets {} and {} coincide at nM = {}; a bistable window needs distinct ends",
                        a.0, b.0, a.1
                    )));
                }
            }
        }
        let ends: Vec<f64> = self.locations.iter().map(|l| l.1).collect();
        let order = |k: BifurcationKind| self.locations.iter().find(|l| l.0 == k).map(|l| l.1);
        if let (Some(on), Some(off)) = (
            order(BifurcationKind::SaddleNode).or(order(BifurcationKind::SubcriticalHopf)),
            order(BifurcationKind::SaddleHomoclinic).or(order(BifurcationKind::FoldLimitCycle)),
        ) {
            if on >= off {
                return Err(Error::CalibrationFailed(format!("onset target {on} must lie below offset target {off}")));
            }
        }
        if ends.iter().any(|x| !x.is_finite()) || !(self.rest_current < self.burst_current) {
            return Err(Error::CalibrationFailed(
                "targets must be finite with rest current below burst current".into(),
            ));
        }
        Ok(())
    }
}

/// Search space and the diagram in `u = g_M·nM`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub g_range: (f64, f64),
    pub grid_points: usize,
    pub u_range: (f64, f64),
    pub u_steps: usize,
    pub golden_tol: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { g_range: (0.1, 100.0), grid_points: 60, u_range: (-0.2, 1.0), u_steps: 600, golden_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub g_m: f64,
    pub mismatch: f64,
    pub rests: bool,
    pub bursts: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub g_m: f64,
    pub mismatch: f64,
    /// `(kind, target nM, achieved nM)`.
    pub achieved: Vec<(BifurcationKind, f64, f64)>,
    /// Bifurcations of the fast subsystem in `u`.
    pub u_points: Vec<(BifurcationKind, f64)>,
    pub grid: Vec<GridRow>,
    pub rests: bool,
    pub bursts: bool,
}

impl CalibrationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "g_M = {:.6}", self.g_m);
        let _ = writeln!(s, "squared location mismatch = {:.6e}", self.mismatch);
        let _ = writeln!(s, "rest at low current: {}; bursting at high current: {}", self.rests, self.bursts);
        let _ = writeln!(s, "\nlocations in nM (target, achieved):");
        for (k, t, a) in &self.achieved {
            let _ = writeln!(s, "  {k}: {t} -> {a:.6}");
        }
        let _ = writeln!(s, "\nfast-subsystem bifurcations in u = g_M*nM:");
        for (k, u) in &self.u_points {
            let _ = writeln!(s, "  {k}: u = {u:.6} (nM = {:.6})", u / self.g_m);
        }
        let _ = writeln!(s, "\ngrid: g_M, mismatch, rests, bursts");
        for r in &self.grid {
            let _ = writeln!(s, "  {:.6e}, {:.6e}, {}, {}", r.g_m, r.mismatch, r.rests, r.bursts);
        }
        s
    }
}

/// Locations in `u` of the fast-subsystem bifurcations at `g_M = 1`.
pub fn u_bifurcations(
    base: &InapIkIkmParams,
    current: f64,
    opts: &CalibrationOptions,
) -> Result<Vec<(BifurcationKind, f64)>> {
    let sys = InapIkIkm::new(base.clone().with_g_m(1.0).with_current(current))?;
    let a = AnalysisOptions::for_system(&sys, opts.u_range);
    let d = build_diagram(&sys, opts.u_range, opts.u_steps, &a)?;
    Ok(d.points.iter().map(|p| (p.kind, p.param)).collect())
}

fn same_family(a: BifurcationKind, b: BifurcationKind) -> bool {
    a == b || (a.is_hopf() && b.is_hopf())
}

/// Squared mismatch at `g` and the achieved locations; `None` when a target
/// kind has no detected counterpart.
fn mismatch(targets: &CalibrationTargets, u_points: &[(BifurcationKind, f64)], g: f64) -> Option<(f64, Vec<f64>)> {
    let mut total = 0.0;
    let mut got = Vec::new();
    for (kind, target) in &targets.locations {
        let best = u_points
            .iter()
            .filter(|(k, _)| same_family(*k, *kind))
            .map(|(_, u)| u / g)
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))?;
        total += (best - target).powi(2);
        got.push(best);
    }
    Some((total, got))
}

fn feasibility(base: &InapIkIkmParams, g: f64, t: &CalibrationTargets) -> Result<(bool, bool)> {
    let p = base.clone().with_g_m(g);
    let (_, rest) =
        simulate_and_analyze(&InapIkIkm::new(p.clone().with_current(t.rest_current))?, t.horizon, t.transient)?;
    let (_, burst) = simulate_and_analyze(&InapIkIkm::new(p.with_current(t.burst_current))?, t.horizon, 0.0)?;
    Ok((rest.is_resting(), burst.is_bursting(t.min_bursts, t.min_spikes)))
}

/// Logarithmic grid search over `g_M` followed by golden-section refinement
/// of the location mismatch, restricted to candidates that rest at the low
/// current and burst at the high one.
pub fn calibrate_g_m(
    base: &InapIkIkmParams,
    targets: &CalibrationTargets,
    opts: &CalibrationOptions,
) -> Result<CalibrationReport> {
    targets.validate()?;
    let u_points = u_bifurcations(base, targets.burst_current, opts)?;
    let (g0, g1) = opts.g_range;
    let n = opts.grid_points.max(2);
    let mut grid = Vec::with_capacity(n);
    for k in 0..n {
        let g = g0 * (g1 / g0).powf(k as f64 / (n - 1) as f64);
        let m = mismatch(targets, &u_points, g).map_or(f64::INFINITY, |m| m.0);
        let (rests, bursts) = feasibility(base, g, targets)?;
        grid.push(GridRow { g_m: g, mismatch: m, rests, bursts });
    }
    let best = grid
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rests && r.bursts && r.mismatch.is_finite())
        .min_by(|a, b| a.1.mismatch.total_cmp(&b.1.mismatch))
        .map(|(i, _)| i);
    let Some(i) = best else {
        let report = CalibrationReport {
            g_m: f64::NAN,
            mismatch: f64::INFINITY,
            achieved: Vec::new(),
            u_points,
            grid,
            rests: false,
            bursts: false,
        };
        return Err(Error::CalibrationFailed(format!(
            "no g_M in [{g0}, {g1}] rests at I = {} and bursts at I = {}\n{}",
            targets.rest_current,
            targets.burst_current,
            report.to_text()
        )));
    };

    // Golden section in log g between the grid neighbours.
    let lo = grid[i.saturating_sub(1)].g_m.ln();
    let hi = grid[(i + 1).min(n - 1)].g_m.ln();
    let f = |x: f64| mismatch(targets, &u_points, x.exp()).map_or(f64::INFINITY, |m| m.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > opts.golden_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mut g = (0.5 * (a + b)).exp();
    let (mut rests, mut bursts) = feasibility(base, g, targets)?;
    if !(rests && bursts) || f(g.ln()) > grid[i].mismatch {
        g = grid[i].g_m;
        rests = true;
        bursts = true;
    }
    let (m, got) = mismatch(targets, &u_points, g).expect("best grid point has all kinds");
    Ok(CalibrationReport {
        g_m: g,
        mismatch: m,
        achieved: targets.locations.iter().zip(got).map(|((k, t), a)| (*k, *t, a)).collect(),
        u_points,
        grid,
        rests,
        bursts,
    })
}
