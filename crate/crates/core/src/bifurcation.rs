//! One-parameter analysis of fast subsystems with the frozen slow variable as
//! the parameter: equilibrium and cycle branches, localisation of folds,
//! Hopf points, saddle homoclinic orbits and folds of cycles, and the
//! resulting burster classification.

use crate::error::{Error, Result};
use crate::io::{fmt17, write_atomic};
use crate::phase::{
    find_equilibria, find_limit_cycle, newton, rhs_scale, CycleSearch, EqClass, Equilibrium, LimitCycle, Point,
    Stability, Window2D,
};
use crate::slowfast::SlowFast;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BifurcationKind {
    SaddleNode,
    SubcriticalHopf,
    /// Hopf point whose criticality probe failed.
    Hopf,
    SaddleHomoclinic,
    FoldLimitCycle,
}

impl BifurcationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BifurcationKind::SaddleNode => "saddle-node",
            BifurcationKind::SubcriticalHopf => "subcritical Andronov-Hopf",
            BifurcationKind::Hopf => "Andronov-Hopf (criticality undetermined)",
            BifurcationKind::SaddleHomoclinic => "saddle homoclinic orbit",
            BifurcationKind::FoldLimitCycle => "fold limit cycle",
        }
    }

    /// Destroys (or creates) an equilibrium's stability.
    pub fn is_equilibrium_type(self) -> bool {
        matches!(self, BifurcationKind::SaddleNode | BifurcationKind::SubcriticalHopf | BifurcationKind::Hopf)
    }

    pub fn is_hopf(self) -> bool {
        matches!(self, BifurcationKind::SubcriticalHopf | BifurcationKind::Hopf)
    }
}

impl fmt::Display for BifurcationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Diagnostics supporting a located bifurcation.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    /// `(param, min |det J| / ‖J‖²)` over the pair while it exists.
    Fold { det_trend: Vec<(f64, f64)> },
    /// Real parts of the tracked eigenvalues at the bracket ends, and the
    /// unstable cycle found on the stable side, as `(param, amplitude)`.
    Hopf { re_lo: f64, re_hi: f64, unstable_cycle: Option<(f64, f64)> },
    /// `(param, period, min distance to saddle)` on the existing side, and
    /// the period growth ratio.
    Homoclinic { trend: Vec<(f64, f64, f64)>, growth: f64 },
    /// `(param, stable amplitude, unstable amplitude)` on the existing side.
    FoldCycle { gap_trend: Vec<(f64, f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub kind: BifurcationKind,
    pub param: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub evidence: Evidence,
}

/// Shared options for sweeps and detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub window: Window2D,
    pub cycle: CycleSearch,
    /// Absolute localisation tolerance in the parameter.
    pub tol: f64,
    /// Fresh equilibrium seeding cadence in sweep steps.
    pub reseed_every: usize,
    /// Period ratio required to label a cycle loss homoclinic. The period
    /// diverges only logarithmically, so this is modest.
    pub sho_growth: f64,
    /// Cycle-to-saddle distance at the end of the homoclinic bisection, as
    /// a fraction of the distance at the start, below which the saddle
    /// counts as approached.
    pub sho_approach: f64,
    /// Offsets (absolute) from a Hopf point at which the criticality probe
    /// looks for an unstable cycle.
    pub hopf_probe_offsets: Vec<f64>,
    /// Transient periods used when continuing a cycle from a nearby one.
    pub continuation_transient: f64,
}

impl AnalysisOptions {
    /// Defaults for a sweep over `range` on the system's own window.
    pub fn for_system<S: SlowFast>(base: &S, range: (f64, f64)) -> Self {
        let width = (range.1 - range.0).abs();
        Self {
            window: base.fast_window(),
            cycle: CycleSearch::new(base.characteristic_time()),
            tol: 1e-4 * width,
            reseed_every: 10,
            sho_growth: 1.5,
            sho_approach: 0.25,
            hopf_probe_offsets: vec![2e-3 * width, 1e-2 * width, 3e-2 * width],
            continuation_transient: 3.0,
        }
    }

    fn continuation(&self) -> CycleSearch {
        self.cycle.with_transient(self.continuation_transient)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub param: f64,
    pub eq: Equilibrium,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquilibriumBranch {
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclePoint {
    pub param: f64,
    pub cycle: LimitCycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleBranch {
    pub stability: Stability,
    pub points: Vec<CyclePoint>,
}

impl CycleBranch {
    pub fn param_range(&self) -> (f64, f64) {
        (self.points[0].param, self.points[self.points.len() - 1].param)
    }
}

/// Equilibria at every sweep step plus the assembled branches.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSweep {
    pub params: Vec<f64>,
    pub sets: Vec<Vec<Equilibrium>>,
    pub branches: Vec<EquilibriumBranch>,
}

fn sweep_params(range: (f64, f64), steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::Precondition("a sweep needs at least 2 steps".into()));
    }
    if !(range.0.is_finite() && range.1.is_finite()) || range.0 == range.1 {
        return Err(Error::Precondition("sweep range must be finite and non-degenerate".into()));
    }
    Ok((0..steps).map(|k| range.0 + (range.1 - range.0) * k as f64 / (steps - 1) as f64).collect())
}

/// Equilibria at `p`, warm-started from `prev` and, when `fresh`, also
/// seeded from the nullcline grid.
fn equilibria_at<S: SlowFast>(
    base: &S,
    p: f64,
    prev: &[Equilibrium],
    fresh: bool,
    opts: &AnalysisOptions,
) -> Result<Vec<Equilibrium>> {
    let fast = base.fast_subsystem(p);
    let w = &opts.window;
    let mut found: Vec<Equilibrium> = if fresh { find_equilibria(&fast, w)? } else { Vec::new() };
    if !prev.is_empty() {
        let scale = rhs_scale(&fast, &w.with_grid(50, 50)?);
        for e in prev {
            if let Some(x) = newton(&fast, e.location, w, scale) {
                if w.contains(x) && !found.iter().any(|q| w.dist(q.location, x) < 1e-6) {
                    found.push(Equilibrium::at(&fast, x, w)?);
                }
            }
        }
    }
    found.sort_by(|a, b| a.location[0].total_cmp(&b.location[0]).then(a.location[1].total_cmp(&b.location[1])));
    Ok(found)
}

/// Dense sweep of equilibria with warm starts and periodic fresh seeding;
/// branches are linked by nearest-neighbour matching within 5% of the
/// window span.
pub fn sweep_equilibrium_branches<S: SlowFast>(
    base: &S,
    range: (f64, f64),
    steps: usize,
    opts: &AnalysisOptions,
) -> Result<EquilibriumSweep> {
    let params = sweep_params(range, steps)?;
    let mut sets: Vec<Vec<Equilibrium>> = Vec::with_capacity(steps);
    for (k, &p) in params.iter().enumerate() {
        let prev = sets.last().map(Vec::as_slice).unwrap_or(&[]);
        let fresh = k % opts.reseed_every.max(1) == 0 || prev.is_empty();
        sets.push(equilibria_at(base, p, prev, fresh, opts)?);
    }
    let branches = link_branches(&params, &sets, &opts.window);
    Ok(EquilibriumSweep { params, sets, branches })
}

fn link_branches(params: &[f64], sets: &[Vec<Equilibrium>], w: &Window2D) -> Vec<EquilibriumBranch> {
    let gate = 0.05;
    let mut done: Vec<EquilibriumBranch> = Vec::new();
    let mut open: Vec<EquilibriumBranch> = Vec::new();
    for (k, set) in sets.iter().enumerate() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (b, br) in open.iter().enumerate() {
            let last = &br.points[br.points.len() - 1].eq;
            for (e, eq) in set.iter().enumerate() {
                let d = w.dist(last.location, eq.location);
                if d < gate {
                    pairs.push((d, b, e));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut branch_used = vec![false; open.len()];
        let mut eq_used = vec![false; set.len()];
        for (_, b, e) in pairs {
            if branch_used[b] || eq_used[e] {
                continue;
            }
            branch_used[b] = true;
            eq_used[e] = true;
            open[b].points.push(BranchPoint { param: params[k], eq: set[e].clone() });
        }
        let mut still_open = Vec::new();
        for (b, br) in open.into_iter().enumerate() {
            if branch_used[b] {
                still_open.push(br);
            } else {
                done.push(br);
            }
        }
        for (e, eq) in set.iter().enumerate() {
            if !eq_used[e] {
                still_open.push(EquilibriumBranch { points: vec![BranchPoint { param: params[k], eq: eq.clone() }] });
            }
        }
        open = still_open;
    }
    done.extend(open);
    done.sort_by(|a, b| {
        a.points[0]
            .param
            .total_cmp(&b.points[0].param)
            .then(a.points[0].eq.location[0].total_cmp(&b.points[0].eq.location[0]))
    });
    done
}

/// Seeds for a fresh stable-cycle search: unstable equilibria, saddle
/// unstable manifolds, and just outside a known unstable cycle.
fn stable_cycle_seeds(eqs: &[Equilibrium], unstable: Option<&LimitCycle>, w: &Window2D) -> Vec<Point> {
    let s = w.span();
    let mut seeds = Vec::new();
    if let Some(u) = unstable {
        let c = u.centroid();
        let p = u.samples[0];
        seeds.push([c[0] + 1.05 * (p[0] - c[0]), c[1] + 1.05 * (p[1] - c[1])]);
    }
    for e in eqs {
        match e.klass {
            EqClass::UnstableFocus | EqClass::UnstableNode => {
                seeds.push([e.location[0] + 1e-3 * s[0], e.location[1]]);
            }
            EqClass::Saddle => {
                if let Some(v) = e.eigenvectors {
                    let u = v[1];
                    for sign in [1.0, -1.0] {
                        seeds.push([
                            e.location[0] + sign * 1e-2 * s[0] * u[0],
                            e.location[1] + sign * 1e-2 * s[1] * u[1],
                        ]);
                    }
                }
            }
            _ => {}
        }
    }
    seeds
}

/// Seeds for a fresh unstable-cycle search: just off each stable focus.
fn unstable_cycle_seeds(eqs: &[Equilibrium], w: &Window2D) -> Vec<Point> {
    let s = w.span();
    eqs.iter()
        .filter(|e| e.klass == EqClass::StableFocus)
        .map(|e| [e.location[0] + 1e-3 * s[0], e.location[1]])
        .collect()
}

fn search_from<S: SlowFast>(
    base: &S,
    p: f64,
    seeds: &[Point],
    stability: Stability,
    cfg: &CycleSearch,
    opts: &AnalysisOptions,
) -> Option<LimitCycle> {
    let fast = base.fast_subsystem(p);
    seeds.iter().find_map(|s| find_limit_cycle(&fast, &opts.window, *s, stability, cfg).ok())
}

/// Stable and unstable cycle branches by continuation in the parameter.
/// Fresh searches run whenever no branch of a given stability is active.
pub fn sweep_cycle_branches<S: SlowFast>(
    base: &S,
    eq_sweep: &EquilibriumSweep,
    opts: &AnalysisOptions,
) -> Vec<CycleBranch> {
    let mut finished: Vec<CycleBranch> = Vec::new();
    let mut active: [Option<CycleBranch>; 2] = [None, None];
    let cont = opts.continuation();
    for (k, &p) in eq_sweep.params.iter().enumerate() {
        let eqs = &eq_sweep.sets[k];
        let mut unstable_here: Option<LimitCycle> = None;
        for (slot, stability) in [(1usize, Stability::Unstable), (0usize, Stability::Stable)] {
            let continued = active[slot].as_ref().and_then(|br| {
                let prev = &br.points[br.points.len() - 1].cycle;
                // Slow convergence near a fold of cycles: retry with the
                // full transient before closing the branch.
                search_from(base, p, &[prev.samples[0]], stability, &cont, opts)
                    .or_else(|| search_from(base, p, &[prev.samples[0]], stability, &opts.cycle, opts))
            });
            let cycle = match continued {
                Some(c) => Some(c),
                None => {
                    if let Some(br) = active[slot].take() {
                        finished.push(br);
                    }
                    let seeds = match stability {
                        Stability::Stable => stable_cycle_seeds(eqs, unstable_here.as_ref(), &opts.window),
                        Stability::Unstable => unstable_cycle_seeds(eqs, &opts.window),
                    };
                    search_from(base, p, &seeds, stability, &opts.cycle, opts)
                }
            };
            if let Some(c) = cycle {
                if stability == Stability::Unstable {
                    unstable_here = Some(c.clone());
                }
                active[slot]
                    .get_or_insert_with(|| CycleBranch { stability, points: Vec::new() })
                    .points
                    .push(CyclePoint { param: p, cycle: c });
            }
        }
    }
    finished.extend(active.into_iter().flatten());
    finished.sort_by(|a, b| a.points[0].param.total_cmp(&b.points[0].param));
    finished
}

/// Stable and unstable cycles of the fast subsystem at `p`, searched from
/// seeds around the given equilibria.
pub fn cycles_at<S: SlowFast>(base: &S, p: f64, eqs: &[Equilibrium], opts: &AnalysisOptions) -> Vec<LimitCycle> {
    let unstable =
        search_from(base, p, &unstable_cycle_seeds(eqs, &opts.window), Stability::Unstable, &opts.cycle, opts);
    let stable = search_from(
        base,
        p,
        &stable_cycle_seeds(eqs, unstable.as_ref(), &opts.window),
        Stability::Stable,
        &opts.cycle,
        opts,
    );
    stable.into_iter().chain(unstable).collect()
}

fn det_norm(e: &Equilibrium) -> f64 {
    let j = &e.jacobian;
    let n2 = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
    (e.det() / n2.max(f64::MIN_POSITIVE)).abs()
}

fn bisection_budget(width: f64, tol: f64) -> usize {
    ((width / tol).log2().ceil().max(0.0) as usize) + 2
}

/// Fold of equilibria by bisection on the existence of the colliding pair.
pub fn locate_fold<S: SlowFast>(base: &S, bracket: (f64, f64), opts: &AnalysisOptions) -> Result<BifurcationPoint> {
    let count = |p: f64| -> Result<Vec<Equilibrium>> { find_equilibria(&base.fast_subsystem(p), &opts.window) };
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let (e_lo, e_hi) = (count(lo)?, count(hi)?);
    let (n_lo, n_hi) = (e_lo.len(), e_hi.len());
    if n_lo.abs_diff(n_hi) != 2 {
        return Err(Error::InvalidBracket(format!(
            "fold needs equilibrium counts differing by 2 across the bracket, got {n_lo} and {n_hi}"
        )));
    }
    let more_at_lo = n_lo > n_hi;
    let n_more = n_lo.max(n_hi);
    let mut det_trend = vec![if more_at_lo { (lo, min_det(&e_lo)) } else { (hi, min_det(&e_hi)) }];
    let mut iterations = 0;
    let budget = bisection_budget(hi - lo, opts.tol);
    while hi - lo > opts.tol && iterations < budget {
        let mid = 0.5 * (lo + hi);
        let e = count(mid)?;
        let has_pair = e.len() >= n_more;
        if has_pair {
            det_trend.push((mid, min_det(&e)));
        }
        if has_pair == more_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(BifurcationPoint {
        kind: BifurcationKind::SaddleNode,
        param: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
        evidence: Evidence::Fold { det_trend },
    })
}

fn min_det(eqs: &[Equilibrium]) -> f64 {
    eqs.iter().map(det_norm).fold(f64::INFINITY, f64::min)
}

/// Equilibrium at `p` tracked from `near` by Newton.
fn track<S: SlowFast>(base: &S, p: f64, near: Point, opts: &AnalysisOptions) -> Result<Option<Equilibrium>> {
    let fast = base.fast_subsystem(p);
    let w = &opts.window;
    let scale = rhs_scale(&fast, &w.with_grid(50, 50)?);
    match newton(&fast, near, w, scale) {
        Some(x) => Ok(Some(Equilibrium::at(&fast, x, w)?)),
        None => Ok(None),
    }
}

/// Hopf point by bisection on the sign of the focus' real part, with a
/// subcriticality probe for an unstable cycle on the stable side.
pub fn locate_hopf<S: SlowFast>(base: &S, bracket: (f64, f64), opts: &AnalysisOptions) -> Result<BifurcationPoint> {
    let (mut lo, mut hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let w = &opts.window;
    let e_lo = find_equilibria(&base.fast_subsystem(lo), w)?;
    let e_hi = find_equilibria(&base.fast_subsystem(hi), w)?;
    let mut pair = None;
    for a in e_lo.iter().filter(|e| e.det() > 0.0) {
        if let Some(b) = e_hi
            .iter()
            .filter(|e| e.det() > 0.0)
            .min_by(|x, y| w.dist(x.location, a.location).total_cmp(&w.dist(y.location, a.location)))
        {
            let focus_side = a.klass.is_focus() || b.klass.is_focus();
            if a.trace() * b.trace() < 0.0 && focus_side {
                pair = Some((a.clone(), b.clone()));
                break;
            }
        }
    }
    let (a, b) = pair.ok_or_else(|| {
        Error::InvalidBracket("no focus whose eigenvalue real part changes sign across the bracket".into())
    })?;
    let sign_lo = a.trace().signum();
    let mut near = a.location;
    let mut iterations = 0;
    let budget = bisection_budget(hi - lo, opts.tol);
    while hi - lo > opts.tol && iterations < budget {
        let mid = 0.5 * (lo + hi);
        let e = track(base, mid, near, opts)?
            .ok_or_else(|| Error::InvalidBracket("lost the tracked equilibrium inside the bracket".into()))?;
        near = e.location;
        if e.trace().signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let param = 0.5 * (lo + hi);
    let at = track(base, param, near, opts)?
        .ok_or_else(|| Error::InvalidBracket("lost the tracked equilibrium at the Hopf point".into()))?;
    if at.det() <= 0.0 {
        return Err(Error::InvalidBracket("real parts change sign without a complex pair".into()));
    }

    // Criticality: an unstable cycle surrounding the focus on its stable side.
    let stable_dir = if sign_lo < 0.0 { -1.0 } else { 1.0 };
    let span = w.span();
    let mut unstable_cycle = None;
    for off in &opts.hopf_probe_offsets {
        let p = param + stable_dir * off;
        if let Some(e) = track(base, p, at.location, opts)? {
            if !e.klass.is_stable() {
                continue;
            }
            let seed = [e.location[0] + 1e-3 * span[0], e.location[1]];
            let fast = base.fast_subsystem(p);
            if let Ok(c) = find_limit_cycle(&fast, w, seed, Stability::Unstable, &opts.cycle) {
                unstable_cycle = Some((p, c.amplitude()));
                break;
            }
        }
    }
    let kind = if unstable_cycle.is_some() { BifurcationKind::SubcriticalHopf } else { BifurcationKind::Hopf };
    let (re_lo, re_hi) = (0.5 * a.trace(), 0.5 * b.trace());
    Ok(BifurcationPoint {
        kind,
        param,
        bracket: (lo, hi),
        iterations,
        evidence: Evidence::Hopf { re_lo, re_hi, unstable_cycle },
    })
}

fn saddles_at<S: SlowFast>(base: &S, p: f64, opts: &AnalysisOptions) -> Result<Vec<Equilibrium>> {
    Ok(find_equilibria(&base.fast_subsystem(p), &opts.window)?
        .into_iter()
        .filter(|e| e.klass == EqClass::Saddle)
        .collect())
}

fn stable_cycle_at<S: SlowFast>(base: &S, p: f64, seed: Point, opts: &AnalysisOptions) -> Option<LimitCycle> {
    search_from(base, p, &[seed], Stability::Stable, &opts.continuation(), opts)
        .or_else(|| search_from(base, p, &[seed], Stability::Stable, &opts.cycle, opts))
}

/// Saddle homoclinic orbit by bisection on stable-cycle existence, seeded
/// from `seed_cycle`. Requires period growth by `opts.sho_growth` and the
/// cycle-to-saddle distance to shrink by `opts.sho_approach`; otherwise the
/// loss is reported as a fold-limit-cycle candidate through a precondition
/// error.
pub fn locate_homoclinic<S: SlowFast>(
    base: &S,
    bracket: (f64, f64),
    seed_cycle: &LimitCycle,
    opts: &AnalysisOptions,
) -> Result<BifurcationPoint> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let w = &opts.window;
    let s_lo = saddles_at(base, lo, opts)?;
    let s_hi = saddles_at(base, hi, opts)?;
    if s_lo.is_empty() || s_hi.is_empty() {
        return Err(Error::Precondition("homoclinic detection needs a saddle across the bracket".into()));
    }
    let seed = seed_cycle.samples[0];
    let c_lo = stable_cycle_at(base, lo, seed, opts);
    let c_hi = stable_cycle_at(base, hi, seed, opts);
    let (mut yes, mut no, mut cycle) = match (c_lo, c_hi) {
        (Some(c), None) => (lo, hi, c),
        (None, Some(c)) => (hi, lo, c),
        _ => return Err(Error::InvalidBracket("stable cycle must exist at exactly one end of the bracket".into())),
    };
    let saddle_dist = |c: &LimitCycle, saddles: &[Equilibrium]| {
        saddles.iter().map(|s| c.distance_to(s.location, w)).fold(f64::INFINITY, f64::min)
    };
    let start_sad = if yes == lo { &s_lo } else { &s_hi };
    let start_period = cycle.period;
    let mut trend = vec![(yes, cycle.period, saddle_dist(&cycle, start_sad))];
    let mut iterations = 0;
    let budget = bisection_budget(hi - lo, opts.tol);
    // Beyond the tolerance, keep refining (bounded) until the period growth
    // criterion is met or rejected.
    let extra = 40;
    while iterations < budget + extra {
        let width = (yes - no).abs();
        let growth = cycle.period / start_period;
        let near = trend.last().is_some_and(|t| t.2 < opts.sho_approach * trend[0].2);
        if (width <= opts.tol || iterations >= budget) && growth >= opts.sho_growth && near {
            break;
        }
        let mid = 0.5 * (yes + no);
        match stable_cycle_at(base, mid, cycle.samples[0], opts) {
            Some(c) => {
                let sad = saddles_at(base, mid, opts)?;
                trend.push((mid, c.period, saddle_dist(&c, &sad)));
                yes = mid;
                cycle = c;
            }
            None => no = mid,
        }
        iterations += 1;
    }
    let growth = cycle.period / start_period;
    let approached = trend.last().map(|t| t.2).unwrap_or(f64::INFINITY) < opts.sho_approach * trend[0].2;
    if growth < opts.sho_growth || !approached {
        return Err(Error::Precondition(format!(
            "cycle loss without homoclinic signature (period growth {growth:.3}, saddle approach {approached}); fold-limit-cycle candidate"
        )));
    }
    Ok(BifurcationPoint {
        kind: BifurcationKind::SaddleHomoclinic,
        param: 0.5 * (yes + no),
        bracket: (yes.min(no), yes.max(no)),
        iterations,
        evidence: Evidence::Homoclinic { trend, growth },
    })
}

fn class_signature(eqs: &[Equilibrium]) -> Vec<bool> {
    eqs.iter().map(|e| e.klass.is_stable()).collect()
}

/// Fold of limit cycles by bisection on stable-cycle existence.
pub fn locate_fold_cycle<S: SlowFast>(
    base: &S,
    bracket: (f64, f64),
    seed_cycle: &LimitCycle,
    opts: &AnalysisOptions,
) -> Result<BifurcationPoint> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let w = &opts.window;
    let e_lo = find_equilibria(&base.fast_subsystem(lo), w)?;
    let e_hi = find_equilibria(&base.fast_subsystem(hi), w)?;
    if e_lo.iter().chain(&e_hi).any(|e| e.klass == EqClass::Saddle) {
        return Err(Error::Precondition("saddle present: cycle loss is not a fold of cycles".into()));
    }
    if class_signature(&e_lo) != class_signature(&e_hi) {
        return Err(Error::Precondition("equilibrium bifurcation inside the bracket".into()));
    }
    let seed = seed_cycle.samples[0];
    let (mut yes, mut no, mut stable) =
        match (stable_cycle_at(base, lo, seed, opts), stable_cycle_at(base, hi, seed, opts)) {
            (Some(c), None) => (lo, hi, c),
            (None, Some(c)) => (hi, lo, c),
            _ => return Err(Error::InvalidBracket("stable cycle must exist at exactly one end of the bracket".into())),
        };
    let unstable_amp = |p: f64| -> Option<f64> {
        let eqs = find_equilibria(&base.fast_subsystem(p), w).ok()?;
        search_from(base, p, &unstable_cycle_seeds(&eqs, w), Stability::Unstable, &opts.cycle, opts)
            .map(|c| c.amplitude())
    };
    let u0 = unstable_amp(yes)
        .ok_or_else(|| Error::Precondition("no unstable cycle on the existing side of the bracket".into()))?;
    let mut gap_trend = vec![(yes, stable.amplitude(), u0)];
    let mut iterations = 0;
    let budget = bisection_budget(hi - lo, opts.tol);
    while (yes - no).abs() > opts.tol && iterations < budget {
        let mid = 0.5 * (yes + no);
        match stable_cycle_at(base, mid, stable.samples[0], opts) {
            Some(c) => {
                if let Some(u) = unstable_amp(mid) {
                    gap_trend.push((mid, c.amplitude(), u));
                }
                yes = mid;
                stable = c;
            }
            None => no = mid,
        }
        iterations += 1;
    }
    Ok(BifurcationPoint {
        kind: BifurcationKind::FoldLimitCycle,
        param: 0.5 * (yes + no),
        bracket: (yes.min(no), yes.max(no)),
        iterations,
        evidence: Evidence::FoldCycle { gap_trend },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub parameter: String,
    pub range: (f64, f64),
    pub sweep: EquilibriumSweep,
    pub cycles: Vec<CycleBranch>,
    pub points: Vec<BifurcationPoint>,
    /// Parameter intervals where a stable equilibrium and a stable cycle
    /// coexist.
    pub bistable: Vec<(f64, f64)>,
    /// Branch ends no detector could explain, with the reason.
    pub unexplained: Vec<(f64, String)>,
}

impl BifurcationDiagram {
    pub fn points_of(&self, kind: BifurcationKind) -> impl Iterator<Item = &BifurcationPoint> {
        self.points.iter().filter(move |p| p.kind == kind)
    }

    pub fn equilibrium_branches(&self) -> &[EquilibriumBranch] {
        &self.sweep.branches
    }

    /// Writes `eq_branch_<k>.csv`, `cycle_branch_<k>.csv` and `points.csv`
    /// into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        for (k, br) in self.sweep.branches.iter().enumerate() {
            let mut s = String::from("param,V,class\n");
            for p in &br.points {
                s.push_str(&format!("{},{},{}\n", fmt17(p.param), fmt17(p.eq.location[0]), p.eq.klass));
            }
            write_atomic(&dir.join(format!("eq_branch_{k}.csv")), s.as_bytes())?;
        }
        for (k, br) in self.cycles.iter().enumerate() {
            let mut s = String::from("param,vmin,vmax,period,stability\n");
            for p in &br.points {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt17(p.param),
                    fmt17(p.cycle.v_min),
                    fmt17(p.cycle.v_max),
                    fmt17(p.cycle.period),
                    br.stability
                ));
            }
            write_atomic(&dir.join(format!("cycle_branch_{k}.csv")), s.as_bytes())?;
        }
        let mut s = String::from("kind,param,evidence_lo,evidence_hi\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.kind, fmt17(p.param), fmt17(p.bracket.0), fmt17(p.bracket.1)));
        }
        write_atomic(&dir.join("points.csv"), s.as_bytes())
    }
}

/// Composes sweeps and detectors over `range` with `steps` samples.
pub fn build_diagram<S: SlowFast>(
    base: &S,
    range: (f64, f64),
    steps: usize,
    opts: &AnalysisOptions,
) -> Result<BifurcationDiagram> {
    let sweep = sweep_equilibrium_branches(base, range, steps, opts)?;
    let cycles = sweep_cycle_branches(base, &sweep, opts);
    let params = &sweep.params;
    let mut points: Vec<BifurcationPoint> = Vec::new();
    let mut unexplained = Vec::new();

    // Folds: the equilibrium count changes by two between steps. Births are
    // only seen at fresh-seeding steps, so their bracket reaches back to the
    // previous one.
    for k in 1..params.len() {
        let (a, b) = (sweep.sets[k - 1].len(), sweep.sets[k].len());
        if a.abs_diff(b) != 2 {
            continue;
        }
        let back = if b > a { k.saturating_sub(opts.reseed_every.max(1)) } else { k - 1 };
        match locate_fold(base, (params[back], params[k]), opts) {
            Ok(p) => points.push(p),
            Err(e) => unexplained.push((params[k], format!("equilibrium count change: {e}"))),
        }
    }

    // Hopf points: sign change of the trace along a branch with det > 0.
    for br in &sweep.branches {
        for w in br.points.windows(2) {
            let (a, b) = (&w[0].eq, &w[1].eq);
            if a.det() > 0.0 && b.det() > 0.0 && a.trace() * b.trace() < 0.0 {
                match locate_hopf(base, (w[0].param, w[1].param), opts) {
                    Ok(p) => points.push(p),
                    Err(e) => unexplained.push((w[1].param, format!("trace sign change: {e}"))),
                }
            }
        }
    }

    // Ends of stable-cycle branches inside the range.
    let step = (range.1 - range.0) / (steps - 1) as f64;
    let idx = |p: f64| ((p - range.0) / step).round() as usize;
    for br in cycles.iter().filter(|b| b.stability == Stability::Stable) {
        let (first, last) = br.param_range();
        let ends = [
            (idx(first) > 0, first, -1i64, &br.points[0].cycle),
            (idx(last) + 1 < params.len(), last, 1i64, &br.points[br.points.len() - 1].cycle),
        ];
        for (inside, p_end, dir, cycle) in ends {
            if !inside {
                continue;
            }
            let k = idx(p_end);
            let other = params[(k as i64 + dir) as usize];
            let bracket = (p_end.min(other), p_end.max(other));
            if points.iter().any(|q| q.kind.is_hopf() && (q.param - p_end).abs() <= 1.5 * step.abs()) {
                // A stable cycle born or lost at a Hopf point.
                continue;
            }
            let has_saddle = |k: usize| sweep.sets[k].iter().any(|e| e.klass == EqClass::Saddle);
            let k_other = (k as i64 + dir) as usize;
            let located = if has_saddle(k) && has_saddle(k_other) {
                match locate_homoclinic(base, bracket, cycle, opts) {
                    Ok(p) => Ok(p),
                    Err(Error::Precondition(_)) => locate_fold_cycle(base, bracket, cycle, opts),
                    Err(e) => Err(e),
                }
            } else {
                locate_fold_cycle(base, bracket, cycle, opts)
            };
            match located {
                Ok(p) => points.push(p),
                Err(e) => unexplained.push((p_end, format!("stable cycle branch end: {e}"))),
            }
        }
    }

    points.sort_by(|a, b| a.param.total_cmp(&b.param).then(a.kind.cmp(&b.kind)));
    points.dedup_by(|a, b| a.kind == b.kind && (a.param - b.param).abs() <= 2.0 * opts.tol);

    let bistable = bistable_intervals(&sweep, &cycles, &points, step.abs(), opts.reseed_every.max(1));
    Ok(BifurcationDiagram {
        parameter: base.slow_label().to_string(),
        range,
        sweep,
        cycles,
        points,
        bistable,
        unexplained,
    })
}

fn bistable_intervals(
    sweep: &EquilibriumSweep,
    cycles: &[CycleBranch],
    points: &[BifurcationPoint],
    step: f64,
    reseed_every: usize,
) -> Vec<(f64, f64)> {
    let has_cycle = |p: f64| {
        cycles
            .iter()
            .filter(|b| b.stability == Stability::Stable)
            .any(|b| b.points.iter().any(|q| (q.param - p).abs() < 0.5 * step))
    };
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    for (k, &p) in sweep.params.iter().enumerate() {
        let both = sweep.sets[k].iter().any(|e| e.klass.is_stable()) && has_cycle(p);
        match (both, current.as_mut()) {
            (true, Some(run)) => run.1 = p,
            (true, None) => current = Some((p, p)),
            (false, Some(_)) => runs.push(current.take().unwrap()),
            (false, None) => {}
        }
    }
    runs.extend(current);
    // Snap the ends outward to located bifurcation points. Equilibrium
    // births are only seen at fresh-seeding steps, hence the reach.
    let reach = reseed_every as f64 * step + 1e-12;
    let snap = |x: f64, outward: f64| -> f64 {
        points
            .iter()
            .filter(|q| (q.param - x).abs() <= reach && (q.param - x) * outward >= -1e-12)
            .min_by(|a, b| (a.param - x).abs().total_cmp(&(b.param - x).abs()))
            .map_or(x, |q| q.param)
    };
    runs.into_iter().map(|(a, b)| (snap(a, -1.0), snap(b, 1.0))).collect()
}

/// Onset/offset pair of a burster with the waveform traits it predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct BursterClass {
    pub onset: Option<BifurcationPoint>,
    pub offset: Option<BifurcationPoint>,
    pub onset_oscillations: bool,
    pub offset_oscillations: bool,
    pub diagnostics: Vec<String>,
}

impl BursterClass {
    pub fn is_classified(&self) -> bool {
        self.onset.is_some() && self.offset.is_some()
    }

    /// `(onset name, offset name)`, e.g. `(saddle-node off invariant circle,
    /// saddle homoclinic orbit)`.
    pub fn label(&self) -> String {
        match (&self.onset, &self.offset) {
            (Some(a), Some(b)) => format!("({}, {})", onset_name(a.kind), b.kind),
            _ => "unclassified".into(),
        }
    }
}

fn onset_name(k: BifurcationKind) -> &'static str {
    match k {
        BifurcationKind::SaddleNode => "saddle-node off invariant circle",
        other => other.as_str(),
    }
}

/// Onset = the bifurcation that removes the stable rest state at the low end
/// of the bistable window; offset = the one that removes the stable cycle at
/// its high end. Oscillations are predicted at onset for a Hopf onset and at
/// offset for a fold-of-cycles offset.
pub fn classify_burster(d: &BifurcationDiagram) -> BursterClass {
    let mut diagnostics = Vec::new();
    let eq_pts: Vec<&BifurcationPoint> = d.points.iter().filter(|p| p.kind.is_equilibrium_type()).collect();
    let cyc_pts: Vec<&BifurcationPoint> = d.points.iter().filter(|p| !p.kind.is_equilibrium_type()).collect();
    let nearest = |pts: &[&BifurcationPoint], x: f64| -> Option<BifurcationPoint> {
        pts.iter().min_by(|a, b| (a.param - x).abs().total_cmp(&(b.param - x).abs())).map(|p| (*p).clone())
    };
    let (onset, offset) = match d.bistable.iter().max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0))) {
        Some(&(a, b)) => (nearest(&eq_pts, a), nearest(&cyc_pts, b)),
        None => {
            diagnostics.push("no bistable interval; using the extreme points".into());
            let onset = eq_pts.iter().max_by(|a, b| a.param.total_cmp(&b.param)).map(|p| (*p).clone());
            let offset = cyc_pts.iter().max_by(|a, b| a.param.total_cmp(&b.param)).map(|p| (*p).clone());
            (onset, offset)
        }
    };
    if onset.is_none() {
        diagnostics.push("no onset bifurcation (fold or Hopf) detected".into());
    }
    if offset.is_none() {
        diagnostics.push("no offset bifurcation (homoclinic or fold of cycles) detected".into());
    }
    let (onset, offset) = if onset.is_some() && offset.is_some() { (onset, offset) } else { (None, None) };
    BursterClass {
        onset_oscillations: onset.as_ref().is_some_and(|p| p.kind.is_hopf()),
        offset_oscillations: offset.as_ref().is_some_and(|p| p.kind == BifurcationKind::FoldLimitCycle),
        onset,
        offset,
        diagnostics,
    }
}
