//! Planar phase-space analysis of fast subsystems: nullclines, equilibria,
//! limit cycles and basin membership.

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::numeric::{eig2, eigvec2, find_root, frobenius2};
use crate::system::{integrate_observed, Control, DynamicalSystem, IntegratorConfig, TimeReversed};
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::io::Write;

pub type Point = [f64; 2];

/// Rectangular analysis window with a sampling grid of `nx × ny` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window2D {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub grid: (usize, usize),
}

impl Window2D {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), grid: (usize, usize)) -> Result<Self> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(x_range) || !ok(y_range) {
            return Err(Error::InvalidConfig("window ranges must be finite and non-degenerate".into()));
        }
        if grid.0 < 2 || grid.1 < 2 {
            return Err(Error::InvalidConfig("window grid needs at least 2x2 points".into()));
        }
        Ok(Self { x_range, y_range, grid })
    }

    pub fn with_grid(mut self, nx: usize, ny: usize) -> Result<Self> {
        self.grid = (nx, ny);
        Self::new(self.x_range, self.y_range, self.grid)
    }

    pub fn span(&self) -> Point {
        [self.x_range.1 - self.x_range.0, self.y_range.1 - self.y_range.0]
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-9;
        let s = self.span();
        p[0] >= self.x_range.0 - tol * s[0]
            && p[0] <= self.x_range.1 + tol * s[0]
            && p[1] >= self.y_range.0 - tol * s[1]
            && p[1] <= self.y_range.1 + tol * s[1]
    }

    /// Window enlarged by `margin` spans on every side.
    pub fn expanded(&self, margin: f64) -> Window2D {
        let s = self.span();
        Window2D {
            x_range: (self.x_range.0 - margin * s[0], self.x_range.1 + margin * s[0]),
            y_range: (self.y_range.0 - margin * s[1], self.y_range.1 + margin * s[1]),
            grid: self.grid,
        }
    }

    /// Max-norm distance in units of the window span.
    pub fn dist(&self, a: Point, b: Point) -> f64 {
        let s = self.span();
        ((a[0] - b[0]).abs() / s[0]).max((a[1] - b[1]).abs() / s[1])
    }

    fn node(&self, i: usize, j: usize) -> Point {
        let (nx, ny) = self.grid;
        [
            self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / (nx - 1) as f64,
            self.y_range.0 + (self.y_range.1 - self.y_range.0) * j as f64 / (ny - 1) as f64,
        ]
    }

    fn cell_size(&self) -> Point {
        let s = self.span();
        [s[0] / (self.grid.0 - 1) as f64, s[1] / (self.grid.1 - 1) as f64]
    }
}

fn eval2<S: DynamicalSystem + ?Sized>(sys: &S, p: Point) -> Option<Point> {
    let mut d = [0.0; 2];
    sys.rhs(0.0, &p, &mut d).ok()?;
    (d[0].is_finite() && d[1].is_finite()).then_some(d)
}

/// Grid samples of both rhs components; `None` where evaluation failed.
struct GridValues {
    w: Window2D,
    values: Vec<Option<Point>>,
    scale: Point,
}

impl GridValues {
    fn new<S: DynamicalSystem + ?Sized>(sys: &S, w: &Window2D) -> Self {
        let (nx, ny) = w.grid;
        let mut values = Vec::with_capacity(nx * ny);
        let mut scale = [0.0f64; 2];
        for j in 0..ny {
            for i in 0..nx {
                let v = eval2(sys, w.node(i, j));
                if let Some(d) = v {
                    scale[0] = scale[0].max(d[0].abs());
                    scale[1] = scale[1].max(d[1].abs());
                }
                values.push(v);
            }
        }
        for s in &mut scale {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Self { w: *w, values, scale }
    }

    fn at(&self, i: usize, j: usize) -> Option<Point> {
        self.values[j * self.w.grid.0 + i]
    }
}

/// Zero-level curves of both rhs components.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NullclineSet {
    pub curves_f1: Vec<Vec<Point>>,
    pub curves_f2: Vec<Vec<Point>>,
    /// Grid cells skipped because a corner evaluation failed.
    pub skipped_cells: usize,
    /// Per-component maximum of |f| over the grid.
    pub scale: Point,
}

type Segment = (Point, Point);

struct Contours {
    curves: Vec<Vec<Point>>,
    cell_segments: HashMap<(usize, usize), Vec<Segment>>,
    skipped: usize,
}

/// Marching squares on component `c`, with every vertex refined along its
/// grid edge to a root of `f_c`.
fn contour<S: DynamicalSystem + ?Sized>(sys: &S, g: &GridValues, c: usize) -> Contours {
    let w = &g.w;
    let (nx, ny) = w.grid;
    let mut vertex_of_edge: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut cell_segments: HashMap<(usize, usize), Vec<Segment>> = HashMap::new();
    let mut skipped = 0;

    let mut vertex = |edge_id: usize, a: Point, fa: f64, b: Point, fb: f64, vertices: &mut Vec<Point>| -> usize {
        *vertex_of_edge.entry(edge_id).or_insert_with(|| {
            let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let f = |s: f64| {
                if s == 0.0 {
                    return fa;
                }
                if s == 1.0 {
                    return fb;
                }
                eval2(sys, at(s)).map_or(f64::NAN, |d| d[c])
            };
            let s = find_root(f, 0.0, 1.0).unwrap_or_else(|| fa / (fa - fb));
            vertices.push(at(s));
            vertices.len() - 1
        })
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Option<Vec<Point>> = corners.iter().map(|&(a, b)| g.at(a, b)).collect();
            let Some(vals) = vals else {
                skipped += 1;
                continue;
            };
            let f: Vec<f64> = vals.iter().map(|v| v[c]).collect();
            let pos: Vec<bool> = f.iter().map(|&v| v > 0.0).collect();
            // Edges: 0 bottom (p0-p1), 1 right (p1-p2), 2 top (p3-p2), 3 left (p0-p3).
            let edge_ends = [(0usize, 1usize), (1, 2), (3, 2), (0, 3)];
            let edge_ids = [2 * (j * nx + i), 2 * (j * nx + i + 1) + 1, 2 * ((j + 1) * nx + i), 2 * (j * nx + i) + 1];
            let crossing: Vec<usize> = (0..4).filter(|&e| pos[edge_ends[e].0] != pos[edge_ends[e].1]).collect();
            if crossing.is_empty() {
                continue;
            }
            let pairs: Vec<(usize, usize)> = if crossing.len() == 2 {
                vec![(crossing[0], crossing[1])]
            } else {
                let center = f.iter().sum::<f64>() / 4.0;
                if (center > 0.0) == pos[0] {
                    vec![(0, 1), (2, 3)]
                } else {
                    vec![(0, 3), (1, 2)]
                }
            };
            let pts: Vec<Point> = corners.iter().map(|&(a, b)| w.node(a, b)).collect();
            for (ea, eb) in pairs {
                let mut vid = |e: usize| {
                    let (p, q) = edge_ends[e];
                    vertex(edge_ids[e], pts[p], f[p], pts[q], f[q], &mut vertices)
                };
                let va = vid(ea);
                let vb = vid(eb);
                segments.push((va, vb));
                cell_segments.entry((i, j)).or_default().push((vertices[va], vertices[vb]));
            }
        }
    }

    Contours { curves: assemble(&vertices, &segments), cell_segments, skipped }
}

/// Links segments sharing vertices into polylines, open chains first.
fn assemble(vertices: &[Point], segments: &[(usize, usize)]) -> Vec<Vec<Point>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (k, &(a, b)) in segments.iter().enumerate() {
        adj[a].push(k);
        adj[b].push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<Point> {
        let mut line = vec![vertices[start]];
        let mut v = start;
        while let Some(&k) = adj[v].iter().find(|&&k| !used[k]) {
            used[k] = true;
            let (a, b) = segments[k];
            v = if a == v { b } else { a };
            line.push(vertices[v]);
        }
        line
    };
    for v in 0..vertices.len() {
        if adj[v].len() == 1 && !used[adj[v][0]] {
            curves.push(walk(v, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            curves.push(walk(segments[k].0, &mut used));
        }
    }
    curves
}

/// Nullclines of both components on the window grid.
pub fn compute_nullclines<S: DynamicalSystem + ?Sized>(fast: &S, w: &Window2D) -> Result<NullclineSet> {
    check_planar(fast)?;
    let g = GridValues::new(fast, w);
    let c1 = contour(fast, &g, 0);
    let c2 = contour(fast, &g, 1);
    Ok(NullclineSet {
        curves_f1: c1.curves,
        curves_f2: c2.curves,
        skipped_cells: c1.skipped.max(c2.skipped),
        scale: g.scale,
    })
}

fn check_planar<S: DynamicalSystem + ?Sized>(fast: &S) -> Result<()> {
    if fast.dimension() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: fast.dimension() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqClass {
    StableNode,
    UnstableNode,
    Saddle,
    StableFocus,
    UnstableFocus,
    Nonhyperbolic,
}

impl EqClass {
    pub fn is_stable(self) -> bool {
        matches!(self, EqClass::StableNode | EqClass::StableFocus)
    }

    pub fn is_focus(self) -> bool {
        matches!(self, EqClass::StableFocus | EqClass::UnstableFocus)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EqClass::StableNode => "stable node",
            EqClass::UnstableNode => "unstable node",
            EqClass::Saddle => "saddle",
            EqClass::StableFocus => "stable focus",
            EqClass::UnstableFocus => "unstable focus",
            EqClass::Nonhyperbolic => "nonhyperbolic",
        }
    }
}

impl fmt::Display for EqClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Planar classification. Any eigenvalue with `|Re| < 1e-6·‖J‖` makes the
/// point nonhyperbolic.
pub fn classify(eigenvalues: &[Complex64; 2], jacobian_norm: f64) -> EqClass {
    let tol = 1e-6 * jacobian_norm;
    if eigenvalues.iter().any(|l| l.re.abs() < tol) {
        return EqClass::Nonhyperbolic;
    }
    let complex = eigenvalues[0].im != 0.0;
    let (a, b) = (eigenvalues[0].re, eigenvalues[1].re);
    if complex {
        if a < 0.0 {
            EqClass::StableFocus
        } else {
            EqClass::UnstableFocus
        }
    } else if a * b < 0.0 {
        EqClass::Saddle
    } else if a < 0.0 {
        EqClass::StableNode
    } else {
        EqClass::UnstableNode
    }
}

/// Class of the equilibrium with Jacobian `j`.
pub fn classify_jacobian(j: &[[f64; 2]; 2]) -> EqClass {
    classify(&eig2(j), frobenius2(j))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub location: Point,
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [Complex64; 2],
    pub klass: EqClass,
    /// Unit eigenvectors for real eigenvalues (same order as `eigenvalues`);
    /// for a saddle these are its stable and unstable directions.
    pub eigenvectors: Option<[Point; 2]>,
}

impl Equilibrium {
    pub fn at<S: DynamicalSystem + ?Sized>(fast: &S, location: Point, w: &Window2D) -> Result<Self> {
        let jacobian = jacobian_fd(fast, location, fd_step(w))?;
        let eigenvalues = eig2(&jacobian);
        let klass = classify(&eigenvalues, frobenius2(&jacobian));
        let eigenvectors = (eigenvalues[0].im == 0.0)
            .then(|| [eigvec2(&jacobian, eigenvalues[0].re), eigvec2(&jacobian, eigenvalues[1].re)]);
        Ok(Self { location, jacobian, eigenvalues, klass, eigenvectors })
    }

    pub fn trace(&self) -> f64 {
        self.jacobian[0][0] + self.jacobian[1][1]
    }

    pub fn det(&self) -> f64 {
        self.jacobian[0][0] * self.jacobian[1][1] - self.jacobian[0][1] * self.jacobian[1][0]
    }
}

fn fd_step(w: &Window2D) -> Point {
    let s = w.span();
    [1e-6 * s[0], 1e-6 * s[1]]
}

/// Central finite-difference Jacobian with per-coordinate steps `h`.
pub fn jacobian_fd<S: DynamicalSystem + ?Sized>(fast: &S, x: Point, h: Point) -> Result<[[f64; 2]; 2]> {
    let mut j = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut xp = x;
        let mut xm = x;
        xp[k] += h[k];
        xm[k] -= h[k];
        let mut fp = [0.0; 2];
        let mut fm = [0.0; 2];
        fast.rhs(0.0, &xp, &mut fp)?;
        fast.rhs(0.0, &xm, &mut fm)?;
        for r in 0..2 {
            j[r][k] = (fp[r] - fm[r]) / (2.0 * h[k]);
        }
    }
    Ok(j)
}

/// Richardson extrapolation of central differences at `h` and `h/2`.
pub fn jacobian_richardson<S: DynamicalSystem + ?Sized>(fast: &S, x: Point, h: Point) -> Result<[[f64; 2]; 2]> {
    let coarse = jacobian_fd(fast, x, h)?;
    let fine = jacobian_fd(fast, x, [0.5 * h[0], 0.5 * h[1]])?;
    let mut j = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            j[r][c] = (4.0 * fine[r][c] - coarse[r][c]) / 3.0;
        }
    }
    Ok(j)
}

/// Diagnostics from an equilibrium search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EquilibriumReport {
    pub seeds: usize,
    pub discarded: usize,
    pub skipped_cells: usize,
}

/// Newton tolerance: residual below `NEWTON_TOL · scale` per component.
pub const NEWTON_TOL: f64 = 1e-10;

/// Damped Newton iteration. The step is capped at 10% of the window span
/// per coordinate and halved until the scaled residual decreases.
pub fn newton<S: DynamicalSystem + ?Sized>(fast: &S, seed: Point, w: &Window2D, scale: Point) -> Option<Point> {
    let span = w.span();
    let h = fd_step(w);
    let resid = |p: Point| -> f64 {
        eval2(fast, p).map_or(f64::INFINITY, |d| (d[0] / scale[0]).abs().max((d[1] / scale[1]).abs()))
    };
    let bounds = w.expanded(0.1);
    let mut x = seed;
    let mut r = resid(x);
    for _ in 0..100 {
        if r < NEWTON_TOL {
            return Some(x);
        }
        let f = eval2(fast, x)?;
        let j = jacobian_fd(fast, x, h).ok()?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = [-(j[1][1] * f[0] - j[0][1] * f[1]) / det, -(-j[1][0] * f[0] + j[0][0] * f[1]) / det];
        let mut alpha = 1f64
            .min(0.1 * span[0] / dx[0].abs().max(f64::MIN_POSITIVE))
            .min(0.1 * span[1] / dx[1].abs().max(f64::MIN_POSITIVE));
        let mut accepted = false;
        for _ in 0..30 {
            let trial = [x[0] + alpha * dx[0], x[1] + alpha * dx[1]];
            let rt = resid(trial);
            if rt < r {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || !bounds.contains(x) {
            return None;
        }
    }
    (r < NEWTON_TOL).then_some(x)
}

fn seg_intersection(a: Segment, b: Segment) -> Option<Point> {
    let (p, r) = (a.0, [a.1[0] - a.0[0], a.1[1] - a.0[1]]);
    let (q, s) = (b.0, [b.1[0] - b.0[0], b.1[1] - b.0[1]]);
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let qp = [q[0] - p[0], q[1] - p[1]];
    let t = (qp[0] * s[1] - qp[1] * s[0]) / den;
    let u = (qp[0] * r[1] - qp[1] * r[0]) / den;
    let eps = 1e-9;
    ((-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u)).then(|| [p[0] + t * r[0], p[1] + t * r[1]])
}

/// Closest points between two segments (sampled), returned as a midpoint and
/// the distance in window units.
fn seg_proximity(a: Segment, b: Segment, w: &Window2D) -> (Point, f64) {
    let lerp = |s: Segment, t: f64| [s.0[0] + t * (s.1[0] - s.0[0]), s.0[1] + t * (s.1[1] - s.0[1])];
    let mut best = (a.0, f64::INFINITY);
    for k in 0..=8 {
        let pa = lerp(a, k as f64 / 8.0);
        for m in 0..=8 {
            let pb = lerp(b, m as f64 / 8.0);
            let d = w.dist(pa, pb);
            if d < best.1 {
                best = ([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])], d);
            }
        }
    }
    best
}

/// Equilibria in the window, sorted by the first coordinate.
pub fn find_equilibria<S: DynamicalSystem + ?Sized>(fast: &S, w: &Window2D) -> Result<Vec<Equilibrium>> {
    Ok(find_equilibria_with_report(fast, w)?.0)
}

/// As [`find_equilibria`], with seed and discard counts.
pub fn find_equilibria_with_report<S: DynamicalSystem + ?Sized>(
    fast: &S,
    w: &Window2D,
) -> Result<(Vec<Equilibrium>, EquilibriumReport)> {
    check_planar(fast)?;
    let g = GridValues::new(fast, w);
    let c1 = contour(fast, &g, 0);
    let c2 = contour(fast, &g, 1);
    let cell = w.cell_size();
    let diag = (cell[0] / w.span()[0]).max(cell[1] / w.span()[1]);

    let mut seeds: Vec<Point> = Vec::new();
    let push_seed = |p: Point, seeds: &mut Vec<Point>| {
        if !seeds.iter().any(|s| w.dist(*s, p) < 0.25 * diag) {
            seeds.push(p);
        }
    };
    let mut cells: Vec<_> = c1.cell_segments.keys().copied().collect();
    cells.sort_unstable();
    for (i, j) in cells {
        let s1 = &c1.cell_segments[&(i, j)];
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 {
                    continue;
                }
                let Some(s2) = c2.cell_segments.get(&(ni as usize, nj as usize)) else {
                    continue;
                };
                for &a in s1 {
                    for &b in s2 {
                        if let Some(p) = seg_intersection(a, b) {
                            push_seed(p, &mut seeds);
                        } else {
                            let (p, d) = seg_proximity(a, b, w);
                            if d < 0.5 * diag {
                                push_seed(p, &mut seeds);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut report = EquilibriumReport { seeds: seeds.len(), discarded: 0, skipped_cells: c1.skipped.max(c2.skipped) };
    let mut found: Vec<Point> = Vec::new();
    for s in seeds {
        match newton(fast, s, w, g.scale) {
            Some(p) if w.contains(p) => {
                if !found.iter().any(|q| w.dist(*q, p) < 1e-6) {
                    found.push(p);
                }
            }
            Some(_) => {}
            None => report.discarded += 1,
        }
    }
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let eqs = found.into_iter().map(|p| Equilibrium::at(fast, p, w)).collect::<Result<Vec<_>>>()?;
    Ok((eqs, report))
}

/// Per-component scale (max |f| on the window grid), as used by the Newton
/// tolerance.
pub fn rhs_scale<S: DynamicalSystem + ?Sized>(fast: &S, w: &Window2D) -> Point {
    GridValues::new(fast, w).scale
}

fn both_change(corners: &[Option<Point>; 4]) -> bool {
    if corners.iter().any(Option::is_none) {
        return false;
    }
    let changes = |c: usize| {
        let pos = corners.iter().filter(|v| v.unwrap()[c] > 0.0).count();
        pos > 0 && pos < 4
    };
    changes(0) && changes(1)
}

const CENSUS_SUBDIVISION: usize = 16;

/// Whether some cell of a `CENSUS_SUBDIVISION`² sub-grid of the cell at
/// `origin` still shows both sign changes, `depth` levels down. Filters
/// cells that two nullclines cross without meeting.
fn confirmed<S: DynamicalSystem + ?Sized>(fast: &S, origin: Point, size: Point, depth: usize) -> bool {
    let n = CENSUS_SUBDIVISION;
    let h = [size[0] / n as f64, size[1] / n as f64];
    let vals: Vec<Option<Point>> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| eval2(fast, [origin[0] + i as f64 * h[0], origin[1] + j as f64 * h[1]]))
        .collect();
    let at = |i: usize, j: usize| vals[j * (n + 1) + i];
    (0..n).any(|j| {
        (0..n).any(|i| {
            both_change(&[at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)])
                && (depth == 0
                    || confirmed(fast, [origin[0] + i as f64 * h[0], origin[1] + j as f64 * h[1]], h, depth - 1))
        })
    })
}

/// Brute-force census: connected groups (8-neighbour) of grid cells whose
/// corners show sign changes of both components, confirmed on two nested
/// sub-grids. Returns one cell list per group.
pub fn sign_scan_census<S: DynamicalSystem + ?Sized>(fast: &S, w: &Window2D) -> Vec<Vec<(usize, usize)>> {
    let g = GridValues::new(fast, w);
    let (nx, ny) = w.grid;
    let size = w.cell_size();
    let mut flagged = vec![false; (nx - 1) * (ny - 1)];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corners = [g.at(i, j), g.at(i + 1, j), g.at(i + 1, j + 1), g.at(i, j + 1)];
            flagged[j * (nx - 1) + i] = both_change(&corners) && confirmed(fast, w.node(i, j), size, 1);
        }
    }
    let mut seen = vec![false; flagged.len()];
    let mut groups = Vec::new();
    for start in 0..flagged.len() {
        if !flagged[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut group = Vec::new();
        while let Some(k) = stack.pop() {
            let (i, j) = (k % (nx - 1), k / (nx - 1));
            group.push((i, j));
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if a < 0 || b < 0 || a >= (nx - 1) as i64 || b >= (ny - 1) as i64 {
                        continue;
                    }
                    let m = b as usize * (nx - 1) + a as usize;
                    if flagged[m] && !seen[m] {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}

/// Centre of cell `(i, j)` of the window grid.
pub fn cell_center(w: &Window2D, cell: (usize, usize)) -> Point {
    let c = w.cell_size();
    let p = w.node(cell.0, cell.1);
    [p[0] + 0.5 * c[0], p[1] + 0.5 * c[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Unstable,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    /// One period, first and last samples on the Poincaré section.
    pub samples: Vec<Point>,
    pub period: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub stability: Stability,
    /// First-coordinate level of the section.
    pub anchor: f64,
    /// Contraction ratio of successive return-map differences at convergence,
    /// when measurable.
    pub return_ratio: Option<f64>,
}

impl LimitCycle {
    pub fn amplitude(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// Smallest window-unit distance from `p` to the sampled orbit.
    pub fn distance_to(&self, p: Point, w: &Window2D) -> f64 {
        self.samples.iter().map(|s| w.dist(*s, p)).fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Point {
        let n = self.samples.len() as f64;
        let sx: f64 = self.samples.iter().map(|p| p[0]).sum();
        let sy: f64 = self.samples.iter().map(|p| p[1]).sum();
        [sx / n, sy / n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoCycleReason {
    /// The trajectory settled onto an equilibrium.
    Equilibrium,
    /// No periodicity detected within the time or step budget.
    NoPeriodicity,
    /// The trajectory left the enlarged window.
    Escaped,
    /// Integration failed.
    Integration(String),
}

/// Machine-readable record of an unsuccessful cycle search.
#[derive(Debug, Clone, PartialEq)]
pub struct NoCycle {
    pub reason: NoCycleReason,
    pub time: f64,
    pub steps: usize,
    pub returns: usize,
}

/// Budgets and tolerances for limit-cycle searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSearch {
    /// Time scale of the fast dynamics (sets probe lengths and budgets).
    pub time_scale: f64,
    pub transient_periods: f64,
    pub max_steps: usize,
    /// Time budget in units of `time_scale`.
    pub max_time: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Convergence of successive section returns, in window spans.
    pub return_tol: f64,
    /// Orbits with first-coordinate range below this fraction of the
    /// window span count as equilibria.
    pub min_amplitude: f64,
    /// Trajectories farther than this many spans outside the window escape.
    pub escape_margin: f64,
}

impl CycleSearch {
    pub fn new(time_scale: f64) -> Self {
        Self {
            time_scale,
            transient_periods: 20.0,
            max_steps: 1_000_000,
            max_time: 1e6,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            return_tol: 1e-6,
            min_amplitude: 1e-3,
            escape_margin: 1.0,
        }
    }

    pub fn with_transient(mut self, periods: f64) -> Self {
        self.transient_periods = periods;
        self
    }
}

struct Tracker<'a, S: ?Sized> {
    sys: &'a S,
    w: &'a Window2D,
    bounds: Window2D,
    cfg: &'a CycleSearch,
    t: f64,
    x: Point,
    steps: usize,
}

struct SegmentOut {
    samples: Vec<(f64, Point)>,
}

impl<'a, S: DynamicalSystem + ?Sized> Tracker<'a, S> {
    fn fail(&self, reason: NoCycleReason, returns: usize) -> NoCycle {
        NoCycle { reason, time: self.t, steps: self.steps, returns }
    }

    fn budget_left(&self) -> bool {
        self.steps < self.cfg.max_steps && self.t < self.cfg.max_time * self.cfg.time_scale
    }

    fn integrator(&self, duration: f64, max_step: f64) -> IntegratorConfig {
        IntegratorConfig::rk45(self.t, self.t + duration)
            .with_tolerances(self.cfg.rel_tol, self.cfg.abs_tol)
            .with_max_step(max_step.min(duration))
            .with_min_step(0.0)
            .with_max_steps(self.cfg.max_steps.saturating_sub(self.steps).max(1))
    }

    /// Integrates for `duration`, handing each accepted step to `on_step`
    /// (which may stop early) and recording samples when `record` is set.
    fn run(
        &mut self,
        duration: f64,
        max_step: f64,
        record: bool,
        mut on_step: impl FnMut(f64, Point, f64, Point) -> Control,
    ) -> std::result::Result<SegmentOut, NoCycle> {
        let cfg = self.integrator(duration, max_step);
        let mut samples = Vec::new();
        if record {
            samples.push((self.t, self.x));
        }
        let mut escaped = false;
        let mut prev = (self.t, self.x);
        let mut steps = 0usize;
        let bounds = self.bounds;
        let res = integrate_observed(self.sys, &self.x, &cfg, |t, x| {
            let p = [x[0], x[1]];
            steps += 1;
            if record {
                samples.push((t, p));
            }
            if !bounds.contains(p) {
                escaped = true;
                return Control::Stop;
            }
            let c = on_step(prev.0, prev.1, t, p);
            prev = (t, p);
            c
        });
        self.steps += steps;
        match res {
            Ok((t, x)) => {
                self.t = t;
                self.x = [x[0], x[1]];
            }
            Err(Error::MaxStepsExceeded { .. }) => {
                self.t = prev.0;
                self.x = prev.1;
                return Err(self.fail(NoCycleReason::NoPeriodicity, 0));
            }
            Err(e) => return Err(self.fail(NoCycleReason::Integration(e.to_string()), 0)),
        }
        if escaped {
            return Err(self.fail(NoCycleReason::Escaped, 0));
        }
        Ok(SegmentOut { samples })
    }

    fn settled(&self, samples: &[(f64, Point)]) -> bool {
        let (lo, hi) = range_x(samples.iter().map(|s| s.1));
        let (lo1, hi1) = range_y(samples.iter().map(|s| s.1));
        let s = self.w.span();
        (hi - lo) / s[0] < 1e-9 && (hi1 - lo1) / s[1] < 1e-9
    }

    /// Section crossing in the step `(t0, x0) → (t1, x1)` by cubic Hermite
    /// interpolation.
    fn crossing(&self, level: f64, t0: f64, x0: Point, t1: f64, x1: Point) -> (f64, Point) {
        let mut f0 = [0.0; 2];
        let mut f1 = [0.0; 2];
        let ok = self.sys.rhs(t0, &x0, &mut f0).is_ok() && self.sys.rhs(t1, &x1, &mut f1).is_ok();
        let h = t1 - t0;
        let herm = |s: f64, c: usize| -> f64 {
            if !ok {
                return x0[c] + s * (x1[c] - x0[c]);
            }
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * x0[c]
                + (s3 - 2.0 * s2 + s) * h * f0[c]
                + (-2.0 * s3 + 3.0 * s2) * x1[c]
                + (s3 - s2) * h * f1[c]
        };
        let s = find_root(|s| herm(s, 0) - level, 0.0, 1.0).unwrap_or_else(|| (level - x0[0]) / (x1[0] - x0[0]));
        (t0 + s * h, [level, herm(s, 1)])
    }
}

fn range_x(it: impl Iterator<Item = Point>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])))
}

fn range_y(it: impl Iterator<Item = Point>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])))
}

/// Time average of the first coordinate (trapezoid rule).
fn time_mean(samples: &[(f64, Point)]) -> f64 {
    if samples.len() < 2 {
        return samples.first().map_or(0.0, |s| s.1[0]);
    }
    let mut acc = 0.0;
    for w in samples.windows(2) {
        acc += 0.5 * (w[0].1[0] + w[1].1[0]) * (w[1].0 - w[0].0);
    }
    acc / (samples.last().unwrap().0 - samples[0].0)
}

fn upward_crossings(samples: &[(f64, Point)], level: f64) -> Vec<f64> {
    samples
        .windows(2)
        .filter(|w| w[0].1[0] < level && w[1].1[0] >= level)
        .map(|w| {
            let s = (level - w[0].1[0]) / (w[1].1[0] - w[0].1[0]);
            w[0].0 + s * (w[1].0 - w[0].0)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn search_cycle<S: DynamicalSystem + ?Sized>(
    sys: &S,
    w: &Window2D,
    seed: Point,
    cfg: &CycleSearch,
) -> std::result::Result<(Vec<Point>, f64, f64, Option<f64>), NoCycle> {
    let span = w.span();
    let mut tr = Tracker { sys, w, bounds: w.expanded(cfg.escape_margin), cfg, t: 0.0, x: seed, steps: 0 };

    // Probe: find a period estimate from crossings of the trailing mean.
    let ts = cfg.time_scale;
    let mut seg_len = 50.0 * ts;
    let period = loop {
        if !tr.budget_left() {
            return Err(tr.fail(NoCycleReason::NoPeriodicity, 0));
        }
        let out = tr.run(seg_len, ts, true, |_, _, _, _| Control::Continue)?;
        let tail = &out.samples[out.samples.len() / 2..];
        if tr.settled(tail) {
            return Err(tr.fail(NoCycleReason::Equilibrium, 0));
        }
        let level = time_mean(tail);
        let mut c = upward_crossings(tail, level);
        if c.len() >= 4 {
            let mut d: Vec<f64> = c.windows(2).map(|p| p[1] - p[0]).collect();
            c.clear();
            break median(&mut d);
        }
        seg_len *= 2.0;
    };

    // Transient, then anchor the section on the mean over the last periods.
    let max_step = period / 50.0;
    let transient = (cfg.transient_periods - 2.0).max(0.0) * period;
    if transient > 0.0 {
        tr.run(transient, max_step, false, |_, _, _, _| Control::Continue)?;
    }
    let out = tr.run(2.0 * period, max_step, true, |_, _, _, _| Control::Continue)?;
    let (lo, hi) = range_x(out.samples.iter().map(|s| s.1));
    if (hi - lo) / span[0] < cfg.min_amplitude {
        return Err(tr.fail(NoCycleReason::Equilibrium, 0));
    }
    let mut level = time_mean(&out.samples);

    // Return map on the section.
    let mut returns: Vec<(f64, Point)> = Vec::new();
    let mut diffs: Vec<f64> = Vec::new();
    let mut since_last: Vec<Point> = Vec::new();
    let mut done: Option<(Vec<Point>, f64, Option<f64>)> = None;
    let mut seg_period = period;
    loop {
        if !tr.budget_left() {
            return Err(tr.fail(NoCycleReason::NoPeriodicity, returns.len()));
        }
        let n_before = returns.len();
        let tol = cfg.return_tol;
        let min_amp = cfg.min_amplitude;
        let mut small_orbit = false;
        let out = {
            // The crossing refinement only reads the immutable parts of the tracker.
            let helper =
                Tracker { sys: tr.sys, w: tr.w, bounds: tr.bounds, cfg: tr.cfg, t: 0.0, x: [0.0; 2], steps: 0 };
            tr.run(10.0 * seg_period, max_step, true, |t0, x0, t1, x1| {
                if !(x0[0] < level && x1[0] >= level) {
                    if !returns.is_empty() {
                        since_last.push(x1);
                    }
                    return Control::Continue;
                }
                let (tc, pc) = helper.crossing(level, t0, x0, t1, x1);
                if let Some(&(tp, pp)) = returns.last() {
                    let d = (pc[1] - pp[1]).abs() / span[1];
                    let mut orbit = Vec::with_capacity(since_last.len() + 2);
                    orbit.push(pp);
                    orbit.extend(since_last.iter().copied());
                    orbit.push(pc);
                    let converged = if d == 0.0 {
                        true
                    } else if d < tol {
                        match diffs.last() {
                            Some(&dp) if dp > 0.0 => {
                                let rho = d / dp;
                                if rho < 1.0 {
                                    d * rho / (1.0 - rho) < tol
                                } else {
                                    d < 1e-2 * tol
                                }
                            }
                            _ => false,
                        }
                    } else {
                        false
                    };
                    diffs.push(d);
                    if converged {
                        let (lo, hi) = range_x(orbit.iter().copied());
                        if (hi - lo) / span[0] < min_amp {
                            small_orbit = true;
                            return Control::Stop;
                        }
                        let ratio = (diffs.len() >= 2 && diffs[diffs.len() - 2] > 0.0)
                            .then(|| diffs[diffs.len() - 1] / diffs[diffs.len() - 2]);
                        done = Some((orbit, tc - tp, ratio));
                        returns.push((tc, pc));
                        return Control::Stop;
                    }
                }
                returns.push((tc, pc));
                since_last.clear();
                since_last.push(x1);
                Control::Continue
            })?
        };
        if small_orbit {
            return Err(tr.fail(NoCycleReason::Equilibrium, returns.len()));
        }
        if let Some((orbit, period, ratio)) = done {
            return Ok((orbit, period, level, ratio));
        }
        if returns.len() >= 2 {
            let k = returns.len();
            seg_period = seg_period.max(returns[k - 1].0 - returns[k - 2].0);
        }
        if returns.len() == n_before {
            // No crossing in ten periods: settled, or the section drifted.
            let (lo, hi) = range_x(out.samples.iter().map(|s| s.1));
            if (hi - lo) / span[0] < min_amp {
                return Err(tr.fail(NoCycleReason::Equilibrium, returns.len()));
            }
            level = time_mean(&out.samples);
            returns.clear();
            diffs.clear();
            since_last.clear();
        }
    }
}

/// Searches for a limit cycle from `seed`. Unstable cycles are found as
/// stable cycles of the time-reversed system (valid in the plane).
pub fn find_limit_cycle<S: DynamicalSystem + ?Sized>(
    fast: &S,
    w: &Window2D,
    seed: Point,
    stability: Stability,
    cfg: &CycleSearch,
) -> std::result::Result<LimitCycle, NoCycle> {
    let found = match stability {
        Stability::Stable => search_cycle(fast, w, seed, cfg),
        Stability::Unstable => search_cycle(&TimeReversed(fast), w, seed, cfg),
    };
    let (mut samples, period, anchor, return_ratio) = found?;
    if stability == Stability::Unstable {
        samples.reverse();
    }
    let (v_min, v_max) = range_x(samples.iter().copied());
    Ok(LimitCycle { samples, period, v_min, v_max, stability, anchor, return_ratio })
}

/// Attractor reached from a probe point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attractor {
    /// Index into the supplied equilibria.
    Equilibrium(usize),
    /// Index into the supplied cycles.
    LimitCycle(usize),
    Divergent,
}

/// Integrates forward from `point` until it is captured by one of the known
/// equilibria (within 1e-4 of the window span) or converges onto the section
/// point of one of the known stable cycles on two successive returns.
pub fn basin_probe<S: DynamicalSystem + ?Sized>(
    fast: &S,
    w: &Window2D,
    point: Point,
    equilibria: &[Equilibrium],
    cycles: &[LimitCycle],
    cfg: &CycleSearch,
) -> Attractor {
    let span = w.span();
    let mut tr = Tracker { sys: fast, w, bounds: w.expanded(cfg.escape_margin), cfg, t: 0.0, x: point, steps: 0 };
    let capture = |p: Point| equilibria.iter().position(|e| w.dist(e.location, p) < 1e-4);
    if let Some(k) = capture(point) {
        return Attractor::Equilibrium(k);
    }
    let stable: Vec<usize> = (0..cycles.len()).filter(|&k| cycles[k].stability == Stability::Stable).collect();
    let mut hits = vec![0usize; cycles.len()];
    let seg = cycles.iter().map(|c| c.period).fold(50.0 * cfg.time_scale, f64::max);
    let max_step = cycles.iter().map(|c| c.period / 50.0).fold(cfg.time_scale, f64::min);
    let helper = Tracker { sys: fast, w, bounds: tr.bounds, cfg, t: 0.0, x: [0.0; 2], steps: 0 };
    while tr.budget_left() {
        let mut result: Option<Attractor> = None;
        let run = tr.run(seg, max_step, false, |t0, x0, t1, x1| {
            if let Some(k) = capture(x1) {
                result = Some(Attractor::Equilibrium(k));
                return Control::Stop;
            }
            for &k in &stable {
                let c = &cycles[k];
                let sec = c.samples[0];
                if x0[0] < sec[0] && x1[0] >= sec[0] {
                    let (_, pc) = helper.crossing(sec[0], t0, x0, t1, x1);
                    if (pc[1] - sec[1]).abs() / span[1] < 1e-4 {
                        hits[k] += 1;
                        if hits[k] >= 2 {
                            result = Some(Attractor::LimitCycle(k));
                            return Control::Stop;
                        }
                    } else {
                        hits[k] = 0;
                    }
                }
            }
            Control::Continue
        });
        if let Some(a) = result {
            return a;
        }
        if run.is_err() {
            return Attractor::Divergent;
        }
    }
    Attractor::Divergent
}

/// Writes polylines as `curve_id,x,y`.
pub fn write_curves_csv<W: Write>(mut out: W, curves: &[(String, &[Point])]) -> Result<()> {
    writeln!(out, "curve_id,x,y")?;
    for (id, pts) in curves {
        for p in pts.iter() {
            writeln!(out, "{id},{},{}", fmt17(p[0]), fmt17(p[1]))?;
        }
    }
    Ok(())
}

/// Writes nullclines with ids `f1_<k>` and `f2_<k>`.
pub fn write_nullclines_csv<W: Write>(out: W, n: &NullclineSet) -> Result<()> {
    let mut curves: Vec<(String, &[Point])> = Vec::new();
    for (k, c) in n.curves_f1.iter().enumerate() {
        curves.push((format!("f1_{k}"), c));
    }
    for (k, c) in n.curves_f2.iter().enumerate() {
        curves.push((format!("f2_{k}"), c));
    }
    write_curves_csv(out, &curves)
}

/// Writes equilibria as `x,y,class,re1,im1,re2,im2`.
pub fn write_equilibria_csv<W: Write>(mut out: W, eqs: &[Equilibrium]) -> Result<()> {
    writeln!(out, "x,y,class,re1,im1,re2,im2")?;
    for e in eqs {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt17(e.location[0]),
            fmt17(e.location[1]),
            e.klass,
            fmt17(e.eigenvalues[0].re),
            fmt17(e.eigenvalues[0].im),
            fmt17(e.eigenvalues[1].re),
            fmt17(e.eigenvalues[1].im)
        )?;
    }
    Ok(())
}

/// Writes cycles as `curve_id,x,y` with ids `<stability>_<k>`.
pub fn write_cycles_csv<W: Write>(out: W, cycles: &[LimitCycle]) -> Result<()> {
    let curves: Vec<(String, &[Point])> =
        cycles.iter().enumerate().map(|(k, c)| (format!("{}_{k}", c.stability), c.samples.as_slice())).collect();
    write_curves_csv(out, &curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::FnSystem;

    fn linear() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(["x", "y"], |_t, x: &[f64], d: &mut [f64]| {
            d[0] = x[0] - 1.0;
            d[1] = x[1] + 2.0;
        })
    }

    /// Hopf normal form with a stable cycle of radius 1.
    fn hopf() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(["x", "y"], |_t, p: &[f64], d: &mut [f64]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            d[0] = p[0] - p[1] - p[0] * r2;
            d[1] = p[0] + p[1] - p[1] * r2;
        })
    }

    /// Stable focus at the origin inside an unstable cycle of radius 1,
    /// inside a stable cycle of radius 2.
    fn nested() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(["x", "y"], |_t, p: &[f64], d: &mut [f64]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let g = -(r2 - 1.0) * (r2 - 4.0) * 0.25;
            d[0] = g * p[0] - p[1];
            d[1] = g * p[1] + p[0];
        })
    }

    fn win(lo: f64, hi: f64) -> Window2D {
        Window2D::new((lo, hi), (lo, hi), (101, 101)).unwrap()
    }

    #[test]
    fn classify_textbook_cases() {
        let c = |a: Complex64, b: Complex64| classify(&[a, b], 1.0);
        assert_eq!(c(Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)), EqClass::StableNode);
        assert_eq!(c(Complex64::new(-1.0, 0.0), Complex64::new(2.0, 0.0)), EqClass::Saddle);
        assert_eq!(c(Complex64::new(0.1, 3.0), Complex64::new(0.1, -3.0)), EqClass::UnstableFocus);
        assert_eq!(c(Complex64::new(-0.1, 3.0), Complex64::new(-0.1, -3.0)), EqClass::StableFocus);
        assert_eq!(c(Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)), EqClass::UnstableNode);
        assert_eq!(c(Complex64::new(1e-9, 1.0), Complex64::new(1e-9, -1.0)), EqClass::Nonhyperbolic);
    }

    #[test]
    fn linear_nullclines_are_grid_lines() {
        let w = Window2D::new((-3.0, 3.0), (-4.0, 4.0), (61, 81)).unwrap();
        let n = compute_nullclines(&linear(), &w).unwrap();
        assert_eq!(n.curves_f1.len(), 1);
        assert_eq!(n.curves_f2.len(), 1);
        assert!(n.curves_f1[0].iter().all(|p| (p[0] - 1.0).abs() < 1e-12));
        assert!(n.curves_f2[0].iter().all(|p| (p[1] + 2.0).abs() < 1e-12));
        let ys: Vec<f64> = n.curves_f1[0].iter().map(|p| p[1]).collect();
        assert!((ys.iter().cloned().fold(f64::INFINITY, f64::min) + 4.0).abs() < 1e-12);
        assert!((ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nullcline_vertices_are_roots() {
        let w = win(-2.5, 2.5);
        let sys = nested();
        let n = compute_nullclines(&sys, &w).unwrap();
        for (c, curves) in [(0, &n.curves_f1), (1, &n.curves_f2)] {
            for p in curves.iter().flatten() {
                let d = eval2(&sys, *p).unwrap();
                assert!(d[c].abs() < 1e-10 * n.scale[c], "{p:?} {d:?}");
            }
        }
    }

    #[test]
    fn linear_equilibrium() {
        let w = Window2D::new((-3.0, 3.0), (-4.0, 4.0), (61, 81)).unwrap();
        let e = find_equilibria(&linear(), &w).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0].location[0] - 1.0).abs() < 1e-9 && (e[0].location[1] + 2.0).abs() < 1e-9);
        assert_eq!(e[0].klass, EqClass::UnstableNode);
    }

    #[test]
    fn cubic_has_three_sorted_equilibria() {
        // x' = y - (x^3 - x), y' = -y: equilibria at x = -1, 0, 1.
        let sys = FnSystem::new(["x", "y"], |_t, p: &[f64], d: &mut [f64]| {
            d[0] = p[1] - (p[0].powi(3) - p[0]);
            d[1] = -p[1];
        });
        let w = Window2D::new((-2.0, 2.0), (-1.0, 1.0), (80, 40)).unwrap();
        let e = find_equilibria(&sys, &w).unwrap();
        let xs: Vec<f64> = e.iter().map(|q| q.location[0]).collect();
        assert_eq!(xs.len(), 3);
        for (x, t) in xs.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((x - t).abs() < 1e-9);
        }
        assert_eq!(e[1].klass, EqClass::Saddle);
        assert_eq!(e[0].klass, EqClass::StableNode);
        let v = e[1].eigenvectors.unwrap();
        assert!((v[0][0].abs() - 0.0).abs() < 1e-6 || (v[1][0].abs() - 1.0).abs() < 1e-6);
        assert_eq!(sign_scan_census(&sys, &w.with_grid(50, 50).unwrap()).len(), 3);
    }

    #[test]
    fn stable_cycle_of_hopf_normal_form() {
        let w = win(-2.0, 2.0);
        let cfg = CycleSearch::new(1.0);
        let c = find_limit_cycle(&hopf(), &w, [0.1, 0.0], Stability::Stable, &cfg).unwrap();
        assert!((c.period - 2.0 * std::f64::consts::PI).abs() < 1e-6, "{}", c.period);
        assert!((c.v_max - 1.0).abs() < 1e-3 && (c.v_min + 1.0).abs() < 1e-3);
        for p in &c.samples {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn unstable_cycle_by_time_reversal() {
        let w = win(-3.0, 3.0);
        let cfg = CycleSearch::new(1.0);
        let sys = nested();
        let u = find_limit_cycle(&sys, &w, [0.2, 0.0], Stability::Unstable, &cfg).unwrap();
        assert_eq!(u.stability, Stability::Unstable);
        assert!((u.v_max - 1.0).abs() < 1e-3);
        let s = find_limit_cycle(&sys, &w, [1.5, 0.0], Stability::Stable, &cfg).unwrap();
        assert!((s.v_max - 2.0).abs() < 1e-3);
        // Inside the unstable cycle the focus captures; outside, the outer cycle.
        let eqs = find_equilibria(&sys, &w).unwrap();
        assert_eq!(eqs.len(), 1);
        let cycles = [u.clone(), s.clone()];
        assert_eq!(basin_probe(&sys, &w, [0.9, 0.0], &eqs, &cycles, &cfg), Attractor::Equilibrium(0));
        assert_eq!(basin_probe(&sys, &w, [1.1, 0.0], &eqs, &cycles, &cfg), Attractor::LimitCycle(1));
        assert_eq!(basin_probe(&sys, &w, eqs[0].location, &eqs, &cycles, &cfg), Attractor::Equilibrium(0));
    }

    #[test]
    fn linear_stable_system_has_no_cycle() {
        let sys = FnSystem::new(["x", "y"], |_t, p: &[f64], d: &mut [f64]| {
            d[0] = -p[0] + 2.0 * p[1];
            d[1] = -2.0 * p[0] - p[1];
        });
        let w = win(-2.0, 2.0);
        let r = find_limit_cycle(&sys, &w, [1.0, 1.0], Stability::Stable, &CycleSearch::new(1.0));
        assert_eq!(r.unwrap_err().reason, NoCycleReason::Equilibrium);
    }

    #[test]
    fn csv_headers() {
        let w = win(-2.0, 2.0);
        let e = find_equilibria(&hopf(), &w).unwrap();
        let mut buf = Vec::new();
        write_equilibria_csv(&mut buf, &e).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,class,re1,im1,re2,im2\n"));
        assert!(text.contains("unstable focus"));
    }
}
