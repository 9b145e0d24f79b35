//! ODE representation, Runge–Kutta integrators, trajectories and
//! threshold-crossing location.
//!
//! Every model and circuit in the crate implements [`DynamicalSystem`]; the
//! integrators here are the only place where time stepping happens.

use crate::error::{Error, Result};
use crate::io::fmt17;
use std::io::{BufRead, Write};

/// Right-hand side `dx/dt = f(t, x)` of an autonomous or non-autonomous ODE.
///
/// Implementations must be deterministic: identical `(t, x)` produce
/// bit-identical derivatives.
pub trait DynamicalSystem {
    fn dimension(&self) -> usize;

    /// Short component names, one per state entry.
    fn labels(&self) -> Vec<String>;

    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()>;

    /// Named real parameters, for manifests and reports.
    fn params(&self) -> Vec<(String, f64)> {
        Vec::new()
    }
}

impl<S: DynamicalSystem + ?Sized> DynamicalSystem for &S {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn labels(&self) -> Vec<String> {
        (**self).labels()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        (**self).rhs(t, x, dx)
    }
    fn params(&self) -> Vec<(String, f64)> {
        (**self).params()
    }
}

/// A system given by a closure; handy for tests and custom right-hand sides.
pub struct FnSystem<F> {
    labels: Vec<String>,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>, f: F) -> Self {
        Self { labels: labels.into_iter().map(Into::into).collect(), f }
    }
}

impl<F> DynamicalSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dimension(&self) -> usize {
        self.labels.len()
    }
    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        (self.f)(t, x, dx);
        Ok(())
    }
}

/// `dx/dt = -f(x)`. For planar systems this swaps the stability of every
/// equilibrium and limit cycle.
#[derive(Debug, Clone)]
pub struct TimeReversed<S>(pub S);

impl<S: DynamicalSystem> DynamicalSystem for TimeReversed<S> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn labels(&self) -> Vec<String> {
        self.0.labels()
    }
    fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        self.0.rhs(-t, x, dx)?;
        dx.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }
    fn params(&self) -> Vec<(String, f64)> {
        self.0.params()
    }
}

/// Labeled state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    labels: Vec<String>,
}

impl StateVector {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>, values: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("state contains non-finite values".into()));
        }
        Ok(Self { values, labels })
    }

    pub fn for_system<S: DynamicalSystem + ?Sized>(system: &S, values: Vec<f64>) -> Result<Self> {
        Self::new(system.labels(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Time-ordered samples of an integration run. States are stored flat,
/// row-major, `dimension` values per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    labels: Vec<String>,
    times: Vec<f64>,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, times: Vec::new(), data: Vec::new() }
    }

    /// Appends a sample. Times must be strictly increasing.
    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.labels.len());
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.data.extend_from_slice(x);
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        let d = self.dimension();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Copy of one component over all samples.
    pub fn component(&self, label: &str) -> Result<Vec<f64>> {
        let k = self.index_of(label)?;
        Ok(self.component_at(k))
    }

    pub fn component_at(&self, k: usize) -> Vec<f64> {
        let d = self.dimension();
        self.data.iter().skip(k).step_by(d).copied().collect()
    }

    /// Samples with `t >= t_from`.
    pub fn after(&self, t_from: f64) -> Trajectory {
        let start = self.times.partition_point(|&t| t < t_from);
        let d = self.dimension();
        Trajectory {
            labels: self.labels.clone(),
            times: self.times[start..].to_vec(),
            data: self.data[start * d..].to_vec(),
        }
    }

    /// Uniformly rescales time by `factor > 0`.
    pub fn rescale_time(&self, factor: f64) -> Trajectory {
        Trajectory {
            labels: self.labels.clone(),
            times: self.times.iter().map(|t| t * factor).collect(),
            data: self.data.clone(),
        }
    }

    /// Linear interpolation of the state at time `t` (clamped to the ends).
    pub fn sample_at(&self, t: f64) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Some(self.state(0).to_vec());
        }
        if i >= self.len() {
            return Some(self.state(self.len() - 1).to_vec());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(self.state(i - 1).iter().zip(self.state(i)).map(|(a, b)| a + w * (b - a)).collect())
    }

    /// Writes `t,<label1>,...` CSV with 17 significant digits. `time_factor`
    /// multiplies the exported time column (e.g. 1e3 for seconds → ms).
    pub fn write_csv<W: Write>(&self, mut w: W, time_factor: f64) -> Result<()> {
        write!(w, "t")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{}", fmt17(self.times[i] * time_factor))?;
            for v in self.state(i) {
                write!(w, ",{}", fmt17(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses the CSV produced by [`Trajectory::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(Error::CsvParse { row: 1, message: "empty input".into() })??;
        let mut cols = header.trim_end().split(',');
        if cols.next() != Some("t") {
            return Err(Error::CsvParse { row: 1, message: "first column must be `t`".into() });
        }
        let labels: Vec<String> = cols.map(str::to_string).collect();
        if labels.is_empty() {
            return Err(Error::CsvParse { row: 1, message: "no state columns".into() });
        }
        let mut traj = Trajectory::new(labels);
        let d = traj.dimension();
        let mut row_buf = Vec::with_capacity(d);
        for (k, line) in lines.enumerate() {
            let row = k + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.trim_end().split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                let s = s.ok_or(Error::CsvParse { row, message: "too few fields".into() })?;
                let v: f64 =
                    s.trim().parse().map_err(|_| Error::CsvParse { row, message: format!("not a number: `{s}`") })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::CsvParse { row, message: "non-finite value".into() })
                }
            };
            let t = parse(fields.next())?;
            row_buf.clear();
            for _ in 0..d {
                row_buf.push(parse(fields.next())?);
            }
            if fields.next().is_some() {
                return Err(Error::CsvParse { row, message: "too many fields".into() });
            }
            if traj.times.last().is_some_and(|&last| t <= last) {
                return Err(Error::CsvParse { row, message: "times must be strictly increasing".into() });
            }
            traj.push(t, &row_buf);
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a constant step.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with error control.
    Rk45 { rel_tol: f64, abs_tol: f64, max_step: f64, min_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_start: f64,
    pub t_end: f64,
    pub max_steps: usize,
    /// Record every `record_stride`-th accepted step (the final state is always recorded).
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn rk4(t_start: f64, t_end: f64, step: f64) -> Self {
        Self { method: Method::Rk4 { step }, t_start, t_end, max_steps: usize::MAX, record_stride: 1 }
    }

    /// Adaptive defaults: rel 1e-6, abs 1e-9, `max_step` = span/1000.
    pub fn rk45(t_start: f64, t_end: f64) -> Self {
        let span = t_end - t_start;
        Self {
            method: Method::Rk45 {
                rel_tol: 1e-6,
                abs_tol: 1e-9,
                max_step: span / 1000.0,
                min_step: span.abs() * 1e-14,
            },
            t_start,
            t_end,
            max_steps: 10_000_000,
            record_stride: 1,
        }
    }

    pub fn with_tolerances(mut self, rel: f64, abs: f64) -> Self {
        if let Method::Rk45 { ref mut rel_tol, ref mut abs_tol, .. } = self.method {
            *rel_tol = rel;
            *abs_tol = abs;
        }
        self
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        if let Method::Rk45 { ref mut max_step, .. } = self.method {
            *max_step = h;
        }
        self
    }

    pub fn with_min_step(mut self, h: f64) -> Self {
        if let Method::Rk45 { ref mut min_step, .. } = self.method {
            *min_step = h;
        }
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.t_end > self.t_start) {
            return bad("t_end must exceed t_start");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive");
        }
        match self.method {
            Method::Rk4 { step } if !(step > 0.0) => bad("fixed step must be positive"),
            Method::Rk45 { rel_tol, abs_tol, max_step, min_step } => {
                if !(rel_tol > 0.0 && abs_tol > 0.0) {
                    bad("tolerances must be positive")
                } else if !(max_step > 0.0) || min_step < 0.0 || min_step > max_step {
                    bad("need 0 <= min_step <= max_step, max_step > 0")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Observer verdict after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

fn check_dims<S: DynamicalSystem + ?Sized>(system: &S, x0: &[f64]) -> Result<()> {
    if system.dimension() != x0.len() {
        return Err(Error::DimensionMismatch { expected: system.dimension(), got: x0.len() });
    }
    Ok(())
}

fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// One classical RK4 step of size `h` from `(t, x)` into `out`.
pub fn rk4_step<S: DynamicalSystem + ?Sized>(system: &S, t: f64, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    system.rhs(t, x, &mut k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    system.rhs(t + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    system.rhs(t + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    system.rhs(t + h, &tmp, &mut k4)?;
    for i in 0..n {
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Fixed-step RK4 integration. The last step is shortened to land on `t_end`.
pub fn integrate_fixed<S: DynamicalSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_dims(system, x0)?;
    let Method::Rk4 { step } = cfg.method else {
        return Err(Error::InvalidConfig("integrate_fixed requires method rk4".into()));
    };
    let mut traj = Trajectory::new(system.labels());
    let mut x = x0.to_vec();
    let mut next = x.clone();
    traj.push(cfg.t_start, &x);
    let span = cfg.t_end - cfg.t_start;
    let n_full = (span / step).floor() as usize;
    let mut t = cfg.t_start;
    let mut k = 0usize;
    loop {
        let (t_next, h) =
            if k < n_full { (cfg.t_start + (k + 1) as f64 * step, step) } else { (cfg.t_end, cfg.t_end - t) };
        if h <= span * 1e-14 {
            break;
        }
        if k >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded { t, max_steps: cfg.max_steps });
        }
        rk4_step(system, t, &x, h, &mut next)?;
        if !all_finite(&next) {
            return Err(Error::IntegrationDiverged { last_valid_t: t });
        }
        std::mem::swap(&mut x, &mut next);
        t = t_next;
        k += 1;
        let is_last = t >= cfg.t_end;
        if is_last || k.is_multiple_of(cfg.record_stride) {
            traj.push(t, &x);
        }
        if is_last {
            break;
        }
    }
    if traj.times().last().copied() != Some(cfg.t_end) {
        traj.push(cfg.t_end, &x);
    }
    Ok(traj)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince integration that hands every accepted step to
/// `observer` and stops early when it returns [`Control::Stop`]. Returns the
/// final `(t, x)`.
pub fn integrate_observed<S, F>(
    system: &S,
    x0: &[f64],
    cfg: &IntegratorConfig,
    mut observer: F,
) -> Result<(f64, Vec<f64>)>
where
    S: DynamicalSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> Control,
{
    cfg.validate()?;
    check_dims(system, x0)?;
    let Method::Rk45 { rel_tol, abs_tol, max_step, min_step } = cfg.method else {
        return Err(Error::InvalidConfig("adaptive integration requires method rk45".into()));
    };
    let n = x0.len();
    let mut x = x0.to_vec();
    if !all_finite(&x) {
        return Err(Error::IntegrationDiverged { last_valid_t: cfg.t_start });
    }
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut t = cfg.t_start;
    system.rhs(t, &x, &mut k[0])?;
    if !all_finite(&k[0]) {
        return Err(Error::IntegrationDiverged { last_valid_t: t });
    }

    // Initial step from the derivative scale.
    let mut h = {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..n {
            let sc = abs_tol + rel_tol * x[i].abs();
            d0 = d0.max((x[i] / sc).abs());
            d1 = d1.max((k[0][i] / sc).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(max_step).min(cfg.t_end - cfg.t_start).max(min_step)
    };

    let mut steps = 0usize;
    let mut last_rejected = false;
    while t < cfg.t_end {
        if steps >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded { t, max_steps: cfg.max_steps });
        }
        let remaining = cfg.t_end - t;
        let final_step = h >= remaining;
        if final_step {
            h = remaining;
        }
        let stages: [(f64, &[f64]); 6] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
            (1.0, &[B1, 0.0, B3, B4, B5, B6]),
        ];
        let mut ok = true;
        for (s, (c, a)) in stages.iter().enumerate() {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, aj) in a.iter().enumerate() {
                    acc += aj * k[j][i];
                }
                tmp[i] = x[i] + h * acc;
            }
            if s == 5 {
                x_new.copy_from_slice(&tmp);
            }
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            system.rhs(t + c * h, &tmp, &mut tail[0])?;
            if !all_finite(&tail[0]) {
                ok = false;
                break;
            }
        }

        let err = if ok && all_finite(&x_new) {
            let mut e: f64 = 0.0;
            for i in 0..n {
                let ei = h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = abs_tol + rel_tol * x[i].abs().max(x_new[i].abs());
                e = e.max((ei / sc).abs());
            }
            e
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            t = if final_step { cfg.t_end } else { t + h };
            std::mem::swap(&mut x, &mut x_new);
            // FSAL: the last stage is f(t+h, x_new).
            k.swap(0, 6);
            steps += 1;
            if observer(t, &x) == Control::Stop {
                return Ok((t, x));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            h = (h * fac).min(max_step);
            last_rejected = false;
        } else {
            if err.is_infinite() && h <= min_step {
                return Err(Error::IntegrationDiverged { last_valid_t: t });
            }
            let fac = if err.is_finite() { (0.9 * err.powf(-0.25)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
            last_rejected = true;
            if h < min_step {
                return Err(Error::StepUnderflow { t, h });
            }
        }
    }
    Ok((t, x))
}

/// Adaptive Dormand–Prince integration recording every `record_stride`-th
/// accepted step.
pub fn integrate_adaptive<S: DynamicalSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_dims(system, x0)?;
    let mut traj = Trajectory::new(system.labels());
    traj.push(cfg.t_start, x0);
    let stride = cfg.record_stride.max(1);
    let mut count = 0usize;
    let t_end = cfg.t_end;
    integrate_observed(system, x0, cfg, |t, x| {
        count += 1;
        if count.is_multiple_of(stride) || t >= t_end {
            traj.push(t, x);
        }
        Control::Continue
    })?;
    Ok(traj)
}

/// Dispatches on `cfg.method`.
pub fn integrate<S: DynamicalSystem + ?Sized>(system: &S, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    match cfg.method {
        Method::Rk4 { .. } => integrate_fixed(system, x0, cfg),
        Method::Rk45 { .. } => integrate_adaptive(system, x0, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
}

/// Times at which `component` crosses `level` in `direction`, linearly
/// interpolated between the straddling samples.
pub fn locate_threshold_crossings(
    traj: &Trajectory,
    component: &str,
    level: f64,
    direction: Direction,
) -> Result<Vec<f64>> {
    let k = traj.index_of(component)?;
    let v = traj.component_at(k);
    Ok(crossings_of(traj.times(), &v, level, direction))
}

pub(crate) fn crossings_of(times: &[f64], v: &[f64], level: f64, direction: Direction) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..v.len() {
        let (a, b) = (v[i - 1], v[i]);
        let hit = match direction {
            Direction::Rising => a < level && b >= level,
            Direction::Falling => a > level && b <= level,
        };
        if hit {
            let w = (level - a) / (b - a);
            out.push(times[i - 1] + w * (times[i] - times[i - 1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(["x"], |_t, x: &[f64], dx: &mut [f64]| dx[0] = -x[0])
    }

    fn oscillator() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem::new(["x", "y"], |_t, x: &[f64], dx: &mut [f64]| {
            dx[0] = x[1];
            dx[1] = -x[0];
        })
    }

    #[test]
    fn rk4_exponential_decay() {
        let traj = integrate_fixed(&decay(), &[1.0], &IntegratorConfig::rk4(0.0, 1.0, 1e-3)).unwrap();
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(*traj.times().last().unwrap(), 1.0);
        let x1 = traj.last_state().unwrap()[0];
        assert!((x1 - (-1.0f64).exp()).abs() < 1e-9, "{x1}");
    }

    #[test]
    fn rk4_constant_system() {
        let sys = FnSystem::new(["x"], |_t, _x: &[f64], dx: &mut [f64]| dx[0] = 0.0);
        let traj = integrate_fixed(&sys, &[7.0], &IntegratorConfig::rk4(0.0, 2.0, 0.1)).unwrap();
        assert!(traj.component("x").unwrap().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn rk4_harmonic_oscillator_returns() {
        let tp = 2.0 * std::f64::consts::PI;
        let traj = integrate_fixed(&oscillator(), &[1.0, 0.0], &IntegratorConfig::rk4(0.0, tp, 1e-3)).unwrap();
        let s = traj.last_state().unwrap();
        assert!((s[0] - 1.0).abs() < 1e-8 && s[1].abs() < 1e-8, "{s:?}");
    }

    #[test]
    fn rk4_final_partial_step() {
        let traj = integrate_fixed(&decay(), &[1.0], &IntegratorConfig::rk4(0.0, 1.05, 0.1)).unwrap();
        let t = traj.times();
        assert_eq!(t.len(), 12);
        assert!((t[10] - 1.0).abs() < 1e-12);
        assert_eq!(t[11], 1.05);
    }

    #[test]
    fn rk45_exponential_decay() {
        let cfg = IntegratorConfig::rk45(0.0, 1.0).with_tolerances(1e-8, 1e-12);
        let traj = integrate_adaptive(&decay(), &[1.0], &cfg).unwrap();
        let x1 = traj.last_state().unwrap()[0];
        assert!((x1 - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(*traj.times().last().unwrap(), 1.0);
    }

    #[test]
    fn rk45_honours_max_step() {
        let cfg = IntegratorConfig::rk45(0.0, 10.0).with_max_step(0.05);
        let traj = integrate_adaptive(&decay(), &[1.0], &cfg).unwrap();
        let t = traj.times();
        assert!(t.windows(2).all(|w| w[1] - w[0] <= 0.05 + 1e-12));
    }

    #[test]
    fn divergence_is_reported() {
        let sys = FnSystem::new(["x"], |_t, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let err = integrate_fixed(&sys, &[1.0], &IntegratorConfig::rk4(0.0, 2.0, 0.01)).unwrap_err();
        match err {
            Error::IntegrationDiverged { last_valid_t } => {
                assert!(last_valid_t > 0.9 && last_valid_t < 2.0, "{last_valid_t}")
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn adaptive_blowup_is_an_error() {
        let sys = FnSystem::new(["x"], |_t, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let cfg = IntegratorConfig::rk45(0.0, 2.0);
        assert!(integrate_adaptive(&sys, &[1.0], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::rk4(1.0, 0.0, 0.1).validate().is_err());
        assert!(IntegratorConfig::rk4(0.0, 1.0, 0.0).validate().is_err());
        assert!(IntegratorConfig::rk45(0.0, 1.0).with_tolerances(0.0, 1e-9).validate().is_err());
        let bad = integrate_adaptive(&decay(), &[1.0, 2.0], &IntegratorConfig::rk45(0.0, 1.0));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
        let wrong = integrate_fixed(&decay(), &[1.0], &IntegratorConfig::rk45(0.0, 1.0));
        assert!(matches!(wrong, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn sine_crossings() {
        let mut traj = Trajectory::new(vec!["s".into()]);
        let n = 20_000;
        for i in 0..=n {
            let t = i as f64 * 1e-3;
            traj.push(t, &[t.sin()]);
        }
        let c = locate_threshold_crossings(&traj, "s", 0.0, Direction::Rising).unwrap();
        // t = 0 starts exactly on the level, so the first rising crossing is 2π.
        assert_eq!(c.len(), 3);
        for (k, tc) in c.iter().enumerate() {
            let expect = 2.0 * std::f64::consts::PI * (k + 1) as f64;
            assert!((tc - expect).abs() < 1e-3, "{tc} vs {expect}");
        }
        let f = locate_threshold_crossings(&traj, "s", 0.0, Direction::Falling).unwrap();
        assert!((f[0] - std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn constant_and_empty_have_no_crossings() {
        let mut traj = Trajectory::new(vec!["v".into()]);
        assert!(locate_threshold_crossings(&traj, "v", 0.0, Direction::Rising).unwrap().is_empty());
        for i in 0..100 {
            traj.push(i as f64, &[3.0]);
        }
        assert!(locate_threshold_crossings(&traj, "v", 1.0, Direction::Rising).unwrap().is_empty());
        assert!(matches!(locate_threshold_crossings(&traj, "w", 1.0, Direction::Rising), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let traj = integrate_fixed(&oscillator(), &[1.0, 0.0], &IntegratorConfig::rk4(0.0, 1.0, 0.1)).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 1.0).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        let back = Trajectory::read_csv(&buf[..]).unwrap();
        assert_eq!(back, traj);

        let bad = "t,x\n0,1\n1,abc\n";
        match Trajectory::read_csv(bad.as_bytes()) {
            Err(Error::CsvParse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn state_vector_checks() {
        assert!(StateVector::new(["a", "b"], vec![1.0]).is_err());
        assert!(StateVector::new(["a"], vec![f64::NAN]).is_err());
        let s = StateVector::new(["V", "n"], vec![-60.0, 0.1]).unwrap();
        assert_eq!(s.get("n"), Some(0.1));
    }
}
