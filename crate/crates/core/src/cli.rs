//! Command-line front end: `simulate`, `phase`, `bifurcate`, `metrics` and
//! `dissect`.
//!
//! Units follow the system: the neuron models take mV, ms and the model's
//! current units; the circuits take SI (V, s, A). Exported times are in ms
//! for both. Every command writes a `run-manifest.txt` with the resolved
//! parameters and every default that influenced the run.

use crate::bifurcation::{build_diagram, classify_burster, cycles_at, AnalysisOptions, BifurcationDiagram};
use crate::burst::{analyze, stats_csv_row, BurstReport, MetricsConfig, Threshold, STATS_HEADER};
use crate::error::{Error, Result};
use crate::io::{fmt17, write_atomic, KeyValues};
use crate::phase::{
    compute_nullclines, find_equilibria, write_cycles_csv, write_equilibria_csv, write_nullclines_csv, Stability,
    Window2D,
};
use crate::presets::{AnySystem, SystemKind};
use crate::slowfast::SlowFast;
use crate::svg::{Plot, Series};
use crate::system::{integrate, DynamicalSystem, IntegratorConfig, Trajectory};
use crate::with_system;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "burstdissect", version, about = "Simulate and dissect bursting neuron models and circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full 3-D system and export the trajectory.
    Simulate(SimulateArgs),
    /// Nullclines, equilibria and limit cycles of the fast subsystem at one
    /// or more frozen slow values.
    Phase(PhaseArgs),
    /// Bifurcation diagram of the fast subsystem over a slow-variable range.
    Bifurcate(BifurcateArgs),
    /// Spike, burst and oscillation statistics of a trajectory.
    Metrics(MetricsArgs),
    /// Diagram, burster classification and burst trajectory in one report.
    Dissect(DissectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// model-a, model-b, circuit-a, circuit-b, or a path to a complete config.
    #[arg(long, default_value = "model-a")]
    pub system: String,
    /// Flat `key = value` parameter overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    pub svg: bool,
    /// Exit nonzero when the requested statistics are unavailable.
    #[arg(long)]
    pub strict: bool,
    /// Injected current (model units, or amperes for circuits).
    #[arg(long = "I", allow_hyphen_values = true)]
    pub current: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rk45,
    Rk4,
}

#[derive(Debug, Clone, Args)]
pub struct IntegrationArgs {
    /// End time in system units (ms for models, s for circuits).
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long, value_enum, default_value = "rk45")]
    pub method: MethodArg,
    /// Fixed step for rk4 (system units); default characteristic time / 50.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long = "rel-tol", default_value_t = 1e-6)]
    pub rel_tol: f64,
    #[arg(long = "abs-tol", default_value_t = 1e-9)]
    pub abs_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SlowArgs {
    /// Frozen nM values (models): a comma list for `phase`, `a:b` for ranges.
    #[arg(long = "nM", allow_hyphen_values = true)]
    pub nm: Option<String>,
    /// Frozen VGS2 values in volts (circuits), same syntax as --nM.
    #[arg(long = "vgs2", allow_hyphen_values = true)]
    pub vgs2: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub integration: IntegrationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub slow: SlowArgs,
    /// Grid resolution per axis for nullclines and seeding.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BifurcateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub slow: SlowArgs,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trajectory CSV to analyse; without it the system is simulated inline.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Component to analyse (default: the system's membrane variable).
    #[arg(long)]
    pub component: Option<String>,
    /// Fixed spike threshold; default is automatic.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[arg(long = "gap-factor", default_value_t = 3.0)]
    pub gap_factor: f64,
    #[arg(long = "noise-fraction", default_value_t = 0.02)]
    pub noise_fraction: f64,
    /// Leading time discarded before analysis (ms).
    #[arg(long, default_value_t = 0.0)]
    pub transient: f64,
    #[command(flatten)]
    pub integration: IntegrationArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DissectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub slow: SlowArgs,
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    #[command(flatten)]
    pub integration: IntegrationArgs,
}

/// Ordered `key = value` record of a run.
#[derive(Debug, Clone, Default)]
struct Manifest(Vec<(String, String)>);

impl Manifest {
    fn set(&mut self, k: impl Into<String>, v: impl ToString) {
        self.0.push((k.into(), v.to_string()));
    }

    fn write(&self, dir: &Path, system: &AnySystem) -> Result<()> {
        let mut s = String::from("# run manifest\n");
        for (k, v) in &self.0 {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s.push_str("\n# resolved system parameters\n");
        s.push_str(&system.to_config_string());
        write_atomic(&dir.join("run-manifest.txt"), s.as_bytes())
    }
}

/// The system selected by `--system`, `--config` and `--I`, in that order
/// of precedence from weakest to strongest.
pub fn resolve_system(common: &Common) -> Result<(AnySystem, Option<SystemKind>)> {
    let (mut sys, kind) = match common.system.parse::<SystemKind>() {
        Ok(k) => (k.system(), Some(k)),
        Err(_) if Path::new(&common.system).is_file() => {
            (AnySystem::from_full_config(&KeyValues::load(Path::new(&common.system))?)?, None)
        }
        Err(e) => return Err(e),
    };
    if let Some(path) = &common.config {
        sys = sys.with_overrides(&KeyValues::load(path)?)?;
    }
    if let Some(i) = common.current {
        if !i.is_finite() {
            return Err(Error::InvalidConfig("--I must be finite".into()));
        }
        sys = sys.with_current(i);
    }
    Ok((sys, kind))
}

fn base_manifest(command: &str, common: &Common, sys: &AnySystem) -> Manifest {
    let mut m = Manifest::default();
    m.set("command", command);
    m.set("system", &common.system);
    m.set("config", common.config.as_ref().map_or("none".into(), |p| p.display().to_string()));
    m.set("out", common.out.display());
    m.set("svg", common.svg);
    m.set("strict", common.strict);
    with_system!(sys, s => {
        m.set("I", fmt17(s.injected_current()));
        m.set("slow_variable", s.slow_label());
        m.set("time_unit_to_ms", fmt17(s.time_to_ms()));
    });
    m
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::InvalidConfig(format!("`{s}` is not a number")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_>>()?;
    if v.is_empty() {
        return Err(Error::InvalidConfig("empty value list".into()));
    }
    Ok(v)
}

pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::InvalidConfig(format!("range `{s}` must look like a:b")))?;
    let (a, b) = (parse_f64(a)?, parse_f64(b)?);
    if !(a < b) {
        return Err(Error::InvalidConfig(format!("range `{s}` must be increasing")));
    }
    Ok((a, b))
}

/// The slow-variable argument matching the system family.
fn slow_arg<'a>(slow: &'a SlowArgs, sys: &AnySystem) -> Result<Option<&'a str>> {
    match (sys, &slow.nm, &slow.vgs2) {
        (AnySystem::Model(_), _, Some(_)) => Err(Error::InvalidConfig("--vgs2 applies to circuits; use --nM".into())),
        (AnySystem::Circuit(_), Some(_), _) => {
            Err(Error::InvalidConfig("--nM applies to the models; use --vgs2".into()))
        }
        (_, Some(v), _) | (_, _, Some(v)) => Ok(Some(v.as_str())),
        _ => Ok(None),
    }
}

fn sweep_range(slow: &SlowArgs, sys: &AnySystem, kind: Option<SystemKind>) -> Result<(f64, f64)> {
    match slow_arg(slow, sys)? {
        Some(r) => parse_range(r),
        None => kind
            .map(SystemKind::sweep_range)
            .ok_or_else(|| Error::InvalidConfig("custom systems need an explicit range (--nM or --vgs2 a:b)".into())),
    }
}

fn integrator<S: SlowFast>(
    s: &S,
    a: &IntegrationArgs,
    kind: Option<SystemKind>,
    m: &mut Manifest,
) -> Result<IntegratorConfig> {
    let t_end = a
        .t_end
        .or(kind.map(|k| k.horizon().0))
        .ok_or_else(|| Error::InvalidConfig("custom systems need --t-end".into()))?;
    let cfg = match a.method {
        MethodArg::Rk45 => IntegratorConfig::rk45(0.0, t_end).with_tolerances(a.rel_tol, a.abs_tol),
        MethodArg::Rk4 => IntegratorConfig::rk4(0.0, t_end, a.step.unwrap_or(s.characteristic_time() / 50.0)),
    };
    cfg.validate()?;
    m.set("t_start", fmt17(0.0));
    m.set("t_end", fmt17(t_end));
    match cfg.method {
        crate::system::Method::Rk45 { rel_tol, abs_tol, max_step, min_step } => {
            m.set("method", "rk45");
            m.set("rel_tol", fmt17(rel_tol));
            m.set("abs_tol", fmt17(abs_tol));
            m.set("max_step", fmt17(max_step));
            m.set("min_step", fmt17(min_step));
        }
        crate::system::Method::Rk4 { step } => {
            m.set("method", "rk4");
            m.set("step", fmt17(step));
        }
    }
    m.set("max_steps", cfg.max_steps);
    m.set("initial_state", s.default_state().iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(" "));
    Ok(cfg)
}

fn simulate_into<S: SlowFast>(s: &S, cfg: &IntegratorConfig, out: &Path) -> Result<Trajectory> {
    match integrate(s, &s.default_state(), cfg) {
        Ok(t) => Ok(t.rescale_time(s.time_to_ms())),
        Err(e) => {
            let diag = format!("integration failed: {e}\nsystem parameters:\n{}", describe_params(s));
            write_atomic(&out.join("diagnostics.txt"), diag.as_bytes())?;
            Err(e)
        }
    }
}

fn describe_params<S: SlowFast>(s: &S) -> String {
    s.params().iter().map(|(k, v)| format!("{k} = {}\n", fmt17(*v))).collect()
}

fn trajectory_csv(t: &Trajectory) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    t.write_csv(&mut buf, 1.0)?;
    Ok(buf)
}

fn waveform_svg(t: &Trajectory, label: &str, title: &str) -> Result<String> {
    let v = t.component(label)?;
    let pts = t.times().iter().copied().zip(v).collect();
    Ok(Plot::new(title, "t (ms)", label).series(Series::new(label, pts)).render())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let (sys, kind) = resolve_system(&a.common)?;
    let mut m = base_manifest("simulate", &a.common, &sys);
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    with_system!(&sys, s => {
        let cfg = integrator(s, &a.integration, kind, &mut m)?;
        m.write(out, &sys)?;
        let traj = simulate_into(s, &cfg, out)?;
        write_atomic(&out.join("trajectory.csv"), &trajectory_csv(&traj)?)?;
        if a.common.svg {
            let svg = waveform_svg(&traj, s.membrane_label(), &format!("{} membrane output", a.common.system))?;
            write_atomic(&out.join("trajectory.svg"), svg.as_bytes())?;
        }
        println!("wrote {} samples to {}", traj.len(), out.join("trajectory.csv").display());
    });
    Ok(0)
}

fn analysis_options<S: SlowFast>(s: &S, range: (f64, f64), m: &mut Manifest) -> AnalysisOptions {
    let o = AnalysisOptions::for_system(s, range);
    m.set("window_x", format!("{}:{}", fmt17(o.window.x_range.0), fmt17(o.window.x_range.1)));
    m.set("window_y", format!("{}:{}", fmt17(o.window.y_range.0), fmt17(o.window.y_range.1)));
    m.set("grid", format!("{}x{}", o.window.grid.0, o.window.grid.1));
    m.set("localisation_tol", fmt17(o.tol));
    m.set("reseed_every", o.reseed_every);
    m.set("homoclinic_period_growth", fmt17(o.sho_growth));
    m.set("homoclinic_saddle_approach", fmt17(o.sho_approach));
    m.set("cycle_transient_periods", fmt17(o.cycle.transient_periods));
    m.set("cycle_return_tol", fmt17(o.cycle.return_tol));
    m.set("cycle_min_amplitude", fmt17(o.cycle.min_amplitude));
    m.set("hopf_probe_offsets", o.hopf_probe_offsets.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(" "));
    o
}

fn phase_panel<S: SlowFast>(s: &S, value: f64, w: &Window2D, dir: &Path, svg: bool) -> Result<String> {
    let fast = s.fast_subsystem(value);
    let ncl = compute_nullclines(&fast, w)?;
    let eqs = find_equilibria(&fast, w)?;
    let mut opts = AnalysisOptions::for_system(s, (value, value + 1.0));
    opts.window = *w;
    let cycles = cycles_at(s, value, &eqs, &opts);
    let mut buf = Vec::new();
    write_nullclines_csv(&mut buf, &ncl)?;
    write_atomic(&dir.join("nullclines.csv"), &buf)?;
    let mut buf = Vec::new();
    write_equilibria_csv(&mut buf, &eqs)?;
    write_atomic(&dir.join("equilibria.csv"), &buf)?;
    let mut buf = Vec::new();
    write_cycles_csv(&mut buf, &cycles)?;
    write_atomic(&dir.join("cycles.csv"), &buf)?;
    if svg {
        let labels = s.labels();
        let mut plot =
            Plot::new(format!("{} = {value}", s.slow_label()), &labels[0], &labels[1]).ranges(w.x_range, w.y_range);
        for (k, c) in ncl.curves_f1.iter().enumerate() {
            plot = plot
                .series(Series::new(if k == 0 { "d/dt x = 0" } else { "" }, c.iter().map(|p| (p[0], p[1])).collect()));
        }
        for (k, c) in ncl.curves_f2.iter().enumerate() {
            plot = plot.series(
                Series::new(if k == 0 { "d/dt y = 0" } else { "" }, c.iter().map(|p| (p[0], p[1])).collect()).dashed(),
            );
        }
        for c in &cycles {
            let mut pts: Vec<(f64, f64)> = c.samples.iter().map(|p| (p[0], p[1])).collect();
            pts.push(pts[0]);
            let ser = Series::new(format!("{} cycle", c.stability), pts);
            plot = plot.series(if c.stability == Stability::Unstable { ser.dashed() } else { ser });
        }
        for e in &eqs {
            plot = plot.marker(e.location[0], e.location[1], e.klass.to_string(), e.klass.is_stable());
        }
        write_atomic(&dir.join("portrait.svg"), plot.render().as_bytes())?;
    }
    let mut line = format!("{} = {value}:", s.slow_label());
    for e in &eqs {
        line.push_str(&format!(" {} at ({:.6}, {:.6});", e.klass, e.location[0], e.location[1]));
    }
    for c in &cycles {
        line.push_str(&format!(" {} cycle, period {:.6e};", c.stability, c.period));
    }
    Ok(line)
}

pub fn cmd_phase(a: &PhaseArgs) -> Result<i32> {
    let (sys, kind) = resolve_system(&a.common)?;
    let mut m = base_manifest("phase", &a.common, &sys);
    let values = match slow_arg(&a.slow, &sys)? {
        Some(v) => parse_list(v)?,
        None => kind
            .map(|k| k.panel_values().to_vec())
            .ok_or_else(|| Error::InvalidConfig("custom systems need --nM or --vgs2 values".into()))?,
    };
    m.set("frozen_values", values.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(","));
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    with_system!(&sys, s => {
        let w = s.fast_window().with_grid(a.grid, a.grid)?;
        m.set("window_x", format!("{}:{}", fmt17(w.x_range.0), fmt17(w.x_range.1)));
        m.set("window_y", format!("{}:{}", fmt17(w.y_range.0), fmt17(w.y_range.1)));
        m.set("grid", format!("{}x{}", a.grid, a.grid));
        m.write(out, &sys)?;
        for (k, v) in values.iter().enumerate() {
            let dir = out.join(format!("phase_{k}"));
            let line = phase_panel(s, *v, &w, &dir, a.common.svg)?;
            println!("{line}");
        }
    });
    Ok(0)
}

fn diagram_svg(d: &BifurcationDiagram, membrane: &str) -> String {
    let mut plot = Plot::new(format!("fast-subsystem bifurcations in {}", d.parameter), &d.parameter, membrane);
    for br in &d.sweep.branches {
        let (stable, unstable): (Vec<_>, Vec<_>) = br.points.iter().partition(|p| p.eq.klass.is_stable());
        if !stable.is_empty() {
            plot = plot.series(Series::new("", stable.iter().map(|p| (p.param, p.eq.location[0])).collect()));
        }
        if !unstable.is_empty() {
            plot =
                plot.series(Series::new("", unstable.iter().map(|p| (p.param, p.eq.location[0])).collect()).dashed());
        }
    }
    for c in &d.cycles {
        for f in
            [|p: &crate::bifurcation::CyclePoint| p.cycle.v_min, |p: &crate::bifurcation::CyclePoint| p.cycle.v_max]
        {
            let s = Series::new(format!("{} cycle", c.stability), c.points.iter().map(|p| (p.param, f(p))).collect());
            plot = plot.series(if c.stability == Stability::Unstable { s.dashed() } else { s });
        }
    }
    for p in &d.points {
        let y = d
            .sweep
            .params
            .iter()
            .position(|x| *x >= p.param)
            .and_then(|k| d.sweep.sets[k].first())
            .map_or(f64::NAN, |e| e.location[0]);
        plot = plot.marker(p.param, y, p.kind.as_str(), true);
    }
    plot.render()
}

fn print_points(d: &BifurcationDiagram) {
    for p in &d.points {
        println!("{}: {} = {:.6}", p.kind, d.parameter, p.param);
    }
    for (p, why) in &d.unexplained {
        println!("note: {} = {:.6}: {}", d.parameter, p, why);
    }
}

pub fn cmd_bifurcate(a: &BifurcateArgs) -> Result<i32> {
    let (sys, kind) = resolve_system(&a.common)?;
    let mut m = base_manifest("bifurcate", &a.common, &sys);
    let range = sweep_range(&a.slow, &sys, kind)?;
    m.set("range", format!("{}:{}", fmt17(range.0), fmt17(range.1)));
    m.set("steps", a.steps);
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    with_system!(&sys, s => {
        let opts = analysis_options(s, range, &mut m);
        m.write(out, &sys)?;
        let d = build_diagram(s, range, a.steps, &opts)?;
        d.write_csv(out)?;
        if a.common.svg {
            write_atomic(&out.join("diagram.svg"), diagram_svg(&d, s.membrane_label()).as_bytes())?;
        }
        print_points(&d);
        for (lo, hi) in &d.bistable {
            println!("bistable: {:.6} < {} < {:.6}", lo, d.parameter, hi);
        }
    });
    Ok(0)
}

fn metrics_config(a: &MetricsArgs, min_range: f64, m: &mut Manifest) -> MetricsConfig {
    let mut cfg = MetricsConfig::default().with_min_range(min_range);
    if let Some(t) = a.threshold {
        cfg = cfg.with_threshold(Threshold::Fixed(t));
    }
    cfg.gap_factor = a.gap_factor;
    cfg.noise_fraction = a.noise_fraction;
    m.set("threshold", a.threshold.map_or("auto".into(), fmt17));
    m.set("threshold_fraction", fmt17(cfg.threshold_fraction));
    m.set("min_range", fmt17(cfg.min_range));
    m.set("gap_factor", fmt17(cfg.gap_factor));
    m.set("gap_floor", fmt17(cfg.gap_floor));
    m.set("window_fraction", fmt17(cfg.window_fraction));
    m.set("noise_fraction", fmt17(cfg.noise_fraction));
    m.set("min_extrema", cfg.min_extrema);
    m.set("transient_ms", fmt17(a.transient));
    cfg
}

fn metrics_csv(r: &BurstReport, cfg: &MetricsConfig) -> String {
    format!("{STATS_HEADER}\n{}\n", stats_csv_row(&r.stats, r.train.threshold, cfg))
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<i32> {
    let (sys, kind) = resolve_system(&a.common)?;
    let mut m = base_manifest("metrics", &a.common, &sys);
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    let (min_range, membrane) = with_system!(&sys, s => (s.spike_min_range(), s.membrane_label()));
    let component = a.component.clone().unwrap_or_else(|| membrane.to_string());
    m.set("component", &component);
    let cfg = metrics_config(a, min_range, &mut m);
    let traj = match &a.input {
        Some(p) => {
            m.set("input", p.display());
            m.write(out, &sys)?;
            Trajectory::read_csv(BufReader::new(fs::File::open(p)?))?
        }
        None => with_system!(&sys, s => {
            let ic = integrator(s, &a.integration, kind, &mut m)?;
            m.set("input", "inline simulation");
            m.write(out, &sys)?;
            simulate_into(s, &ic, out)?
        }),
    };
    let traj = traj.after(traj.times().first().copied().unwrap_or(0.0) + a.transient);
    let r = analyze(&traj, &component, &cfg)?;
    write_atomic(&out.join("metrics.csv"), metrics_csv(&r, &cfg).as_bytes())?;
    let st = &r.stats;
    println!(
        "spikes {}, bursts {}, onset oscillations {:?}, offset oscillations {:?}",
        st.n_spikes, st.n_bursts, st.onset_oscillations, st.offset_oscillations
    );
    if a.common.strict && !st.available() {
        eprintln!("error: burst statistics unavailable ({} bursts)", st.n_bursts);
        return Ok(2);
    }
    Ok(0)
}

pub fn cmd_dissect(a: &DissectArgs) -> Result<i32> {
    let (sys, kind) = resolve_system(&a.common)?;
    let mut m = base_manifest("dissect", &a.common, &sys);
    let range = sweep_range(&a.slow, &sys, kind)?;
    m.set("range", format!("{}:{}", fmt17(range.0), fmt17(range.1)));
    m.set("steps", a.steps);
    let out = &a.common.out;
    fs::create_dir_all(out)?;
    let report = with_system!(&sys, s => {
        let opts = analysis_options(s, range, &mut m);
        let ic = integrator(s, &a.integration, kind, &mut m)?;
        let transient = kind.map_or(0.0, |k| k.horizon().1 * s.time_to_ms());
        let mcfg = MetricsConfig::default().with_min_range(s.spike_min_range());
        m.set("metrics_transient_ms", fmt17(transient));
        m.set("threshold_fraction", fmt17(mcfg.threshold_fraction));
        m.set("gap_factor", fmt17(mcfg.gap_factor));
        m.set("noise_fraction", fmt17(mcfg.noise_fraction));
        m.write(out, &sys)?;

        let d = build_diagram(s, range, a.steps, &opts)?;
        d.write_csv(&out.join("diagram"))?;
        let class = classify_burster(&d);
        let traj = simulate_into(s, &ic, out)?;
        write_atomic(&out.join("trajectory.csv"), &trajectory_csv(&traj)?)?;
        let r = analyze(&traj.after(transient), s.membrane_label(), &mcfg)?;
        if a.common.svg {
            write_atomic(&out.join("diagram.svg"), diagram_svg(&d, s.membrane_label()).as_bytes())?;
            let labels = s.labels();
            let slow = traj.component(&labels[2])?;
            let v = traj.component(&labels[0])?;
            let plot = Plot::new("burst trajectory over the fast-subsystem diagram", &labels[2], &labels[0])
                .series(Series::new("trajectory", slow.into_iter().zip(v).collect()));
            write_atomic(&out.join("trajectory.svg"), plot.render().as_bytes())?;
        }
        print_points(&d);
        dissect_report(&d, &class, &r, kind)
    });
    write_atomic(&out.join("dissect-report.txt"), report.as_bytes())?;
    print!("{report}");
    Ok(0)
}

fn dissect_report(
    d: &BifurcationDiagram,
    class: &crate::bifurcation::BursterClass,
    r: &BurstReport,
    kind: Option<SystemKind>,
) -> String {
    let mut s = String::new();
    s.push_str(&format!("burster: {}\n", class.label()));
    if let Some(k) = kind {
        s.push_str(&format!("reference burster: {}\n", k.expected_label()));
    }
    for (lo, hi) in &d.bistable {
        s.push_str(&format!("bistable: {lo:.6} < {} < {hi:.6}\n", d.parameter));
    }
    let flag = |x: Option<bool>| x.map_or("undetermined".to_string(), |b| b.to_string());
    if class.is_classified() {
        s.push_str(&format!(
            "predicted oscillations: onset {}, offset {}\n",
            class.onset_oscillations, class.offset_oscillations
        ));
    } else {
        s.push_str("predicted oscillations: unavailable (unclassified)\n");
    }
    s.push_str(&format!(
        "measured oscillations: onset {}, offset {} ({} bursts)\n",
        flag(r.stats.onset_oscillations),
        flag(r.stats.offset_oscillations),
        r.stats.n_bursts
    ));
    let consistent = class.is_classified()
        && r.stats.onset_oscillations == Some(class.onset_oscillations)
        && r.stats.offset_oscillations == Some(class.offset_oscillations);
    s.push_str(&format!("consistent: {consistent}\n"));
    for note in &class.diagnostics {
        s.push_str(&format!("note: {note}\n"));
    }
    if !class.is_classified() && kind == Some(SystemKind::CircuitB) {
        s.push_str(&format!(
            "note: the reconstructed circuit bursts near I = {:e} A\n",
            SystemKind::CircuitB.operating_current()
        ));
    }
    s
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Bifurcate(a) => cmd_bifurcate(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Dissect(a) => cmd_dissect(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("-0.05,0.05, 0.062").unwrap(), vec![-0.05, 0.05, 0.062]);
        assert!(parse_list("0.1,x").is_err());
        assert_eq!(parse_range("1.0:1.3").unwrap(), (1.0, 1.3));
        assert!(parse_range("1.3:1.0").is_err());
        assert!(parse_range("1.3").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["burstdissect", "phase", "--system", "model-a", "--nM", "-0.05,0.05", "--svg"])
            .unwrap();
        match cli.command {
            Command::Phase(p) => {
                assert_eq!(p.slow.nm.as_deref(), Some("-0.05,0.05"));
                assert!(p.common.svg);
            }
            _ => panic!(),
        }
        let cli = Cli::try_parse_from(["burstdissect", "simulate", "--I", "5", "--t-end", "400"]).unwrap();
        match cli.command {
            Command::Simulate(s) => {
                assert_eq!(s.common.current, Some(5.0));
                assert_eq!(s.integration.t_end, Some(400.0));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn slow_flag_must_match_family() {
        let slow = SlowArgs { nm: None, vgs2: Some("1:2".into()) };
        assert!(slow_arg(&slow, &SystemKind::ModelA.system()).is_err());
        assert_eq!(slow_arg(&slow, &SystemKind::CircuitA.system()).unwrap(), Some("1:2"));
    }
}
