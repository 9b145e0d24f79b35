//! Spike detection, burst segmentation, burst statistics and subthreshold
//! oscillation flags on simulated membrane traces.

use crate::error::Result;
use crate::io::fmt17;
use crate::slowfast::SlowFast;
use crate::system::{crossings_of, integrate, Direction, IntegratorConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// `min + fraction·(max − min)` of the component.
    Auto,
    Fixed(f64),
}

/// Every knob of the metrics pipeline. The whole struct is echoed in the
/// statistics export.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub threshold: Threshold,
    pub threshold_fraction: f64,
    /// A trace whose range is below this has no spikes.
    pub min_range: f64,
    /// Gaps longer than `gap_factor × median ISI` split bursts.
    pub gap_factor: f64,
    pub gap_floor: f64,
    /// Oscillation windows are clipped to this fraction of the adjacent gap.
    pub window_fraction: f64,
    /// Minimum prominence of a counted maximum, as a fraction of the spike
    /// amplitude.
    pub noise_fraction: f64,
    pub min_extrema: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            threshold: Threshold::Auto,
            threshold_fraction: 0.6,
            min_range: 0.0,
            gap_factor: 3.0,
            gap_floor: 0.0,
            window_fraction: 0.25,
            noise_fraction: 0.02,
            min_extrema: 2,
        }
    }
}

impl MetricsConfig {
    pub fn with_min_range(mut self, r: f64) -> Self {
        self.min_range = r;
        self
    }

    pub fn with_threshold(mut self, t: Threshold) -> Self {
        self.threshold = t;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpikeTrain {
    pub spike_times: Vec<f64>,
    pub peaks: Vec<f64>,
    /// Rising and falling threshold crossings bracketing each spike.
    pub rising: Vec<f64>,
    pub falling: Vec<f64>,
    pub threshold: f64,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.spike_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spike_times.is_empty()
    }

    /// A train from bare spike times (crossings collapse onto the spike).
    pub fn from_times(times: &[f64]) -> Self {
        Self {
            spike_times: times.to_vec(),
            peaks: vec![f64::NAN; times.len()],
            rising: times.to_vec(),
            falling: times.to_vec(),
            threshold: f64::NAN,
        }
    }
}

/// Spikes as rising crossings paired with the next falling crossing; the
/// spike time is the sample maximum between them.
pub fn detect_spikes(traj: &Trajectory, component: &str, cfg: &MetricsConfig) -> Result<SpikeTrain> {
    let v = traj.component(component)?;
    let t = traj.times();
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let threshold = match cfg.threshold {
        Threshold::Auto => lo + cfg.threshold_fraction * (hi - lo),
        Threshold::Fixed(x) => x,
    };
    let mut train = SpikeTrain { threshold, ..Default::default() };
    if v.len() < 2 || !(hi > lo) || hi - lo < cfg.min_range {
        return Ok(train);
    }
    let up = crossings_of(t, &v, threshold, Direction::Rising);
    let down = crossings_of(t, &v, threshold, Direction::Falling);
    let mut j = 0;
    for &r in &up {
        while j < down.len() && down[j] <= r {
            j += 1;
        }
        let Some(&f) = down.get(j) else { break };
        let a = t.partition_point(|&x| x < r);
        let b = t.partition_point(|&x| x <= f);
        if let Some(k) = (a..b).max_by(|&x, &y| v[x].total_cmp(&v[y])) {
            train.spike_times.push(t[k]);
            train.peaks.push(v[k]);
            train.rising.push(r);
            train.falling.push(f);
        }
        j += 1;
    }
    Ok(train)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Burst {
    pub start: f64,
    pub end: f64,
    /// Indices into the spike train.
    pub first: usize,
    pub last: usize,
    pub spikes: Vec<f64>,
}

impl Burst {
    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.spikes.len() == 1
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BurstSegmentation {
    pub bursts: Vec<Burst>,
    /// Quiet intervals between consecutive bursts.
    pub gaps: Vec<f64>,
    pub gap_threshold: f64,
}

impl BurstSegmentation {
    pub fn singletons(&self) -> usize {
        self.bursts.iter().filter(|b| b.is_singleton()).count()
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Splits the train at inter-spike intervals above
/// `max(gap_factor × median ISI, gap_floor)`.
pub fn segment_bursts(train: &SpikeTrain, cfg: &MetricsConfig) -> BurstSegmentation {
    let s = &train.spike_times;
    if s.is_empty() {
        return BurstSegmentation::default();
    }
    let isi: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let gap_threshold = if isi.is_empty() { f64::INFINITY } else { (cfg.gap_factor * median(&isi)).max(cfg.gap_floor) };
    let mut bursts = Vec::new();
    let mut first = 0;
    for k in 0..s.len() {
        let split = k + 1 == s.len() || isi[k] > gap_threshold;
        if split {
            bursts.push(Burst { start: s[first], end: s[k], first, last: k, spikes: s[first..=k].to_vec() });
            first = k + 1;
        }
    }
    let gaps = bursts.windows(2).map(|w| w[1].start - w[0].end).collect();
    BurstSegmentation { bursts, gaps, gap_threshold }
}

/// Oscillation flags around one burst; `None` where the window is missing
/// or too short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BurstOscillation {
    pub onset: Option<bool>,
    pub offset: Option<bool>,
    pub onset_extrema: usize,
    pub offset_extrema: usize,
}

/// Counts subthreshold maxima in the quiet windows adjacent to each burst:
/// before the first rising crossing and after the last falling crossing,
/// each clipped to `window_fraction` of the neighbouring gap. A maximum is
/// counted when it lies below the spike threshold and rises above the
/// higher of its two flanking troughs by at least `noise_fraction` of the
/// spike amplitude.
pub fn detect_subthreshold_oscillations(
    traj: &Trajectory,
    component: &str,
    train: &SpikeTrain,
    seg: &BurstSegmentation,
    cfg: &MetricsConfig,
) -> Result<Vec<BurstOscillation>> {
    let v = traj.component(component)?;
    let t = traj.times();
    if seg.bursts.is_empty() {
        return Ok(Vec::new());
    }
    let floor_v = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_peak = train.peaks.iter().filter(|p| p.is_finite()).sum::<f64>()
        / train.peaks.iter().filter(|p| p.is_finite()).count().max(1) as f64;
    let noise = cfg.noise_fraction * (mean_peak - floor_v).abs();
    let count = |a: f64, b: f64| -> Option<usize> {
        let i0 = t.partition_point(|&x| x < a);
        let i1 = t.partition_point(|&x| x <= b);
        if i1 <= i0 || i1 - i0 < 5 {
            return None;
        }
        Some(count_prominent_maxima(&v[i0..i1], train.threshold, noise))
    };
    let n = seg.bursts.len();
    let mut out = Vec::with_capacity(n);
    for (k, b) in seg.bursts.iter().enumerate() {
        let rise = train.rising[b.first];
        let fall = train.falling[b.last];
        let mut o = BurstOscillation::default();
        if k > 0 {
            let prev_fall = train.falling[seg.bursts[k - 1].last];
            let w = cfg.window_fraction * (rise - prev_fall);
            if let Some(c) = count(rise - w, rise) {
                o.onset = Some(c >= cfg.min_extrema);
                o.onset_extrema = c;
            }
        }
        if k + 1 < n {
            let next_rise = train.rising[seg.bursts[k + 1].first];
            let w = cfg.window_fraction * (next_rise - fall);
            if let Some(c) = count(fall, fall + w) {
                o.offset = Some(c >= cfg.min_extrema);
                o.offset_extrema = c;
            }
        }
        out.push(o);
    }
    Ok(out)
}

fn count_prominent_maxima(v: &[f64], threshold: f64, noise: f64) -> usize {
    let peaks: Vec<usize> = (1..v.len().saturating_sub(1)).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).collect();
    let mut n = 0;
    for (j, &i) in peaks.iter().enumerate() {
        if v[i] >= threshold {
            continue;
        }
        let left_from = if j == 0 { 0 } else { peaks[j - 1] };
        let right_to = peaks.get(j + 1).copied().unwrap_or(v.len() - 1);
        let left = v[left_from..=i].iter().cloned().fold(f64::INFINITY, f64::min);
        let right = v[i..=right_to].iter().cloned().fold(f64::INFINITY, f64::min);
        if v[i] - left.max(right) >= noise {
            n += 1;
        }
    }
    n
}

/// Statistics over all bursts but the first, which carries the transient
/// from the initial condition. Unavailable quantities are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstStatistics {
    pub n_spikes: usize,
    pub n_bursts: usize,
    pub singletons: usize,
    pub spikes_per_burst: Vec<usize>,
    pub mean_spikes_per_burst: Option<f64>,
    pub mean_duration: Option<f64>,
    pub mean_interburst: Option<f64>,
    pub burst_period: Option<f64>,
    pub period_std: Option<f64>,
    pub duty_cycle: Option<f64>,
    pub onset_oscillations: Option<bool>,
    pub offset_oscillations: Option<bool>,
    /// Bursts flagged / bursts with a usable window.
    pub onset_counts: (usize, usize),
    pub offset_counts: (usize, usize),
}

impl BurstStatistics {
    pub fn available(&self) -> bool {
        self.n_bursts >= 2
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn std_dev(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some((xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt())
}

fn majority(flags: impl Iterator<Item = Option<bool>>) -> (Option<bool>, (usize, usize)) {
    let (mut yes, mut total) = (0, 0);
    for f in flags.flatten() {
        total += 1;
        yes += f as usize;
    }
    let flag = (total > 0).then_some(2 * yes > total);
    (flag, (yes, total))
}

pub fn burst_statistics(seg: &BurstSegmentation, osc: &[BurstOscillation]) -> BurstStatistics {
    let bursts = &seg.bursts;
    let n = bursts.len();
    let used = if n >= 2 { &bursts[1..] } else { &bursts[0..0] };
    let durations: Vec<f64> = used.iter().map(Burst::duration).collect();
    let periods: Vec<f64> = used.windows(2).map(|w| w[1].start - w[0].start).collect();
    let gaps: Vec<f64> = used.windows(2).map(|w| w[1].start - w[0].end).collect();
    let spikes: Vec<f64> = used.iter().map(|b| b.len() as f64).collect();
    let mean_duration = mean(&durations);
    let burst_period = mean(&periods);
    let duty_cycle = match (mean_duration, burst_period) {
        (Some(d), Some(p)) if p > 0.0 => Some((d / p).clamp(0.0, 1.0)),
        _ => None,
    };
    let skip = osc.len().min(1);
    let (onset_oscillations, onset_counts) = majority(osc.iter().skip(skip).map(|o| o.onset));
    let (offset_oscillations, offset_counts) = majority(osc.iter().skip(skip).map(|o| o.offset));
    BurstStatistics {
        n_spikes: bursts.iter().map(Burst::len).sum(),
        n_bursts: n,
        singletons: seg.singletons(),
        spikes_per_burst: bursts.iter().map(Burst::len).collect(),
        mean_spikes_per_burst: mean(&spikes),
        mean_duration,
        mean_interburst: mean(&gaps),
        burst_period,
        period_std: std_dev(&periods),
        duty_cycle,
        onset_oscillations,
        offset_oscillations,
        onset_counts,
        offset_counts,
    }
}

/// Spikes, bursts, oscillation flags and statistics for one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstReport {
    pub train: SpikeTrain,
    pub segmentation: BurstSegmentation,
    pub oscillations: Vec<BurstOscillation>,
    pub stats: BurstStatistics,
}

pub fn analyze(traj: &Trajectory, component: &str, cfg: &MetricsConfig) -> Result<BurstReport> {
    let train = detect_spikes(traj, component, cfg)?;
    let segmentation = segment_bursts(&train, cfg);
    let oscillations = detect_subthreshold_oscillations(traj, component, &train, &segmentation, cfg)?;
    let stats = burst_statistics(&segmentation, &oscillations);
    Ok(BurstReport { train, segmentation, oscillations, stats })
}

/// Simulates `sys` from its default state with the adaptive integrator and
/// analyses the membrane trace after `transient` (system time units).
pub fn simulate_and_analyze<S: SlowFast>(sys: &S, t_end: f64, transient: f64) -> Result<(Trajectory, BurstReport)> {
    let cfg = IntegratorConfig::rk45(0.0, t_end);
    let traj = integrate(sys, &sys.default_state(), &cfg)?.after(transient);
    let report = analyze(&traj, sys.membrane_label(), &MetricsConfig::default().with_min_range(sys.spike_min_range()))?;
    Ok((traj, report))
}

impl BurstReport {
    pub fn is_resting(&self) -> bool {
        self.stats.n_bursts == 0
    }

    /// At least `min_bursts` bursts of at least `min_spikes` spikes.
    pub fn is_bursting(&self, min_bursts: usize, min_spikes: usize) -> bool {
        self.segmentation.bursts.iter().filter(|b| b.len() >= min_spikes).count() >= min_bursts
    }
}

pub const STATS_HEADER: &str = "n_spikes,n_bursts,singletons,mean_spikes_per_burst,mean_duration,mean_interburst,\
burst_period,period_std,duty_cycle,onset_oscillations,onset_flagged,onset_evaluated,offset_oscillations,\
offset_flagged,offset_evaluated,threshold,threshold_fraction,gap_factor,gap_floor,window_fraction,noise_fraction,min_extrema";

/// One CSV row (no header) with the configuration fingerprint appended.
pub fn stats_csv_row(stats: &BurstStatistics, threshold: f64, cfg: &MetricsConfig) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), fmt17);
    let flag = |x: Option<bool>| x.map_or_else(|| "NA".to_string(), |b| b.to_string());
    [
        stats.n_spikes.to_string(),
        stats.n_bursts.to_string(),
        stats.singletons.to_string(),
        opt(stats.mean_spikes_per_burst),
        opt(stats.mean_duration),
        opt(stats.mean_interburst),
        opt(stats.burst_period),
        opt(stats.period_std),
        opt(stats.duty_cycle),
        flag(stats.onset_oscillations),
        stats.onset_counts.0.to_string(),
        stats.onset_counts.1.to_string(),
        flag(stats.offset_oscillations),
        stats.offset_counts.0.to_string(),
        stats.offset_counts.1.to_string(),
        fmt17(threshold),
        fmt17(cfg.threshold_fraction),
        fmt17(cfg.gap_factor),
        fmt17(cfg.gap_floor),
        fmt17(cfg.window_fraction),
        fmt17(cfg.noise_fraction),
        cfg.min_extrema.to_string(),
    ]
    .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    fn trace(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Trajectory {
        let mut tr = Trajectory::new(vec!["V".into()]);
        for k in 0..=n {
            let t = t_end * k as f64 / n as f64;
            tr.push(t, &[f(t)]);
        }
        tr
    }

    /// Spikes as narrow Gaussians at the given times on a flat baseline.
    fn spiky(times: &[f64]) -> impl Fn(f64) -> f64 + '_ {
        move |t| -60.0 + times.iter().map(|&s| 80.0 * (-((t - s) / 0.2).powi(2)).exp()).sum::<f64>()
    }

    fn cumulative(isis: &[f64]) -> Vec<f64> {
        let mut t = 5.0;
        let mut out = vec![t];
        for d in isis {
            t += d;
            out.push(t);
        }
        out
    }

    #[test]
    fn constant_trace_has_no_spikes() {
        let tr = trace(|_| -65.0, 10.0, 100);
        assert!(detect_spikes(&tr, "V", &MetricsConfig::default()).unwrap().is_empty());
        assert!(matches!(detect_spikes(&tr, "W", &MetricsConfig::default()), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn spikes_found_at_peaks() {
        let times = [2.0, 4.0, 7.5];
        let tr = trace(spiky(&times), 10.0, 10_000);
        let s = detect_spikes(&tr, "V", &MetricsConfig::default()).unwrap();
        assert_eq!(s.len(), 3);
        for (a, b) in s.spike_times.iter().zip(times) {
            assert!((a - b).abs() < 2e-3);
        }
        assert!((s.threshold - (-60.0 + 0.6 * 80.0)).abs() < 0.1);
    }

    #[test]
    fn regular_train_is_one_burst() {
        let s = SpikeTrain::from_times(&cumulative(&[1.0; 9]));
        let seg = segment_bursts(&s, &MetricsConfig::default());
        assert_eq!(seg.bursts.len(), 1);
        assert!(seg.gaps.is_empty());
    }

    #[test]
    fn long_gap_splits_four_three() {
        let s = SpikeTrain::from_times(&cumulative(&[1.0, 1.0, 1.0, 20.0, 1.0, 1.0]));
        let seg = segment_bursts(&s, &MetricsConfig::default());
        let sizes: Vec<usize> = seg.bursts.iter().map(Burst::len).collect();
        assert_eq!(sizes, vec![4, 3]);
        assert_eq!(seg.gaps, vec![20.0]);
        let empty = segment_bursts(&SpikeTrain::default(), &MetricsConfig::default());
        assert!(empty.bursts.is_empty());
    }

    #[test]
    fn identical_bursts_have_zero_spread() {
        let mut times = Vec::new();
        for b in 0..4 {
            for s in 0..3 {
                times.push(10.0 + 30.0 * b as f64 + 2.0 * s as f64);
            }
        }
        let seg = segment_bursts(&SpikeTrain::from_times(&times), &MetricsConfig::default());
        let st = burst_statistics(&seg, &[]);
        assert_eq!(st.n_bursts, 4);
        assert_eq!(st.period_std, Some(0.0));
        assert_eq!(st.burst_period, Some(30.0));
        assert_eq!(st.mean_duration, Some(4.0));
        assert_eq!(st.mean_interburst, Some(26.0));
        assert!((st.duty_cycle.unwrap() - 4.0 / 30.0).abs() < 1e-15);

        let two = segment_bursts(&SpikeTrain::from_times(&times[..6]), &MetricsConfig::default());
        let st = burst_statistics(&two, &[]);
        assert!(st.available() && st.burst_period.is_none() && st.period_std.is_none());
        let one =
            burst_statistics(&segment_bursts(&SpikeTrain::from_times(&times[..3]), &MetricsConfig::default()), &[]);
        assert!(!one.available() && one.mean_duration.is_none());
    }

    /// Two bursts of three spikes separated by a quiet interval whose shape
    /// near the second burst is given by `quiet`.
    fn two_bursts(quiet: impl Fn(f64) -> f64) -> (Trajectory, MetricsConfig) {
        let spikes = [10.0, 12.0, 14.0, 60.0, 62.0, 64.0];
        let f = move |t: f64| spiky(&spikes)(t) + if t > 14.5 && t < 59.5 { quiet(t) } else { 0.0 };
        (trace(f, 80.0, 40_000), MetricsConfig::default())
    }

    #[test]
    fn relaxation_has_no_subthreshold_oscillation() {
        let (tr, cfg) = two_bursts(|t| -5.0 * (-(t - 14.5) / 3.0).exp());
        let r = analyze(&tr, "V", &cfg).unwrap();
        assert_eq!(r.segmentation.bursts.len(), 2);
        assert_eq!(r.oscillations[0].offset, Some(false));
        assert_eq!(r.oscillations[1].onset, Some(false));
        assert_eq!(r.oscillations[0].onset, None);
    }

    #[test]
    fn damped_ringing_is_flagged() {
        // Ringing that decays after the first burst and grows into the next.
        let ring = |t: f64| {
            let decay = 6.0 * (-(t - 14.5) / 4.0).exp() * (2.0 * t).sin();
            let grow = 6.0 * (-(59.5 - t) / 4.0).exp() * (2.0 * t).sin();
            decay + grow
        };
        let (tr, cfg) = two_bursts(ring);
        let r = analyze(&tr, "V", &cfg).unwrap();
        assert_eq!(r.oscillations[0].offset, Some(true));
        assert_eq!(r.oscillations[1].onset, Some(true));
        assert!(r.oscillations[1].onset_extrema >= 2);
    }

    #[test]
    fn csv_row_matches_header() {
        let seg = segment_bursts(&SpikeTrain::from_times(&[1.0, 2.0, 30.0, 31.0]), &MetricsConfig::default());
        let st = burst_statistics(&seg, &[]);
        let row = stats_csv_row(&st, -12.0, &MetricsConfig::default());
        assert_eq!(row.split(',').count(), STATS_HEADER.split(',').count());
        assert!(row.contains("NA"));
    }

    proptest! {
        #[test]
        fn segmentation_is_a_partition(isis in prop::collection::vec(0.1f64..50.0, 1..60)) {
            let s = SpikeTrain::from_times(&cumulative(&isis));
            let seg = segment_bursts(&s, &MetricsConfig::default());
            let total: usize = seg.bursts.iter().map(Burst::len).sum();
            prop_assert_eq!(total, s.len());
            for w in seg.bursts.windows(2) {
                prop_assert!(w[0].end < w[1].start);
                prop_assert_eq!(w[0].last + 1, w[1].first);
            }
        }

        #[test]
        fn resegmenting_one_burst_is_idempotent(
            bursts in prop::collection::vec((prop::collection::vec(1.0f64..2.0, 1..8), 20.0f64..60.0), 1..8)
        ) {
            // Burst-structured trains: intra-burst ISIs within a factor of 2.
            let mut isis = Vec::new();
            for (intra, gap) in &bursts {
                isis.extend_from_slice(intra);
                isis.push(*gap);
            }
            isis.pop();
            let s = SpikeTrain::from_times(&cumulative(&isis));
            let cfg = MetricsConfig::default();
            for b in &segment_bursts(&s, &cfg).bursts {
                let again = segment_bursts(&SpikeTrain::from_times(&b.spikes), &cfg);
                prop_assert_eq!(again.bursts.len(), 1);
            }
        }

        #[test]
        fn rescaling_time_scales_durations(isis in prop::collection::vec(0.5f64..40.0, 6..40), c in 0.1f64..10.0) {
            let times = cumulative(&isis);
            let cfg = MetricsConfig::default();
            let a = burst_statistics(&segment_bursts(&SpikeTrain::from_times(&times), &cfg), &[]);
            let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
            let b = burst_statistics(&segment_bursts(&SpikeTrain::from_times(&scaled), &cfg), &[]);
            prop_assert_eq!(&a.spikes_per_burst, &b.spikes_per_burst);
            for (x, y) in [(a.mean_duration, b.mean_duration), (a.burst_period, b.burst_period)] {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x * c - y).abs() <= 1e-9 * (1.0 + y.abs())),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
