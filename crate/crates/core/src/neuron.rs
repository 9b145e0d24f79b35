//! The persistent-sodium plus delayed-rectifier plus M-current model.
//!
//! Units: mV, ms, and the remaining quantities in the numeric values of the
//! two reference parameter sets taken verbatim.

use crate::error::{Error, Result};
use crate::io::{fmt17, render_key_values, KeyValues};
use crate::phase::Window2D;
use crate::slowfast::SlowFast;
use crate::system::DynamicalSystem;

/// Largest exponent fed to `exp` in the activation curves.
const EXP_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoltzmannParams {
    pub v_half: f64,
    pub k: f64,
}

impl BoltzmannParams {
    pub fn new(v_half: f64, k: f64) -> Result<Self> {
        if k == 0.0 || !k.is_finite() || !v_half.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "Boltzmann slope must be finite and nonzero (v_half = {v_half}, k = {k})"
            )));
        }
        Ok(Self { v_half, k })
    }

    pub fn eval(&self, v: f64) -> f64 {
        boltzmann(v, self)
    }

    /// The voltage at which the curve equals `y` (for `0 < y < 1`).
    pub fn inverse(&self, y: f64) -> f64 {
        self.v_half - self.k * ((1.0 - y) / y).ln()
    }
}

/// `1 / (1 + exp((v_half − V)/k))` with the exponent clamped so that the
/// result saturates instead of overflowing.
pub fn boltzmann(v: f64, p: &BoltzmannParams) -> f64 {
    let e = ((p.v_half - v) / p.k).clamp(-EXP_CLAMP, EXP_CLAMP);
    1.0 / (1.0 + e.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct InapIkIkmParams {
    pub c: f64,
    pub e_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub g_l: f64,
    pub g_na: f64,
    pub g_k: f64,
    pub g_m: f64,
    pub m_inf: BoltzmannParams,
    pub n_inf: BoltzmannParams,
    pub n_inf_m: BoltzmannParams,
    pub tau: f64,
    pub tau_m: f64,
    pub i: f64,
}

pub const CONFIG_KEYS: [&str; 17] = [
    "C",
    "E_L",
    "E_Na",
    "E_K",
    "g_L",
    "g_Na",
    "g_K",
    "g_M",
    "V_half_Na",
    "V_half_K",
    "V_half_M",
    "k_Na",
    "k_K",
    "k_M",
    "tau",
    "tau_M",
    "I",
];

impl InapIkIkmParams {
    /// Parameter set with SNIC-type onset (rest at I = 4, bursting at I = 5).
    /// `g_M` comes from the shipped calibration.
    pub fn set_a() -> Self {
        Self::from_config_str(include_str!("../configs/model-a.conf")).expect("shipped config parses")
    }

    /// Parameter set with Hopf-type onset (rest at I = 45, bursting at I = 55).
    pub fn set_b() -> Self {
        Self::from_config_str(include_str!("../configs/model-b.conf")).expect("shipped config parses")
    }

    pub fn with_current(mut self, i: f64) -> Self {
        self.i = i;
        self
    }

    pub fn with_g_m(mut self, g_m: f64) -> Self {
        self.g_m = g_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.c, self.e_l, self.e_na, self.e_k, self.g_l, self.g_na, self.g_k, self.g_m, self.tau, self.tau_m,
            self.i,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("model parameters must be finite".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig("C must be positive".into()));
        }
        if [self.g_l, self.g_na, self.g_k, self.g_m].iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidConfig("conductances must be non-negative".into()));
        }
        if !(self.tau > 0.0 && self.tau_m > self.tau) {
            return Err(Error::InvalidConfig("need 0 < tau < tau_M".into()));
        }
        for b in [self.m_inf, self.n_inf, self.n_inf_m] {
            BoltzmannParams::new(b.v_half, b.k)?;
        }
        Ok(())
    }

    /// Parses a complete parameter set. All 17 keys are required.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        Self::from_key_values(&kv, None)
    }

    /// Builds a parameter set from config entries, falling back to `base`
    /// for absent keys (all keys are required when `base` is `None`).
    pub fn from_key_values(kv: &KeyValues, base: Option<&Self>) -> Result<Self> {
        kv.reject_unknown(&CONFIG_KEYS)?;
        let get = |key: &str, fallback: Option<f64>| -> Result<f64> {
            match kv.f64(key)? {
                Some(v) => Ok(v),
                None => fallback.ok_or_else(|| kv.invalid(key, "missing required key")),
            }
        };
        let b = base;
        let boltz = |vh: &str, k: &str, fb: Option<BoltzmannParams>| -> Result<BoltzmannParams> {
            let v_half = get(vh, fb.map(|p| p.v_half))?;
            let slope = get(k, fb.map(|p| p.k))?;
            BoltzmannParams::new(v_half, slope).map_err(|e| kv.invalid(k, e.to_string()))
        };
        let p = Self {
            c: get("C", b.map(|p| p.c))?,
            e_l: get("E_L", b.map(|p| p.e_l))?,
            e_na: get("E_Na", b.map(|p| p.e_na))?,
            e_k: get("E_K", b.map(|p| p.e_k))?,
            g_l: get("g_L", b.map(|p| p.g_l))?,
            g_na: get("g_Na", b.map(|p| p.g_na))?,
            g_k: get("g_K", b.map(|p| p.g_k))?,
            g_m: get("g_M", b.map(|p| p.g_m))?,
            m_inf: boltz("V_half_Na", "k_Na", b.map(|p| p.m_inf))?,
            n_inf: boltz("V_half_K", "k_K", b.map(|p| p.n_inf))?,
            n_inf_m: boltz("V_half_M", "k_M", b.map(|p| p.n_inf_m))?,
            tau: get("tau", b.map(|p| p.tau))?,
            tau_m: get("tau_M", b.map(|p| p.tau_m))?,
            i: get("I", b.map(|p| p.i))?,
        };
        p.validate().map_err(|e| Error::Config { line: 0, key: "<parameter set>".into(), message: e.to_string() })?;
        Ok(p)
    }

    pub fn to_config_string(&self) -> String {
        render_key_values(self.named().into_iter().map(|(k, v)| (k, fmt17(v))))
    }

    fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("C", self.c),
            ("E_L", self.e_l),
            ("E_Na", self.e_na),
            ("E_K", self.e_k),
            ("g_L", self.g_l),
            ("g_Na", self.g_na),
            ("g_K", self.g_k),
            ("g_M", self.g_m),
            ("V_half_Na", self.m_inf.v_half),
            ("V_half_K", self.n_inf.v_half),
            ("V_half_M", self.n_inf_m.v_half),
            ("k_Na", self.m_inf.k),
            ("k_K", self.n_inf.k),
            ("k_M", self.n_inf_m.k),
            ("tau", self.tau),
            ("tau_M", self.tau_m),
            ("I", self.i),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelState {
    pub v: f64,
    pub n: f64,
    pub nm: f64,
}

/// Time derivative of the three-variable model. `n` and `nm` are not
/// clamped to `[0, 1]`.
pub fn model_rhs(s: &ModelState, p: &InapIkIkmParams) -> ModelState {
    let ModelState { v, n, nm } = *s;
    let i_l = p.g_l * (v - p.e_l);
    let i_na = p.g_na * boltzmann(v, &p.m_inf) * (v - p.e_na);
    let i_k = p.g_k * n * (v - p.e_k);
    let i_m = p.g_m * nm * (v - p.e_k);
    ModelState {
        v: (p.i - i_l - i_na - i_k - i_m) / p.c,
        n: (boltzmann(v, &p.n_inf) - n) / p.tau,
        nm: (boltzmann(v, &p.n_inf_m) - nm) / p.tau_m,
    }
}

/// The model as a [`DynamicalSystem`] on `(V, n, nM)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InapIkIkm {
    pub p: InapIkIkmParams,
}

impl InapIkIkm {
    pub fn new(p: InapIkIkmParams) -> Result<Self> {
        p.validate()?;
        Ok(Self { p })
    }

    pub fn set_a() -> Self {
        Self { p: InapIkIkmParams::set_a() }
    }

    pub fn set_b() -> Self {
        Self { p: InapIkIkmParams::set_b() }
    }
}

impl DynamicalSystem for InapIkIkm {
    fn dimension(&self) -> usize {
        3
    }

    fn labels(&self) -> Vec<String> {
        vec!["V".into(), "n".into(), "nM".into()]
    }

    fn rhs(&self, _t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let d = model_rhs(&ModelState { v: x[0], n: x[1], nm: x[2] }, &self.p);
        dx[0] = d.v;
        dx[1] = d.n;
        dx[2] = d.nm;
        Ok(())
    }

    fn params(&self) -> Vec<(String, f64)> {
        self.p.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl SlowFast for InapIkIkm {
    fn slow_label(&self) -> &'static str {
        "nM"
    }

    fn fast_window(&self) -> Window2D {
        Window2D::new((-90.0, 30.0), (-0.1, 1.1), (400, 400)).expect("static window")
    }

    fn characteristic_time(&self) -> f64 {
        self.p.tau
    }

    /// `(E_L, n_inf(E_L), n_inf_M(E_L))`.
    fn default_state(&self) -> Vec<f64> {
        let p = &self.p;
        vec![p.e_l, boltzmann(p.e_l, &p.n_inf), boltzmann(p.e_l, &p.n_inf_m)]
    }

    fn spike_min_range(&self) -> f64 {
        10.0
    }

    fn mu(&self) -> f64 {
        self.p.tau / self.p.tau_m
    }

    fn injected_current(&self) -> f64 {
        self.p.i
    }

    fn with_current(&self, i: f64) -> Self {
        Self { p: self.p.clone().with_current(i) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boltzmann_values() {
        let b = BoltzmannParams::new(-25.0, 5.0).unwrap();
        assert_eq!(boltzmann(-25.0, &b), 0.5);
        assert!((boltzmann(-20.0, &b) - 0.7310585786300049).abs() < 1e-12);
        assert!((1.0 - boltzmann(-25.0 + 100.0 * 5.0, &b)).abs() < 1e-9);
        assert!(boltzmann(-1e6, &b).is_finite() && boltzmann(1e6, &b) == 1.0);
        assert!(BoltzmannParams::new(0.0, 0.0).is_err());
        assert!((b.inverse(b.eval(-31.0)) + 31.0).abs() < 1e-9);
    }

    #[test]
    fn boltzmann_midpoint_slope() {
        let b = BoltzmannParams::new(-20.0, 15.0).unwrap();
        let h = 1e-4;
        let d = (boltzmann(-20.0 + h, &b) - boltzmann(-20.0 - h, &b)) / (2.0 * h);
        assert!((d - 1.0 / 60.0).abs() < 1e-9);
    }

    #[test]
    fn zero_driving_force_at_e_k() {
        let p = InapIkIkmParams::set_a().with_current(5.0);
        let s = ModelState { v: p.e_k, n: 0.7, nm: 0.4 };
        let with = model_rhs(&s, &p).v;
        let without = model_rhs(&s, &InapIkIkmParams { g_k: 0.0, g_m: 0.0, ..p.clone() }).v;
        assert_eq!(with, without);
    }

    #[test]
    fn gating_fixed_point() {
        let p = InapIkIkmParams::set_b();
        let v = -37.0;
        let s = ModelState { v, n: boltzmann(v, &p.n_inf), nm: boltzmann(v, &p.n_inf_m) };
        let d = model_rhs(&s, &p);
        assert_eq!(d.n, 0.0);
        assert_eq!(d.nm, 0.0);
    }

    #[test]
    fn set_a_depolarizes_from_leak_reversal() {
        let p = InapIkIkmParams::set_a().with_current(5.0);
        let n = 1.0 / (1.0 + (55.0f64 / 5.0).exp());
        let m = 1.0 / (1.0 + (60.0f64 / 15.0).exp());
        // Independent evaluation: the leak term vanishes at V = E_L.
        let hand = 5.0 - 20.0 * m * (-80.0 - 60.0) - 9.0 * n * (-80.0 + 90.0);
        let d = model_rhs(&ModelState { v: -80.0, n, nm: 0.0 }, &p);
        assert!(hand > 0.0 && (d.v - hand).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let p = InapIkIkmParams::set_b();
        let back = InapIkIkmParams::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn config_rejects_bad_input() {
        let mut text = InapIkIkmParams::set_a().to_config_string();
        text.push_str("g_X = 1\n");
        assert!(matches!(
            InapIkIkmParams::from_config_str(&text),
            Err(Error::Config { ref key, .. }) if key == "g_X"
        ));
        let kv = KeyValues::parse("tau_M = 0.01\n").unwrap();
        assert!(InapIkIkmParams::from_key_values(&kv, Some(&InapIkIkmParams::set_a())).is_err());
        let kv = KeyValues::parse("C = 1\n").unwrap();
        assert!(matches!(
            InapIkIkmParams::from_key_values(&kv, None),
            Err(Error::Config { ref message, .. }) if message.contains("missing")
        ));
    }
}
