//! Square-law MOSFET devices, the two-transistor NNDR branch and the two
//! bursting circuits.
//!
//! SI units throughout (V, A, F, Ω, s). State order is
//! `(Vout, VGS1, VGS2)`.

use crate::error::{Error, Result};
use crate::io::{fmt17, render_key_values, KeyValues};
use crate::numeric::find_root;
use crate::phase::Window2D;
use crate::slowfast::SlowFast;
use crate::system::DynamicalSystem;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Nmos,
    Pmos,
}

/// Level-1 device parameters. For PMOS devices `vt0` is read as the
/// threshold magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosfetParams {
    pub polarity: Polarity,
    pub k: f64,
    pub vt0: f64,
    pub lambda: f64,
}

impl MosfetParams {
    pub fn nmos(k: f64, vt0: f64, lambda: f64) -> Self {
        Self { polarity: Polarity::Nmos, k, vt0, lambda }
    }

    pub fn pmos(k: f64, vt0: f64, lambda: f64) -> Self {
        Self { polarity: Polarity::Pmos, k, vt0, lambda }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig("MOSFET K must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) || !self.vt0.is_finite() {
            return Err(Error::InvalidConfig("MOSFET lambda must be >= 0 and Vt0 finite".into()));
        }
        Ok(())
    }
}

/// Whether the square law carries the ½ factor (`K/2·v_ov²` in saturation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeviceLaw {
    pub half_factor: bool,
}

/// Drain-to-source current of `m` under the default law (no ½ factor).
pub fn mosfet_current(m: &MosfetParams, v_gs: f64, v_ds: f64) -> f64 {
    mosfet_current_with(m, v_gs, v_ds, DeviceLaw::default())
}

/// Drain-to-source current with an explicit law convention.
///
/// The device is symmetric: for `v_ds < 0` the roles of drain and source
/// swap. A PMOS device is evaluated as an NMOS on negated terminal voltages
/// with threshold `|vt0|`, and its current negated.
pub fn mosfet_current_with(m: &MosfetParams, v_gs: f64, v_ds: f64, law: DeviceLaw) -> f64 {
    let scale = if law.half_factor { 0.5 * m.k } else { m.k };
    match m.polarity {
        Polarity::Nmos => n_channel(scale, m.vt0, m.lambda, v_gs, v_ds),
        Polarity::Pmos => -n_channel(scale, m.vt0.abs(), m.lambda, -v_gs, -v_ds),
    }
}

fn n_channel(k: f64, vt: f64, lambda: f64, v_gs: f64, v_ds: f64) -> f64 {
    if v_ds < 0.0 {
        return -n_channel(k, vt, lambda, v_gs - v_ds, -v_ds);
    }
    let v_ov = v_gs - vt;
    if v_ov <= 0.0 {
        0.0
    } else if v_ds < v_ov {
        k * (2.0 * v_ov * v_ds - v_ds * v_ds) * (1.0 + lambda * v_ds)
    } else {
        k * v_ov * v_ov * (1.0 + lambda * v_ds)
    }
}

/// Circuit nodes a branch terminal can attach to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Vdc,
    Vout,
    Ground,
    /// The series node between the two devices, solved algebraically.
    Internal,
}

impl FromStr for Node {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vdc" => Ok(Node::Vdc),
            "vout" => Ok(Node::Vout),
            "gnd" => Ok(Node::Ground),
            "x" => Ok(Node::Internal),
            other => Err(format!("unknown node `{other}` (expected vdc, vout, gnd or x)")),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Node::Vdc => "vdc",
            Node::Vout => "vout",
            Node::Ground => "gnd",
            Node::Internal => "x",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terminals {
    pub drain: Node,
    pub gate: Node,
    pub source: Node,
}

/// Terminal assignment of the two NNDR devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub q2: Terminals,
    pub q3: Terminals,
}

impl Default for Topology {
    /// Depletion NMOS from `V_dc` to the internal node with its gate on
    /// `V_out`; PMOS from the internal node to `V_out` with its gate
    /// grounded. This is the only series assignment of the two devices that
    /// produces an N-shaped characteristic with the shipped device values.
    fn default() -> Self {
        Self {
            q2: Terminals { drain: Node::Vout, gate: Node::Ground, source: Node::Internal },
            q3: Terminals { drain: Node::Vdc, gate: Node::Vout, source: Node::Internal },
        }
    }
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        let channel = |t: &Terminals| [t.drain, t.source];
        let internal =
            channel(&self.q2).iter().chain(channel(&self.q3).iter()).filter(|&&n| n == Node::Internal).count();
        if internal != 2 {
            return Err(Error::InvalidConfig(
                "NNDR topology needs exactly two channel terminals on the internal node".into(),
            ));
        }
        for t in [self.q2, self.q3] {
            if t.drain == t.source {
                return Err(Error::InvalidConfig("device drain and source share a node".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NndrBranch {
    pub q2: MosfetParams,
    pub q3: MosfetParams,
    pub v_dc: f64,
    pub topology: Topology,
    pub law: DeviceLaw,
}

impl NndrBranch {
    fn node_voltage(&self, node: Node, v_out: f64, x: f64) -> f64 {
        match node {
            Node::Vdc => self.v_dc,
            Node::Vout => v_out,
            Node::Ground => 0.0,
            Node::Internal => x,
        }
    }

    fn device_current(&self, m: &MosfetParams, t: &Terminals, v_out: f64, x: f64) -> f64 {
        let vd = self.node_voltage(t.drain, v_out, x);
        let vg = self.node_voltage(t.gate, v_out, x);
        let vs = self.node_voltage(t.source, v_out, x);
        mosfet_current_with(m, vg - vs, vd - vs, self.law)
    }

    /// Net current flowing into `node` from both devices.
    fn current_into(&self, node: Node, v_out: f64, x: f64) -> f64 {
        let mut total = 0.0;
        for (m, t) in [(&self.q2, &self.topology.q2), (&self.q3, &self.topology.q3)] {
            let i = self.device_current(m, t, v_out, x);
            if t.source == node {
                total += i;
            }
            if t.drain == node {
                total -= i;
            }
        }
        total
    }

    /// Internal-node voltage at which the two device currents balance.
    pub fn internal_node(&self, v_out: f64) -> Result<f64> {
        let lo = 0f64.min(v_out).min(self.v_dc);
        let hi = 0f64.max(v_out).max(self.v_dc);
        let r = |x: f64| self.current_into(Node::Internal, v_out, x);
        find_root(r, lo, hi).ok_or(Error::TopologyInfeasible { v_out })
    }

    /// Branch current entering the output node.
    pub fn current(&self, v_out: f64) -> Result<f64> {
        let x = self.internal_node(v_out)?;
        Ok(self.current_into(Node::Vout, v_out, x))
    }
}

/// Current the NNDR branch delivers into the output node at `v_out`.
pub fn nndr_current(b: &NndrBranch, v_out: f64) -> Result<f64> {
    b.current(v_out)
}

/// Both circuits. `r3 = None` gives the leak-free variant.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: Option<f64>,
    pub i: f64,
    pub q1: MosfetParams,
    pub q4: MosfetParams,
    pub nndr: NndrBranch,
}

pub type CircuitAParams = CircuitParams;
pub type CircuitBParams = CircuitParams;

const DEVICE_KEYS: [&str; 4] = ["K", "Vt0", "lambda", "polarity"];
const TERMINAL_KEYS: [&str; 3] = ["drain", "gate", "source"];

impl CircuitParams {
    /// Circuit with leak resistor (SNIC/homoclinic type).
    pub fn circuit_a() -> Self {
        Self::from_config_str(include_str!("../configs/circuit-a.conf")).expect("shipped config parses")
    }

    /// Leak-free circuit (Hopf/fold-cycle type).
    pub fn circuit_b() -> Self {
        Self::from_config_str(include_str!("../configs/circuit-b.conf")).expect("shipped config parses")
    }

    pub fn with_current(mut self, i: f64) -> Self {
        self.i = i;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.c1, self.c2, self.c3, self.r1, self.r2];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("capacitances and resistances must be positive".into()));
        }
        if let Some(r3) = self.r3 {
            if !(r3.is_finite() && r3 > 0.0) {
                return Err(Error::InvalidConfig("R3 must be positive".into()));
            }
        }
        if !self.i.is_finite() || !self.nndr.v_dc.is_finite() {
            return Err(Error::InvalidConfig("I and V_dc must be finite".into()));
        }
        for m in [self.q1, self.q4, self.nndr.q2, self.nndr.q3] {
            m.validate()?;
        }
        self.nndr.topology.validate()
    }

    pub fn from_config_str(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?, None)
    }

    pub fn allowed_keys() -> Vec<String> {
        let mut keys: Vec<String> =
            ["C1", "C2", "C3", "R1", "R2", "R3", "V_dc", "I", "half_factor"].iter().map(|s| s.to_string()).collect();
        for q in ["q1", "q2", "q3", "q4"] {
            for k in DEVICE_KEYS {
                keys.push(format!("{q}.{k}"));
            }
        }
        for q in ["q2", "q3"] {
            for k in TERMINAL_KEYS {
                keys.push(format!("{q}.{k}"));
            }
        }
        keys
    }

    /// Builds parameters from config entries, falling back to `base` for
    /// absent keys. Without a base every numeric key except `R3` is required.
    pub fn from_key_values(kv: &KeyValues, base: Option<&Self>) -> Result<Self> {
        let allowed = Self::allowed_keys();
        let allowed: Vec<&str> = allowed.iter().map(String::as_str).collect();
        kv.reject_unknown(&allowed)?;
        let get = |key: &str, fb: Option<f64>| -> Result<f64> {
            match kv.f64(key)? {
                Some(v) => Ok(v),
                None => fb.ok_or_else(|| kv.invalid(key, "missing required key")),
            }
        };
        let b = base;
        let device = |q: &str, fb: Option<MosfetParams>, default_pol: Polarity| -> Result<MosfetParams> {
            let pol_key = format!("{q}.polarity");
            let polarity = match kv.str(&pol_key) {
                Some("nmos") => Polarity::Nmos,
                Some("pmos") => Polarity::Pmos,
                Some(other) => return Err(kv.invalid(&pol_key, format!("expected nmos or pmos, got `{other}`"))),
                None => fb.map_or(default_pol, |m| m.polarity),
            };
            let m = MosfetParams {
                polarity,
                k: get(&format!("{q}.K"), fb.map(|m| m.k))?,
                vt0: get(&format!("{q}.Vt0"), fb.map(|m| m.vt0))?,
                lambda: get(&format!("{q}.lambda"), fb.map(|m| m.lambda))?,
            };
            m.validate().map_err(|e| kv.invalid(&format!("{q}.K"), e.to_string()))?;
            Ok(m)
        };
        let terminals = |q: &str, fb: Terminals| -> Result<Terminals> {
            let node = |k: &str, d: Node| -> Result<Node> {
                let key = format!("{q}.{k}");
                match kv.str(&key) {
                    Some(s) => s.parse().map_err(|e: String| kv.invalid(&key, e)),
                    None => Ok(d),
                }
            };
            Ok(Terminals {
                drain: node("drain", fb.drain)?,
                gate: node("gate", fb.gate)?,
                source: node("source", fb.source)?,
            })
        };
        let base_topo = b.map_or_else(Topology::default, |p| p.nndr.topology);
        let topology = Topology { q2: terminals("q2", base_topo.q2)?, q3: terminals("q3", base_topo.q3)? };
        topology.validate().map_err(|e| kv.invalid("q2.drain", e.to_string()))?;
        let law = DeviceLaw {
            half_factor: match kv.bool("half_factor")? {
                Some(h) => h,
                None => b.is_some_and(|p| p.nndr.law.half_factor),
            },
        };
        let r3 = match kv.f64("R3")? {
            Some(v) => Some(v),
            None => b.and_then(|p| p.r3),
        };
        let p = Self {
            c1: get("C1", b.map(|p| p.c1))?,
            c2: get("C2", b.map(|p| p.c2))?,
            c3: get("C3", b.map(|p| p.c3))?,
            r1: get("R1", b.map(|p| p.r1))?,
            r2: get("R2", b.map(|p| p.r2))?,
            r3,
            i: get("I", b.map(|p| p.i))?,
            q1: device("q1", b.map(|p| p.q1), Polarity::Nmos)?,
            q4: device("q4", b.map(|p| p.q4), Polarity::Nmos)?,
            nndr: NndrBranch {
                q2: device("q2", b.map(|p| p.nndr.q2), Polarity::Pmos)?,
                q3: device("q3", b.map(|p| p.nndr.q3), Polarity::Nmos)?,
                v_dc: get("V_dc", b.map(|p| p.nndr.v_dc))?,
                topology,
                law,
            },
        };
        p.validate().map_err(|e| Error::Config { line: 0, key: "<parameter set>".into(), message: e.to_string() })?;
        Ok(p)
    }

    pub fn to_config_string(&self) -> String {
        let mut pairs: Vec<(String, String)> = vec![
            ("C1".into(), fmt17(self.c1)),
            ("C2".into(), fmt17(self.c2)),
            ("C3".into(), fmt17(self.c3)),
            ("R1".into(), fmt17(self.r1)),
            ("R2".into(), fmt17(self.r2)),
        ];
        if let Some(r3) = self.r3 {
            pairs.push(("R3".into(), fmt17(r3)));
        }
        pairs.push(("V_dc".into(), fmt17(self.nndr.v_dc)));
        pairs.push(("I".into(), fmt17(self.i)));
        pairs.push(("half_factor".into(), self.nndr.law.half_factor.to_string()));
        for (q, m) in [("q1", self.q1), ("q2", self.nndr.q2), ("q3", self.nndr.q3), ("q4", self.q4)] {
            let pol = match m.polarity {
                Polarity::Nmos => "nmos",
                Polarity::Pmos => "pmos",
            };
            pairs.push((format!("{q}.polarity"), pol.into()));
            pairs.push((format!("{q}.K"), fmt17(m.k)));
            pairs.push((format!("{q}.Vt0"), fmt17(m.vt0)));
            pairs.push((format!("{q}.lambda"), fmt17(m.lambda)));
        }
        for (q, t) in [("q2", self.nndr.topology.q2), ("q3", self.nndr.topology.q3)] {
            pairs.push((format!("{q}.drain"), t.drain.to_string()));
            pairs.push((format!("{q}.gate"), t.gate.to_string()));
            pairs.push((format!("{q}.source"), t.source.to_string()));
        }
        render_key_values(pairs.iter().map(|(k, v)| (k.as_str(), v.clone())))
    }

    /// `(R2·C3)/(R1·C2)`.
    pub fn slow_fast_ratio(&self) -> f64 {
        (self.r2 * self.c3) / (self.r1 * self.c2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitState {
    pub vout: f64,
    pub vgs1: f64,
    pub vgs2: f64,
}

/// Node equations shared by both circuits; the `V_out/R3` leak is included
/// when `p.r3` is set.
pub fn circuit_rhs(s: &CircuitState, p: &CircuitParams) -> Result<CircuitState> {
    let law = p.nndr.law;
    let i_q1 = mosfet_current_with(&p.q1, s.vgs1, s.vout, law);
    let i_q4 = mosfet_current_with(&p.q4, s.vgs2, s.vout, law);
    let i_q3 = p.nndr.current(s.vout)?;
    let i_r1 = (s.vout - s.vgs1) / p.r1;
    let i_r2 = (s.vout - s.vgs2) / p.r2;
    let i_leak = p.r3.map_or(0.0, |r3| s.vout / r3);
    Ok(CircuitState {
        vout: (p.i - i_r1 - i_q1 + i_q3 - i_r2 - i_q4 - i_leak) / p.c1,
        vgs1: i_r1 / p.c2,
        vgs2: i_r2 / p.c3,
    })
}

/// Circuit with the leak resistor. Fails if `p.r3` is absent.
pub fn circuit_a_rhs(s: &CircuitState, p: &CircuitAParams) -> Result<CircuitState> {
    if p.r3.is_none() {
        return Err(Error::Precondition("circuit A requires R3".into()));
    }
    circuit_rhs(s, p)
}

/// Leak-free circuit; the injected current is retained. Fails if `p.r3` is set.
pub fn circuit_b_rhs(s: &CircuitState, p: &CircuitBParams) -> Result<CircuitState> {
    if p.r3.is_some() {
        return Err(Error::Precondition("circuit B has no R3".into()));
    }
    circuit_rhs(s, p)
}

/// A circuit as a [`DynamicalSystem`] on `(Vout, VGS1, VGS2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub p: CircuitParams,
}

impl Circuit {
    pub fn new(p: CircuitParams) -> Result<Self> {
        p.validate()?;
        Ok(Self { p })
    }

    pub fn circuit_a() -> Self {
        Self { p: CircuitParams::circuit_a() }
    }

    pub fn circuit_b() -> Self {
        Self { p: CircuitParams::circuit_b() }
    }
}

impl DynamicalSystem for Circuit {
    fn dimension(&self) -> usize {
        3
    }

    fn labels(&self) -> Vec<String> {
        vec!["Vout".into(), "VGS1".into(), "VGS2".into()]
    }

    fn rhs(&self, _t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
        let d = circuit_rhs(&CircuitState { vout: x[0], vgs1: x[1], vgs2: x[2] }, &self.p)?;
        dx[0] = d.vout;
        dx[1] = d.vgs1;
        dx[2] = d.vgs2;
        Ok(())
    }

    fn params(&self) -> Vec<(String, f64)> {
        let p = &self.p;
        let mut v = vec![
            ("C1".to_string(), p.c1),
            ("C2".into(), p.c2),
            ("C3".into(), p.c3),
            ("R1".into(), p.r1),
            ("R2".into(), p.r2),
        ];
        if let Some(r3) = p.r3 {
            v.push(("R3".into(), r3));
        }
        v.push(("V_dc".into(), p.nndr.v_dc));
        v.push(("I".into(), p.i));
        v
    }
}

impl SlowFast for Circuit {
    fn membrane_label(&self) -> &'static str {
        "Vout"
    }

    fn slow_label(&self) -> &'static str {
        "VGS2"
    }

    fn fast_window(&self) -> Window2D {
        let v = self.p.nndr.v_dc;
        Window2D::new((0.0, v), (0.0, v), (400, 400)).expect("positive V_dc")
    }

    fn characteristic_time(&self) -> f64 {
        self.p.r1 * self.p.c2
    }

    fn default_state(&self) -> Vec<f64> {
        vec![0.0, 0.0, 0.0]
    }

    fn time_to_ms(&self) -> f64 {
        1e3
    }

    fn spike_min_range(&self) -> f64 {
        0.2
    }

    fn mu(&self) -> f64 {
        1.0 / self.p.slow_fast_ratio()
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
    fn square_law_values() {
        let m = MosfetParams::nmos(100e-6, 2.0, 0.01);
        assert_eq!(mosfet_current(&m, 2.0, 3.0), 0.0);
        assert_eq!(mosfet_current(&m, 2.0, 0.0), 0.0);
        assert!((mosfet_current(&m, 3.0, 5.0) - 105e-6).abs() < 1e-18);
        let half = mosfet_current_with(&m, 3.0, 5.0, DeviceLaw { half_factor: true });
        assert!((half - 52.5e-6).abs() < 1e-18);
    }

    #[test]
    fn region_boundary_is_continuous() {
        let m = MosfetParams::nmos(40e-6, 1.0, 0.01);
        let v_ov = 1.7;
        let triode = 40e-6 * (2.0 * v_ov * v_ov - v_ov * v_ov) * (1.0 + 0.01 * v_ov);
        let sat = mosfet_current(&m, 1.0 + v_ov, v_ov);
        assert!((triode - sat).abs() <= 1e-15 * sat);
    }

    #[test]
    fn depletion_device_conducts_at_zero_gate() {
        let m = MosfetParams::nmos(40e-6, -2.0, 0.01);
        assert!(mosfet_current(&m, 0.0, 1.0) > 0.0);
    }

    #[test]
    fn device_symmetry_and_pmos_mirror() {
        let n = MosfetParams::nmos(40e-6, 1.0, 0.01);
        // Swapping drain and source: i(vgs, vds) = -i(vgs - vds, -vds).
        let a = mosfet_current(&n, 3.0, 1.2);
        let b = mosfet_current(&n, 3.0 - 1.2, -1.2);
        assert_eq!(a, -b);
        let p = MosfetParams::pmos(40e-6, 1.0, 0.01);
        assert_eq!(mosfet_current(&p, -3.0, -1.2), -a);
        let p_neg = MosfetParams::pmos(40e-6, -1.0, 0.01);
        assert_eq!(mosfet_current(&p_neg, -3.0, -1.2), -a);
    }

    #[test]
    fn nndr_zero_at_supply() {
        for p in [CircuitParams::circuit_a(), CircuitParams::circuit_b()] {
            assert_eq!(nndr_current(&p.nndr, p.nndr.v_dc).unwrap(), 0.0);
        }
    }

    #[test]
    fn nndr_is_n_shaped() {
        for p in [CircuitParams::circuit_a(), CircuitParams::circuit_b()] {
            let n = 10_000;
            let v_dc = p.nndr.v_dc;
            let i: Vec<f64> = (0..=n).map(|k| nndr_current(&p.nndr, v_dc * k as f64 / n as f64).unwrap()).collect();
            let (imax, _) = i.iter().enumerate().skip(1).take(n - 1).max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            assert!(imax > 0 && imax < n, "peak at the edge");
            let (imin, _) = i[imax..].iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            let imin = imin + imax;
            assert!(imin > imax && imin <= n);
            assert!(i[imax] > i[0] && i[imin] < i[imax]);
            // Strictly falling segment in between.
            assert!(i[imax + 1..imin].windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn non_finite_output_voltage_is_infeasible() {
        let p = CircuitParams::circuit_a();
        let err = nndr_current(&p.nndr, f64::NAN).unwrap_err();
        assert!(matches!(err, Error::TopologyInfeasible { .. }));
    }

    #[test]
    fn wrong_assignment_fails_the_n_shape_probe() {
        let mut p = CircuitParams::circuit_a();
        p.nndr.topology.q2.gate = Node::Vout;
        let v_dc = p.nndr.v_dc;
        let i: Vec<f64> = (0..=1000).map(|k| nndr_current(&p.nndr, v_dc * k as f64 / 1000.0).unwrap()).collect();
        // Current-limited diode behaviour: never rises again after falling.
        let falls = i.windows(2).any(|w| w[1] < w[0]);
        let rises_after_fall = i.windows(2).skip_while(|w| w[1] >= w[0]).any(|w| w[1] > w[0] + 1e-15);
        assert!(!(falls && rises_after_fall));
    }

    #[test]
    fn resistor_equations_vanish_on_equal_voltages() {
        let a = CircuitParams::circuit_a();
        let d = circuit_a_rhs(&CircuitState { vout: 1.3, vgs1: 1.3, vgs2: 0.7 }, &a).unwrap();
        assert_eq!(d.vgs1, 0.0);
        let b = CircuitParams::circuit_b();
        let d = circuit_b_rhs(&CircuitState { vout: 0.9, vgs1: 0.2, vgs2: 0.9 }, &b).unwrap();
        assert_eq!(d.vgs2, 0.0);
        assert!(circuit_a_rhs(&CircuitState { vout: 0.0, vgs1: 0.0, vgs2: 0.0 }, &b).is_err());
        assert!(circuit_b_rhs(&CircuitState { vout: 0.0, vgs1: 0.0, vgs2: 0.0 }, &a).is_err());
    }

    #[test]
    fn quiescent_node_balance() {
        let mut p = CircuitParams::circuit_a().with_current(0.0);
        // Switch the NNDR off by taking its supply to ground.
        p.nndr.v_dc = 0.0;
        let d = circuit_a_rhs(&CircuitState { vout: 0.0, vgs1: 0.0, vgs2: 0.0 }, &p).unwrap();
        assert_eq!(d.vout, 0.0);
    }

    #[test]
    fn slow_fast_ratio_is_one_hundred() {
        assert!((CircuitParams::circuit_a().slow_fast_ratio() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn config_round_trip_and_topology_override() {
        for p in [CircuitParams::circuit_a(), CircuitParams::circuit_b()] {
            let back = CircuitParams::from_config_str(&p.to_config_string()).unwrap();
            assert_eq!(back, p);
        }
        let kv = KeyValues::parse("q2.gate = vdc\nhalf_factor = true\n").unwrap();
        let p = CircuitParams::from_key_values(&kv, Some(&CircuitParams::circuit_a())).unwrap();
        assert_eq!(p.nndr.topology.q2.gate, Node::Vdc);
        assert!(p.nndr.law.half_factor);
        let kv = KeyValues::parse("q2.gate = moon\n").unwrap();
        assert!(CircuitParams::from_key_values(&kv, Some(&CircuitParams::circuit_a())).is_err());
    }
}
