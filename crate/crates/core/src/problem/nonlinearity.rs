//! The nonlinearity registry: shipped kinds of `g` and the custom-map hook.
//!
//! Every registered `g` is extended to `u < 0` by its value and slope at the
//! origin, so that transiently negative Newton iterates stay evaluable.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// A user-supplied scalar map `s -> g(s)` together with its derivative.
pub trait ScalarMap: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;

    fn derivative(&self, s: f64) -> f64;

    /// Exact value of `lim inf g'(s)(e^{bs}-1) / (b g(s))` when known in closed form.
    fn h1_ratio_limit(&self, _b: f64) -> Option<f64> {
        None
    }

    /// Parameters echoed into run metadata.
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
}

/// `g(s) = c (1 - e^{-rate s})`, the bounded family on which the H¹ condition
/// for constant `b = rate` holds with equality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Saturating {
    pub c: f64,
    pub rate: f64,
}

impl ScalarMap for Saturating {
    fn value(&self, s: f64) -> f64 {
        -self.c * (-self.rate * s).exp_m1()
    }

    fn derivative(&self, s: f64) -> f64 {
        self.c * self.rate * (-self.rate * s).exp()
    }

    fn h1_ratio_limit(&self, b: f64) -> Option<f64> {
        // ratio = rate (e^{bs} - 1) / (b (e^{rate s} - 1))
        let limit = if (self.rate - b).abs() <= 1e-15 * b.abs().max(1.0) {
            1.0
        } else if self.rate < b {
            f64::INFINITY
        } else {
            0.0
        };
        Some(limit)
    }

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("c".to_string(), self.c), ("rate".to_string(), self.rate)])
    }
}

/// A named custom map, addressed as `custom:<name>`.
#[derive(Clone, Debug)]
pub struct CustomMap {
    pub name: String,
    pub map: Arc<dyn ScalarMap>,
}

#[derive(Clone, Debug)]
pub enum NonlinearityKind {
    /// `g(u) = e^{βu}`
    Exponential { beta: f64 },
    /// `g(u) = exp(e^{bu} - 1 - bu)`; its Hopf-Cole image is `f(v) = b e^v`.
    GelfandPullback { b: f64 },
    /// `g(u) = (1 + u)^p`
    PowerShift { p: f64 },
    Custom(CustomMap),
}

/// The nonlinearity `g` with its smoothness flags.
#[derive(Clone, Debug)]
pub struct NonlinearityG {
    kind: NonlinearityKind,
    scale: f64,
    pub nondecreasing: bool,
    pub convex: bool,
    pub g0: f64,
}

impl NonlinearityG {
    pub fn exponential(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidProblem(format!("exponential requires beta > 0, got {beta}")));
        }
        Ok(Self::from_kind(NonlinearityKind::Exponential { beta }, true, true))
    }

    pub fn gelfand_pullback(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidProblem(format!("gelfand_pullback requires b > 0, got {b}")));
        }
        Ok(Self::from_kind(NonlinearityKind::GelfandPullback { b }, true, true))
    }

    pub fn power_shift(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidProblem(format!("power_shift requires finite p, got {p}")));
        }
        Ok(Self::from_kind(
            NonlinearityKind::PowerShift { p },
            p >= 0.0,
            p >= 1.0 || p <= 0.0,
        ))
    }

    pub fn custom(name: impl Into<String>, map: Arc<dyn ScalarMap>) -> Self {
        let probe = [0.0, 0.5, 1.0, 2.0, 4.0];
        let nondecreasing = probe.iter().all(|&s| map.derivative(s) >= 0.0);
        let convex = probe.windows(2).all(|w| map.derivative(w[1]) >= map.derivative(w[0]));
        Self::from_kind(
            NonlinearityKind::Custom(CustomMap {
                name: name.into(),
                map,
            }),
            nondecreasing,
            convex,
        )
    }

    fn from_kind(kind: NonlinearityKind, nondecreasing: bool, convex: bool) -> Self {
        let mut g = Self {
            kind,
            scale: 1.0,
            nondecreasing,
            convex,
            g0: 0.0,
        };
        g.g0 = g.natural_value(0.0);
        g
    }

    /// `c·g` for a positive constant `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut g = self.clone();
        g.scale *= c;
        g.g0 = g.natural_value(0.0);
        g
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Config id: `exp`, `gelfand_pullback`, `power_shift` or `custom:<name>`.
    pub fn id(&self) -> String {
        match &self.kind {
            NonlinearityKind::Exponential { .. } => "exp".into(),
            NonlinearityKind::GelfandPullback { .. } => "gelfand_pullback".into(),
            NonlinearityKind::PowerShift { .. } => "power_shift".into(),
            NonlinearityKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut params = match &self.kind {
            NonlinearityKind::Exponential { beta } => BTreeMap::from([("beta".to_string(), *beta)]),
            NonlinearityKind::GelfandPullback { b } => BTreeMap::from([("b".to_string(), *b)]),
            NonlinearityKind::PowerShift { p } => BTreeMap::from([("p".to_string(), *p)]),
            NonlinearityKind::Custom(c) => c.map.params(),
        };
        if self.scale != 1.0 {
            params.insert("scale".into(), self.scale);
        }
        params
    }

    /// `Some(β)` when `g = c·e^{βu}`.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Exponential { beta } => Some(beta),
            _ => None,
        }
    }

    /// `g(s)` from the kind's own formula, without the extension below 0.
    pub fn natural_value(&self, s: f64) -> f64 {
        let v = match &self.kind {
            NonlinearityKind::Exponential { beta } => (beta * s).exp(),
            NonlinearityKind::GelfandPullback { b } => {
                let bs = b * s;
                // e^{bs} - 1 - bs, accurate near 0
                (bs.exp_m1() - bs).exp()
            }
            NonlinearityKind::PowerShift { p } => (1.0 + s).powf(*p),
            NonlinearityKind::Custom(c) => c.map.value(s),
        };
        self.scale * v
    }

    pub fn natural_derivative(&self, s: f64) -> f64 {
        let d = match &self.kind {
            NonlinearityKind::Exponential { beta } => beta * (beta * s).exp(),
            NonlinearityKind::GelfandPullback { b } => {
                let bs = b * s;
                b * bs.exp_m1() * (bs.exp_m1() - bs).exp()
            }
            NonlinearityKind::PowerShift { p } => p * (1.0 + s).powf(p - 1.0),
            NonlinearityKind::Custom(c) => c.map.derivative(s),
        };
        self.scale * d
    }

    /// `g(u)`, linearly extended below 0.
    pub fn value(&self, u: f64) -> f64 {
        if u < 0.0 {
            self.g0 + self.natural_derivative(0.0) * u
        } else {
            self.natural_value(u)
        }
    }

    /// `g'(u)`, constant below 0.
    pub fn derivative(&self, u: f64) -> f64 {
        self.natural_derivative(u.max(0.0))
    }

    /// `ln g(s)` for `s >= 0`, evaluated without forming `g` where a closed
    /// form exists. Returns `-inf` when `g(s) = 0`.
    pub fn ln_value(&self, s: f64) -> f64 {
        let ln_scale = self.scale.ln();
        match &self.kind {
            NonlinearityKind::Exponential { beta } => ln_scale + beta * s,
            NonlinearityKind::GelfandPullback { b } => ln_scale + (b * s).exp_m1() - b * s,
            NonlinearityKind::PowerShift { p } => ln_scale + p * s.ln_1p(),
            NonlinearityKind::Custom(_) => self.natural_value(s).ln(),
        }
    }

    /// `ln g'(s)` for `s >= 0`; `-inf` where `g'(s) = 0`, NaN where negative.
    pub fn ln_derivative(&self, s: f64) -> f64 {
        let ln_scale = self.scale.ln();
        match &self.kind {
            NonlinearityKind::Exponential { beta } => ln_scale + beta.ln() + beta * s,
            NonlinearityKind::GelfandPullback { b } => {
                let bs = b * s;
                ln_scale + b.ln() + ln_expm1(bs) + bs.exp_m1() - bs
            }
            NonlinearityKind::PowerShift { p } => {
                if *p == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_scale + p.ln() + (p - 1.0) * s.ln_1p()
                }
            }
            NonlinearityKind::Custom(_) => self.natural_derivative(s).ln(),
        }
    }
}

/// `ln(e^x - 1)` for `x > 0`, stable for large and small `x`.
pub(crate) fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

impl Serialize for NonlinearityG {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("NonlinearityG", 5)?;
        st.serialize_field("kind", &self.id())?;
        st.serialize_field("params", &self.params())?;
        st.serialize_field("nondecreasing", &self.nondecreasing)?;
        st.serialize_field("convex", &self.convex)?;
        st.serialize_field("g0", &self.g0)?;
        st.end()
    }
}

/// Constructors for `custom:<name>` ids.
pub type CustomFactory = fn(&BTreeMap<String, f64>) -> Result<Arc<dyn ScalarMap>>;

/// Registry of custom nonlinearities addressable from configuration.
#[derive(Clone, Debug)]
pub struct Registry {
    factories: BTreeMap<String, CustomFactory>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("saturating", saturating_factory);
        r
    }
}

fn saturating_factory(params: &BTreeMap<String, f64>) -> Result<Arc<dyn ScalarMap>> {
    let c = params.get("c").copied().unwrap_or(1.0);
    let rate = params
        .get("rate")
        .copied()
        .ok_or_else(|| Error::InvalidProblem("custom:saturating requires param `rate`".into()))?;
    for (k, v) in params {
        if k != "c" && k != "rate" {
            return Err(Error::InvalidProblem(format!("custom:saturating: unknown param `{k}` = {v}")));
        }
    }
    if !(c > 0.0 && rate > 0.0) {
        return Err(Error::InvalidProblem("custom:saturating requires c > 0 and rate > 0".into()));
    }
    Ok(Arc::new(Saturating { c, rate }))
}

impl Registry {
    pub fn register(&mut self, name: &str, factory: CustomFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Build a nonlinearity from its config id and parameters.
    pub fn build(&self, id: &str, params: &BTreeMap<String, f64>) -> Result<NonlinearityG> {
        let single = |key: &str| -> Result<f64> {
            for k in params.keys() {
                if k != key {
                    return Err(Error::InvalidProblem(format!("{id}: unknown param `{k}`")));
                }
            }
            params
                .get(key)
                .copied()
                .ok_or_else(|| Error::InvalidProblem(format!("{id} requires param `{key}`")))
        };
        match id {
            "exp" => NonlinearityG::exponential(single("beta")?),
            "gelfand_pullback" => NonlinearityG::gelfand_pullback(single("b")?),
            "power_shift" => NonlinearityG::power_shift(single("p")?),
            _ => {
                let name = id
                    .strip_prefix("custom:")
                    .ok_or_else(|| Error::InvalidProblem(format!("unknown nonlinearity id `{id}`")))?;
                let factory = self
                    .factories
                    .get(name)
                    .ok_or_else(|| Error::InvalidProblem(format!("unregistered custom nonlinearity `{name}`")))?;
                Ok(NonlinearityG::custom(name, factory(params)?))
            }
        }
    }
}
