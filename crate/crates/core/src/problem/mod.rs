//! Problem descriptions for `-Δu - b(x)|∇u|² = λ g(u)` with `u = 0` on the
//! boundary of a radial domain.

pub mod nonlinearity;
pub mod transform;

use serde::Serialize;

use crate::discretize::RadialGrid;
use crate::error::{Error, Result};

pub use nonlinearity::{
    CustomFactory, CustomMap, NonlinearityG, NonlinearityKind, Registry, Saturating, ScalarMap,
};
pub use transform::{
    derive_f, hopf_cole_forward, hopf_cole_forward_values, hopf_cole_inverse,
    hopf_cole_inverse_values, TransformBranch, TransformedNonlinearity, EXPONENT_GUARD,
};

/// Radial domain. A ball of radius `R` in dimension `n` carries the measure
/// `ω_{n-1} r^{n-1} dr`; an interval `[0, L]` carries `dr` with a symmetry
/// condition at `r = 0` and is only meaningful for `n = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { radius: f64 },
    Interval { length: f64 },
}

impl Domain {
    pub fn unit_ball() -> Self {
        Domain::Ball { radius: 1.0 }
    }

    /// Outer radius (or interval length).
    pub fn radius(&self) -> f64 {
        match *self {
            Domain::Ball { radius } => radius,
            Domain::Interval { length } => length,
        }
    }
}

/// Closed-form coefficient profiles addressable by id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum CoefficientFormula {
    /// `b(r) = b0 (1 - curvature r²)`
    QuadraticBump { b0: f64, curvature: f64 },
}

impl CoefficientFormula {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            CoefficientFormula::QuadraticBump { b0, curvature } => b0 * (1.0 - curvature * r * r),
        }
    }

    /// Range of the profile on `[0, radius]`.
    fn range(&self, radius: f64) -> (f64, f64) {
        let (a, b) = (self.eval(0.0), self.eval(radius));
        (a.min(b), a.max(b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientKind {
    Constant { b: f64 },
    /// Values at the grid nodes `r_0, ..., r_M`.
    Tabulated { values: Vec<f64> },
    Formula { formula: CoefficientFormula },
}

/// The gradient coefficient `b(x)` together with bounds `b_lo <= b <= b_hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientB {
    pub kind: CoefficientKind,
    pub lo: f64,
    pub hi: f64,
}

impl CoefficientB {
    pub fn constant(b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidProblem(format!("constant b must be finite, got {b}")));
        }
        Ok(Self {
            kind: CoefficientKind::Constant { b },
            lo: b,
            hi: b,
        })
    }

    /// Tabulated values with bounds taken from their range.
    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("tabulated b needs finite values".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: CoefficientKind::Tabulated { values },
            lo,
            hi,
        })
    }

    /// Tabulated values with declared bounds, which must enclose the values.
    pub fn tabulated_with_bounds(values: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let mut c = Self::tabulated(values)?;
        if !(lo <= c.lo && c.hi <= hi) {
            return Err(Error::InvalidProblem(format!(
                "tabulated b has range [{}, {}] outside the declared bounds [{lo}, {hi}]",
                c.lo, c.hi
            )));
        }
        c.lo = lo;
        c.hi = hi;
        Ok(c)
    }

    /// Sample `profile` at the nodes of `grid`.
    pub fn tabulate(grid: &RadialGrid, profile: impl Fn(f64) -> f64) -> Result<Self> {
        Self::tabulated(grid.nodes().iter().map(|&r| profile(r)).collect())
    }

    pub fn formula(formula: CoefficientFormula, radius: f64) -> Result<Self> {
        let (lo, hi) = formula.range(radius);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidProblem("coefficient formula is not finite".into()));
        }
        Ok(Self {
            kind: CoefficientKind::Formula { formula },
            lo,
            hi,
        })
    }

    /// `Some(b)` for a spatially constant coefficient.
    pub fn constant_value(&self) -> Option<f64> {
        match self.kind {
            CoefficientKind::Constant { b } => Some(b),
            _ if self.lo == self.hi => Some(self.lo),
            _ => None,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Nodal values on `grid`.
    pub fn at_nodes(&self, grid: &RadialGrid) -> Result<Vec<f64>> {
        match &self.kind {
            CoefficientKind::Constant { b } => Ok(vec![*b; grid.len()]),
            CoefficientKind::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch {
                        expected: grid.len(),
                        found: values.len(),
                    });
                }
                Ok(values.clone())
            }
            CoefficientKind::Formula { formula } => {
                Ok(grid.nodes().iter().map(|&r| formula.eval(r)).collect())
            }
        }
    }
}

/// One instance of the boundary value problem.
#[derive(Clone, Debug, Serialize)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub dimension: f64,
    pub coefficient: CoefficientB,
    pub nonlinearity: NonlinearityG,
    pub lambda: f64,
}

impl ProblemSpec {
    pub fn new(
        domain: Domain,
        dimension: f64,
        coefficient: CoefficientB,
        nonlinearity: NonlinearityG,
        lambda: f64,
    ) -> Result<Self> {
        let spec = Self {
            domain,
            dimension,
            coefficient,
            nonlinearity,
            lambda,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.domain.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidProblem(format!("domain radius must be positive, got {r}")));
        }
        if !(self.dimension >= 1.0 && self.dimension.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "dimension must be a real number >= 1, got {}",
                self.dimension
            )));
        }
        if matches!(self.domain, Domain::Interval { .. }) && self.dimension != 1.0 {
            return Err(Error::InvalidProblem("an interval domain requires dimension 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let (lo, hi) = self.coefficient.bounds();
        if lo > hi {
            return Err(Error::InvalidProblem(format!("b bounds are inverted: [{lo}, {hi}]")));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut s = self.clone();
        s.lambda = lambda;
        s.validate()?;
        Ok(s)
    }

    pub fn with_nonlinearity(&self, nonlinearity: NonlinearityG) -> Self {
        let mut s = self.clone();
        s.nonlinearity = nonlinearity;
        s
    }
}
