//! Hopf-Cole algebra linking `-Δu - b|∇u|² = λg(u)` (constant `b`) to the
//! semilinear problem `-Δv = λf(v)`.
//!
//! For `b > 0` the change of unknown is `v = e^{bu} - 1` and
//! `f(v) = b(v+1) g(ln(1+v)/b)`; for `b < 0` it is `v = 1 - e^{bu}` and
//! `f(v) = |b|(1-v) g(ln(1-v)/b)`. In both cases `f'(v) = b g(u) + g'(u)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::discretize::SolutionField;
use crate::error::{Error, Result};
use crate::problem::nonlinearity::{NonlinearityG, ScalarMap};

/// Exponents above this are rejected instead of overflowing.
pub const EXPONENT_GUARD: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformBranch {
    PositiveB,
    NegativeB,
}

impl TransformBranch {
    pub fn of(b: f64) -> Result<Self> {
        if b > 0.0 {
            Ok(Self::PositiveB)
        } else if b < 0.0 {
            Ok(Self::NegativeB)
        } else {
            Err(Error::ZeroCoefficient)
        }
    }
}

impl fmt::Display for TransformBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PositiveB => "positive_b",
            Self::NegativeB => "negative_b",
        })
    }
}

fn forward_scalar(u: f64, b: f64, node: usize) -> Result<f64> {
    let exponent = b * u;
    if !u.is_finite() || exponent > EXPONENT_GUARD {
        return Err(Error::Range { node, exponent });
    }
    let em1 = exponent.exp_m1();
    Ok(if b > 0.0 { em1 } else { -em1 })
}

fn inverse_scalar(v: f64, b: f64, node: Option<usize>) -> Result<f64> {
    let branch = TransformBranch::of(b)?;
    match branch {
        TransformBranch::PositiveB if v > -1.0 && v.is_finite() => Ok(v.ln_1p() / b),
        TransformBranch::NegativeB if v < 1.0 && v.is_finite() => Ok((-v).ln_1p() / b),
        _ => Err(Error::Domain { branch, node, value: v }),
    }
}

/// Nodal `v = e^{bu} - 1` (b > 0) or `v = 1 - e^{bu}` (b < 0).
pub fn hopf_cole_forward_values(u: &[f64], b: f64) -> Result<Vec<f64>> {
    TransformBranch::of(b)?;
    u.iter().enumerate().map(|(i, &x)| forward_scalar(x, b, i)).collect()
}

/// Exact inverse of [`hopf_cole_forward_values`]. Accepts `v > -1` when
/// `b > 0` and `v < 1` when `b < 0`.
pub fn hopf_cole_inverse_values(v: &[f64], b: f64) -> Result<Vec<f64>> {
    TransformBranch::of(b)?;
    v.iter().enumerate().map(|(i, &x)| inverse_scalar(x, b, Some(i))).collect()
}

pub fn hopf_cole_forward(u: &SolutionField, b: f64) -> Result<SolutionField> {
    Ok(u.with_values(hopf_cole_forward_values(&u.values, b)?))
}

pub fn hopf_cole_inverse(v: &SolutionField, b: f64) -> Result<SolutionField> {
    Ok(v.with_values(hopf_cole_inverse_values(&v.values, b)?))
}

/// The image `f` of `g` under the Hopf-Cole transform.
#[derive(Clone, Debug)]
pub struct TransformedNonlinearity {
    g: NonlinearityG,
    b: f64,
    branch: TransformBranch,
}

impl TransformedNonlinearity {
    pub fn branch(&self) -> TransformBranch {
        self.branch
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `(lo, hi)`: `(-1, ∞)` for the positive branch, `[0, 1)` for the negative one.
    pub fn valid_range(&self) -> (f64, f64) {
        match self.branch {
            TransformBranch::PositiveB => (-1.0, f64::INFINITY),
            TransformBranch::NegativeB => (0.0, 1.0),
        }
    }

    fn in_range(&self, v: f64) -> bool {
        match self.branch {
            TransformBranch::PositiveB => v > -1.0 && v.is_finite(),
            TransformBranch::NegativeB => (0.0..1.0).contains(&v),
        }
    }

    fn check(&self, v: f64) -> Result<f64> {
        if self.in_range(v) {
            inverse_scalar(v, self.b, None)
        } else {
            Err(Error::Domain {
                branch: self.branch,
                node: None,
                value: v,
            })
        }
    }

    pub fn f(&self, v: f64) -> Result<f64> {
        let u = self.check(v)?;
        let factor = match self.branch {
            TransformBranch::PositiveB => self.b * (v + 1.0),
            TransformBranch::NegativeB => self.b.abs() * (1.0 - v),
        };
        Ok(factor * self.g.natural_value(u))
    }

    pub fn f_prime(&self, v: f64) -> Result<f64> {
        let u = self.check(v)?;
        Ok(self.b * self.g.natural_value(u) + self.g.natural_derivative(u))
    }
}

impl ScalarMap for TransformedNonlinearity {
    fn value(&self, v: f64) -> f64 {
        self.f(v).unwrap_or(f64::NAN)
    }

    fn derivative(&self, v: f64) -> f64 {
        self.f_prime(v).unwrap_or(f64::NAN)
    }
}

/// Build `f` from `g` for the given constant `b`.
pub fn derive_f(g: &NonlinearityG, b: f64) -> Result<TransformedNonlinearity> {
    let branch = TransformBranch::of(b)?;
    if !b.is_finite() {
        return Err(Error::InvalidProblem(format!("b must be finite, got {b}")));
    }
    Ok(TransformedNonlinearity {
        g: g.clone(),
        b,
        branch,
    })
}
