use serde::Serialize;

use crate::discretize::{nodal_gradient_sq, Problem, RadialGrid, SolutionField};
use crate::error::{Error, Result};
use crate::problem::nonlinearity::ln_expm1;
use crate::problem::{NonlinearityG, NonlinearityKind};

/// `(∫|∇u|² + ∫u²)^{1/2}` with the radial measure of the domain.
pub fn h1_norm(grid: &RadialGrid, u: &[f64]) -> Result<f64> {
    let gs = nodal_gradient_sq(grid, u)?;
    let sq: Vec<f64> = gs.iter().zip(u).map(|(g, v)| g + v * v).collect();
    Ok(grid.integrate(&sq).sqrt())
}

/// `ln ‖e^u‖_{L^q}`, evaluated as a log-sum-exp so it stays finite for any
/// finite `u`.
pub fn ln_lq_norm_eu(grid: &RadialGrid, u: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Precondition(format!("q must be positive, got {q}")));
    }
    if u.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    let terms: Vec<f64> = grid
        .weights()
        .iter()
        .zip(u)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, v)| w.ln() + q * v)
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((top + sum.ln()) / q)
}

/// `‖e^u‖_{L^q}`, saturating at `f64::MAX` rather than overflowing.
pub fn lq_norm_eu(grid: &RadialGrid, u: &[f64], q: f64) -> Result<f64> {
    Ok(ln_lq_norm_eu(grid, u, q)?.exp().min(f64::MAX))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyIdentity {
    /// `λ ∫ g(u)(e^{bu} - 1)`
    pub lhs: f64,
    /// `b ∫ |∇u|²`
    pub rhs: f64,
    pub rel_err: f64,
}

/// Both sides of `λ∫g(u)(e^{bu}-1) = b∫|∇u|²` for constant `b > 0`.
pub fn energy_identity_check(problem: &Problem, u: &SolutionField) -> Result<EnergyIdentity> {
    let b = match problem.spec.coefficient.constant_value() {
        Some(b) if b > 0.0 => b,
        _ => return Err(Error::Regime("energy identity needs a constant b > 0".into())),
    };
    let grid = &problem.grid;
    let g = &problem.spec.nonlinearity;
    let lambda = problem.lambda();
    let left: Vec<f64> = u.values.iter().map(|&x| lambda * g.value(x) * (b * x).exp_m1()).collect();
    let lhs = grid.integrate(&left);
    let rhs = b * grid.integrate(&nodal_gradient_sq(grid, &u.values)?);
    let denom = lhs.abs().max(rhs.abs());
    let rel_err = if denom == 0.0 { 0.0 } else { (lhs - rhs).abs() / denom };
    if !rel_err.is_finite() {
        return Err(Error::NonFinite {
            term: "energy identity".into(),
        });
    }
    Ok(EnergyIdentity { lhs, rhs, rel_err })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H1Condition {
    pub satisfied: bool,
    pub liminf_estimate: f64,
    /// `(s, ratio)` at the sample points.
    pub samples: Vec<(f64, f64)>,
    /// True when `liminf_estimate` is the exact limit of a registered kind.
    pub analytic: bool,
}

const H1_SAMPLES: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

/// Checks `liminf_{s→∞} g'(s)(e^{bs}-1)/(b g(s)) > 1`.
pub fn h1_condition_constant_b(g: &NonlinearityG, b: f64) -> Result<H1Condition> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Precondition(format!("need b > 0, got {b}")));
    }
    let samples: Vec<(f64, f64)> = H1_SAMPLES
        .iter()
        .map(|&s| {
            let gp = g.natural_derivative(s);
            let ratio = if gp == 0.0 {
                0.0
            } else if gp < 0.0 {
                f64::NEG_INFINITY
            } else {
                let ln = g.ln_derivative(s) + ln_expm1(b * s) - b.ln() - g.ln_value(s);
                ln.exp()
            };
            (s, ratio)
        })
        .collect();
    let analytic_limit = match g.kind() {
        NonlinearityKind::Exponential { .. } | NonlinearityKind::GelfandPullback { .. } => Some(f64::INFINITY),
        NonlinearityKind::PowerShift { p } => Some(if *p > 0.0 {
            f64::INFINITY
        } else if *p == 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }),
        NonlinearityKind::Custom(c) => c.map.h1_ratio_limit(b),
    };
    let estimate = analytic_limit.unwrap_or_else(|| samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min));
    Ok(H1Condition {
        satisfied: estimate > 1.0 + 1e-6,
        liminf_estimate: estimate,
        samples,
        analytic: analytic_limit.is_some(),
    })
}

/// Number of polynomial test functions `ξ_k = (1 - s²) s^{2k}`, `s = r/R`.
pub const WEAK_TEST_FUNCTIONS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakTerm {
    pub k: usize,
    /// `-∫ u Δξ`
    pub diffusion: f64,
    /// `∫ b |∇u|² ξ`
    pub gradient: f64,
    /// `λ ∫ g(u) ξ`
    pub source: f64,
    pub residual: f64,
    /// Largest of the three term magnitudes.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakResidual {
    pub lambda: f64,
    pub terms: Vec<WeakTerm>,
    pub max_residual: f64,
    pub max_relative: f64,
    /// The weak formulation is established for `g = e^u`; for other `g` the
    /// report is informational.
    pub informational: bool,
}

/// Weak-form residual `|-∫uΔξ - ∫b|∇u|²ξ - λ∫g(u)ξ|` for the fixed family of
/// polynomial bubbles, with grid quadrature.
pub fn weak_residual(problem: &Problem, u: &SolutionField, lambda: f64) -> Result<WeakResidual> {
    let grid = &problem.grid;
    let n = grid.dimension();
    let radius = grid.radius();
    let g = &problem.spec.nonlinearity;
    let gs = nodal_gradient_sq(grid, &u.values)?;
    let mut terms = Vec::with_capacity(WEAK_TEST_FUNCTIONS);
    for k in 0..WEAK_TEST_FUNCTIONS {
        let m = 2 * k;
        // Δ s^j = j (j + n - 2) s^{j-2} / R²
        let lap = |s: f64, j: usize| -> f64 {
            if j == 0 {
                0.0
            } else {
                let jf = j as f64;
                jf * (jf + n - 2.0) * s.powi(j as i32 - 2) / (radius * radius)
            }
        };
        let mut diff = vec![0.0; grid.len()];
        let mut grad = vec![0.0; grid.len()];
        let mut src = vec![0.0; grid.len()];
        for (i, &r) in grid.nodes().iter().enumerate() {
            let s = r / radius;
            let xi = (1.0 - s * s) * s.powi(m as i32);
            let dxi = lap(s, m) - lap(s, m + 2);
            diff[i] = -u.values[i] * dxi;
            grad[i] = problem.b_nodes[i] * gs[i] * xi;
            src[i] = lambda * g.value(u.values[i]) * xi;
        }
        let (a, b, c) = (grid.integrate(&diff), grid.integrate(&grad), grid.integrate(&src));
        let residual = (a - b - c).abs();
        terms.push(WeakTerm {
            k,
            diffusion: a,
            gradient: b,
            source: c,
            residual,
            scale: a.abs().max(b.abs()).max(c.abs()),
        });
    }
    let max_residual = terms.iter().map(|t| t.residual).fold(0.0, f64::max);
    let max_relative = terms
        .iter()
        .map(|t| if t.scale == 0.0 { 0.0 } else { t.residual / t.scale })
        .fold(0.0, f64::max);
    let informational = g.exponential_rate() != Some(1.0);
    Ok(WeakResidual {
        lambda,
        terms,
        max_residual,
        max_relative,
        informational,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Domain, Registry};
    use std::collections::BTreeMap;

    #[test]
    fn h1_norm_of_bubble_on_half_interval() {
        let grid = RadialGrid::new(Domain::Interval { length: 1.0 }, 1.0, 4096).unwrap();
        let u: Vec<f64> = grid.nodes().iter().map(|r| 1.0 - r * r).collect();
        let exact = (4.0 / 3.0 + 8.0 / 15.0f64).sqrt();
        assert!((h1_norm(&grid, &u).unwrap() - exact).abs() < 1e-6);
        assert_eq!(h1_norm(&grid, &vec![0.0; grid.len()]).unwrap(), 0.0);
    }

    #[test]
    fn lq_norm_is_log_stable() {
        let grid = RadialGrid::new(Domain::unit_ball(), 3.0, 64).unwrap();
        let u = vec![0.0; grid.len()];
        let vol = grid.volume();
        assert!((lq_norm_eu(&grid, &u, 2.0).unwrap() - vol.sqrt()).abs() < 1e-2 * vol.sqrt());
        let big = vec![999.0; grid.len()];
        let ln = ln_lq_norm_eu(&grid, &big, 3.0).unwrap();
        assert!(ln.is_finite() && (ln - 999.0).abs() < 5.0);
        assert!(lq_norm_eu(&grid, &big, 3.0).unwrap().is_finite());
    }

    #[test]
    fn h1_condition_cases() {
        let c = h1_condition_constant_b(&NonlinearityG::exponential(1.0).unwrap(), 1.0).unwrap();
        assert!(c.satisfied && c.liminf_estimate.is_infinite());
        // ratio = e^s - 1 for g = e^s, b = 1
        assert!((c.samples[0].1 - 10f64.exp_m1()).abs() < 1e-9 * 10f64.exp());
        let params = BTreeMap::from([("rate".to_string(), 1.0)]);
        let sat = Registry::default().build("custom:saturating", &params).unwrap();
        let c = h1_condition_constant_b(&sat, 1.0).unwrap();
        assert_eq!(c.liminf_estimate, 1.0);
        assert!(!c.satisfied);
        let c = h1_condition_constant_b(&NonlinearityG::power_shift(0.0).unwrap(), 1.0).unwrap();
        assert_eq!(c.liminf_estimate, 0.0);
        assert!(!c.satisfied);
    }
}
