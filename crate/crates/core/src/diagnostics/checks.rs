use serde::Serialize;

use crate::discretize::{nodal_gradient_sq, radial_laplacian, Problem, SolutionField};
use crate::error::{Error, Result};

/// `T₁(s)`: `s` clamped to `[-1, 1]`.
pub fn truncate_unit(s: f64) -> f64 {
    s.clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncationCheck {
    pub epsilon: f64,
    /// `∫_{u<=1} |∇u|²`
    pub lhs_low: f64,
    /// `∫_{u>1} |∇u|²`
    pub lhs_high: f64,
    /// `λ ∫ |g(u)|`
    pub rhs: f64,
    pub holds: bool,
}

/// For `b(x) <= -ε < 0`, testing the equation with `T₁u` gives
/// `∫_{u<=1}|∇u|² + ε∫_{u>1}|∇u|² <= λ∫|g(u)|`. The split is nodal.
pub fn truncation_h1_check(problem: &Problem, u: &SolutionField) -> Result<TruncationCheck> {
    let b_max = problem.b_nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if b_max > -1e-12 {
        return Err(Error::Regime(format!("need b(x) <= -ε < 0 at every node, max b = {b_max}")));
    }
    let epsilon = -b_max;
    let grid = &problem.grid;
    let gs = nodal_gradient_sq(grid, &u.values)?;
    let (mut low, mut high) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
    for (i, (&x, &g2)) in u.values.iter().zip(&gs).enumerate() {
        if x > 1.0 {
            high[i] = g2;
        } else {
            low[i] = g2;
        }
    }
    let g = &problem.spec.nonlinearity;
    let src: Vec<f64> = u.values.iter().map(|&x| g.value(x).abs()).collect();
    let (lhs_low, lhs_high) = (grid.integrate(&low), grid.integrate(&high));
    let rhs = problem.lambda() * grid.integrate(&src);
    Ok(TruncationCheck {
        epsilon,
        lhs_low,
        lhs_high,
        rhs,
        holds: lhs_low + epsilon * lhs_high <= rhs * (1.0 + 1e-6),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapCheck {
    pub b_hi: f64,
    /// `max_i (-Δ_h v - λ b_hi (v+1)^p)_i` over the unknowns.
    pub residual_max: f64,
    /// `max_i λ b_hi (v+1)^p`
    pub scale: f64,
    pub is_subsolution: bool,
}

/// With `v = e^{b_hi u} - 1` and `p = (b_hi + 1)/b_hi`, checks
/// `-Δ_h v <= λ b_hi (v+1)^p + 10⁻⁶·scale` at every unknown, for
/// `0 <= b(x) <= b_hi` and `g = c·e^u`.
pub fn bootstrap_subsolution_check(problem: &Problem, u: &SolutionField) -> Result<BootstrapCheck> {
    let b_min = problem.b_nodes.iter().copied().fold(f64::INFINITY, f64::min);
    if b_min < 0.0 {
        return Err(Error::Regime(format!("need b(x) >= 0, min b = {b_min}")));
    }
    let g = &problem.spec.nonlinearity;
    if g.exponential_rate() != Some(1.0) {
        return Err(Error::Precondition("bootstrap check needs g = c·e^u".into()));
    }
    let b_hi = problem.spec.coefficient.hi;
    if !(b_hi > 0.0) {
        return Err(Error::Precondition(format!("need b_hi > 0, got {b_hi}")));
    }
    let grid = &problem.grid;
    let v: Vec<f64> = u.values.iter().map(|&x| (b_hi * x).exp_m1()).collect();
    let lap = radial_laplacian(grid, &v)?;
    let coef = problem.lambda() * g.scale() * b_hi;
    let mut residual_max = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for (&l, &x) in lap.iter().zip(&u.values) {
        // (v+1)^p = e^{(b_hi + 1) u}
        let bound = coef * ((b_hi + 1.0) * x).exp();
        residual_max = residual_max.max(-l - bound);
        scale = scale.max(bound.abs());
    }
    Ok(BootstrapCheck {
        b_hi,
        residual_max,
        scale,
        is_subsolution: residual_max <= 1e-6 * scale,
    })
}
