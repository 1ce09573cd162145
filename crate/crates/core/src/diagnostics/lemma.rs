//! The integral inequality for stable solutions with `g = c e^{βu}`:
//!
//! ```text
//! ∫|∇u|² e^{γb̄u}(e^{b̄u}-1)^{2α-2} <= λ/(b̄(2α+γ-3)) ∫e^{(β+(2α+γ-2)b̄)u} + λ L_γ
//! ```
//!
//! where `L_γ` combines `∫e^{(β+(2α+k)b̄)u}`, `k < γ-2`. Writing `I_j` for
//! the left-hand side with `γ = j` and `E_k` for the exponential integrals,
//! each step gives `I_j <= c_j E_{j-2} + d_j I_{j-1}` with
//! `c_j = λ/(b̄(2α+j-3))` and `d_j = (j-2)/(2α+j-3)`, and `d_2 = 0` ends the
//! chain. The coefficients below are produced by running that chain.

use serde::Serialize;

use crate::discretize::{Problem, SolutionField};
use crate::error::{Error, Result};
use crate::problem::transform::EXPONENT_GUARD;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaPath {
    /// Constant `b > 0`.
    ConstantB,
    /// Variable `b(x) <= b_hi` with `b_hi > 0`; the estimate uses `b_hi`.
    GeneralB,
}

/// `coefficient · λ · ∫e^{(β+(2α+k)b̄)u}` on the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaTerm {
    pub k: usize,
    pub coefficient: f64,
    pub integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub path: LemmaPath,
    pub b_bar: f64,
    pub alpha: f64,
    pub gamma: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `L_γ`, the part of the right-hand side below the leading term
    /// (without the factor `λ`). Exactly 0 for `γ = 2`.
    pub l_gamma: f64,
    pub terms: Vec<LemmaTerm>,
    pub holds: bool,
}

/// Coefficients of `E_k` (per unit `λ`), leading term first.
pub fn lemma_coefficients(b_bar: f64, alpha: f64, gamma: usize) -> Result<Vec<(usize, f64)>> {
    if !(alpha > 0.5) || gamma < 2 || !(b_bar > 0.0) {
        return Err(Error::Precondition(format!(
            "need alpha > 1/2, gamma >= 2, b̄ > 0; got alpha = {alpha}, gamma = {gamma}, b̄ = {b_bar}"
        )));
    }
    let mut out = Vec::with_capacity(gamma - 1);
    let mut multiplier = 1.0;
    for j in (2..=gamma).rev() {
        let denom = 2.0 * alpha + j as f64 - 3.0;
        out.push((j - 2, multiplier / (b_bar * denom)));
        multiplier *= (j as f64 - 2.0) / denom;
    }
    Ok(out)
}

/// Evaluate both sides of the inequality on the computed solution `u`.
///
/// Integrals use the midpoint rule on the cells `[r_i, r_{i+1}]`, since the
/// factor `(e^{b̄u}-1)^{2α-2}` is singular at the boundary when `α < 1`.
pub fn verify_lemma_inequality(problem: &Problem, u: &SolutionField, alpha: f64, gamma: usize) -> Result<LemmaCheck> {
    let spec = &problem.spec;
    let beta = spec
        .nonlinearity
        .exponential_rate()
        .ok_or_else(|| Error::Precondition("the lemma needs g = c·e^{βu}".into()))?;
    let (path, b_bar) = match spec.coefficient.constant_value() {
        Some(b) if b > 0.0 => (LemmaPath::ConstantB, b),
        Some(b) => return Err(Error::Regime(format!("constant b = {b} is not positive"))),
        None if spec.coefficient.hi > 0.0 => (LemmaPath::GeneralB, spec.coefficient.hi),
        None => return Err(Error::Regime("b_hi must be positive".into())),
    };
    let lambda = spec.lambda * spec.nonlinearity.scale();
    let coefficients = lemma_coefficients(b_bar, alpha, gamma)?;

    let grid = &problem.grid;
    let h = grid.h();
    let weights = grid.midpoint_weights();
    let vals = &u.values;
    let mids: Vec<(f64, f64, f64)> = (0..grid.intervals())
        .map(|i| (0.5 * (vals[i] + vals[i + 1]), (vals[i + 1] - vals[i]) / h, weights[i]))
        .collect();
    let umax = mids.iter().map(|m| m.0).fold(0.0, f64::max);

    let guard = |term: String, exponent: f64| -> Result<()> {
        if exponent * umax > EXPONENT_GUARD {
            Err(Error::NonFinite {
                term: format!("{term}: exponent {:.3e} overflows", exponent * umax),
            })
        } else {
            Ok(())
        }
    };
    guard("lhs".into(), (gamma as f64 + (2.0 * alpha - 2.0).max(0.0)) * b_bar)?;
    let lhs: f64 = mids
        .iter()
        .filter(|(um, du, _)| *du != 0.0 && *um > 0.0)
        .map(|&(um, du, w)| {
            let bu = b_bar * um;
            w * du * du * (gamma as f64 * bu).exp() * bu.exp_m1().powf(2.0 * alpha - 2.0)
        })
        .sum();

    let mut terms = Vec::with_capacity(coefficients.len());
    for &(k, coefficient) in &coefficients {
        let exponent = beta + (2.0 * alpha + k as f64) * b_bar;
        guard(format!("E_{k}"), exponent)?;
        let integral: f64 = mids.iter().map(|&(um, _, w)| w * (exponent * um.max(0.0)).exp()).sum();
        terms.push(LemmaTerm { k, coefficient, integral });
    }
    let leading = terms[0].coefficient * terms[0].integral;
    let l_gamma: f64 = terms[1..].iter().map(|t| t.coefficient * t.integral).sum();
    let rhs = lambda * (leading + l_gamma);
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(Error::NonFinite {
            term: "lemma integrals".into(),
        });
    }
    Ok(LemmaCheck {
        path,
        b_bar,
        alpha,
        gamma,
        lhs,
        rhs,
        l_gamma,
        terms,
        holds: lhs <= rhs * (1.0 + 1e-6),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_coefficients() {
        let c = lemma_coefficients(1.0, 1.0, 2).unwrap();
        assert_eq!(c, vec![(0, 1.0)]);
        // γ = 4, α = 1, b = 1: c_4 = 1/3, then d_4 = 2/3 times c_3 = 1/2,
        // then d_4 d_3 = 2/3 · 1/2 times c_2 = 1.
        let c = lemma_coefficients(1.0, 1.0, 4).unwrap();
        let expected = [(2, 1.0 / 3.0), (1, 1.0 / 3.0), (0, 1.0 / 3.0)];
        for (a, e) in c.iter().zip(expected) {
            assert_eq!(a.0, e.0);
            assert!((a.1 - e.1).abs() < 1e-15);
        }
        assert!(lemma_coefficients(1.0, 0.5, 3).is_err());
    }
}
