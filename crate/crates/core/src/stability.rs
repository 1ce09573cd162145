//! Principal eigenvalue of the (generally nonselfadjoint) linearized
//! operator by shifted inverse power iteration.
//!
//! When every product `lower[i]·upper[i-1]` is positive, the tridiagonal
//! operator is diagonally similar to a symmetric one and the iteration runs
//! on the balanced matrix. Otherwise it runs on `L` itself.

use serde::Serialize;

use crate::discretize::{assemble_linearized, assemble_scaled, LinearizedOperator, Problem, SolutionField, Tridiagonal};
use crate::error::{Error, Result};

/// Band around zero inside which `μ₁` is classified as semi-stable.
pub const TOL_POS: f64 = 1e-6;
const INCREMENT_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    SemiStable,
    Unstable,
}

impl Verdict {
    pub fn classify(mu1: f64) -> Self {
        if mu1 > TOL_POS {
            Verdict::Stable
        } else if mu1 < -TOL_POS {
            Verdict::Unstable
        } else {
            Verdict::SemiStable
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenCertificate {
    pub mu1: f64,
    /// Nodal values on `0..=M` (zero at the boundary), sup-norm 1.
    pub eigenfunction: Vec<f64>,
    pub positivity_margin: f64,
    pub residual: f64,
    pub verdict: Verdict,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Balanced symmetric matrix `S = D L D⁻¹` and `ln d_i`, when it exists.
fn balance(op: &LinearizedOperator) -> Option<(Tridiagonal, Vec<f64>)> {
    let n = op.len();
    let mut ln_d = vec![0.0; n];
    let mut off = vec![0.0; n];
    for i in 1..n {
        let prod = op.lower[i] * op.upper[i - 1];
        if !(prod > 0.0) {
            return None;
        }
        ln_d[i] = ln_d[i - 1] + 0.5 * (op.upper[i - 1] / op.lower[i]).ln();
        off[i] = op.lower[i].signum() * prod.sqrt();
    }
    let mut upper = vec![0.0; n];
    upper[..n - 1].copy_from_slice(&off[1..]);
    Some((
        Tridiagonal {
            lower: off,
            diag: op.diag.clone(),
            upper,
        },
        ln_d,
    ))
}

fn positivity_advice(op: &LinearizedOperator) -> String {
    // A nonnegative off-diagonal means the drift dominates diffusion in that
    // cell (cell Péclet number above 1).
    let bad = (0..op.len())
        .filter(|&i| (i > 0 && op.lower[i] >= 0.0) || (i + 1 < op.len() && op.upper[i] >= 0.0))
        .count();
    if bad > 0 {
        format!("drift dominates diffusion in {bad} cells (cell Péclet number > 1); raise M")
    } else {
        "the iterate changed sign although the operator keeps its M-matrix pattern; check the solution and raise M".to_string()
    }
}

/// Principal eigenpair of `L` by inverse iteration with a shift below the
/// Gershgorin bound, started from the all-ones vector.
pub fn principal_eigenvalue(op: &LinearizedOperator) -> Result<EigenCertificate> {
    let n = op.len();
    if n < 16 {
        return Err(Error::Precondition(format!("need at least 16 unknowns, got {n}")));
    }
    let sigma = op.gershgorin_lower() - 1.0;
    let balanced = balance(op);
    let work = match &balanced {
        Some((s, _)) => s.clone(),
        None => op.matrix(),
    };
    let mut shifted = work.clone();
    for d in &mut shifted.diag {
        *d -= sigma;
    }
    let mut x = vec![1.0; n];
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut mu = f64::NAN;
    let mut increment = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERS {
        let y = shifted.solve(&x)?;
        let mu_new = sigma + dot(&x, &x) / dot(&x, &y);
        increment = (mu_new - mu).abs();
        mu = mu_new;
        let ny = norm2(&y);
        x = y.iter().map(|v| v / ny).collect();
        if increment <= INCREMENT_TOL * mu.abs().max(1.0) {
            let mut phi: Vec<f64> = match &balanced {
                Some((_, ln_d)) => {
                    let shift = ln_d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    x.iter().zip(ln_d).map(|(v, l)| v * (shift - l).exp()).collect()
                }
                None => x.clone(),
            };
            let s = sup(&phi);
            let sign = if phi.iter().copied().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
            phi.iter_mut().for_each(|v| *v *= sign / s);
            let lphi = op.apply(&phi);
            residual = lphi.iter().zip(&phi).map(|(a, p)| (a - mu * p).abs()).fold(0.0, f64::max);
            if residual <= RESIDUAL_TOL {
                return finish(op, mu, phi, residual, it);
            }
        }
    }
    Err(Error::EigenStagnation {
        iterations: MAX_ITERS,
        increment,
        residual,
    })
}

fn finish(op: &LinearizedOperator, mu: f64, phi: Vec<f64>, residual: f64, iterations: usize) -> Result<EigenCertificate> {
    let (node, margin) = phi
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(k, m), (i, v)| if v < m { (i, v) } else { (k, m) });
    if !(margin > 0.0) {
        return Err(Error::PositivityDefect {
            node,
            value: margin,
            advice: positivity_advice(op),
        });
    }
    let mut eigenfunction = phi;
    eigenfunction.push(0.0);
    Ok(EigenCertificate {
        mu1: mu,
        eigenfunction,
        positivity_margin: margin,
        residual,
        verdict: Verdict::classify(mu),
        iterations,
    })
}

/// Certificate for `L_λ` at the solution `u`.
pub fn certify(problem: &Problem, u: &SolutionField) -> Result<EigenCertificate> {
    principal_eigenvalue(&assemble_linearized(problem, u)?)
}

/// Certificate for the operator with potential `(λ - ε) g'(u)`, `0 < ε <= λ`.
pub fn epsilon_relaxed_check(problem: &Problem, u: &SolutionField, epsilon: f64) -> Result<EigenCertificate> {
    let lambda = problem.lambda();
    if !(epsilon > 0.0 && epsilon <= lambda) {
        return Err(Error::Precondition(format!("epsilon must lie in (0, λ] = (0, {lambda}], got {epsilon}")));
    }
    principal_eigenvalue(&assemble_scaled(problem, u, lambda - epsilon)?)
}
