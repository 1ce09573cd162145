//! Minimal solutions by monotone iteration from zero.
//!
//! Each outer step solves the quasilinear problem
//! `-Δ_h u_m - b |∇_h u_m|² = λ g(u_{m-1})` by damped Newton. The inner
//! Jacobian is `-Δ_h - 2 b u' ∂_r`, i.e. the linearized operator with zero
//! potential, because the right-hand side is frozen.

use serde::Serialize;

use crate::discretize::{assemble_operator, gradient_unchecked, Problem, SolutionField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Damping {
    None,
    Backtracking { factor: f64, min_step: f64 },
}

impl Default for Damping {
    fn default() -> Self {
        Damping::Backtracking {
            factor: 0.5,
            min_step: (2f64).powi(-20),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Sup-norm residual target of the inner Newton solve. The effective
    /// target is raised to the rounding floor of the discrete operator when
    /// that floor is larger (fine grids make `‖Δ_h‖ ~ h⁻²`).
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Sup-norm increment at which the outer iteration is declared converged.
    pub monotone_tol: f64,
    pub monotone_max: usize,
    pub damping: Damping,
    /// Sup-norm above which the outer iteration is declared divergent.
    pub ceiling: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max: 50,
            monotone_tol: 1e-9,
            monotone_max: 500,
            damping: Damping::default(),
            ceiling: 1e3,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.newton_tol > 0.0
            && self.monotone_tol > 0.0
            && self.ceiling > 0.0
            && self.newton_max >= 1
            && self.monotone_max >= 1;
        let damping_ok = match self.damping {
            Damping::None => true,
            Damping::Backtracking { factor, min_step } => factor > 0.0 && factor < 1.0 && min_step > 0.0 && min_step < 1.0,
        };
        if ok && damping_ok {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!("invalid solve options: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    Diverged,
    MaxIters,
    NewtonFailure,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// The last iterate (the last bounded one when diverged).
    pub field: SolutionField,
    pub increment_history: Vec<f64>,
    /// `min_{m,i} (u_{m,i} - u_{m-1,i})` over the run.
    pub min_increment: f64,
    pub newton_iters_total: usize,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Newton outcome of one frozen solve.
#[derive(Clone, Debug)]
pub struct FrozenSolve {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Residual target actually applied.
    pub tolerance: f64,
}

/// Residual `-Δ_h u - b (u')² - rhs` on nodes `0..M`, and the magnitude of
/// the largest row sum of absolute terms (for the rounding floor).
fn residual(problem: &Problem, u: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
    let grid = &problem.grid;
    let m = grid.intervals();
    let (cp, cm) = (grid.c_plus(), grid.c_minus());
    let du = gradient_unchecked(grid, u);
    let mut f = vec![0.0; m];
    let mut scale: f64 = 0.0;
    for i in 0..m {
        let back = if i == 0 { 0.0 } else { cm[i] * (u[i] - u[i - 1]) };
        let lap = cp[i] * (u[i + 1] - u[i]) - back;
        let grad = problem.b_nodes[i] * du[i] * du[i];
        f[i] = -lap - grad - rhs[i];
        let mag = (cp[i] + cm[i]) * u[i].abs()
            + cp[i] * u[i + 1].abs()
            + if i > 0 { cm[i] * u[i - 1].abs() } else { 0.0 }
            + grad.abs()
            + rhs[i].abs();
        scale = scale.max(mag);
    }
    (f, scale)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) })
}

/// Solve `-Δ_h u - b |∇_h u|² = rhs` (rhs on nodes `0..M`) by damped Newton
/// starting from `guess`.
pub fn solve_frozen(problem: &Problem, rhs: &[f64], guess: &[f64], opts: &SolveOptions) -> Result<FrozenSolve> {
    let grid = &problem.grid;
    let m = grid.intervals();
    if rhs.len() != m {
        return Err(Error::GridMismatch {
            expected: m,
            found: rhs.len(),
        });
    }
    if guess.len() != m + 1 {
        return Err(Error::GridMismatch {
            expected: m + 1,
            found: guess.len(),
        });
    }
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            term: "frozen right-hand side".into(),
        });
    }
    let mut u = guess.to_vec();
    u[m] = 0.0;
    let zero_potential = vec![0.0; m];
    let (mut f, mut scale) = residual(problem, &u, rhs);
    let mut r = sup(&f);
    for it in 0..=opts.newton_max {
        let tol = opts.newton_tol.max(32.0 * f64::EPSILON * scale);
        if r <= tol {
            return Ok(FrozenSolve {
                values: u,
                iterations: it,
                residual: r,
                tolerance: tol,
            });
        }
        if it == opts.newton_max || !r.is_finite() {
            break;
        }
        let jac = assemble_operator(grid, &problem.b_nodes, &u, zero_potential.clone()).matrix();
        let neg_f: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = jac.solve(&neg_f)?;
        let mut t = 1.0;
        loop {
            let mut trial = u.clone();
            for i in 0..m {
                trial[i] += t * delta[i];
            }
            let (ft, st) = residual(problem, &trial, rhs);
            let rt = sup(&ft);
            let tol_t = opts.newton_tol.max(32.0 * f64::EPSILON * st);
            let accept = match opts.damping {
                Damping::None => true,
                Damping::Backtracking { .. } => rt.is_finite() && (rt < (1.0 - 1e-4 * t) * r || rt <= tol_t),
            };
            if accept {
                u = trial;
                f = ft;
                scale = st;
                r = rt;
                break;
            }
            match opts.damping {
                Damping::Backtracking { factor, min_step } => {
                    t *= factor;
                    if t < min_step {
                        return Err(Error::NewtonFailure {
                            iterations: it + 1,
                            residual: r,
                        });
                    }
                }
                Damping::None => unreachable!(),
            }
        }
    }
    Err(Error::NewtonFailure {
        iterations: opts.newton_max,
        residual: r,
    })
}

fn frozen_rhs(problem: &Problem, u: &[f64]) -> Vec<f64> {
    let g = &problem.spec.nonlinearity;
    let lambda = problem.lambda();
    u[..problem.grid.intervals()]
        .iter()
        .map(|&x| if lambda == 0.0 { 0.0 } else { lambda * g.value(x) })
        .collect()
}

/// One outer step: solve with the frozen right-hand side `λ g(rhs_source)`.
pub fn solve_step(problem: &Problem, rhs_source: &SolutionField, opts: &SolveOptions) -> Result<SolutionField> {
    problem.check_field(rhs_source)?;
    let rhs = frozen_rhs(problem, &rhs_source.values);
    let s = solve_frozen(problem, &rhs, &rhs_source.values, opts)?;
    let mut out = SolutionField::from_values(problem.grid.clone(), s.values)?;
    out.meta.lambda = problem.lambda();
    out.meta.residual_sup = s.residual;
    out.meta.newton_iters = s.iterations;
    Ok(out)
}

/// Monotone iteration from `u_0 = 0`.
pub fn monotone_solve(problem: &Problem, opts: &SolveOptions) -> Result<SolveReport> {
    let zero = SolutionField::zeros(problem.grid.clone());
    monotone_solve_observed(problem, &zero, opts, &mut |_, _| {})
}

/// Monotone iteration from `start`, which should be a subsolution lying
/// below the minimal solution (the previous point of a branch, say).
pub fn monotone_solve_from(problem: &Problem, start: &SolutionField, opts: &SolveOptions) -> Result<SolveReport> {
    monotone_solve_observed(problem, start, opts, &mut |_, _| {})
}

/// As [`monotone_solve_from`], calling `observer(m, u_m)` on every iterate.
pub fn monotone_solve_observed(
    problem: &Problem,
    start: &SolutionField,
    opts: &SolveOptions,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<SolveReport> {
    opts.validate()?;
    problem.check_field(start)?;
    let mut u = start.values.clone();
    let mut history = Vec::new();
    let mut min_increment = f64::INFINITY;
    let mut newton_total = 0;
    let mut last = FrozenSolve {
        values: Vec::new(),
        iterations: 0,
        residual: start.meta.residual_sup,
        tolerance: opts.newton_tol,
    };

    let finish = |u: Vec<f64>, status, history: Vec<f64>, min_increment, newton_total, m, last: &FrozenSolve| {
        let mut field = start.with_values(u);
        field.meta.lambda = problem.lambda();
        field.meta.residual_sup = last.residual;
        field.meta.newton_iters = last.iterations;
        field.meta.monotone_iters = m;
        SolveReport {
            status,
            field,
            increment_history: history,
            min_increment,
            newton_iters_total: newton_total,
        }
    };

    for m in 1..=opts.monotone_max {
        let rhs = frozen_rhs(problem, &u);
        if rhs.iter().any(|x| !x.is_finite()) {
            return Ok(finish(u, SolveStatus::Diverged, history, min_increment, newton_total, m - 1, &last));
        }
        let step = match solve_frozen(problem, &rhs, &u, opts) {
            Ok(s) => s,
            Err(Error::NewtonFailure { .. }) => {
                let growing = history.len() >= 2 && history[history.len() - 1] >= history[history.len() - 2];
                let status = if growing { SolveStatus::Diverged } else { SolveStatus::NewtonFailure };
                return Ok(finish(u, status, history, min_increment, newton_total, m - 1, &last));
            }
            Err(e) => return Err(e),
        };
        newton_total += step.iterations;
        let mut inc = 0.0f64;
        let mut bounded = true;
        for (a, b) in step.values.iter().zip(&u) {
            let d = a - b;
            inc = inc.max(d.abs());
            min_increment = min_increment.min(d);
            bounded &= a.is_finite() && a.abs() <= opts.ceiling;
        }
        history.push(inc);
        observer(m, &step.values);
        if !bounded {
            return Ok(finish(u, SolveStatus::Diverged, history, min_increment, newton_total, m - 1, &last));
        }
        u = step.values.clone();
        last = step;
        if inc <= opts.monotone_tol {
            return Ok(finish(u, SolveStatus::Converged, history, min_increment, newton_total, m, &last));
        }
    }
    let m = opts.monotone_max;
    Ok(finish(u, SolveStatus::MaxIters, history, min_increment, newton_total, m, &last))
}

/// `ū` solving `-Δ_h ū - b |∇_h ū|² = 1`. Whenever `λ g(max ū) < 1`, `ū`
/// is a supersolution and the monotone iteration stays below it.
pub fn unit_rhs_supersolution(problem: &Problem, opts: &SolveOptions) -> Result<SolutionField> {
    let m = problem.grid.intervals();
    let s = solve_frozen(problem, &vec![1.0; m], &vec![0.0; m + 1], opts)?;
    let mut out = SolutionField::from_values(problem.grid.clone(), s.values)?;
    out.meta.residual_sup = s.residual;
    out.meta.newton_iters = s.iterations;
    Ok(out)
}

/// `1 / g(max ū)`: every `λ` below this value is solvable.
pub fn guaranteed_lambda(problem: &Problem, opts: &SolveOptions) -> Result<(f64, SolutionField)> {
    let ubar = unit_rhs_supersolution(problem, opts)?;
    let gmax = problem.spec.nonlinearity.value(ubar.max());
    if !(gmax > 0.0 && gmax.is_finite()) {
        return Err(Error::Precondition(format!("g(max ū) = {gmax} is not positive and finite")));
    }
    Ok((1.0 / gmax, ubar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{CoefficientB, Domain, NonlinearityG, ProblemSpec};

    fn problem(domain: Domain, n: f64, b: f64, lambda: f64, m: usize) -> Problem {
        let spec = ProblemSpec::new(
            domain,
            n,
            CoefficientB::constant(b).unwrap(),
            NonlinearityG::exponential(1.0).unwrap(),
            lambda,
        )
        .unwrap();
        Problem::new(spec, m).unwrap()
    }

    #[test]
    fn zero_lambda_converges_immediately() {
        let p = problem(Domain::unit_ball(), 2.0, 1.0, 0.0, 64);
        let r = monotone_solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_eq!(r.field.meta.monotone_iters, 1);
        assert_eq!(r.field.sup_norm(), 0.0);
    }

    #[test]
    fn poisson_supersolutions_are_stencil_exact() {
        for (n, peak) in [(1.0, 0.5), (3.0, 1.0 / 6.0)] {
            let p = problem(Domain::unit_ball(), n, 0.0, 1.0, 64);
            let ubar = unit_rhs_supersolution(&p, &SolveOptions::default()).unwrap();
            for (r, u) in p.grid.nodes().iter().zip(&ubar.values) {
                assert!((u - (1.0 - r * r) / (2.0 * n)).abs() < 1e-12);
            }
            assert!((ubar.max() - peak).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_solve_handles_gradient_term() {
        // -u'' - u'^2 = 1 on (0,1), u'(0) = 0, u(1) = 0 has u = ln(cos r / cos 1).
        let p = problem(Domain::Interval { length: 1.0 }, 1.0, 1.0, 1.0, 256);
        let ubar = unit_rhs_supersolution(&p, &SolveOptions::default()).unwrap();
        let err = p
            .grid
            .nodes()
            .iter()
            .zip(&ubar.values)
            .map(|(r, u)| (u - (r.cos() / 1f64.cos()).ln()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn slab_bratu_converges_below_fold_and_diverges_above() {
        let p = problem(Domain::Interval { length: 0.5 }, 1.0, 0.0, 3.0, 256);
        let r = monotone_solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(r.min_increment >= -1e-10);
        let opts = SolveOptions {
            monotone_max: 5000,
            ..SolveOptions::default()
        };
        let r = monotone_solve(&p.with_lambda(4.0).unwrap(), &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Diverged);
    }

    #[test]
    fn invalid_options_rejected() {
        let p = problem(Domain::unit_ball(), 2.0, 0.0, 1.0, 32);
        let opts = SolveOptions {
            monotone_tol: 0.0,
            ..SolveOptions::default()
        };
        assert!(monotone_solve(&p, &opts).is_err());
    }
}
