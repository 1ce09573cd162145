//! Continuation of the minimal branch in `λ`, brackets for the extremal
//! parameter `λ*`, and the extremal-solution proxy.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{h1_norm, lq_norm_eu, weak_residual, WeakResidual};
use crate::discretize::{Problem, SolutionField};
use crate::error::{Error, Result};
use crate::solve::{guaranteed_lambda, monotone_solve_from, SolveOptions, SolveReport, SolveStatus};
use crate::stability::{certify, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchRecord {
    pub lambda: f64,
    pub sup_norm: f64,
    pub h1_norm: f64,
    /// `‖e^u‖_{L^q}` for the configured `q`.
    pub lq_norm_eu: f64,
    /// Principal eigenvalue of the linearized operator (NaN when not converged).
    pub mu1: f64,
    pub positivity_margin: f64,
    pub verdict: Option<Verdict>,
    pub converged: bool,
    pub status: SolveStatus,
    pub monotone_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchOptions {
    pub solve: SolveOptions,
    pub q: f64,
    /// Seed each solve with the previous point of the branch.
    pub warm_start: bool,
    /// With warm starts, rerun every this many points from zero and record
    /// the discrepancy.
    pub cold_check_every: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            q: 2.0,
            warm_start: true,
            cold_check_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ColdCheck {
    pub lambda: f64,
    pub converged: bool,
    /// Sup-norm distance between the warm and cold solutions.
    pub max_diff: f64,
}

#[derive(Clone, Debug)]
pub struct BranchTrace {
    pub records: Vec<BranchRecord>,
    /// Converged solutions, aligned with the converged records.
    pub solutions: Vec<SolutionField>,
    pub cold_checks: Vec<ColdCheck>,
    /// First `λ` of the sweep that did not converge.
    pub first_failure: Option<f64>,
}

impl BranchTrace {
    /// `min_k min_i (u_{λ_{k+1}, i} - u_{λ_k, i})` over consecutive converged points.
    pub fn monotonicity_floor(&self) -> f64 {
        self.solutions
            .windows(2)
            .map(|w| w[1].values.iter().zip(&w[0].values).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }
}

fn record(problem: &Problem, report: &SolveReport, q: f64) -> Result<BranchRecord> {
    let u = &report.field;
    let converged = report.converged();
    let (mu1, margin, verdict) = if converged {
        let c = certify(problem, u)?;
        (c.mu1, c.positivity_margin, Some(c.verdict))
    } else {
        (f64::NAN, f64::NAN, None)
    };
    Ok(BranchRecord {
        lambda: problem.lambda(),
        sup_norm: u.sup_norm(),
        h1_norm: h1_norm(&problem.grid, &u.values)?,
        lq_norm_eu: lq_norm_eu(&problem.grid, &u.values, q)?,
        mu1,
        positivity_margin: margin,
        verdict,
        converged,
        status: report.status,
        monotone_iters: u.meta.monotone_iters,
    })
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(Error::InvalidProblem("the λ list is empty".into()));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::InvalidProblem("λ values must be finite and >= 0".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidProblem("λ values must be strictly increasing".into()));
    }
    Ok(())
}

/// Trace the minimal branch over `lambdas` (strictly increasing). The sweep
/// stops at the first point that does not converge; that point is recorded.
pub fn trace_branch(family: &Problem, lambdas: &[f64], opts: &BranchOptions) -> Result<BranchTrace> {
    check_lambdas(lambdas)?;
    let zero = SolutionField::zeros(family.grid.clone());
    let mut trace = BranchTrace {
        records: Vec::new(),
        solutions: Vec::new(),
        cold_checks: Vec::new(),
        first_failure: None,
    };
    if opts.warm_start {
        for (k, &lambda) in lambdas.iter().enumerate() {
            let p = family.with_lambda(lambda)?;
            let start = trace.solutions.last().unwrap_or(&zero);
            let report = monotone_solve_from(&p, start, &opts.solve)?;
            if report.converged() && opts.cold_check_every > 0 && (k + 1) % opts.cold_check_every == 0 {
                let cold = monotone_solve_from(&p, &zero, &opts.solve)?;
                let max_diff = cold
                    .field
                    .values
                    .iter()
                    .zip(&report.field.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                trace.cold_checks.push(ColdCheck {
                    lambda,
                    converged: cold.converged(),
                    max_diff,
                });
            }
            trace.records.push(record(&p, &report, opts.q)?);
            if !report.converged() {
                trace.first_failure = Some(lambda);
                break;
            }
            trace.solutions.push(report.field);
        }
    } else {
        let results: Vec<Result<(BranchRecord, SolveReport)>> = lambdas
            .par_iter()
            .map(|&lambda| {
                let p = family.with_lambda(lambda)?;
                let report = monotone_solve_from(&p, &zero, &opts.solve)?;
                Ok((record(&p, &report, opts.q)?, report))
            })
            .collect();
        for result in results {
            let (rec, report) = result?;
            trace.records.push(rec);
            if !report.converged() {
                trace.first_failure = Some(rec.lambda);
                break;
            }
            trace.solutions.push(report.field);
        }
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaStarBracket {
    /// Largest `λ` found solvable.
    pub lambda_lo: f64,
    /// Smallest `λ` found unsolvable.
    pub lambda_hi: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketOptions {
    pub solve: SolveOptions,
    /// Total outer iterations allowed for deciding one `λ` before giving up.
    pub budget: usize,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions {
                monotone_max: 2000,
                ..SolveOptions::default()
            },
            budget: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BracketOutcome {
    pub bracket: LambdaStarBracket,
    /// Minimal solution at `lambda_lo`.
    pub lo_solution: SolutionField,
    /// `λ` values decided, in order, with their solvability.
    pub evaluations: Vec<(f64, bool)>,
}

/// Decide solvability at `problem.lambda()` by monotone iteration from
/// `start`, continuing past `monotone_max` until `budget` is exhausted.
pub fn decide_solvable(problem: &Problem, start: &SolutionField, opts: &BracketOptions) -> Result<(bool, SolveReport)> {
    let mut report = monotone_solve_from(problem, start, &opts.solve)?;
    let mut used = report.increment_history.len();
    loop {
        match report.status {
            SolveStatus::Converged => return Ok((true, report)),
            SolveStatus::Diverged | SolveStatus::NewtonFailure => return Ok((false, report)),
            SolveStatus::MaxIters => {
                if used >= opts.budget {
                    return Err(Error::Bracket(format!(
                        "undecided at λ = {} after {used} outer iterations",
                        problem.lambda()
                    )));
                }
                let next = monotone_solve_from(problem, &report.field, &opts.solve)?;
                used += next.increment_history.len();
                report = next;
            }
        }
    }
}

/// Bracket `λ*` by doubling from the guaranteed-solvable `1/g(max ū)` and
/// bisecting on solvability until the width is at most `tol`.
pub fn lambda_star_bracket(family: &Problem, tol: f64, opts: &BracketOptions) -> Result<BracketOutcome> {
    if !(tol > 0.0) {
        return Err(Error::InvalidProblem(format!("bracket tolerance must be positive, got {tol}")));
    }
    let (safe, _) = guaranteed_lambda(family, &opts.solve)
        .map_err(|e| Error::Bracket(format!("no solvable starting λ: {e}")))?;
    let zero = SolutionField::zeros(family.grid.clone());
    let mut evaluations = Vec::new();
    let (ok, report) = decide_solvable(&family.with_lambda(safe)?, &zero, opts)?;
    evaluations.push((safe, ok));
    if !ok {
        return Err(Error::Bracket(format!(
            "λ = {safe:.6e} below 1/g(max ū) already diverges; check g(0) > 0 and refine the grid"
        )));
    }
    let mut lo = safe;
    let mut u_lo = report.field;
    let mut hi = 2.0 * safe;
    let mut found = false;
    for _ in 0..64 {
        let (ok, report) = decide_solvable(&family.with_lambda(hi)?, &u_lo, opts)?;
        evaluations.push((hi, ok));
        if ok {
            lo = hi;
            u_lo = report.field;
            hi *= 2.0;
        } else {
            found = true;
            break;
        }
    }
    if !found {
        return Err(Error::Bracket(format!("no divergence found up to λ = {hi:.6e}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (ok, report) = decide_solvable(&family.with_lambda(mid)?, &u_lo, opts)?;
        evaluations.push((mid, ok));
        if ok {
            lo = mid;
            u_lo = report.field;
        } else {
            hi = mid;
        }
    }
    Ok(BracketOutcome {
        bracket: LambdaStarBracket {
            lambda_lo: lo,
            lambda_hi: hi,
            width: hi - lo,
        },
        lo_solution: u_lo,
        evaluations,
    })
}

/// Geometric schedule with ratio 1.2 below `lambda_lo`, refined towards the
/// fold, starting at 0.
pub fn auto_schedule(bracket: &LambdaStarBracket) -> Vec<f64> {
    let top = bracket.lambda_lo;
    let mut lambdas = vec![0.0, top];
    let mut l = top / 1.2;
    while l > 0.05 * top {
        lambdas.push(l);
        l /= 1.2;
    }
    for j in 1..=4 {
        lambdas.push(top * (1.0 - 10f64.powi(-j)));
    }
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    lambdas
}

#[derive(Clone, Debug)]
pub struct ExtremalProxy {
    pub lambda: f64,
    pub field: SolutionField,
    pub weak: WeakResidual,
}

/// The minimal solution at `lambda_lo` as a proxy for the extremal solution,
/// with its weak-form residual at that `λ`.
pub fn extremal_proxy(family: &Problem, bracket: &LambdaStarBracket, opts: &BracketOptions) -> Result<ExtremalProxy> {
    let p = family.with_lambda(bracket.lambda_lo)?;
    let (ok, report) = decide_solvable(&p, &SolutionField::zeros(family.grid.clone()), opts)?;
    if !ok {
        return Err(Error::Bracket(format!("λ_lo = {} did not converge on a cold rerun", bracket.lambda_lo)));
    }
    let weak = weak_residual(&p, &report.field, bracket.lambda_lo)?;
    Ok(ExtremalProxy {
        lambda: bracket.lambda_lo,
        field: report.field,
        weak,
    })
}
