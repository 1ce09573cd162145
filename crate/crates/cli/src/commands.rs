use std::path::Path;
use std::sync::Arc;

use gradquad::branch::{auto_schedule, lambda_star_bracket, trace_branch, BracketOptions, BranchOptions};
use gradquad::diagnostics::{
    threshold_constant_b_neg, threshold_constant_b_pos, threshold_constant_limit, threshold_general_b, ThresholdReport,
};
use gradquad::discretize::Problem;
use gradquad::problem::{derive_f, hopf_cole_forward, CoefficientB, NonlinearityG, ProblemSpec};
use gradquad::solve::{monotone_solve, SolveOptions, SolveReport, SolveStatus};
use gradquad::stability::{certify, epsilon_relaxed_check};
use serde_json::{json, Value};

use crate::config::{RunConfig, ThresholdRow};
use crate::output::{branch_csv, num, resolve, write, write_json};
use crate::CliError;

/// 0 converged, 2 diverged (including an exhausted iteration budget), 3 Newton failure.
pub fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::Diverged | SolveStatus::MaxIters => 2,
        SolveStatus::NewtonFailure => 3,
    }
}

fn build(cfg: &RunConfig, spec: ProblemSpec) -> Result<Problem, CliError> {
    Problem::new(spec, cfg.grid_m()).map_err(|e| CliError::Config(format!("at `grid`: {e}")))
}

fn fixed_lambda(cfg: &RunConfig, command: &str) -> Result<f64, CliError> {
    let (p, _) = cfg.require_problem(command)?;
    p.lambda
        .ok_or_else(|| CliError::Config(format!("at `problem.lambda`: required by `{command}`")))
}

fn solve_record(problem: &Problem, report: &SolveReport) -> Value {
    json!({
        "status": report.status,
        "lambda": problem.lambda(),
        "monotone_iters": report.field.meta.monotone_iters,
        "newton_iters_total": report.newton_iters_total,
        "residual_sup": report.field.meta.residual_sup,
        "min_increment": report.min_increment,
        "increment_history": report.increment_history,
        "sup_norm": report.field.sup_norm(),
        "nodes": problem.grid.nodes(),
        "values": report.field.values,
    })
}

fn metadata(cfg: &RunConfig, problem: &Problem, opts: &SolveOptions) -> Value {
    json!({
        "grid": {
            "M": problem.grid.intervals(),
            "R": problem.grid.radius(),
            "h": problem.grid.h(),
        },
        "spec": problem.spec,
        "solve_options": opts,
        "precision": cfg.outputs.precision,
    })
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let lambda = fixed_lambda(cfg, "solve")?;
    let opts = cfg.solve.options()?;
    let problem = build(cfg, cfg.spec("solve", Some(lambda))?)?;
    let report = monotone_solve(&problem, &opts)?;
    let doc = json!({
        "metadata": metadata(cfg, &problem, &opts),
        "solution": solve_record(&problem, &report),
    });
    write_json(&resolve(out, cfg.outputs.json_path.as_deref(), "solve.json"), &doc)?;
    println!(
        "status={} lambda={} sup_norm={} monotone_iters={}",
        serde_json::to_value(report.status).unwrap().as_str().unwrap_or_default(),
        num(lambda, cfg.outputs.precision),
        num(report.field.sup_norm(), cfg.outputs.precision),
        report.field.meta.monotone_iters
    );
    Ok(status_code(report.status))
}

pub fn branch(cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let bc = cfg
        .branch
        .as_ref()
        .ok_or_else(|| CliError::Config("at `branch`: required by `branch`".into()))?;
    let explicit = match (&bc.lambda_list, bc.auto) {
        (Some(_), true) => {
            return Err(CliError::Config("at `branch`: give either `lambda_list` or `auto`, not both".into()));
        }
        (None, false) => return Err(CliError::Config("at `branch`: one of `lambda_list` or `auto` is required".into())),
        (Some(list), false) if list.is_empty() => {
            return Err(CliError::Config("at `branch.lambda_list`: the list is empty".into()));
        }
        (list, _) => list.clone(),
    };
    if let Some(list) = &explicit {
        if list.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "at `branch.lambda_list`: values must be finite, non-negative and strictly increasing".into(),
            ));
        }
    }
    if !(bc.lambda_star_tol > 0.0 && bc.q > 0.0) {
        return Err(CliError::Config("at `branch`: lambda_star_tol and q must be positive".into()));
    }
    let opts = cfg.solve.options()?;
    let family = build(cfg, cfg.spec("branch", Some(0.0))?)?;
    let bracket_opts = BracketOptions {
        solve: SolveOptions {
            monotone_max: opts.monotone_max.min(BracketOptions::default().solve.monotone_max),
            ..opts
        },
        ..BracketOptions::default()
    };
    let bracket = lambda_star_bracket(&family, bc.lambda_star_tol, &bracket_opts)?;
    let lambdas = explicit.unwrap_or_else(|| auto_schedule(&bracket.bracket));
    let branch_opts = BranchOptions {
        solve: opts,
        q: bc.q,
        warm_start: bc.warm_start,
        ..BranchOptions::default()
    };
    let trace = trace_branch(&family, &lambdas, &branch_opts)?;
    let precision = cfg.outputs.precision;
    write(
        &resolve(out, cfg.outputs.csv_path.as_deref(), "branch.csv"),
        &branch_csv(&trace.records, precision),
    )?;
    let doc = json!({
        "metadata": metadata(cfg, &family, &opts),
        "branch_options": branch_opts,
        "bracket": bracket.bracket,
        "bracket_evaluations": bracket.evaluations,
        "lambdas": lambdas,
        "records": trace.records,
        "cold_checks": trace.cold_checks,
        "first_failure": trace.first_failure,
        "monotonicity_floor": (trace.solutions.len() > 1).then(|| trace.monotonicity_floor()),
    });
    write_json(&resolve(out, cfg.outputs.json_path.as_deref(), "branch.json"), &doc)?;
    println!(
        "lambda_star in [{}, {}] records={} first_failure={}",
        num(bracket.bracket.lambda_lo, precision),
        num(bracket.bracket.lambda_hi, precision),
        trace.records.len(),
        trace.first_failure.map_or("none".into(), |l| num(l, precision))
    );
    Ok(0)
}

fn default_threshold_rows() -> Vec<ThresholdRow> {
    vec![
        ThresholdRow::ConstantBPos { b: 1.0, beta: 1.0 },
        ThresholdRow::ConstantBNeg { b: -1.0, beta: 1.0 },
        ThresholdRow::ConstantBNeg { b: -1.0, beta: 2.0 },
        ThresholdRow::GeneralB {
            b_lo: 0.9,
            b_hi: 1.0,
            delta: 0.2f64.sqrt(),
            eta: 0.8f64.sqrt(),
        },
        ThresholdRow::ConstantLimit { b: 1.0 },
    ]
}

fn evaluate(row: ThresholdRow) -> Result<ThresholdReport, CliError> {
    let at = |e: gradquad::Error| CliError::Config(format!("at `thresholds`: {e}"));
    match row {
        ThresholdRow::ConstantBPos { b, beta } => threshold_constant_b_pos(b, beta).map_err(at),
        ThresholdRow::ConstantBNeg { b, beta } => threshold_constant_b_neg(b, beta).map_err(at),
        ThresholdRow::GeneralB { b_lo, b_hi, delta, eta } => threshold_general_b(b_lo, b_hi, delta, eta).map_err(at),
        ThresholdRow::ConstantLimit { b } => threshold_constant_limit(b).map_err(at),
    }
}

fn inputs_label(row: ThresholdRow) -> String {
    match row {
        ThresholdRow::ConstantBPos { b, beta } | ThresholdRow::ConstantBNeg { b, beta } => format!("b={b} beta={beta}"),
        ThresholdRow::GeneralB { b_lo, b_hi, delta, eta } => {
            format!("b_lo={b_lo} b_hi={b_hi} delta={delta:.6} eta={eta:.6}")
        }
        ThresholdRow::ConstantLimit { b } => format!("b={b}"),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.6}"))
}

pub fn thresholds(cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let rows = cfg.thresholds.clone().unwrap_or_else(default_threshold_rows);
    if rows.is_empty() {
        return Err(CliError::Config("at `thresholds`: the list is empty".into()));
    }
    let mut reports = Vec::with_capacity(rows.len());
    println!(
        "{:<16} {:<44} {:>12} {:>6} {:>12} {:<22} applicable",
        "regime", "inputs", "n_threshold", "max_n", "q_threshold", "alpha_window"
    );
    for &row in &rows {
        let r = evaluate(row)?;
        let regime = serde_json::to_value(r.regime).unwrap();
        let window = r
            .alpha_window
            .map_or("-".into(), |(lo, hi)| format!("({lo:.6}, {hi:.6})"));
        let applicable = match &r.reason {
            None => "yes".to_string(),
            Some(reason) => format!("not applicable ({})", reason.code),
        };
        println!(
            "{:<16} {:<44} {:>12} {:>6} {:>12} {:<22} {}",
            regime.as_str().unwrap_or_default(),
            inputs_label(row),
            if r.applicable { format!("{:.6}", r.n_threshold) } else { "-".into() },
            r.max_integer_n.map_or("-".into(), |n| n.to_string()),
            opt(r.q_threshold),
            window,
            applicable
        );
        reports.push(r);
    }
    // Agreement between the constant-b limit of the general formula and the
    // constant-b formula with β = 1.
    let mut agreement = Vec::new();
    for &row in &rows {
        if let ThresholdRow::ConstantLimit { b } = row {
            let lim = threshold_constant_limit(b).map_err(CliError::Numerical)?;
            let pos = threshold_constant_b_pos(b, 1.0).map_err(CliError::Numerical)?;
            let rel = (lim.n_threshold - pos.n_threshold).abs() / pos.n_threshold;
            let ok = rel <= 1e-10;
            println!(
                "constant_limit   b={b} agrees with constant_b_pos(b, beta=1): {} (rel diff {rel:.1e})",
                if ok { "OK" } else { "MISMATCH" }
            );
            agreement.push(json!({"b": b, "relative_difference": rel, "ok": ok}));
        }
    }
    write_json(
        &resolve(out, cfg.outputs.json_path.as_deref(), "thresholds.json"),
        &json!({"reports": reports, "constant_limit_agreement": agreement}),
    )?;
    Ok(0)
}

pub fn stability(cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let lambda = fixed_lambda(cfg, "stability")?;
    let opts = cfg.solve.options()?;
    let problem = build(cfg, cfg.spec("stability", Some(lambda))?)?;
    let report = monotone_solve(&problem, &opts)?;
    let code = status_code(report.status);
    let certificate = if report.converged() {
        let epsilon = cfg.stability.as_ref().and_then(|s| s.epsilon);
        let cert = match epsilon {
            Some(eps) => epsilon_relaxed_check(&problem, &report.field, eps)?,
            None => certify(&problem, &report.field)?,
        };
        println!(
            "mu1={} verdict={} positivity_margin={}",
            num(cert.mu1, cfg.outputs.precision),
            serde_json::to_value(cert.verdict).unwrap().as_str().unwrap_or_default(),
            num(cert.positivity_margin, cfg.outputs.precision)
        );
        Some(json!({ "epsilon": epsilon, "certificate": cert }))
    } else {
        println!("solve did not converge; no certificate");
        None
    };
    let doc = json!({
        "metadata": metadata(cfg, &problem, &opts),
        "solution": solve_record(&problem, &report),
        "stability": certificate,
    });
    write_json(&resolve(out, cfg.outputs.json_path.as_deref(), "stability.json"), &doc)?;
    Ok(code)
}

pub fn check_transform(cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let lambda = fixed_lambda(cfg, "check-transform")?;
    let opts = cfg.solve.options()?;
    let problem = build(cfg, cfg.spec("check-transform", Some(lambda))?)?;
    let b = match problem.spec.coefficient.constant_value() {
        Some(b) if b != 0.0 => b,
        _ => {
            return Err(CliError::Config(
                "at `problem.coefficient`: check-transform needs a constant, nonzero b".into(),
            ));
        }
    };
    let f = derive_f(&problem.spec.nonlinearity, b)?;
    let image = ProblemSpec::new(
        problem.spec.domain,
        problem.spec.dimension,
        CoefficientB::constant(0.0)?,
        NonlinearityG::custom("hopf_cole_image", Arc::new(f)),
        lambda,
    )?;
    let image = Problem::on_grid(image, problem.grid.clone())?;
    let ru = monotone_solve(&problem, &opts)?;
    let rv = monotone_solve(&image, &opts)?;
    let sup_diff = if ru.converged() && rv.converged() {
        let pushed = hopf_cole_forward(&ru.field, b)?;
        Some(
            pushed
                .values
                .iter()
                .zip(&rv.field.values)
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let doc = json!({
        "metadata": metadata(cfg, &problem, &opts),
        "b": b,
        "u_status": ru.status,
        "v_status": rv.status,
        "sup_diff": sup_diff,
    });
    write_json(&resolve(out, cfg.outputs.json_path.as_deref(), "transform.json"), &doc)?;
    match sup_diff {
        Some(d) => println!("sup |e^(bu) - 1 - v| = {}", num(d, cfg.outputs.precision)),
        None => println!("u status {:?}, v status {:?}", ru.status, rv.status),
    }
    Ok(status_code(if ru.converged() { rv.status } else { ru.status }))
}
