use std::f64::consts::PI;
use std::sync::Arc;

use gradquad::branch::{lambda_star_bracket, trace_branch, BracketOptions, BranchOptions};
use gradquad::diagnostics::{lq_norm_eu, threshold_constant_b_pos};
use gradquad::discretize::{assemble_linearized, radial_laplacian, Problem, RadialGrid, SolutionField};
use gradquad::problem::{derive_f, hopf_cole_forward, CoefficientB, Domain, NonlinearityG, ProblemSpec};
use gradquad::solve::{monotone_solve, monotone_solve_from, SolveOptions};
use gradquad::stability::{certify, Verdict};
use proptest::prelude::*;

fn exp_problem(domain: Domain, n: f64, b: f64, lambda: f64, m: usize) -> Problem {
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

fn deep() -> SolveOptions {
    SolveOptions {
        monotone_max: 100_000,
        ..SolveOptions::default()
    }
}

/// Sup-norm error of the discrete Laplacian on `cos(πr/2)` over the unknowns.
fn laplacian_error(n: f64, m: usize) -> f64 {
    let grid = RadialGrid::new(Domain::unit_ball(), n, m).unwrap();
    let k = PI / 2.0;
    let u: Vec<f64> = grid.nodes().iter().map(|r| (k * r).cos()).collect();
    let lap = radial_laplacian(&grid, &u).unwrap();
    grid.nodes()[..m]
        .iter()
        .zip(&lap)
        .map(|(&r, &l)| {
            // Δu = u'' + (n-1)/r u', and at the origin n u''(0).
            let exact = if r == 0.0 {
                -n * k * k
            } else {
                -k * k * (k * r).cos() - (n - 1.0) * k * (k * r).sin() / r
            };
            (l - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn laplacian_is_second_order() {
    for n in [1.0, 2.0, 3.0, 10.0] {
        let ratio = laplacian_error(n, 256) / laplacian_error(n, 512);
        assert!((ratio - 4.0).abs() <= 0.3, "n = {n}: ratio {ratio}");
    }
}

#[test]
fn fluxes_are_conservative() {
    // Cell volumes times the stencil give a symmetric matrix.
    for n in [1.0, 2.5, 3.0, 10.0] {
        let grid = RadialGrid::new(Domain::unit_ball(), n, 64).unwrap();
        let (h, w) = (grid.h(), grid.surface_factor() / n);
        let vol = |i: usize| {
            let r = grid.nodes()[i];
            w * ((r + 0.5 * h).powf(n) - (r - 0.5 * h).max(0.0).powf(n))
        };
        for i in 0..grid.intervals() - 1 {
            let a = vol(i) * grid.c_plus()[i];
            let b = vol(i + 1) * grid.c_minus()[i + 1];
            assert!((a - b).abs() <= 1e-10 * a.abs(), "n = {n}, i = {i}: {a} vs {b}");
        }
    }
}

#[test]
fn zero_b_operator_is_symmetric_on_the_line() {
    let p = exp_problem(Domain::Interval { length: 1.0 }, 1.0, 0.0, 1.0, 128);
    let r = monotone_solve(&p, &deep()).unwrap();
    let op = assemble_linearized(&p, &r.field).unwrap();
    for i in 1..op.diag.len() {
        assert!((op.lower[i] - op.upper[i - 1]).abs() <= 1e-12 * op.diag[i].abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_recovers_the_volume(n_idx in 0usize..4, m in 256usize..2048) {
        let n = [1.0, 2.0, 3.0, 10.0][n_idx];
        let grid = RadialGrid::new(Domain::unit_ball(), n, m).unwrap();
        let ones = vec![1.0; grid.len()];
        let rel = (grid.integrate(&ones) - grid.volume()).abs() / grid.volume();
        prop_assert!(rel <= 1e-3, "n = {}, M = {}: {}", n, m, rel);
    }

    /// Restarting from the minimal solution at a smaller λ (a subsolution)
    /// reaches the same minimal solution.
    #[test]
    fn minimality_from_a_subsolution(frac in 0.05f64..0.95, b in 0.0f64..2.0) {
        let opts = SolveOptions { monotone_max: 20_000, ..SolveOptions::default() };
        let target = exp_problem(Domain::unit_ball(), 3.0, b, 1.0, 128);
        let cold = monotone_solve(&target, &opts).unwrap();
        prop_assume!(cold.converged());
        let below = monotone_solve(&target.with_lambda(frac).unwrap(), &opts).unwrap();
        prop_assert!(below.converged());
        let warm = monotone_solve_from(&target, &below.field, &opts).unwrap();
        prop_assert!(warm.converged());
        let diff = warm.field.values.iter().zip(&cold.field.values).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 10.0 * opts.monotone_tol, "diff {}", diff);
    }

    #[test]
    fn monotone_iterates_increase(lambda in 0.05f64..1.2, b in -1.0f64..2.0, n_idx in 0usize..3) {
        let n = [1.0, 2.0, 3.0][n_idx];
        let p = exp_problem(Domain::unit_ball(), n, b, lambda, 96);
        let r = monotone_solve(&p, &SolveOptions { monotone_max: 5_000, ..SolveOptions::default() }).unwrap();
        prop_assert!(r.min_increment >= -1e-10, "{}", r.min_increment);
    }

    /// The sign of μ₁ agrees between the u-equation and its image.
    #[test]
    fn verdict_is_transform_covariant(frac in 0.1f64..0.99, b in 0.25f64..2.0) {
        let family = exp_problem(Domain::unit_ball(), 2.0, b, 0.0, 96);
        let bracket = lambda_star_bracket(&family, 1e-2, &BracketOptions::default()).unwrap().bracket;
        let lambda = frac * bracket.lambda_lo;
        let pu = family.with_lambda(lambda).unwrap();
        let ru = monotone_solve(&pu, &deep()).unwrap();
        prop_assert!(ru.converged());
        let f = derive_f(&NonlinearityG::exponential(1.0).unwrap(), b).unwrap();
        let spec = ProblemSpec::new(
            Domain::unit_ball(), 2.0, CoefficientB::constant(0.0).unwrap(),
            NonlinearityG::custom("image", Arc::new(f)), lambda,
        ).unwrap();
        let pv = Problem::on_grid(spec, pu.grid.clone()).unwrap();
        let v = hopf_cole_forward(&ru.field, b).unwrap();
        let cu = certify(&pu, &ru.field).unwrap();
        let cv = certify(&pv, &v).unwrap();
        prop_assert_eq!(cu.verdict, cv.verdict);
        prop_assert_eq!(cu.verdict, Verdict::Stable);
    }
}

#[test]
fn certificates_are_accurate_along_a_branch() {
    let family = exp_problem(Domain::unit_ball(), 3.0, 1.0, 0.0, 1024);
    let top = lambda_star_bracket(&family, 1e-3, &BracketOptions::default())
        .unwrap()
        .bracket
        .lambda_lo;
    let lambdas: Vec<f64> = [0.0, 0.3, 0.6, 0.9, 0.99, 1.0].iter().map(|f| f * top).collect();
    let opts = BranchOptions {
        solve: deep(),
        ..BranchOptions::default()
    };
    let trace = trace_branch(&family, &lambdas, &opts).unwrap();
    assert!(trace.first_failure.is_none());
    for (rec, u) in trace.records.iter().zip(&trace.solutions) {
        let p = family.with_lambda(rec.lambda).unwrap();
        let c = certify(&p, u).unwrap();
        assert!(c.residual <= 1e-8, "λ = {}: residual {}", rec.lambda, c.residual);
        let m = p.grid.intervals();
        assert!(c.eigenfunction[..m].iter().all(|&x| x > 0.0));
        assert!(c.positivity_margin > 0.0);
    }
}

#[test]
fn bracket_is_reproducible_and_grid_robust() {
    let slab = |m| exp_problem(Domain::Interval { length: 0.5 }, 1.0, 0.0, 0.0, m);
    let tol = 1e-3;
    let opts = BracketOptions::default();
    let coarse = lambda_star_bracket(&slab(1024), tol, &opts).unwrap().bracket;
    let fine = lambda_star_bracket(&slab(2048), tol, &opts).unwrap().bracket;
    let mid = |b: &gradquad::branch::LambdaStarBracket| 0.5 * (b.lambda_lo + b.lambda_hi);
    assert!((mid(&coarse) - mid(&fine)).abs() <= 5.0 * tol);

    let p = slab(1024);
    let solve = |l: f64| monotone_solve(&p.with_lambda(l).unwrap(), &opts.solve).unwrap();
    let lo = solve(coarse.lambda_lo);
    assert!(lo.converged());
    let mut hi = solve(coarse.lambda_hi);
    let mut start = hi.field.clone();
    let mut spent = hi.increment_history.len();
    while !hi.converged() && hi.status == gradquad::solve::SolveStatus::MaxIters && spent < opts.budget {
        hi = monotone_solve_from(&p.with_lambda(coarse.lambda_hi).unwrap(), &start, &opts.solve).unwrap();
        start = hi.field.clone();
        spent += hi.increment_history.len();
    }
    assert_eq!(hi.status, gradquad::solve::SolveStatus::Diverged);
}

#[test]
fn lq_norm_stays_bounded_inside_the_threshold() {
    let family = exp_problem(Domain::unit_ball(), 3.0, 1.0, 0.0, 512);
    let q = 2.0;
    assert!(q < threshold_constant_b_pos(1.0, 1.0).unwrap().q_threshold.unwrap());
    let top = lambda_star_bracket(&family, 1e-3, &BracketOptions::default())
        .unwrap()
        .bracket
        .lambda_lo;
    let norm = |f: f64| {
        let p = family.with_lambda(f * top).unwrap();
        let r = monotone_solve(&p, &deep()).unwrap();
        assert!(r.converged());
        lq_norm_eu(&p.grid, &r.field.values, q).unwrap()
    };
    let ratio = norm(0.999) / norm(0.5);
    assert!(ratio <= 10.0, "ratio {ratio}");
}

#[test]
fn solution_field_rejects_nonzero_boundary() {
    let grid = Arc::new(RadialGrid::new(Domain::unit_ball(), 2.0, 16).unwrap());
    let mut values = vec![0.0; 17];
    values[16] = 1e-3;
    assert!(SolutionField::from_values(grid, values).is_err());
}
