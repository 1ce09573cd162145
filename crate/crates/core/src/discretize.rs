//! Uniform radial meshes and the discrete operators built on them.
//!
//! The Laplacian is a finite-volume discretization on the cells
//! `[r_i - h/2, r_i + h/2] ∩ [0, R]` with exact cell volumes, so that
//! `(Δ_h u)_i = c⁺_i (u_{i+1} - u_i) - c⁻_i (u_i - u_{i-1})`. At the origin
//! this is the ghost-node closure `2n (u_1 - u_0)/h²`; at interior nodes it
//! agrees with `u'' + (n-1)/r u'` to second order and is exact on
//! quadratics for every real `n >= 1`. The off-diagonal weights stay
//! positive for any `n`, which keeps `-Δ_h` an M-matrix.

use std::sync::Arc;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::problem::{Domain, ProblemSpec};

pub const MIN_INTERVALS: usize = 16;

#[derive(Clone, Debug)]
pub struct RadialGrid {
    domain: Domain,
    dimension: f64,
    m: usize,
    h: f64,
    surface: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    c_plus: Vec<f64>,
    c_minus: Vec<f64>,
}

impl RadialGrid {
    /// Grid with `m` intervals on `domain` for the radial dimension `n`.
    pub fn new(domain: Domain, dimension: f64, m: usize) -> Result<Self> {
        if m < MIN_INTERVALS {
            return Err(Error::InvalidProblem(format!(
                "grid needs at least {MIN_INTERVALS} intervals, got {m}"
            )));
        }
        let radius = domain.radius();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidProblem(format!("radius must be positive, got {radius}")));
        }
        if !(dimension >= 1.0 && dimension.is_finite()) {
            return Err(Error::InvalidProblem(format!("dimension must be >= 1, got {dimension}")));
        }
        let n = dimension;
        let h = radius / m as f64;
        let surface = match domain {
            Domain::Ball { .. } => {
                // ω_{n-1} = 2 π^{n/2} / Γ(n/2)
                2.0 * (0.5 * n * std::f64::consts::PI.ln() - ln_gamma(0.5 * n)).exp()
            }
            Domain::Interval { .. } => 1.0,
        };
        let nodes: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let end = if i == 0 || i == m { 0.5 } else { 1.0 };
                let metric = if i == 0 {
                    if n == 1.0 { 1.0 } else { 0.0 }
                } else {
                    r.powf(n - 1.0)
                };
                surface * metric * h * end
            })
            .collect();

        let mut c_plus = vec![0.0; m];
        let mut c_minus = vec![0.0; m];
        c_plus[0] = 2.0 * n / (h * h);
        for i in 1..m {
            let r_plus = nodes[i] + 0.5 * h;
            let q = (-h / r_plus).ln_1p();
            c_plus[i] = n / (h * r_plus * -(n * q).exp_m1());
            c_minus[i] = c_plus[i] * ((n - 1.0) * q).exp();
        }
        Ok(Self {
            domain,
            dimension,
            m,
            h,
            surface,
            nodes,
            weights,
            c_plus,
            c_minus,
        })
    }

    pub fn for_spec(spec: &ProblemSpec, m: usize) -> Result<Self> {
        Self::new(spec.domain, spec.dimension, m)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// Number of intervals `M`.
    pub fn intervals(&self) -> usize {
        self.m
    }

    /// Number of nodes `M + 1`.
    pub fn len(&self) -> usize {
        self.m + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.domain.radius()
    }

    /// `ω_{n-1}` for a ball, 1 for an interval.
    pub fn surface_factor(&self) -> f64 {
        self.surface
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Trapezoid weights including the surface factor.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Midpoint-rule weights of the cells `[r_i, r_{i+1}]`, `i < M`.
    pub fn midpoint_weights(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.surface * (self.nodes[i] + 0.5 * self.h).powf(self.dimension - 1.0) * self.h)
            .collect()
    }

    /// Exact measure of the domain.
    pub fn volume(&self) -> f64 {
        self.surface * self.radius().powf(self.dimension) / self.dimension
    }

    /// Laplacian weights towards `r_{i+1}` for rows `0..M`.
    pub fn c_plus(&self) -> &[f64] {
        &self.c_plus
    }

    /// Laplacian weights towards `r_{i-1}` for rows `0..M` (zero at the origin).
    pub fn c_minus(&self) -> &[f64] {
        &self.c_minus
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::GridMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }

    /// Quadrature `Σ w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// `Δ_h u` at nodes `0..M`; the boundary entry is left at 0.
pub fn radial_laplacian(grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(u.len())?;
    let m = grid.m;
    let mut out = vec![0.0; m + 1];
    for i in 0..m {
        let back = if i == 0 { 0.0 } else { grid.c_minus[i] * (u[i] - u[i - 1]) };
        out[i] = grid.c_plus[i] * (u[i + 1] - u[i]) - back;
    }
    Ok(out)
}

/// Nodal `u'`: 0 at the origin, central in the interior, second-order
/// one-sided at `r = R`.
pub fn nodal_gradient(grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(u.len())?;
    Ok(gradient_unchecked(grid, u))
}

pub(crate) fn gradient_unchecked(grid: &RadialGrid, u: &[f64]) -> Vec<f64> {
    let m = grid.m;
    let h = grid.h;
    let mut g = vec![0.0; m + 1];
    for i in 1..m {
        g[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    g[m] = (3.0 * u[m] - 4.0 * u[m - 1] + u[m - 2]) / (2.0 * h);
    g
}

/// `|∇_h u|²` at every node.
pub fn nodal_gradient_sq(grid: &RadialGrid, u: &[f64]) -> Result<Vec<f64>> {
    Ok(nodal_gradient(grid, u)?.into_iter().map(|g| g * g).collect())
}

/// Tridiagonal system with `lower[0]` and `upper[n-1]` unused.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Thomas algorithm. A pivot that vanishes relative to its row is
    /// reported as a singular factorization.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let (l, prev_c, prev_d) = if i == 0 { (0.0, 0.0, 0.0) } else { (self.lower[i], c[i - 1], d[i - 1]) };
            let pivot = self.diag[i] - l * prev_c;
            let scale = self.diag[i].abs() + l.abs() + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
            if !pivot.is_finite() || pivot.abs() <= 1e-14 * scale {
                return Err(Error::SingularFactorization { row: i });
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            d[i] = (rhs[i] - l * prev_d) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Discrete `L = -Δ_h - drift·∇_h - potential` on the unknowns `0..M`,
/// with `φ_M = 0` eliminated and the symmetry closure at the origin.
#[derive(Clone, Debug, Serialize)]
pub struct LinearizedOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    /// `2 b(r_i) u'(r_i)`
    pub drift: Vec<f64>,
    /// `λ g'(u_i)`
    pub potential: Vec<f64>,
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matrix(&self) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.clone(),
            diag: self.diag.clone(),
            upper: self.upper.clone(),
        }
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.matrix().apply(phi)
    }

    /// Gershgorin lower bound on the real parts of the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.len())
            .map(|i| self.diag[i] - self.lower[i].abs() - self.upper[i].abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn assemble_operator(grid: &RadialGrid, b_nodes: &[f64], u: &[f64], potential: Vec<f64>) -> LinearizedOperator {
    let m = grid.m;
    let du = gradient_unchecked(grid, u);
    let inv2h = 0.5 / grid.h;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut drift = vec![0.0; m];
    for i in 0..m {
        drift[i] = 2.0 * b_nodes[i] * du[i];
        diag[i] = grid.c_plus[i] + grid.c_minus[i] - potential[i];
        upper[i] = -grid.c_plus[i] - drift[i] * inv2h;
        if i > 0 {
            lower[i] = -grid.c_minus[i] + drift[i] * inv2h;
        }
    }
    upper[m - 1] = 0.0;
    LinearizedOperator {
        lower,
        diag,
        upper,
        drift,
        potential,
    }
}

/// Nodal values plus the metadata of the solve that produced them.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub meta: SolutionMeta,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub lambda: f64,
    pub residual_sup: f64,
    pub newton_iters: usize,
    pub monotone_iters: usize,
}

impl SolutionField {
    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self {
            grid,
            values,
            meta: SolutionMeta::default(),
        }
    }

    /// Field with the given nodal values; the boundary value must be 0.
    pub fn from_values(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values[grid.m] != 0.0 {
            return Err(Error::InvalidProblem(format!(
                "boundary value must be 0, got {}",
                values[grid.m]
            )));
        }
        Ok(Self {
            grid,
            values,
            meta: SolutionMeta::default(),
        })
    }

    /// Same grid and metadata, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values,
            meta: self.meta,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A problem specification bound to a grid.
#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub grid: Arc<RadialGrid>,
    pub b_nodes: Vec<f64>,
}

impl Problem {
    pub fn new(spec: ProblemSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        let grid = Arc::new(RadialGrid::for_spec(&spec, m)?);
        Self::on_grid(spec, grid)
    }

    pub fn on_grid(spec: ProblemSpec, grid: Arc<RadialGrid>) -> Result<Self> {
        spec.validate()?;
        if grid.domain() != spec.domain || grid.dimension() != spec.dimension {
            return Err(Error::InvalidProblem("grid does not match the problem domain".into()));
        }
        let b_nodes = spec.coefficient.at_nodes(&grid)?;
        Ok(Self { spec, grid, b_nodes })
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(Self {
            spec: self.spec.with_lambda(lambda)?,
            grid: Arc::clone(&self.grid),
            b_nodes: self.b_nodes.clone(),
        })
    }

    pub(crate) fn check_field(&self, u: &SolutionField) -> Result<()> {
        if !Arc::ptr_eq(&u.grid, &self.grid) && (u.grid.len() != self.grid.len() || u.grid.h != self.grid.h) {
            return Err(Error::GridMismatch {
                expected: self.grid.len(),
                found: u.grid.len(),
            });
        }
        self.grid.check_len(u.values.len())
    }
}

/// `L_λ = -Δ_h - 2 b u' ∂_r - λ g'(u)` at the field `u`.
pub fn assemble_linearized(problem: &Problem, u: &SolutionField) -> Result<LinearizedOperator> {
    assemble_scaled(problem, u, problem.lambda())
}

/// As [`assemble_linearized`] with the potential `mu g'(u)` in place of `λ g'(u)`.
pub fn assemble_scaled(problem: &Problem, u: &SolutionField, mu: f64) -> Result<LinearizedOperator> {
    problem.check_field(u)?;
    let g = &problem.spec.nonlinearity;
    let potential = u.values[..problem.grid.m].iter().map(|&x| mu * g.derivative(x)).collect();
    Ok(assemble_operator(&problem.grid, &problem.b_nodes, &u.values, potential))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ball(n: f64, m: usize) -> RadialGrid {
        RadialGrid::new(Domain::unit_ball(), n, m).unwrap()
    }

    #[test]
    fn grid_invariants() {
        assert!(RadialGrid::new(Domain::unit_ball(), 2.0, 8).is_err());
        let g = ball(3.0, 64);
        assert_eq!(g.h(), 1.0 / 64.0);
        assert_eq!(g.weights()[0], 0.0);
        assert!(g.weights()[1..].iter().all(|&w| w > 0.0));
        assert_relative_eq!(g.surface_factor(), 4.0 * std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn laplacian_examples() {
        let g = ball(2.0, 32);
        let c = vec![3.0; g.len()];
        assert!(radial_laplacian(&g, &c).unwrap()[..32].iter().all(|&x| x == 0.0));
        let r2: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        for x in &radial_laplacian(&g, &r2).unwrap()[..32] {
            assert_relative_eq!(*x, 4.0, max_relative = 1e-12);
        }
        let g = ball(3.0, 32);
        let q: Vec<f64> = g.nodes().iter().map(|r| 1.0 - r * r).collect();
        for x in &radial_laplacian(&g, &q).unwrap()[..32] {
            assert_relative_eq!(*x, -6.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let g = ball(1.0, 16);
        let lin: Vec<f64> = g.nodes().to_vec();
        let gs = nodal_gradient_sq(&g, &lin).unwrap();
        assert!(gs[1..16].iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let q: Vec<f64> = g.nodes().iter().map(|r| 1.0 - r * r).collect();
        let gs = nodal_gradient_sq(&g, &q).unwrap();
        assert_relative_eq!(gs[8], 1.0, max_relative = 1e-12);
        assert_eq!(gs[0], 0.0);
        assert_relative_eq!(gs[16], 4.0, max_relative = 1e-12);
    }

    #[test]
    fn thomas_detects_singularity() {
        let t = Tridiagonal {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(t.solve(&[1.0, 1.0]), Err(Error::SingularFactorization { row: 1 })));
    }
}
