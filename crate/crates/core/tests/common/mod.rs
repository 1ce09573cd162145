//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

/// Fold of the radial Gelfand problem `-Δu = λ e^u` on a ball of radius `r`
/// in dimension `n`, by shooting on `w'' + (n-1)/s w' = -e^w`, `w(0) = w'(0) = 0`.
/// Every solution is `u(ρ) = w(s ρ / r) - w(s)` with `λ(s) = s² e^{w(s)} / r²`,
/// so `λ*` is the maximum of `λ(s)`. Returns `(λ*, sup u at the fold)`.
pub fn gelfand_fold(n: f64, r: f64) -> (f64, f64) {
    let rhs = |s: f64, y: [f64; 2]| -> [f64; 2] { [y[1], -y[0].exp() - (n - 1.0) / s * y[1]] };
    let step = 1e-4;
    // series start: w = -s²/(2n) + s⁴/(8n(n+2)) + ...
    let s0 = 1e-3;
    let mut y = [-s0 * s0 / (2.0 * n) + s0.powi(4) / (8.0 * n * (n + 2.0)), -s0 / n + s0.powi(3) / (2.0 * n * (n + 2.0))];
    let mut s = s0;
    let lam = |s: f64, w: f64| s * s * w.exp() / (r * r);
    let mut samples: Vec<(f64, f64, f64)> = vec![(s, lam(s, y[0]), y[0])];
    while s < 20.0 {
        let k1 = rhs(s, y);
        let k2 = rhs(s + step / 2.0, [y[0] + step / 2.0 * k1[0], y[1] + step / 2.0 * k1[1]]);
        let k3 = rhs(s + step / 2.0, [y[0] + step / 2.0 * k2[0], y[1] + step / 2.0 * k2[1]]);
        let k4 = rhs(s + step, [y[0] + step * k3[0], y[1] + step * k3[1]]);
        for j in 0..2 {
            y[j] += step / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        s += step;
        samples.push((s, lam(s, y[0]), y[0]));
        let k = samples.len();
        if k > 3 && samples[k - 1].1 < samples[k - 2].1 && samples[k - 2].1 >= samples[k - 3].1 {
            // parabola through the last three samples
            let (a, b, c) = (samples[k - 3], samples[k - 2], samples[k - 1]);
            let denom = a.1 - 2.0 * b.1 + c.1;
            let t = 0.5 * (a.1 - c.1) / denom;
            let peak = b.1 - 0.25 * (a.1 - c.1) * t;
            let w_peak = b.2 + t * 0.5 * (c.2 - a.2);
            return (peak, -w_peak);
        }
    }
    panic!("no fold found for n = {n}");
}

/// Closed form of the same fold for `n = 1`: `λ(a) = 2 e^{-a} acosh²(e^{a/2}) / r²`,
/// maximized over the peak value `a` by golden-section search.
pub fn slab_fold_closed_form(r: f64) -> (f64, f64) {
    let f = |a: f64| 2.0 * (-a).exp() * (a / 2.0).exp().acosh().powi(2) / (r * r);
    let (mut lo, mut hi) = (0.1, 5.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let a = 0.5 * (lo + hi);
    (f(a), a)
}

/// Smallest real part of the spectrum of a dense tridiagonal matrix.
pub fn dense_min_real_eigenvalue(lower: &[f64], diag: &[f64], upper: &[f64]) -> f64 {
    let n = diag.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag[i];
        if i > 0 {
            a[(i, i - 1)] = lower[i];
        }
        if i + 1 < n {
            a[(i, i + 1)] = upper[i];
        }
    }
    a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
}
