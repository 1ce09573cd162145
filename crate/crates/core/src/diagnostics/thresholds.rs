use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRegime {
    ConstantBPos,
    ConstantBNeg,
    GeneralB,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ThresholdInputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

/// Why a threshold does not apply; `code` is stable and machine-readable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reason {
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub regime: ThresholdRegime,
    pub inputs: ThresholdInputs,
    /// Real dimension bound: the estimate holds for `n < n_threshold`.
    pub n_threshold: f64,
    /// Largest integer dimension strictly below `n_threshold`.
    pub max_integer_n: Option<i64>,
    pub q_threshold: Option<f64>,
    pub alpha_window: Option<(f64, f64)>,
    pub applicable: bool,
    pub reason: Option<Reason>,
}

/// Largest integer strictly below `threshold` (None below 1).
pub fn max_integer_dimension(threshold: f64) -> Option<i64> {
    if !threshold.is_finite() || threshold <= 1.0 {
        return None;
    }
    Some(threshold.ceil() as i64 - 1)
}

fn exponential_thresholds(b: f64, beta: f64) -> (f64, f64) {
    let t = b / beta;
    let root = (1.0 + t).sqrt();
    (6.0 + 4.0 * t + 4.0 * root, 3.0 + 2.0 * t + 2.0 * root)
}

/// Constant `b > 0`, `g = e^{βu}`.
pub fn threshold_constant_b_pos(b: f64, beta: f64) -> Result<ThresholdReport> {
    if !(b > 0.0 && beta > 0.0 && b.is_finite() && beta.is_finite()) {
        return Err(Error::Precondition(format!("need b > 0 and beta > 0, got b = {b}, beta = {beta}")));
    }
    let (n_thr, q_thr) = exponential_thresholds(b, beta);
    let alpha_hi = (beta + (beta * (beta + b)).sqrt()) / b;
    let applicable = beta > b / 8.0 && alpha_hi > 0.5;
    Ok(ThresholdReport {
        regime: ThresholdRegime::ConstantBPos,
        inputs: ThresholdInputs {
            b: Some(b),
            beta: Some(beta),
            ..Default::default()
        },
        n_threshold: n_thr,
        max_integer_n: max_integer_dimension(n_thr),
        q_threshold: Some(q_thr),
        alpha_window: applicable.then_some((0.5, alpha_hi)),
        applicable,
        reason: (!applicable).then(|| Reason {
            code: "beta_not_above_b_over_8",
            message: format!("beta = {beta} <= b/8 = {}: the alpha-window is empty", b / 8.0),
        }),
    })
}

/// Constant `b < 0`, `g = e^{βu}`.
pub fn threshold_constant_b_neg(b: f64, beta: f64) -> Result<ThresholdReport> {
    if !(b < 0.0 && b.is_finite() && beta.is_finite()) {
        return Err(Error::Precondition(format!("need b < 0, got b = {b}")));
    }
    let applicable = beta > -b;
    let (n_thr, _) = if applicable {
        exponential_thresholds(b, beta)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(ThresholdReport {
        regime: ThresholdRegime::ConstantBNeg,
        inputs: ThresholdInputs {
            b: Some(b),
            beta: Some(beta),
            ..Default::default()
        },
        n_threshold: n_thr,
        max_integer_n: max_integer_dimension(n_thr),
        q_threshold: None,
        alpha_window: None,
        applicable,
        reason: (!applicable).then(|| Reason {
            code: "beta_not_above_minus_b",
            message: format!("beta = {beta} <= -b = {}: Mignot-Puel regime not applicable", -b),
        }),
    })
}

/// General `b_lo <= b(x) <= b_hi` with `g = e^u`, for a user pair `(δ, η)`
/// with `δ² + η² <= 1`. `q_threshold` bounds the exponent of `e^u ∈ L^q`
/// and `n_threshold = 2 q_threshold` the dimension of the L^∞ bound.
pub fn threshold_general_b(b_lo: f64, b_hi: f64, delta: f64, eta: f64) -> Result<ThresholdReport> {
    if !(b_hi > 0.0 && b_lo <= b_hi && delta > 0.0 && eta > 0.0 && b_lo.is_finite() && b_hi.is_finite()) {
        return Err(Error::Precondition(format!(
            "need b_lo <= b_hi, b_hi > 0, delta > 0, eta > 0; got ({b_lo}, {b_hi}, {delta}, {eta})"
        )));
    }
    let (d2, e2) = (delta * delta, eta * eta);
    if d2 + e2 > 1.0 {
        return Err(Error::Precondition(format!("delta² + eta² = {} exceeds 1", d2 + e2)));
    }
    let inputs = ThresholdInputs {
        b_lo: Some(b_lo),
        b_hi: Some(b_hi),
        delta: Some(delta),
        eta: Some(eta),
        ..Default::default()
    };
    let osc = b_hi - b_lo;
    let bound = d2 / e2 * (e2 - b_hi / 8.0);
    if osc >= bound {
        return Ok(ThresholdReport {
            regime: ThresholdRegime::GeneralB,
            inputs,
            n_threshold: f64::NAN,
            max_integer_n: None,
            q_threshold: None,
            alpha_window: None,
            applicable: false,
            reason: Some(Reason {
                code: "oscillation_condition_violated",
                message: format!("b_hi - b_lo = {osc} is not below (δ²/η²)(η² - b_hi/8) = {bound}"),
            }),
        });
    }
    let radicand = e2 * (e2 + b_hi) - 2.0 * b_hi * osc * e2 / d2;
    if radicand < 0.0 {
        return Err(Error::Precondition(format!(
            "radicand {radicand} is negative although the oscillation condition holds"
        )));
    }
    let q = 1.0 + 2.0 * e2 + 2.0 * b_hi + 2.0 * radicand.sqrt();
    let n_thr = 2.0 * q;
    Ok(ThresholdReport {
        regime: ThresholdRegime::GeneralB,
        inputs,
        n_threshold: n_thr,
        max_integer_n: max_integer_dimension(n_thr),
        q_threshold: Some(q),
        alpha_window: None,
        applicable: true,
        reason: None,
    })
}

/// The general-`b` formula for a constant `b` in the limit `η → 1`, `δ → 0`:
/// `q < 3 + 2b + 2√(b+1)`, valid when `b < 8`.
pub fn threshold_constant_limit(b: f64) -> Result<ThresholdReport> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Precondition(format!("need b > 0, got {b}")));
    }
    let applicable = b < 8.0;
    let q = 3.0 + 2.0 * b + 2.0 * (b + 1.0).sqrt();
    let n_thr = 2.0 * q;
    Ok(ThresholdReport {
        regime: ThresholdRegime::GeneralB,
        inputs: ThresholdInputs {
            b_lo: Some(b),
            b_hi: Some(b),
            delta: Some(0.0),
            eta: Some(1.0),
            ..Default::default()
        },
        n_threshold: n_thr,
        max_integer_n: max_integer_dimension(n_thr),
        q_threshold: Some(q),
        alpha_window: None,
        applicable,
        reason: (!applicable).then(|| Reason {
            code: "oscillation_condition_violated",
            message: format!("b = {b} is not below 8"),
        }),
    })
}
