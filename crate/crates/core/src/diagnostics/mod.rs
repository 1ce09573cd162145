//! Closed-form regularity thresholds and numerical checks of the integral
//! estimates satisfied by stable solutions.

mod checks;
mod integrals;
mod lemma;
mod thresholds;

pub use checks::{bootstrap_subsolution_check, truncation_h1_check, truncate_unit, BootstrapCheck, TruncationCheck};
pub use integrals::{
    energy_identity_check, h1_condition_constant_b, h1_norm, ln_lq_norm_eu, lq_norm_eu, weak_residual,
    EnergyIdentity, H1Condition, WeakResidual, WeakTerm, WEAK_TEST_FUNCTIONS,
};
pub use lemma::{lemma_coefficients, verify_lemma_inequality, LemmaCheck, LemmaPath, LemmaTerm};
pub use thresholds::{
    max_integer_dimension, threshold_constant_b_neg, threshold_constant_b_pos, threshold_constant_limit,
    threshold_general_b, Reason, ThresholdInputs, ThresholdRegime, ThresholdReport,
};
