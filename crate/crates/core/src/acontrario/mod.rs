//! A-contrario detection on residual images.
//!
//! The naive model says a filtered, standardized residual value is standard
//! normal. A pixel is reported when the expected number of values at least
//! as extreme among all `N` tests (its NFA) is below `ε`.

mod budget;
mod detect;
mod ggd;
mod tail;

pub use budget::{compute_test_budget, TestBudget};
pub use detect::{
    detect, detect_gaussian_fields, detect_in_plane, standardize_filtered, Detection,
    MIN_RESIDUAL_RMS,
};
pub use ggd::{fit_ggd, gaussianize, GgdFit, BETA_MAX, BETA_MIN, GAUSSIAN_CLAMP, MIN_SAMPLES};
pub use tail::{ln_erfc, log_nfa};
