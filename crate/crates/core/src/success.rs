//! The success metric: did a trial reach the verified optimum?

use alloc::string::String;

use serde::{Deserialize, Serialize};

/// Acceptance band around a ground-truth objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-6,
            rel_tol: 1e-4,
        }
    }
}

impl Tolerance {
    /// Largest accepted absolute deviation from `ground_truth`.
    pub fn band(&self, ground_truth: f64) -> f64 {
        f64::max(self.abs_tol, self.rel_tol * ground_truth.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessVerdict {
    pub success: bool,
    pub achieved: Option<f64>,
    pub ground_truth: f64,
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Compares an achieved objective against the ground truth.
///
/// Never fails: a missing or non-finite objective yields `success == false`
/// with the reason recorded on the verdict.
pub fn evaluate_success(achieved: Option<f64>, ground_truth: f64, tol: Tolerance) -> SuccessVerdict {
    let Some(value) = achieved else {
        return SuccessVerdict {
            success: false,
            achieved: None,
            ground_truth,
            abs_err: None,
            rel_err: None,
            reason: Some("no objective value returned".into()),
        };
    };
    if !value.is_finite() {
        return SuccessVerdict {
            success: false,
            achieved: Some(value),
            ground_truth,
            abs_err: None,
            rel_err: None,
            reason: Some("objective value is not finite".into()),
        };
    }
    let abs_err = (value - ground_truth).abs();
    let rel_err = (ground_truth != 0.0).then(|| abs_err / ground_truth.abs());
    let success = ground_truth.is_finite() && abs_err <= tol.band(ground_truth);
    SuccessVerdict {
        success,
        achieved: Some(value),
        ground_truth,
        abs_err: Some(abs_err),
        rel_err,
        reason: (!success).then(|| "objective differs from ground truth beyond tolerance".into()),
    }
}
