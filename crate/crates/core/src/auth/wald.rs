//! Wald test on the angle of arrival and its acceptance probabilities.
//!
//! Hypothesis labels: `H1` means the signal came from the claimed direction
//! (authentic), `H0` means it did not.

use crate::error::{Error, Result};
use crate::estimation::estimator_distribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Direction inconsistent with the claim.
    H0,
    /// Direction consistent with the claim.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldOutcome {
    pub statistic: f64,
    pub decision: Hypothesis,
}

impl WaldOutcome {
    pub fn accepted(&self) -> bool {
        self.decision == Hypothesis::H1
    }
}

/// `|theta_hat - theta_b| / sqrt(crb)`, deciding `H1` iff it is at most `alpha`.
pub fn wald_statistic(theta_hat: f64, theta_b: f64, crb: f64) -> Result<f64> {
    if !(crb > 0.0) {
        return Err(Error::InvalidParameter(format!("crb must be positive, got {crb}")));
    }
    Ok((theta_hat - theta_b).abs() / crb.sqrt())
}

pub fn wald_test(theta_hat: f64, theta_b: f64, crb: f64, alpha: f64) -> Result<WaldOutcome> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let statistic = wald_statistic(theta_hat, theta_b, crb)?;
    let decision = if statistic <= alpha {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(WaldOutcome { statistic, decision })
}

/// Probability that the test accepts when the estimate follows the truncated
/// normal centred on `theta_true` with variance `crb_true`, and the test uses
/// `theta_b` with variance `crb_test`.
pub fn acceptance_probability(
    alpha: f64,
    theta_b: f64,
    crb_test: f64,
    theta_true: f64,
    crb_true: f64,
) -> Result<f64> {
    if !(alpha >= 0.0) || !(crb_test > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need alpha >= 0 and crb > 0, got {alpha}, {crb_test}"
        )));
    }
    let half = alpha * crb_test.sqrt();
    Ok(estimator_distribution(theta_true, crb_true)?.interval(theta_b - half, theta_b + half))
}

/// `P_D`: acceptance probability for a transmitter at the claimed direction.
pub fn detection_probability(alpha: f64, theta_b: f64, crb: f64) -> Result<f64> {
    acceptance_probability(alpha, theta_b, crb, theta_b, crb)
}

/// `P_F`: acceptance probability for a transmitter at `theta_true` claiming
/// `theta_b`, with both the window and the spread set by `crb_true`.
pub fn false_alarm_probability(alpha: f64, theta_true: f64, theta_b: f64, crb_true: f64) -> Result<f64> {
    acceptance_probability(alpha, theta_b, crb_true, theta_true, crb_true)
}
