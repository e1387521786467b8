//! Message authentication combining the PKI check with an angle-of-arrival
//! consistency test.
//!
//! A message first goes through the certificate, signature and freshness
//! checks. Messages that fail are dropped without touching the neighbour
//! table. Otherwise the receiver converts the claimed position into an
//! expected angle of arrival, estimates the actual one from the pilots, stores
//! both in the table and applies the Wald test.

mod message;
mod pki;
mod table;
mod wald;

pub use message::{pki_verify, pki_verify_bytes, Beacon, SignedMessage};
pub use pki::{
    verify_certificate, CertificateAuthority, Credentials, Ed25519Verifier, Identity, KeyPair,
    PermissiveOracle, PkiMode, PkiPolicy, PublicKeys, SignatureVerifier, DEFAULT_FRESHNESS_MS,
};
pub(crate) use pki::hex_prefix;
pub use table::{AoaRecord, AoaRecordSet};
pub use wald::{
    acceptance_probability, detection_probability, false_alarm_probability, wald_statistic,
    wald_test, Hypothesis, WaldOutcome,
};

use crate::channel::PilotObservation;
use crate::error::Result;
use crate::estimation::{AoaEstimate, AoaEstimator};
use crate::geometry::{ArrayPose, ExpectedDirection, GeoCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    RejectPki,
    RejectAoa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthVerdict {
    pub pki_ok: bool,
    pub aoa_ok: bool,
    /// `None` when the message was dropped by the PKI check.
    pub wald_statistic: Option<f64>,
    pub threshold_alpha: f64,
    pub decision: Decision,
}

/// Outcome of comparing a claimed position with the observed direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionCheck {
    pub claimed: GeoCoord,
    pub expected: ExpectedDirection,
    pub estimate: AoaEstimate,
    /// CRB at the expected direction; this scales the test statistic.
    pub crb_test: f64,
    pub statistic: f64,
}

impl DirectionCheck {
    pub fn passes(&self, alpha: f64) -> bool {
        self.statistic <= alpha
    }
}

/// Everything the receiver learns from one message, independent of `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evidence {
    PkiFailed,
    Checked(DirectionCheck),
}

impl Evidence {
    pub fn verdict(&self, alpha: f64) -> AuthVerdict {
        match self {
            Evidence::PkiFailed => AuthVerdict {
                pki_ok: false,
                aoa_ok: false,
                wald_statistic: None,
                threshold_alpha: alpha,
                decision: Decision::RejectPki,
            },
            Evidence::Checked(check) => {
                let aoa_ok = check.passes(alpha);
                AuthVerdict {
                    pki_ok: true,
                    aoa_ok,
                    wald_statistic: Some(check.statistic),
                    threshold_alpha: alpha,
                    decision: if aoa_ok { Decision::Accept } else { Decision::RejectAoa },
                }
            }
        }
    }
}

/// A receiving node: its pose, estimator and PKI policy.
#[derive(Debug, Clone)]
pub struct Receiver {
    pub pose: ArrayPose,
    pub estimator: AoaEstimator,
    pub pki: PkiPolicy,
}

impl Receiver {
    pub fn new(pose: ArrayPose, estimator: AoaEstimator, pki: PkiPolicy) -> Self {
        Self { pose, estimator, pki }
    }

    /// Compares the direction implied by `claimed` with the estimate from `obs`.
    ///
    /// A claimed position behind the array is folded onto the visible half
    /// plane, since a linear array cannot tell the two apart.
    pub fn check_direction(&self, claimed: &GeoCoord, obs: &PilotObservation) -> Result<DirectionCheck> {
        let expected = self.pose.expected_direction(claimed)?;
        let estimate = self.estimator.estimate(obs)?;
        let crb_test = self.estimator.crb_at(expected.visible, &obs.frame, obs.noise_var)?;
        let statistic = wald_statistic(estimate.theta_hat, expected.visible, crb_test)?;
        Ok(DirectionCheck {
            claimed: *claimed,
            expected,
            estimate,
            crb_test,
            statistic,
        })
    }

    /// PKI check followed, when it passes, by the direction check.
    pub fn evaluate(&self, msg: &SignedMessage, obs: &PilotObservation, now_ms: u64) -> Result<Evidence> {
        if !pki_verify(msg, &self.pki, now_ms)? {
            return Ok(Evidence::PkiFailed);
        }
        let beacon = msg.beacon()?;
        Ok(Evidence::Checked(self.check_direction(&beacon.position, obs)?))
    }

    /// Full authentication of one message, updating `table` for PKI-valid senders.
    pub fn authenticate(
        &self,
        msg: &SignedMessage,
        obs: &PilotObservation,
        table: &mut AoaRecordSet,
        alpha: f64,
        now_ms: u64,
    ) -> Result<AuthVerdict> {
        let evidence = self.evaluate(msg, obs, now_ms)?;
        if let Evidence::Checked(check) = &evidence {
            table.upsert(AoaRecord {
                id: msg.id.clone(),
                gps: check.claimed,
                theta_b: check.expected.wrapped,
                theta_hat: check.estimate.theta_hat,
                crb: check.crb_test,
                updated_at_ms: now_ms,
            });
        }
        Ok(evidence.verdict(alpha))
    }
}
