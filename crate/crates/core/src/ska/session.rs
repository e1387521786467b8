//! The key-agreement state machine.
//!
//! | step | actor | action |
//! |------|-------|--------|
//! | 1 | A | select a certified key pair |
//! | 2 | A | send `PubKeyRequest` with its public key |
//! | 3 | B | PKI and direction check of A, else abort |
//! | 4 | B | send `PubKeyReply`: its public key and `Enc_A(q(theta_hat_a))` |
//! | 5 | A | PKI and direction check of B, else abort |
//! | 6 | A | send `KeyTransport`: `Enc_B(K ‖ q(theta_hat_b))` |
//! | 7 | B | PKI and direction check of A, else abort |
//! | 8 | both | `K' = SHA-256(K ‖ q_a ‖ q_b)` |
//!
//! `theta_hat_a` is B's estimate of A's signal and `theta_hat_b` is A's
//! estimate of B's signal. Each quantized index is fixed by the side that sent
//! it; the receiver does not re-derive it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::auth::{hex_prefix, Beacon, Credentials, DirectionCheck, Evidence, Identity, PublicKeys, Receiver, SignedMessage};
use crate::channel::PilotObservation;
use crate::error::{Error, Result};
use crate::geometry::GeoCoord;
use crate::ska::cipher::PublicKeyCipher;

/// Default quantization width in bits.
pub const DEFAULT_M_BITS: u8 = 7;

/// Session key length.
pub const RAW_KEY_LEN: usize = 32;

/// Uniform `m`-bit index of an angle over `[-pi/2, pi/2]`.
pub fn quantize_angle(theta: f64, m: u8) -> Result<u16> {
    if !(1..=16).contains(&m) {
        return Err(Error::InvalidParameter(format!("quantizer width must be 1..=16 bits, got {m}")));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidParameter("angle is not finite".into()));
    }
    let levels = 1u32 << m;
    let idx = ((theta + FRAC_PI_2) / PI * levels as f64).floor();
    Ok(idx.clamp(0.0, (levels - 1) as f64) as u16)
}

/// `K' = SHA-256(K ‖ q_a ‖ q_b)` with 16-bit big-endian indices.
pub fn derive_session_key(k_raw: &[u8], q_a: u16, q_b: u16) -> Result<[u8; 32]> {
    if k_raw.is_empty() {
        return Err(Error::InvalidParameter("raw session key is empty".into()));
    }
    let mut h = Sha256::new();
    h.update(k_raw);
    h.update(q_a.to_be_bytes());
    h.update(q_b.to_be_bytes());
    Ok(h.finalize().into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Node A.
    Initiator,
    /// Node B.
    Responder,
}

impl Role {
    fn label(self) -> &'static str {
        match self {
            Role::Initiator => "A",
            Role::Responder => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    PubKeyRequest = 1,
    PubKeyReply = 2,
    KeyTransport = 3,
}

impl MessageKind {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Self::PubKeyRequest),
            2 => Ok(Self::PubKeyReply),
            3 => Ok(Self::KeyTransport),
            t => Err(Error::Malformed(format!("unknown message kind {t}"))),
        }
    }
}

/// A protocol message: a signed beacon whose body starts with a kind tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SkaMessage {
    pub kind: MessageKind,
    pub signed: SignedMessage,
}

impl SkaMessage {
    fn build(kind: MessageKind, creds: &Credentials, position: GeoCoord, data: &[u8], now_ms: u64) -> Self {
        let mut body = Vec::with_capacity(1 + data.len());
        body.push(kind as u8);
        body.extend_from_slice(data);
        let payload = Beacon::new(position, 0.0).with_body(body).encode();
        Self {
            kind,
            signed: SignedMessage::sign(creds, payload, now_ms),
        }
    }

    /// Parses the kind tag out of a signed frame.
    pub fn from_signed(signed: SignedMessage) -> Result<Self> {
        let beacon = signed.beacon()?;
        let tag = *beacon
            .body
            .first()
            .ok_or_else(|| Error::Malformed("message body is empty".into()))?;
        Ok(Self {
            kind: MessageKind::from_tag(tag)?,
            signed,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        self.signed.encode()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        Self::from_signed(SignedMessage::decode(bytes)?)
    }

    pub fn claimed_position(&self) -> Result<GeoCoord> {
        Ok(self.signed.beacon()?.position)
    }

    fn data(&self) -> Result<Vec<u8>> {
        Ok(self.signed.beacon()?.body[1..].to_vec())
    }
}

/// A received message with the pilots it arrived on.
#[derive(Debug, Clone)]
pub struct Inbound {
    pub message: SkaMessage,
    pub obs: PilotObservation,
    pub now_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AbortReason {
    PkiFailed,
    DirectionMismatch { statistic: f64, alpha: f64 },
    ProtocolViolation(String),
    Undecryptable,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::PkiFailed => write!(f, "PKI check failed"),
            AbortReason::DirectionMismatch { statistic, alpha } => {
                write!(f, "direction mismatch (W = {statistic:.3} > alpha = {alpha})")
            }
            AbortReason::ProtocolViolation(s) => write!(f, "protocol violation: {s}"),
            AbortReason::Undecryptable => write!(f, "payload could not be decrypted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionState {
    /// Next step this side will perform.
    Active(u8),
    Completed,
    Aborted { step: u8, reason: AbortReason },
}

/// Per-session settings.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub alpha: f64,
    pub m_bits: u8,
    pub cipher: Arc<dyn PublicKeyCipher>,
    /// Skip the direction check; used by adversary-controlled sessions.
    pub skip_direction_check: bool,
}

/// One side of a key agreement.
#[derive(Debug, Clone)]
pub struct SkaSession {
    pub role: Role,
    pub state: SessionState,
    creds: Credentials,
    /// Position written into outgoing beacons.
    claimed_position: GeoCoord,
    receiver: Receiver,
    config: SessionConfig,
    pub peer: Option<Identity>,
    /// Estimate of the peer's direction from the latest check.
    pub theta_hat_peer: Option<f64>,
    pub q_a: Option<u16>,
    pub q_b: Option<u16>,
    k_raw: Option<Vec<u8>>,
    k_prime: Option<[u8; 32]>,
    pub trace: Vec<String>,
}

impl SkaSession {
    pub fn new(
        role: Role,
        creds: Credentials,
        claimed_position: GeoCoord,
        receiver: Receiver,
        config: SessionConfig,
    ) -> Self {
        let first = match role {
            Role::Initiator => 1,
            Role::Responder => 3,
        };
        Self {
            role,
            state: SessionState::Active(first),
            creds,
            claimed_position,
            receiver,
            config,
            peer: None,
            theta_hat_peer: None,
            q_a: None,
            q_b: None,
            k_raw: None,
            k_prime: None,
            trace: Vec::new(),
        }
    }

    pub fn is_finished(&self) -> bool {
        !matches!(self.state, SessionState::Active(_))
    }

    /// Derived key, present once the session completed.
    pub fn session_key(&self) -> Option<[u8; 32]> {
        self.k_prime
    }

    pub fn raw_key(&self) -> Option<&[u8]> {
        self.k_raw.as_deref()
    }

    fn log(&mut self, step: u8, text: impl AsRef<str>) {
        let line = format!("{} step {step}: {}", self.role.label(), text.as_ref());
        self.trace.push(line);
    }

    fn abort(&mut self, step: u8, reason: AbortReason) -> Option<SkaMessage> {
        self.log(step, format!("abort, {reason}"));
        self.state = SessionState::Aborted { step, reason };
        None
    }

    /// PKI and direction check of an inbound message. `Err(reason)` aborts.
    fn vet(&mut self, step: u8, inbound: &Inbound) -> Result<std::result::Result<Identity, AbortReason>> {
        let msg = &inbound.message.signed;
        let evidence = if self.config.skip_direction_check {
            if crate::auth::pki_verify(msg, &self.receiver.pki, inbound.now_ms)? {
                None
            } else {
                Some(Evidence::PkiFailed)
            }
        } else {
            Some(self.receiver.evaluate(msg, &inbound.obs, inbound.now_ms)?)
        };
        match evidence {
            Some(Evidence::PkiFailed) => return Ok(Err(AbortReason::PkiFailed)),
            Some(Evidence::Checked(check)) => {
                self.theta_hat_peer = Some(check.estimate.theta_hat);
                self.log_check(step, &check);
                if !check.passes(self.config.alpha) {
                    return Ok(Err(AbortReason::DirectionMismatch {
                        statistic: check.statistic,
                        alpha: self.config.alpha,
                    }));
                }
            }
            None => self.log(step, "PKI ok, direction check skipped"),
        }
        Ok(Ok(msg.identity()?))
    }

    fn log_check(&mut self, step: u8, c: &DirectionCheck) {
        let decision = if c.passes(self.config.alpha) { "H1 accept" } else { "H0 reject" };
        self.log(
            step,
            format!(
                "PKI ok; expected {:.3} deg, estimated {:.3} deg, sqrt(CRB) {:.4} deg, W = {:.3} vs alpha {} -> {decision}",
                c.expected.visible.to_degrees(),
                c.estimate.theta_hat.to_degrees(),
                c.crb_test.sqrt().to_degrees(),
                c.statistic,
                self.config.alpha
            ),
        );
    }

    fn finish(&mut self, k_raw: Vec<u8>, q_a: u16, q_b: u16) -> Result<()> {
        let k_prime = derive_session_key(&k_raw, q_a, q_b)?;
        self.k_raw = Some(k_raw);
        self.q_a = Some(q_a);
        self.q_b = Some(q_b);
        self.k_prime = Some(k_prime);
        self.state = SessionState::Completed;
        self.log(8, format!("completed, q_a = {q_a}, q_b = {q_b}, K' = {}", hex_prefix(&k_prime)));
        Ok(())
    }

    /// Runs this side forward until it needs the next inbound message.
    ///
    /// Returns the message to send, if any. Once the session has completed or
    /// aborted every further call fails with [`Error::SessionFinished`].
    pub fn advance(&mut self, inbound: Option<Inbound>, now_ms: u64, rng: &mut dyn RngCore) -> Result<Option<SkaMessage>> {
        let step = match self.state {
            SessionState::Active(s) => s,
            _ => return Err(Error::SessionFinished),
        };
        match (step, inbound) {
            (1, None) => {
                self.log(1, format!("selected key pair {:?}", self.creds.keys.public()));
                let own = self.creds.keys.public().to_bytes();
                let msg = SkaMessage::build(MessageKind::PubKeyRequest, &self.creds, self.claimed_position, &own, now_ms);
                self.log(2, "sent PubKeyRequest");
                self.state = SessionState::Active(5);
                Ok(Some(msg))
            }
            (3, Some(inb)) => self.on_request(inb, now_ms, rng),
            (5, Some(inb)) => self.on_reply(inb, now_ms, rng),
            (7, Some(inb)) => self.on_transport(inb),
            (s, Some(inb)) => Ok(self.abort(
                s,
                AbortReason::ProtocolViolation(format!("unexpected {:?} at step {s}", inb.message.kind)),
            )),
            (s, None) => Ok(self.abort(s, AbortReason::ProtocolViolation(format!("step {s} needs an inbound message")))),
        }
    }

    fn expect_kind(&mut self, step: u8, inb: &Inbound, kind: MessageKind) -> bool {
        if inb.message.kind == kind {
            true
        } else {
            self.abort(
                step,
                AbortReason::ProtocolViolation(format!("expected {kind:?}, got {:?}", inb.message.kind)),
            );
            false
        }
    }

    fn on_request(&mut self, inb: Inbound, now_ms: u64, rng: &mut dyn RngCore) -> Result<Option<SkaMessage>> {
        if !self.expect_kind(3, &inb, MessageKind::PubKeyRequest) {
            return Ok(None);
        }
        let peer = match self.vet(3, &inb)? {
            Ok(id) => id,
            Err(reason) => return Ok(self.abort(3, reason)),
        };
        let offered = PublicKeys::from_bytes(&inb.message.data()?)?;
        if offered != peer.public_key {
            return Ok(self.abort(3, AbortReason::ProtocolViolation("offered key is not the certified key".into())));
        }
        let theta_hat_a = self.theta_hat_peer.unwrap_or(0.0);
        let q_a = quantize_angle(theta_hat_a, self.config.m_bits)?;
        let sealed = self.config.cipher.seal(&peer.public_key, &q_a.to_be_bytes(), rng)?;
        let mut data = self.creds.keys.public().to_bytes().to_vec();
        data.extend_from_slice(&sealed);
        let msg = SkaMessage::build(MessageKind::PubKeyReply, &self.creds, self.claimed_position, &data, now_ms);
        self.q_a = Some(q_a);
        self.peer = Some(peer);
        self.log(4, format!("sent PubKeyReply with q_a = {q_a}"));
        self.state = SessionState::Active(7);
        Ok(Some(msg))
    }

    fn on_reply(&mut self, inb: Inbound, now_ms: u64, rng: &mut dyn RngCore) -> Result<Option<SkaMessage>> {
        if !self.expect_kind(5, &inb, MessageKind::PubKeyReply) {
            return Ok(None);
        }
        let peer = match self.vet(5, &inb)? {
            Ok(id) => id,
            Err(reason) => return Ok(self.abort(5, reason)),
        };
        let data = inb.message.data()?;
        if data.len() < 64 || PublicKeys::from_bytes(&data[..64])? != peer.public_key {
            return Ok(self.abort(5, AbortReason::ProtocolViolation("reply key is not the certified key".into())));
        }
        let Ok(plain) = self.config.cipher.open(&self.creds.keys, &data[64..]) else {
            return Ok(self.abort(5, AbortReason::Undecryptable));
        };
        let Ok(q_a_bytes) = <[u8; 2]>::try_from(plain.as_slice()) else {
            return Ok(self.abort(5, AbortReason::ProtocolViolation("bad quantized angle".into())));
        };
        let q_a = u16::from_be_bytes(q_a_bytes);
        let theta_hat_b = self.theta_hat_peer.unwrap_or(0.0);
        let q_b = quantize_angle(theta_hat_b, self.config.m_bits)?;
        let mut k_raw = vec![0u8; RAW_KEY_LEN];
        rng.fill_bytes(&mut k_raw);
        let mut secret = k_raw.clone();
        secret.extend_from_slice(&q_b.to_be_bytes());
        let sealed = self.config.cipher.seal(&peer.public_key, &secret, rng)?;
        let msg = SkaMessage::build(MessageKind::KeyTransport, &self.creds, self.claimed_position, &sealed, now_ms);
        self.peer = Some(peer);
        self.log(6, format!("sent KeyTransport with q_b = {q_b}"));
        self.finish(k_raw, q_a, q_b)?;
        Ok(Some(msg))
    }

    fn on_transport(&mut self, inb: Inbound) -> Result<Option<SkaMessage>> {
        if !self.expect_kind(7, &inb, MessageKind::KeyTransport) {
            return Ok(None);
        }
        let peer = match self.vet(7, &inb)? {
            Ok(id) => id,
            Err(reason) => return Ok(self.abort(7, reason)),
        };
        if self.peer.as_ref().is_some_and(|p| p.id != peer.id) {
            return Ok(self.abort(7, AbortReason::ProtocolViolation("key transport from a different peer".into())));
        }
        let Ok(plain) = self.config.cipher.open(&self.creds.keys, &inb.message.data()?) else {
            return Ok(self.abort(7, AbortReason::Undecryptable));
        };
        if plain.len() != RAW_KEY_LEN + 2 {
            return Ok(self.abort(7, AbortReason::ProtocolViolation("bad key transport length".into())));
        }
        let q_b = u16::from_be_bytes([plain[RAW_KEY_LEN], plain[RAW_KEY_LEN + 1]]);
        let q_a = self.q_a.expect("q_a is set at step 4");
        self.finish(plain[..RAW_KEY_LEN].to_vec(), q_a, q_b)?;
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantizer_boundaries() {
        assert_eq!(quantize_angle(-FRAC_PI_2, 4).unwrap(), 0);
        assert_eq!(quantize_angle(-FRAC_PI_2, 11).unwrap(), 0);
        assert_eq!(quantize_angle(FRAC_PI_2 - 1e-12, 4).unwrap(), 15);
        assert_eq!(quantize_angle(FRAC_PI_2, 4).unwrap(), 15);
        assert_eq!(quantize_angle(0.0, 4).unwrap(), 8);
        assert!(quantize_angle(0.0, 0).is_err());
        assert!(quantize_angle(0.0, 17).is_err());
    }

    #[test]
    fn session_key_derivation() {
        let k = [5u8; 32];
        assert_eq!(derive_session_key(&k, 3, 9).unwrap(), derive_session_key(&k, 3, 9).unwrap());
        assert_ne!(derive_session_key(&k, 3, 9).unwrap(), derive_session_key(&k, 4, 9).unwrap());
        assert_ne!(derive_session_key(&k, 3, 9).unwrap(), derive_session_key(&k, 9, 3).unwrap());
        assert!(derive_session_key(&[], 0, 0).is_err());
        // SHA-256 of 32 x 0x05 followed by 00 03 00 09.
        let mut h = Sha256::new();
        h.update([5u8; 32]);
        h.update([0, 3, 0, 9]);
        let want: [u8; 32] = h.finalize().into();
        assert_eq!(derive_session_key(&k, 3, 9).unwrap(), want);
    }

    proptest! {
        #[test]
        fn quantizer_is_monotone_and_in_range(a in -FRAC_PI_2..=FRAC_PI_2, b in -FRAC_PI_2..=FRAC_PI_2, m in 1u8..=16) {
            let (qa, qb) = (quantize_angle(a, m).unwrap(), quantize_angle(b, m).unwrap());
            prop_assert!((qa as u32) < (1u32 << m));
            if a <= b {
                prop_assert!(qa <= qb);
            }
        }
    }
}
