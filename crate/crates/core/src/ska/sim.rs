//! Drivers that run complete key agreements over simulated radio links.

use std::sync::Arc;

use rand::Rng;

use crate::auth::{CertificateAuthority, Credentials, PkiMode, PkiPolicy, Receiver};
use crate::channel::LinkModel;
use crate::error::Result;
use crate::estimation::AoaEstimator;
use crate::geometry::{heading_angle, wrap_angle, ArrayPose, GeoCoord};
use crate::ska::cipher::PublicKeyCipher;
use crate::ska::region::VulnerableRegion;
use crate::ska::session::{Inbound, Role, SessionConfig, SessionState, SkaMessage, SkaSession};

/// Milliseconds between consecutive protocol messages.
const HOP_MS: u64 = 20;

/// A legitimate participant.
#[derive(Debug, Clone)]
pub struct Node {
    pub creds: Credentials,
    pub pose: ArrayPose,
}

/// Array pose at `position` that sees `target` at angle of arrival `aoa`.
pub fn pose_facing(position: GeoCoord, target: &GeoCoord, aoa: f64) -> Result<ArrayPose> {
    let theta_h = heading_angle(target, &position)?;
    Ok(ArrayPose::new(position, wrap_angle(aoa - theta_h)))
}

/// Point seen `offset` radians off the A-B line from both A and B, on the
/// left of the direction A to B for positive `offset`.
pub fn symmetric_offset_point(a: &GeoCoord, b: &GeoCoord, offset: f64) -> GeoCoord {
    let (east, north) = a.local_offset_m(b);
    let half = (east * east + north * north).sqrt() / 2.0;
    let lift = half * offset.tan();
    let (ue, un) = (east / (2.0 * half), north / (2.0 * half));
    a.offset_m(east / 2.0 - un * lift, north / 2.0 + ue * lift)
}

/// Two nodes, their CA, the radio link and protocol settings.
#[derive(Debug, Clone)]
pub struct SkaScenario {
    pub a: Node,
    pub b: Node,
    pub ca_public_key: [u8; 32],
    pub link: LinkModel,
    pub alpha: f64,
    pub m_bits: u8,
    pub pki_mode: PkiMode,
    pub cipher: Arc<dyn PublicKeyCipher>,
    pub start_ms: u64,
}

impl SkaScenario {
    /// A and B `separation_m` apart, each array turned so the peer arrives at `peer_aoa`.
    pub fn standard(
        link: LinkModel,
        alpha: f64,
        m_bits: u8,
        separation_m: f64,
        peer_aoa: f64,
        cipher: Arc<dyn PublicKeyCipher>,
    ) -> Result<Self> {
        let ca = CertificateAuthority::from_seed(&[0xca; 32]);
        let pos_a = GeoCoord::from_degrees(8.68, 50.11)?;
        let pos_b = pos_a.offset_m(separation_m, 0.0);
        let a = Node {
            creds: ca.issue(b"vehicle-A", &[0xa1; 32]),
            pose: pose_facing(pos_a, &pos_b, peer_aoa)?,
        };
        let b = Node {
            creds: ca.issue(b"vehicle-B", &[0xb2; 32]),
            pose: pose_facing(pos_b, &pos_a, peer_aoa)?,
        };
        Ok(Self {
            a,
            b,
            ca_public_key: ca.public_key(),
            link,
            alpha,
            m_bits,
            pki_mode: PkiMode::Strict,
            cipher,
            start_ms: 1_000_000,
        })
    }

    fn receiver(&self, pose: ArrayPose) -> Receiver {
        Receiver::new(
            pose,
            AoaEstimator::new(self.link.cfg, self.link.k),
            PkiPolicy::new(self.ca_public_key, self.pki_mode),
        )
    }

    fn config(&self, skip_direction_check: bool) -> SessionConfig {
        SessionConfig {
            alpha: self.alpha,
            m_bits: self.m_bits,
            cipher: self.cipher.clone(),
            skip_direction_check,
        }
    }

    fn session(&self, role: Role, creds: &Credentials, claimed: GeoCoord, pose: ArrayPose, skip: bool) -> SkaSession {
        SkaSession::new(role, creds.clone(), claimed, self.receiver(pose), self.config(skip))
    }

    /// Radio delivery of `message` physically sent from `from` to an array at `to`.
    fn deliver<R: Rng>(&self, message: SkaMessage, from: &GeoCoord, to: &ArrayPose, now_ms: u64, rng: &mut R) -> Result<Inbound> {
        let theta = to.expected_direction(from)?.visible;
        Ok(Inbound {
            message,
            obs: self.link.observe(theta, rng)?,
            now_ms,
        })
    }

    /// Acceptance region for a relay, from `alpha sqrt(CRB)` at each end.
    pub fn vulnerable_region(&self) -> Result<VulnerableRegion> {
        let est = AoaEstimator::new(self.link.cfg, self.link.k);
        let at_a = self.a.pose.expected_direction(&self.b.pose.position)?.visible;
        let at_b = self.b.pose.expected_direction(&self.a.pose.position)?.visible;
        let hw_a = self.alpha * est.crb_at(at_a, &self.link.frame, self.link.noise_var)?.sqrt();
        let hw_b = self.alpha * est.crb_at(at_b, &self.link.frame, self.link.noise_var)?.sqrt();
        VulnerableRegion::new(self.a.pose.position, self.b.pose.position, hw_a, hw_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandshakeOutcome {
    /// Both sides completed with the same key.
    Completed,
    /// Both sides completed with different keys.
    KeyMismatch,
    AbortedAtStep(u8),
}

#[derive(Debug, Clone)]
pub struct HandshakeReport {
    pub outcome: HandshakeOutcome,
    pub a: SkaSession,
    pub b: SkaSession,
}

impl HandshakeReport {
    /// Interleaved trace of both sides.
    pub fn trace(&self) -> Vec<String> {
        interleave(&[&self.a.trace, &self.b.trace])
    }
}

fn step_key(line: &str) -> u32 {
    line.split("step ")
        .nth(1)
        .and_then(|s| s.split(':').next())
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

fn interleave(traces: &[&Vec<String>]) -> Vec<String> {
    let mut all: Vec<(u32, usize, usize, String)> = traces
        .iter()
        .enumerate()
        .flat_map(|(t, lines)| lines.iter().enumerate().map(move |(i, l)| (step_key(l), t, i, l.clone())))
        .collect();
    all.sort_by_key(|(s, t, i, _)| (*s, *i, *t));
    all.into_iter().map(|(_, _, _, l)| l).collect()
}

fn aborted_step(s: &SkaSession) -> Option<u8> {
    match s.state {
        SessionState::Aborted { step, .. } => Some(step),
        _ => None,
    }
}

/// Honest run between A and B.
pub fn run_handshake<R: Rng>(scn: &SkaScenario, rng: &mut R) -> Result<HandshakeReport> {
    let mut a = scn.session(Role::Initiator, &scn.a.creds, scn.a.pose.position, scn.a.pose, false);
    let mut b = scn.session(Role::Responder, &scn.b.creds, scn.b.pose.position, scn.b.pose, false);
    let mut now = scn.start_ms;
    let (pa, pb) = (scn.a.pose.position, scn.b.pose.position);

    let mut outgoing = a.advance(None, now, rng)?;
    let mut to_b = true;
    while let Some(msg) = outgoing.take() {
        now += HOP_MS;
        if to_b {
            let inb = scn.deliver(msg, &pa, &scn.b.pose, now, rng)?;
            outgoing = b.advance(Some(inb), now, rng)?;
        } else {
            let inb = scn.deliver(msg, &pb, &scn.a.pose, now, rng)?;
            outgoing = a.advance(Some(inb), now, rng)?;
        }
        to_b = !to_b;
    }

    let outcome = match (aborted_step(&a), aborted_step(&b)) {
        (Some(sa), Some(sb)) => HandshakeOutcome::AbortedAtStep(sa.min(sb)),
        (Some(s), None) | (None, Some(s)) => HandshakeOutcome::AbortedAtStep(s),
        (None, None) => match (a.session_key(), b.session_key()) {
            (Some(ka), Some(kb)) if ka == kb => HandshakeOutcome::Completed,
            (Some(_), Some(_)) => HandshakeOutcome::KeyMismatch,
            _ => HandshakeOutcome::AbortedAtStep(0),
        },
    };
    Ok(HandshakeReport { outcome, a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MitmOutcome {
    AttackSucceeds,
    AbortedAtStep(u8),
}

#[derive(Debug, Clone)]
pub struct MitmReport {
    pub outcome: MitmOutcome,
    pub trace: Vec<String>,
    /// Keys held by A and B on success; each is shared with the relay.
    pub key_a: Option<[u8; 32]>,
    pub key_b: Option<[u8; 32]>,
}

/// Man-in-the-middle run with the relay physically at `pos_e`.
///
/// The relay holds the credentials of both A and B and runs one session
/// towards each, so every message it emits passes PKI; only the direction
/// checks at steps 3 and 7 (at B) and 5 (at A) can stop it.
pub fn simulate_mitm<R: Rng>(scn: &SkaScenario, pos_e: &GeoCoord, rng: &mut R) -> Result<MitmReport> {
    let pose_e = ArrayPose::new(*pos_e, 0.0);
    let (pa, pb) = (scn.a.pose.position, scn.b.pose.position);
    let mut a = scn.session(Role::Initiator, &scn.a.creds, pa, scn.a.pose, false);
    let mut b = scn.session(Role::Responder, &scn.b.creds, pb, scn.b.pose, false);
    let mut e_as_a = scn.session(Role::Initiator, &scn.a.creds, pa, pose_e, true);
    let mut e_as_b = scn.session(Role::Responder, &scn.b.creds, pb, pose_e, true);
    let mut now = scn.start_ms;

    let report = |a: &SkaSession, b: &SkaSession, outcome: MitmOutcome| MitmReport {
        outcome,
        trace: interleave(&[&a.trace, &b.trace]),
        key_a: a.session_key(),
        key_b: b.session_key(),
    };

    // Steps 1-3: A's request is captured; the relay sends its own to B.
    let m1 = a.advance(None, now, rng)?.expect("initiator sends a request");
    let m1_relay = e_as_a.advance(None, now, rng)?.expect("initiator sends a request");
    now += HOP_MS;
    let m2 = b.advance(Some(scn.deliver(m1_relay, pos_e, &scn.b.pose, now, rng)?), now, rng)?;
    let Some(m2) = m2 else {
        return Ok(report(&a, &b, MitmOutcome::AbortedAtStep(3)));
    };

    // Steps 4-5: the relay answers A's request itself.
    let m2_relay = e_as_b
        .advance(Some(scn.deliver(m1, &pa, &pose_e, now, rng)?), now, rng)?
        .expect("relay replies");
    now += HOP_MS;
    let m3 = a.advance(Some(scn.deliver(m2_relay, pos_e, &scn.a.pose, now, rng)?), now, rng)?;
    let Some(m3) = m3 else {
        return Ok(report(&a, &b, MitmOutcome::AbortedAtStep(5)));
    };

    // Steps 6-7: A's key goes to the relay; the relay sends its own to B.
    e_as_b.advance(Some(scn.deliver(m3, &pa, &pose_e, now, rng)?), now, rng)?;
    let m3_relay = e_as_a
        .advance(Some(scn.deliver(m2, &pb, &pose_e, now, rng)?), now, rng)?
        .expect("relay sends key transport");
    now += HOP_MS;
    b.advance(Some(scn.deliver(m3_relay, pos_e, &scn.b.pose, now, rng)?), now, rng)?;
    let outcome = match b.state {
        SessionState::Completed if a.state == SessionState::Completed => MitmOutcome::AttackSucceeds,
        SessionState::Aborted { step, .. } => MitmOutcome::AbortedAtStep(step),
        _ => MitmOutcome::AbortedAtStep(8),
    };
    Ok(report(&a, &b, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Coherence, PilotFrame};
    use crate::geometry::ArrayConfig;
    use crate::ska::cipher::{NullCipher, SealedBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(cipher: Arc<dyn PublicKeyCipher>) -> SkaScenario {
        let cfg = ArrayConfig::ula(4).unwrap();
        let link = LinkModel {
            cfg,
            k: 100.0,
            noise_var: 0.01,
            frame: PilotFrame::tight(&cfg, 1, 10, 1.0).unwrap(),
            coherence: Coherence::PerPilot,
        };
        SkaScenario::standard(link, 3.0, 7, 200.0, 15f64.to_radians(), cipher).unwrap()
    }

    #[test]
    fn poses_see_each_other_at_the_requested_angle() {
        let s = scenario(Arc::new(NullCipher));
        let at_a = s.a.pose.expected_direction(&s.b.pose.position).unwrap();
        let at_b = s.b.pose.expected_direction(&s.a.pose.position).unwrap();
        assert!((at_a.wrapped - 15f64.to_radians()).abs() < 1e-9);
        assert!((at_b.wrapped - 15f64.to_radians()).abs() < 1e-9);
    }

    #[test]
    fn honest_handshake_agrees_on_key() {
        for cipher in [Arc::new(SealedBox) as Arc<dyn PublicKeyCipher>, Arc::new(NullCipher)] {
            let s = scenario(cipher);
            let r = run_handshake(&s, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            assert_eq!(r.outcome, HandshakeOutcome::Completed, "{:#?}", r.trace());
            assert_eq!(r.a.session_key(), r.b.session_key());
            assert_eq!(r.a.q_a, r.b.q_a);
            assert_eq!(r.a.q_b, r.b.q_b);
            assert!(r.trace().iter().any(|l| l.starts_with("B step 3")));
        }
    }

    #[test]
    fn on_segment_relay_succeeds_and_offset_relay_is_caught() {
        let s = scenario(Arc::new(SealedBox));
        let mid = symmetric_offset_point(&s.a.pose.position, &s.b.pose.position, 0.0);
        let r = simulate_mitm(&s, &mid, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(r.outcome, MitmOutcome::AttackSucceeds, "{:#?}", r.trace);
        assert_ne!(r.key_a, r.key_b);

        let off = symmetric_offset_point(&s.a.pose.position, &s.b.pose.position, 20f64.to_radians());
        let r = simulate_mitm(&s, &off, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(r.outcome, MitmOutcome::AbortedAtStep(3));
    }

    #[test]
    fn offset_point_has_requested_bearing_offsets() {
        let s = scenario(Arc::new(NullCipher));
        let region = s.vulnerable_region().unwrap();
        let p = symmetric_offset_point(&region.pos_a, &region.pos_b, 20f64.to_radians());
        let (da, db) = region.offsets(&p).unwrap();
        assert!((da.abs() - 20f64.to_radians()).abs() < 1e-3, "{da}");
        assert!((db.abs() - 20f64.to_radians()).abs() < 1e-3, "{db}");
    }

    #[test]
    fn finished_sessions_refuse_to_advance() {
        let s = scenario(Arc::new(NullCipher));
        let mut r = run_handshake(&s, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(r.a.advance(None, 0, &mut rng).unwrap_err(), crate::error::Error::SessionFinished);
    }

    #[test]
    fn out_of_order_message_aborts() {
        let s = scenario(Arc::new(NullCipher));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // A responder that receives a key transport first must abort.
        let mut a = s.session(Role::Initiator, &s.a.creds, s.a.pose.position, s.a.pose, false);
        let mut b = s.session(Role::Responder, &s.b.creds, s.b.pose.position, s.b.pose, false);
        let req = a.advance(None, s.start_ms, &mut rng).unwrap().unwrap();
        let inb = s.deliver(req, &s.a.pose.position, &s.b.pose, s.start_ms, &mut rng).unwrap();
        let reply = b.advance(Some(inb), s.start_ms, &mut rng).unwrap().unwrap();
        let transport = a
            .advance(Some(s.deliver(reply, &s.b.pose.position, &s.a.pose, s.start_ms, &mut rng).unwrap()), s.start_ms, &mut rng)
            .unwrap()
            .unwrap();
        let mut fresh_b = s.session(Role::Responder, &s.b.creds, s.b.pose.position, s.b.pose, false);
        let inb = s.deliver(transport, &s.a.pose.position, &s.b.pose, s.start_ms, &mut rng).unwrap();
        assert_eq!(fresh_b.advance(Some(inb), s.start_ms, &mut rng).unwrap(), None);
        assert!(matches!(
            fresh_b.state,
            SessionState::Aborted { step: 3, reason: crate::ska::session::AbortReason::ProtocolViolation(_) }
        ));
        assert!(fresh_b.advance(None, 0, &mut rng).is_err());
    }
}
