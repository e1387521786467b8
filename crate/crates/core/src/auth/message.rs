//! Beacon payloads and the signed message frame `<ID | M | sig | T | C>`.
//!
//! Every field is preceded by a big-endian `u32` length. `T` is an 8-byte
//! big-endian millisecond timestamp. The beacon section at the start of `M`
//! holds longitude, latitude (radians) and speed as big-endian `f64`, followed
//! by an opaque body.

use crate::auth::pki::{verify_certificate, Credentials, Identity, KeyPair, PkiPolicy, SIGNATURE_LEN};
use crate::error::{Error, Result};
use crate::geometry::GeoCoord;

const BEACON_HEADER_LEN: usize = 24;

/// Position report carried at the front of every payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub position: GeoCoord,
    pub speed: f64,
    pub body: Vec<u8>,
}

impl Beacon {
    pub fn new(position: GeoCoord, speed: f64) -> Self {
        Self {
            position,
            speed,
            body: Vec::new(),
        }
    }

    pub fn with_body(mut self, body: Vec<u8>) -> Self {
        self.body = body;
        self
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BEACON_HEADER_LEN + self.body.len());
        out.extend_from_slice(&self.position.lon.to_be_bytes());
        out.extend_from_slice(&self.position.lat.to_be_bytes());
        out.extend_from_slice(&self.speed.to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < BEACON_HEADER_LEN {
            return Err(Error::MalformedBeacon(format!(
                "payload has {} bytes, beacon header needs {BEACON_HEADER_LEN}",
                bytes.len()
            )));
        }
        let f = |i: usize| f64::from_be_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
        let position = GeoCoord::new(f(0), f(1))
            .map_err(|e| Error::MalformedBeacon(format!("bad position: {e}")))?;
        let speed = f(2);
        if !speed.is_finite() {
            return Err(Error::MalformedBeacon("speed is not finite".into()));
        }
        Ok(Self {
            position,
            speed,
            body: bytes[BEACON_HEADER_LEN..].to_vec(),
        })
    }
}

/// A signed, certified message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMessage {
    pub id: Vec<u8>,
    pub payload: Vec<u8>,
    pub signature: Vec<u8>,
    pub timestamp_ms: u64,
    /// Public keys followed by the CA signature.
    pub certificate: Vec<u8>,
}

fn signed_bytes(payload: &[u8], timestamp_ms: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 8);
    out.extend_from_slice(payload);
    out.extend_from_slice(&timestamp_ms.to_be_bytes());
    out
}

impl SignedMessage {
    /// Signs `payload ‖ T` with the sender's own key.
    pub fn sign(creds: &Credentials, payload: Vec<u8>, timestamp_ms: u64) -> Self {
        Self::forge(&creds.identity, &creds.keys, payload, timestamp_ms)
    }

    /// Message carrying `identity`'s ID and certificate but signed with `keys`.
    ///
    /// With a stolen identity and the attacker's own keys this is the
    /// impersonation message; a strict verifier rejects it.
    pub fn forge(identity: &Identity, keys: &KeyPair, payload: Vec<u8>, timestamp_ms: u64) -> Self {
        let signature = keys.sign(&signed_bytes(&payload, timestamp_ms)).to_vec();
        Self {
            id: identity.id.clone(),
            payload,
            signature,
            timestamp_ms,
            certificate: identity.certificate_bytes(),
        }
    }

    pub fn beacon(&self) -> Result<Beacon> {
        Beacon::decode(&self.payload)
    }

    pub fn identity(&self) -> Result<Identity> {
        Identity::from_wire(&self.id, &self.certificate)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let ts = self.timestamp_ms.to_be_bytes();
        for field in [&self.id[..], &self.payload, &self.signature, &ts, &self.certificate] {
            out.extend_from_slice(&(field.len() as u32).to_be_bytes());
            out.extend_from_slice(field);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut rest = bytes;
        let mut take = |name: &str| -> Result<Vec<u8>> {
            if rest.len() < 4 {
                return Err(Error::Malformed(format!("truncated length prefix of {name}")));
            }
            let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(Error::Malformed(format!("{name} needs {len} bytes, {} left", rest.len())));
            }
            let (field, tail) = rest.split_at(len);
            rest = tail;
            Ok(field.to_vec())
        };
        let id = take("ID")?;
        let payload = take("M")?;
        let signature = take("sig")?;
        let ts = take("T")?;
        let certificate = take("C")?;
        if !rest.is_empty() {
            return Err(Error::Malformed(format!("{} trailing bytes", rest.len())));
        }
        let ts: [u8; 8] = ts
            .try_into()
            .map_err(|v: Vec<u8>| Error::Malformed(format!("timestamp has {} bytes", v.len())))?;
        Ok(Self {
            id,
            payload,
            signature,
            timestamp_ms: u64::from_be_bytes(ts),
            certificate,
        })
    }
}

/// Certificate, payload signature and freshness check.
pub fn pki_verify(msg: &SignedMessage, policy: &PkiPolicy, now_ms: u64) -> Result<bool> {
    let identity = msg.identity()?;
    if msg.signature.len() != SIGNATURE_LEN {
        return Ok(false);
    }
    Ok(verify_certificate(&identity, &policy.ca_public_key)
        && policy.verifier.verify(
            &identity.public_key,
            &signed_bytes(&msg.payload, msg.timestamp_ms),
            &msg.signature,
        )
        && policy.is_fresh(msg.timestamp_ms, now_ms))
}

/// Parses a wire frame and runs [`pki_verify`].
pub fn pki_verify_bytes(bytes: &[u8], policy: &PkiPolicy, now_ms: u64) -> Result<bool> {
    pki_verify(&SignedMessage::decode(bytes)?, policy, now_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auth::pki::{CertificateAuthority, PkiMode};
    use proptest::prelude::*;

    fn setup() -> (CertificateAuthority, Credentials, KeyPair) {
        let ca = CertificateAuthority::from_seed(&[1; 32]);
        let honest = ca.issue(b"veh-1", &[2; 32]);
        let thief = KeyPair::from_seed(&[3; 32]);
        (ca, honest, thief)
    }

    fn payload() -> Vec<u8> {
        Beacon::new(GeoCoord::new(0.1, 0.2).unwrap(), 13.5)
            .with_body(b"hello".to_vec())
            .encode()
    }

    #[test]
    fn honest_message_passes() {
        let (ca, honest, _) = setup();
        let policy = PkiPolicy::new(ca.public_key(), PkiMode::Strict);
        let msg = SignedMessage::sign(&honest, payload(), 1_000);
        assert!(pki_verify(&msg, &policy, 1_500).unwrap());
        assert!(pki_verify_bytes(&msg.encode(), &policy, 1_500).unwrap());
    }

    #[test]
    fn stolen_certificate_with_foreign_key() {
        let (ca, honest, thief) = setup();
        let msg = SignedMessage::forge(&honest.identity, &thief, payload(), 1_000);
        let strict = PkiPolicy::new(ca.public_key(), PkiMode::Strict);
        let permissive = PkiPolicy::new(ca.public_key(), PkiMode::Permissive);
        assert!(!pki_verify(&msg, &strict, 1_000).unwrap());
        assert!(pki_verify(&msg, &permissive, 1_000).unwrap());
    }

    #[test]
    fn stale_and_tampered_messages_fail() {
        let (ca, honest, _) = setup();
        let policy = PkiPolicy::new(ca.public_key(), PkiMode::Strict);
        let msg = SignedMessage::sign(&honest, payload(), 1_000);
        assert!(pki_verify(&msg, &policy, 6_000).unwrap());
        assert!(!pki_verify(&msg, &policy, 6_001).unwrap());

        let mut replayed = msg.clone();
        replayed.timestamp_ms = 5_000;
        assert!(!pki_verify(&replayed, &policy, 5_000).unwrap());

        let mut moved = msg.clone();
        moved.payload[0] ^= 1;
        assert!(!pki_verify(&moved, &policy, 1_000).unwrap());

        let rogue = CertificateAuthority::from_seed(&[4; 32]).issue(b"veh-1", &[2; 32]);
        let fake = SignedMessage::sign(&rogue, payload(), 1_000);
        assert!(!pki_verify(&fake, &PkiPolicy::new(ca.public_key(), PkiMode::Permissive), 1_000).unwrap());
    }

    #[test]
    fn wire_layout() {
        let (_, honest, _) = setup();
        let msg = SignedMessage::sign(&honest, payload(), 0x0102_0304_0506_0708);
        let bytes = msg.encode();
        assert_eq!(&bytes[..4], &[0, 0, 0, 5]);
        assert_eq!(&bytes[4..9], b"veh-1");
        let m_len = u32::from_be_bytes(bytes[9..13].try_into().unwrap()) as usize;
        assert_eq!(m_len, 24 + 5);
        assert_eq!(&bytes[13..21], &0.1f64.to_be_bytes());
        let t_at = 13 + m_len + 4 + 64;
        assert_eq!(&bytes[t_at..t_at + 4], &[0, 0, 0, 8]);
        assert_eq!(&bytes[t_at + 4..t_at + 12], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(SignedMessage::decode(&bytes).unwrap(), msg);
        assert_eq!(msg.beacon().unwrap().body, b"hello");
    }

    #[test]
    fn malformed_frames_are_errors() {
        let (ca, honest, _) = setup();
        let policy = PkiPolicy::new(ca.public_key(), PkiMode::Strict);
        let bytes = SignedMessage::sign(&honest, payload(), 0).encode();
        assert!(matches!(pki_verify_bytes(&bytes[..bytes.len() - 1], &policy, 0), Err(Error::Malformed(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(SignedMessage::decode(&extra).is_err());
        let short = SignedMessage::sign(&honest, vec![0; 10], 0);
        assert!(matches!(short.beacon(), Err(Error::MalformedBeacon(_))));
    }

    proptest! {
        #[test]
        fn frames_round_trip(id in proptest::collection::vec(any::<u8>(), 0..40),
                             body in proptest::collection::vec(any::<u8>(), 0..200),
                             ts in any::<u64>()) {
            let msg = SignedMessage {
                id,
                payload: body,
                signature: vec![7; 64],
                timestamp_ms: ts,
                certificate: vec![9; 128],
            };
            prop_assert_eq!(SignedMessage::decode(&msg.encode()).unwrap(), msg);
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
            let _ = SignedMessage::decode(&bytes);
        }
    }
}
