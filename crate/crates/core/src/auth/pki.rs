//! Identities, certificates and the signature check of the PKI layer.

use std::fmt;
use std::sync::Arc;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey as KexPublic, StaticSecret};

use crate::error::{Error, Result};

/// Default timestamp freshness window.
pub const DEFAULT_FRESHNESS_MS: u64 = 5_000;

pub const PUBLIC_KEYS_LEN: usize = 64;
pub const SIGNATURE_LEN: usize = 64;
pub const CERTIFICATE_LEN: usize = PUBLIC_KEYS_LEN + SIGNATURE_LEN;

fn derive_seed(label: &[u8], seed: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(label);
    h.update(seed);
    h.finalize().into()
}

/// Public half of a node's key material: a signature key and a key-exchange key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicKeys {
    pub verify: [u8; 32],
    pub kex: [u8; 32],
}

impl fmt::Debug for PublicKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKeys({})", hex_prefix(&self.verify))
    }
}

impl PublicKeys {
    pub fn to_bytes(&self) -> [u8; PUBLIC_KEYS_LEN] {
        let mut out = [0u8; PUBLIC_KEYS_LEN];
        out[..32].copy_from_slice(&self.verify);
        out[32..].copy_from_slice(&self.kex);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != PUBLIC_KEYS_LEN {
            return Err(Error::Malformed(format!("public key block has {} bytes", bytes.len())));
        }
        let mut verify = [0u8; 32];
        let mut kex = [0u8; 32];
        verify.copy_from_slice(&bytes[..32]);
        kex.copy_from_slice(&bytes[32..]);
        Ok(Self { verify, kex })
    }
}

pub(crate) fn hex_prefix(bytes: &[u8]) -> String {
    bytes.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Private key material of one node.
#[derive(Clone)]
pub struct KeyPair {
    signing: SigningKey,
    kex: StaticSecret,
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyPair({:?})", self.public())
    }
}

impl KeyPair {
    /// Deterministic key pair from a 32-byte seed.
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        let signing = SigningKey::from_bytes(&derive_seed(b"sign", seed));
        let kex = StaticSecret::from(derive_seed(b"kex", seed));
        Self { signing, kex }
    }

    pub fn public(&self) -> PublicKeys {
        PublicKeys {
            verify: self.signing.verifying_key().to_bytes(),
            kex: KexPublic::from(&self.kex).to_bytes(),
        }
    }

    pub fn sign(&self, data: &[u8]) -> [u8; SIGNATURE_LEN] {
        self.signing.sign(data).to_bytes()
    }

    pub(crate) fn kex_secret(&self) -> &StaticSecret {
        &self.kex
    }
}

/// A pseudonymous identity certified by the CA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Identity {
    pub id: Vec<u8>,
    pub public_key: PublicKeys,
    /// CA signature over the length-prefixed `id` followed by `public_key`.
    pub certificate: [u8; SIGNATURE_LEN],
}

impl Identity {
    /// Certificate field as carried on the wire: public keys then CA signature.
    pub fn certificate_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CERTIFICATE_LEN);
        out.extend_from_slice(&self.public_key.to_bytes());
        out.extend_from_slice(&self.certificate);
        out
    }

    pub fn from_wire(id: &[u8], certificate: &[u8]) -> Result<Self> {
        if certificate.len() != CERTIFICATE_LEN {
            return Err(Error::Malformed(format!("certificate has {} bytes", certificate.len())));
        }
        let public_key = PublicKeys::from_bytes(&certificate[..PUBLIC_KEYS_LEN])?;
        let mut sig = [0u8; SIGNATURE_LEN];
        sig.copy_from_slice(&certificate[PUBLIC_KEYS_LEN..]);
        Ok(Self {
            id: id.to_vec(),
            public_key,
            certificate: sig,
        })
    }
}

fn certificate_body(id: &[u8], public_key: &PublicKeys) -> Vec<u8> {
    let mut body = Vec::with_capacity(4 + id.len() + PUBLIC_KEYS_LEN);
    body.extend_from_slice(&(id.len() as u32).to_be_bytes());
    body.extend_from_slice(id);
    body.extend_from_slice(&public_key.to_bytes());
    body
}

/// An identity together with its private keys.
#[derive(Debug, Clone)]
pub struct Credentials {
    pub identity: Identity,
    pub keys: KeyPair,
}

/// Certificate authority issuing identities.
#[derive(Debug, Clone)]
pub struct CertificateAuthority {
    key: SigningKey,
}

impl CertificateAuthority {
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        Self {
            key: SigningKey::from_bytes(&derive_seed(b"ca", seed)),
        }
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.key.verifying_key().to_bytes()
    }

    pub fn certify(&self, id: &[u8], public_key: PublicKeys) -> Identity {
        let certificate = self.key.sign(&certificate_body(id, &public_key)).to_bytes();
        Identity {
            id: id.to_vec(),
            public_key,
            certificate,
        }
    }

    /// Issues a fresh identity whose keys are derived from `key_seed`.
    pub fn issue(&self, id: &[u8], key_seed: &[u8; 32]) -> Credentials {
        let keys = KeyPair::from_seed(key_seed);
        Credentials {
            identity: self.certify(id, keys.public()),
            keys,
        }
    }
}

fn ed25519_verify(public_key: &[u8; 32], data: &[u8], signature: &[u8]) -> bool {
    let Ok(sig) = <[u8; SIGNATURE_LEN]>::try_from(signature) else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(public_key) else {
        return false;
    };
    vk.verify(data, &Signature::from_bytes(&sig)).is_ok()
}

/// Checks a certificate against the CA key.
pub fn verify_certificate(identity: &Identity, ca_public_key: &[u8; 32]) -> bool {
    ed25519_verify(
        ca_public_key,
        &certificate_body(&identity.id, &identity.public_key),
        &identity.certificate,
    )
}

/// Payload signature check used by the PKI layer.
pub trait SignatureVerifier: Send + Sync + fmt::Debug {
    fn verify(&self, public_key: &PublicKeys, data: &[u8], signature: &[u8]) -> bool;
}

/// Ed25519 signature verification.
#[derive(Debug, Clone, Copy, Default)]
pub struct Ed25519Verifier;

impl SignatureVerifier for Ed25519Verifier {
    fn verify(&self, public_key: &PublicKeys, data: &[u8], signature: &[u8]) -> bool {
        ed25519_verify(&public_key.verify, data, signature)
    }
}

/// Accepts every payload signature of the right length.
///
/// Models an adversary holding a genuine certificate whose payload signatures
/// the verifier cannot tell apart from the owner's. Certificates are still
/// checked against the CA.
#[derive(Debug, Clone, Copy, Default)]
pub struct PermissiveOracle;

impl SignatureVerifier for PermissiveOracle {
    fn verify(&self, _public_key: &PublicKeys, _data: &[u8], signature: &[u8]) -> bool {
        signature.len() == SIGNATURE_LEN
    }
}

/// Which payload verifier a [`PkiPolicy`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PkiMode {
    #[default]
    Strict,
    Permissive,
}

/// CA key, payload verifier and freshness window.
#[derive(Debug, Clone)]
pub struct PkiPolicy {
    pub ca_public_key: [u8; 32],
    pub freshness_ms: u64,
    pub verifier: Arc<dyn SignatureVerifier>,
}

impl PkiPolicy {
    pub fn new(ca_public_key: [u8; 32], mode: PkiMode) -> Self {
        let verifier: Arc<dyn SignatureVerifier> = match mode {
            PkiMode::Strict => Arc::new(Ed25519Verifier),
            PkiMode::Permissive => Arc::new(PermissiveOracle),
        };
        Self {
            ca_public_key,
            freshness_ms: DEFAULT_FRESHNESS_MS,
            verifier,
        }
    }

    pub fn with_freshness(mut self, freshness_ms: u64) -> Self {
        self.freshness_ms = freshness_ms;
        self
    }

    pub fn is_fresh(&self, timestamp_ms: u64, now_ms: u64) -> bool {
        now_ms.abs_diff(timestamp_ms) <= self.freshness_ms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificates_verify_only_for_the_certified_key() {
        let ca = CertificateAuthority::from_seed(&[1; 32]);
        let alice = ca.issue(b"alice", &[2; 32]);
        assert!(verify_certificate(&alice.identity, &ca.public_key()));

        let mut swapped = alice.identity.clone();
        swapped.public_key = KeyPair::from_seed(&[3; 32]).public();
        assert!(!verify_certificate(&swapped, &ca.public_key()));

        let mut renamed = alice.identity.clone();
        renamed.id = b"mallory".to_vec();
        assert!(!verify_certificate(&renamed, &ca.public_key()));

        let rogue = CertificateAuthority::from_seed(&[9; 32]);
        assert!(!verify_certificate(&alice.identity, &rogue.public_key()));
    }

    #[test]
    fn verifiers_disagree_on_foreign_signatures() {
        let owner = KeyPair::from_seed(&[4; 32]);
        let thief = KeyPair::from_seed(&[5; 32]);
        let sig = thief.sign(b"payload");
        assert!(!Ed25519Verifier.verify(&owner.public(), b"payload", &sig));
        assert!(PermissiveOracle.verify(&owner.public(), b"payload", &sig));
        assert!(Ed25519Verifier.verify(&owner.public(), b"payload", &owner.sign(b"payload")));
        assert!(!PermissiveOracle.verify(&owner.public(), b"payload", &sig[..10]));
    }

    #[test]
    fn certificate_wire_round_trip() {
        let ca = CertificateAuthority::from_seed(&[1; 32]);
        let id = ca.issue(b"node-7", &[7; 32]).identity;
        let back = Identity::from_wire(&id.id, &id.certificate_bytes()).unwrap();
        assert_eq!(back, id);
        assert!(Identity::from_wire(b"x", &[0; 10]).is_err());
    }

    #[test]
    fn key_derivation_is_deterministic() {
        assert_eq!(KeyPair::from_seed(&[8; 32]).public(), KeyPair::from_seed(&[8; 32]).public());
        assert_ne!(KeyPair::from_seed(&[8; 32]).public(), KeyPair::from_seed(&[6; 32]).public());
    }
}
