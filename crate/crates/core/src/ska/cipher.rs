use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::Sha256;
use x25519_dalek::{PublicKey as KexPublic, StaticSecret};

use crate::auth::{KeyPair, PublicKeys};
use crate::error::{Error, Result};

/// Public-key encryption of protocol payloads.
pub trait PublicKeyCipher: Send + Sync + fmt::Debug {
    fn seal(&self, recipient: &PublicKeys, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>>;
    fn open(&self, keys: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>>;
}

/// Ephemeral X25519, HKDF-SHA256 and ChaCha20-Poly1305.
///
/// Output is the 32-byte ephemeral public key followed by the AEAD ciphertext.
/// Each message uses a fresh key, so the nonce is fixed at zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct SealedBox;

const INFO: &[u8] = b"ska sealed box v1";

fn box_key(shared: &[u8; 32], eph: &[u8; 32], recipient: &[u8; 32]) -> Result<ChaCha20Poly1305> {
    let mut info = Vec::with_capacity(INFO.len() + 64);
    info.extend_from_slice(INFO);
    info.extend_from_slice(eph);
    info.extend_from_slice(recipient);
    let mut okm = [0u8; 32];
    Hkdf::<Sha256>::new(None, shared)
        .expand(&info, &mut okm)
        .map_err(|e| Error::Crypto(e.to_string()))?;
    Ok(ChaCha20Poly1305::new(Key::from_slice(&okm)))
}

impl PublicKeyCipher for SealedBox {
    fn seal(&self, recipient: &PublicKeys, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let eph = StaticSecret::from(seed);
        let eph_pub = KexPublic::from(&eph).to_bytes();
        let shared = eph.diffie_hellman(&KexPublic::from(recipient.kex));
        let aead = box_key(shared.as_bytes(), &eph_pub, &recipient.kex)?;
        let ct = aead
            .encrypt(Nonce::from_slice(&[0u8; 12]), plaintext)
            .map_err(|e| Error::Crypto(e.to_string()))?;
        let mut out = eph_pub.to_vec();
        out.extend_from_slice(&ct);
        Ok(out)
    }

    fn open(&self, keys: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>> {
        if ciphertext.len() < 32 + 16 {
            return Err(Error::Crypto("sealed box too short".into()));
        }
        let eph_pub: [u8; 32] = ciphertext[..32].try_into().unwrap();
        let shared = keys.kex_secret().diffie_hellman(&KexPublic::from(eph_pub));
        let aead = box_key(shared.as_bytes(), &eph_pub, &keys.public().kex)?;
        aead.decrypt(Nonce::from_slice(&[0u8; 12]), &ciphertext[32..])
            .map_err(|_| Error::Crypto("sealed box failed to open".into()))
    }
}

/// Pass-through cipher for deterministic protocol tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullCipher;

impl PublicKeyCipher for NullCipher {
    fn seal(&self, _recipient: &PublicKeys, plaintext: &[u8], _rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        Ok(plaintext.to_vec())
    }

    fn open(&self, _keys: &KeyPair, ciphertext: &[u8]) -> Result<Vec<u8>> {
        Ok(ciphertext.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sealed_box_round_trip_and_key_binding() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let bob = KeyPair::from_seed(&[2; 32]);
        let eve = KeyPair::from_seed(&[3; 32]);
        let ct = SealedBox.seal(&bob.public(), b"secret", &mut rng).unwrap();
        assert_ne!(&ct[32..], b"secret");
        assert_eq!(SealedBox.open(&bob, &ct).unwrap(), b"secret");
        assert!(SealedBox.open(&eve, &ct).is_err());
        let mut flipped = ct.clone();
        flipped[40] ^= 1;
        assert!(SealedBox.open(&bob, &flipped).is_err());
        assert!(SealedBox.open(&bob, &ct[..20]).is_err());
    }

    #[test]
    fn null_cipher_is_identity() {
        let k = KeyPair::from_seed(&[1; 32]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ct = NullCipher.seal(&k.public(), b"abc", &mut rng).unwrap();
        assert_eq!(NullCipher.open(&k, &ct).unwrap(), b"abc");
    }
}
