//! Secret key agreement bound to angle-of-arrival checks.
//!
//! Each side vets every inbound protocol message with PKI and the direction
//! test before continuing, and mixes both quantized angle estimates into the
//! final key.

mod cipher;
mod region;
mod session;
mod sim;

pub use cipher::{NullCipher, PublicKeyCipher, SealedBox};
pub use region::{in_vulnerable_region, VulnerableRegion};
pub use session::{
    derive_session_key, quantize_angle, AbortReason, Inbound, MessageKind, Role, SessionConfig, SessionState,
    SkaMessage, SkaSession, DEFAULT_M_BITS, RAW_KEY_LEN,
};
pub use sim::{
    pose_facing, run_handshake, simulate_mitm, symmetric_offset_point, HandshakeOutcome, HandshakeReport,
    MitmOutcome, MitmReport, Node, SkaScenario,
};
