//! Angle-of-arrival assisted authentication and key agreement for vehicular
//! networks.
//!
//! A receiver with a uniform linear array estimates the direction of each
//! incoming message from its pilot tones, compares it with the direction
//! implied by the GPS position the sender reports, and accepts only messages
//! that pass both the signature check and a Wald test on the angle. The same
//! check guards every step of a public-key handshake whose final key mixes in
//! both quantized angle estimates.
//!
//! - [`geometry`]: ULA steering vectors, bearings and array poses.
//! - [`channel`]: Ricean MIMO channel and pilot observations.
//! - [`estimation`]: ML angle estimate, Cramer-Rao bound, Fisher oracle.
//! - [`auth`]: PKI, beacon framing, Wald test and the receiver pipeline.
//! - [`ska`]: the key-agreement state machine and relay simulations.
//! - [`harness`]: Monte Carlo experiments and CSV output.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auth;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod ska;
pub mod stats;
