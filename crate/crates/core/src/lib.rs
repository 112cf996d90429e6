//! Two-party comparison of additively shared integers.
//!
//! Parties A and B each hold additive shares (over `Z_u`) of the bits of two
//! `l`-bit integers X and Y and jointly decide whether `Y > X` without
//! revealing anything else. Two protocols are provided over the same
//! small-plaintext homomorphic cipher:
//!
//! * `P1`, the baseline that first computes shared XORs of every bit pair
//!   (two interactive share-product rounds per bit), and
//! * `P3`, which replaces the XOR with locally computed signed differences
//!   weighted by powers of two and so needs no extra interaction.
//!
//! Around them sit key generation, a framed transport (in-process and TCP),
//! an auction orchestrator and an operation-counting benchmark.

pub mod arith;
pub mod auction;
pub mod audit;
pub mod bench;
pub mod cipher;
pub mod counters;
pub mod error;
pub mod keygen;
pub mod message;
pub mod protocols;
pub mod sharing;
pub mod transport;

pub use arith::SeededRng;
pub use cipher::{Ciphertext, Decryptor};
pub use counters::OpCounters;
pub use error::{Error, Result};
pub use keygen::{generate_keys, validate_keys, KeyFile, Params, PublicKey, SecretKey};
pub use message::ProtocolMessage;
pub use protocols::{run_comparison, ComparisonOutcome, P2Schedule, PartySession, Role, Variant};
pub use sharing::{share_integer, BitShare, SharedInteger};
