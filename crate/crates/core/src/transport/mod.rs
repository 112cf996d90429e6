//! Length-prefixed framing plus two delivery mechanisms: an in-process
//! channel pair for tests and harnesses, and TCP for separate processes.
//!
//! No transport-level encryption is applied; the parties are assumed
//! semi-honest and the protocol's own ciphertexts are what is studied.

mod frame;
mod memory;
mod tcp;

use std::time::Duration;

pub use frame::{decode, encode, Frame, MAX_FRAME_LEN};
pub use memory::{memory_pair, MemoryEndpoint};
pub use tcp::{TcpEndpoint, PROTOCOL_VERSION};

use crate::error::Result;
use crate::message::ProtocolMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Sent,
    Received,
}

/// Every frame an endpoint has sent or received, in order, as raw bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<(Direction, Vec<u8>)>,
}

impl Transcript {
    pub fn record(&mut self, direction: Direction, bytes: &[u8]) {
        self.entries.push((direction, bytes.to_vec()));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sent(&self) -> impl Iterator<Item = &[u8]> {
        self.entries
            .iter()
            .filter(|(d, _)| *d == Direction::Sent)
            .map(|(_, b)| b.as_slice())
    }

    /// Message-type tags in order of appearance.
    pub fn tags(&self) -> Vec<u8> {
        self.entries.iter().map(|(_, b)| b[4]).collect()
    }
}

/// One side of a reliable, ordered two-party link.
pub trait Transport {
    fn send(&mut self, msg: &ProtocolMessage) -> Result<()>;

    /// Blocks up to `timeout` (forever when `None`).
    fn receive(&mut self, timeout: Option<Duration>) -> Result<ProtocolMessage>;

    fn transcript(&self) -> &Transcript;
}
