//! Every message exchanged between the two parties (and by bidders).

use crate::cipher::Ciphertext;
use crate::protocols::ComparisonOutcome;

/// Wire messages. Batches carry exactly one ciphertext per compared bit
/// (or per scheduled share-product round).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    /// A → B: encryptions of A's inputs to share products.
    P2Request { cs: Vec<Ciphertext> },
    /// B → A: encryptions of `product − r`.
    P2Response { cs: Vec<Ciphertext> },
    /// A → B: encryptions of A's shares of every `c_i`.
    CBatch { cs: Vec<Ciphertext> },
    /// B → A: blinded, permuted `γ_i`.
    GammaBatch { gammas: Vec<Ciphertext> },
    /// A → B: the comparison result.
    Outcome { result: ComparisonOutcome },
    /// Bidder → party: one half of a bid's bit shares.
    AuctionBid { bidder_id: String, shares: Vec<u64> },
    /// Party → party: high-bid shares opened when the auction closes.
    AuctionResult { shares: Vec<u64> },
}

impl ProtocolMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ProtocolMessage::P2Request { .. } => "P2Request",
            ProtocolMessage::P2Response { .. } => "P2Response",
            ProtocolMessage::CBatch { .. } => "CBatch",
            ProtocolMessage::GammaBatch { .. } => "GammaBatch",
            ProtocolMessage::Outcome { .. } => "Outcome",
            ProtocolMessage::AuctionBid { .. } => "AuctionBid",
            ProtocolMessage::AuctionResult { .. } => "AuctionResult",
        }
    }
}
