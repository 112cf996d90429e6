//! Sealed-bid auction run by two non-colluding servers.
//!
//! A (the auction house, holding the secret key) and B each keep one half
//! of the current highest bid. Every new bid arrives as two share halves,
//! is compared against the high bid with the XOR-free protocol, and
//! replaces it on `GREATER`. Ties keep the incumbent. Bid values are only
//! opened when the auction closes.

use std::sync::Arc;

use crate::arith::SeededRng;
use crate::error::{Error, Result};
use crate::keygen::{PublicKey, SecretKey};
use crate::message::ProtocolMessage;
use crate::protocols::{run_comparison_with, ComparisonOutcome, P2Schedule, PartySession, Variant};
use crate::sharing::{reconstruct_integer, share_integer, SharedInteger};
use crate::transport::{memory_pair, Transport};

/// One server's view of the auction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionState {
    round: u64,
    high: SharedInteger,
    history: Vec<(u64, ComparisonOutcome)>,
}

impl AuctionState {
    /// Number of accepted bids so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn high_shares(&self) -> &SharedInteger {
        &self.high
    }

    /// `(round, outcome)` for every accepted bid, rounds counted from 1.
    pub fn history(&self) -> &[(u64, ComparisonOutcome)] {
        &self.history
    }
}

/// A bid split into the halves sent to A and to B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidSubmission {
    pub bidder_id: String,
    pub share_for_a: SharedInteger,
    pub share_for_b: SharedInteger,
}

impl BidSubmission {
    /// What an honest bidder does: share `value` bitwise with its own randomness.
    pub fn from_value(bidder_id: impl Into<String>, value: u64, l: u32, u: u64, rng: &mut SeededRng) -> Result<Self> {
        let (share_for_a, share_for_b) = share_integer(value, l, u, rng)?;
        Ok(BidSubmission { bidder_id: bidder_id.into(), share_for_a, share_for_b })
    }

    /// The two `AuctionBid` messages, for A and for B.
    pub fn messages(&self) -> (ProtocolMessage, ProtocolMessage) {
        let msg = |half: &SharedInteger| ProtocolMessage::AuctionBid {
            bidder_id: self.bidder_id.clone(),
            shares: half.residues(),
        };
        (msg(&self.share_for_a), msg(&self.share_for_b))
    }

    pub fn from_messages(for_a: &ProtocolMessage, for_b: &ProtocolMessage, u: u64) -> Result<Self> {
        match (for_a, for_b) {
            (
                ProtocolMessage::AuctionBid { bidder_id: id_a, shares: shares_a },
                ProtocolMessage::AuctionBid { bidder_id: id_b, shares: shares_b },
            ) => {
                if id_a != id_b {
                    return Err(Error::Protocol(format!("bid halves name bidders {id_a:?} and {id_b:?}")));
                }
                Ok(BidSubmission {
                    bidder_id: id_a.clone(),
                    share_for_a: SharedInteger::from_residues(shares_a, u)?,
                    share_for_b: SharedInteger::from_residues(shares_b, u)?,
                })
            }
            (a, b) => Err(Error::Protocol(format!("expected two AuctionBid messages, got {} and {}", a.kind(), b.kind()))),
        }
    }
}

/// Both servers of one auction, driven in-process.
#[derive(Debug)]
pub struct Auction {
    pk: Arc<PublicKey>,
    sk: Arc<SecretKey>,
    l: u32,
    seed: u64,
    audit: bool,
    state_a: AuctionState,
    state_b: AuctionState,
    leader: Option<(u64, String)>,
}

impl Auction {
    /// Opens an auction for `l`-bit bids with the high bid set to 0.
    pub fn open(pk: Arc<PublicKey>, sk: Arc<SecretKey>, l: u32, seed: u64) -> Result<Self> {
        let u = pk.plain_modulus();
        if l == 0 || l >= 62 || u < 1u64 << (l + 1) {
            return Err(Error::Parameter(format!("u = {u} is too small for {l}-bit bids")));
        }
        let (high_a, high_b) = share_integer(0, l, u, &mut SeededRng::with_stream(seed, 0))?;
        let state = |high| AuctionState { round: 0, high, history: Vec::new() };
        Ok(Auction {
            pk,
            sk,
            l,
            seed,
            audit: false,
            state_a: state(high_a),
            state_b: state(high_b),
            leader: None,
        })
    }

    /// Reconstructs every incoming bid before use and rejects non-bit shares.
    /// Only for testing: it reveals bids to the harness.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn bit_length(&self) -> u32 {
        self.l
    }

    pub fn state_a(&self) -> &AuctionState {
        &self.state_a
    }

    pub fn state_b(&self) -> &AuctionState {
        &self.state_b
    }

    /// Round and bidder of the current leader, `None` while the high bid is the initial 0.
    pub fn leader(&self) -> Option<(u64, &str)> {
        self.leader.as_ref().map(|(r, id)| (*r, id.as_str()))
    }

    pub fn submit_bid(&mut self, bid: &BidSubmission) -> Result<ComparisonOutcome> {
        let (mut ep_a, mut ep_b) = memory_pair();
        self.submit_bid_over(bid, &mut ep_a, &mut ep_b)
    }

    /// Compares `bid` against the high bid over the given connected
    /// endpoints and updates both states.
    pub fn submit_bid_over(
        &mut self,
        bid: &BidSubmission,
        ep_a: &mut dyn Transport,
        ep_b: &mut dyn Transport,
    ) -> Result<ComparisonOutcome> {
        let u = self.pk.plain_modulus();
        let l = self.l as usize;
        if bid.share_for_a.len() != l || bid.share_for_b.len() != l {
            return Err(Error::Domain(format!(
                "bid from {:?} has {} and {} share bits, expected {l}",
                bid.bidder_id,
                bid.share_for_a.len(),
                bid.share_for_b.len()
            )));
        }
        if self.audit {
            reconstruct_integer(&bid.share_for_a, &bid.share_for_b, u)
                .map_err(|e| Error::Integrity(format!("bid from {:?} rejected: {e}", bid.bidder_id)))?;
        }

        let round = self.state_a.round + 1;
        let mut a = PartySession::party_a(
            self.pk.clone(),
            self.sk.clone(),
            None,
            self.state_a.high.clone(),
            bid.share_for_a.clone(),
            SeededRng::with_stream(self.seed, 2 * round),
        )?;
        let mut b = PartySession::party_b(
            self.pk.clone(),
            self.state_b.high.clone(),
            bid.share_for_b.clone(),
            SeededRng::with_stream(self.seed, 2 * round + 1),
        )?;
        let outcome = run_comparison_with(Variant::P3, P2Schedule::Batched, &mut a, &mut b, ep_a, ep_b)?;

        for (state, share) in [(&mut self.state_a, &bid.share_for_a), (&mut self.state_b, &bid.share_for_b)] {
            state.round = round;
            state.history.push((round, outcome));
            if outcome.is_greater() {
                state.high = share.clone();
            }
        }
        if outcome.is_greater() {
            self.leader = Some((round, bid.bidder_id.clone()));
        }
        Ok(outcome)
    }

    /// Opens the high bid: each server sends its half to the other as an
    /// `AuctionResult` and both reconstruct.
    pub fn close(&self) -> Result<u64> {
        let (mut ep_a, mut ep_b) = memory_pair();
        ep_a.send(&ProtocolMessage::AuctionResult { shares: self.state_a.high.residues() })?;
        ep_b.send(&ProtocolMessage::AuctionResult { shares: self.state_b.high.residues() })?;
        let u = self.pk.plain_modulus();
        let open = |msg: ProtocolMessage, own: &SharedInteger| -> Result<u64> {
            match msg {
                ProtocolMessage::AuctionResult { shares } => {
                    let peer = SharedInteger::from_residues(&shares, u)?;
                    reconstruct_integer(own, &peer, u)
                        .map_err(|e| Error::Integrity(format!("high bid does not open: {e}")))
                }
                other => Err(Error::Protocol(format!("expected AuctionResult, got {}", other.kind()))),
            }
        };
        let seen_by_b = open(ep_b.receive(None)?, &self.state_b.high)?;
        let seen_by_a = open(ep_a.receive(None)?, &self.state_a.high)?;
        if seen_by_a != seen_by_b {
            return Err(Error::Integrity(format!("servers opened {seen_by_a} and {seen_by_b}")));
        }
        Ok(seen_by_a)
    }
}
