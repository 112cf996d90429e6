use std::io::Read;

use crate::cipher::Ciphertext;
use crate::error::{Error, Result};
use crate::message::ProtocolMessage;
use crate::protocols::ComparisonOutcome;

/// Frames larger than this are rejected before allocation.
pub const MAX_FRAME_LEN: u32 = 64 << 20;

const TAG_P2_REQUEST: u8 = 0x01;
const TAG_P2_RESPONSE: u8 = 0x02;
const TAG_C_BATCH: u8 = 0x03;
const TAG_GAMMA_BATCH: u8 = 0x04;
const TAG_OUTCOME: u8 = 0x05;
const TAG_AUCTION_BID: u8 = 0x10;
const TAG_AUCTION_RESULT: u8 = 0x11;

/// `length (u32 BE) | msg_type (u8) | payload`, with `length = 1 + |payload|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn to_bytes(&self) -> Vec<u8> {
        let length = 1 + self.payload.len() as u32;
        let mut out = Vec::with_capacity(4 + length as usize);
        out.extend_from_slice(&length.to_be_bytes());
        out.push(self.msg_type);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses exactly one frame occupying all of `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Frame> {
        let mut cursor = bytes;
        let frame = Frame::read_from(&mut cursor).map_err(|e| match e {
            Error::Io(io) => Error::MalformedFrame(format!("truncated frame: {io}")),
            other => other,
        })?;
        if !cursor.is_empty() {
            return Err(Error::MalformedFrame(format!("{} trailing bytes after frame", cursor.len())));
        }
        Ok(frame)
    }

    /// Reads one frame from a byte stream.
    pub fn read_from(reader: &mut impl Read) -> Result<Frame> {
        let mut header = [0u8; 4];
        reader.read_exact(&mut header)?;
        let length = u32::from_be_bytes(header);
        if length == 0 {
            return Err(Error::MalformedFrame("zero-length frame".into()));
        }
        if length > MAX_FRAME_LEN {
            return Err(Error::MalformedFrame(format!("frame of {length} bytes exceeds limit")));
        }
        let mut body = vec![0u8; length as usize];
        reader.read_exact(&mut body)?;
        let msg_type = body[0];
        body.remove(0);
        Ok(Frame { msg_type, payload: body })
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn count(&mut self, n: usize, what: &str) -> Result<()> {
        let n = u16::try_from(n).map_err(|_| Error::Encoding(format!("{what} length {n} exceeds 65535")))?;
        self.0.extend_from_slice(&n.to_be_bytes());
        Ok(())
    }

    fn bytes(&mut self, bytes: &[u8], what: &str) -> Result<()> {
        self.count(bytes.len(), what)?;
        self.0.extend_from_slice(bytes);
        Ok(())
    }

    fn uint(&mut self, v: u64) -> Result<()> {
        let be = v.to_be_bytes();
        let start = be.iter().position(|&b| b != 0).unwrap_or(be.len());
        self.bytes(&be[start..], "integer")
    }

    fn ciphertexts(&mut self, cs: &[Ciphertext]) -> Result<()> {
        self.count(cs.len(), "ciphertext list")?;
        cs.iter().try_for_each(|c| self.bytes(&c.to_bytes(), "integer"))
    }

    fn uints(&mut self, vs: &[u64]) -> Result<()> {
        self.count(vs.len(), "integer list")?;
        vs.iter().try_for_each(|&v| self.uint(v))
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::MalformedFrame("truncated payload".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn count(&mut self) -> Result<usize> {
        let raw = self.take(2)?;
        Ok(usize::from(u16::from_be_bytes([raw[0], raw[1]])))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.count()?;
        self.take(n)
    }

    fn minimal(&mut self) -> Result<&'a [u8]> {
        let raw = self.bytes()?;
        if raw.first() == Some(&0) {
            return Err(Error::MalformedFrame("non-minimal integer encoding".into()));
        }
        Ok(raw)
    }

    fn uint(&mut self) -> Result<u64> {
        let raw = self.minimal()?;
        if raw.len() > 8 {
            return Err(Error::MalformedFrame("share value wider than 64 bits".into()));
        }
        Ok(raw.iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b)))
    }

    fn ciphertexts(&mut self) -> Result<Vec<Ciphertext>> {
        let n = self.count()?;
        (0..n)
            .map(|_| {
                let raw = self.minimal()?;
                Ciphertext::from_bytes(raw).map_err(|e| Error::MalformedFrame(e.to_string()))
            })
            .collect()
    }

    fn uints(&mut self) -> Result<Vec<u64>> {
        let n = self.count()?;
        (0..n).map(|_| self.uint()).collect()
    }

    fn finish(self) -> Result<()> {
        if !self.0.is_empty() {
            return Err(Error::MalformedFrame(format!("{} trailing payload bytes", self.0.len())));
        }
        Ok(())
    }
}

/// Bit-exact encoding of a message into a frame.
pub fn encode(msg: &ProtocolMessage) -> Result<Frame> {
    let mut w = Writer(Vec::new());
    let msg_type = match msg {
        ProtocolMessage::P2Request { cs } => {
            w.ciphertexts(cs)?;
            TAG_P2_REQUEST
        }
        ProtocolMessage::P2Response { cs } => {
            w.ciphertexts(cs)?;
            TAG_P2_RESPONSE
        }
        ProtocolMessage::CBatch { cs } => {
            w.ciphertexts(cs)?;
            TAG_C_BATCH
        }
        ProtocolMessage::GammaBatch { gammas } => {
            w.ciphertexts(gammas)?;
            TAG_GAMMA_BATCH
        }
        ProtocolMessage::Outcome { result } => {
            w.0.push(match result {
                ComparisonOutcome::Greater => 0x01,
                ComparisonOutcome::NotGreater => 0x00,
            });
            TAG_OUTCOME
        }
        ProtocolMessage::AuctionBid { bidder_id, shares } => {
            w.bytes(bidder_id.as_bytes(), "bidder id")?;
            w.uints(shares)?;
            TAG_AUCTION_BID
        }
        ProtocolMessage::AuctionResult { shares } => {
            w.uints(shares)?;
            TAG_AUCTION_RESULT
        }
    };
    Ok(Frame { msg_type, payload: w.0 })
}

/// Strict inverse of [`encode`].
pub fn decode(frame: &Frame) -> Result<ProtocolMessage> {
    let mut r = Reader(&frame.payload);
    let msg = match frame.msg_type {
        TAG_P2_REQUEST => ProtocolMessage::P2Request { cs: r.ciphertexts()? },
        TAG_P2_RESPONSE => ProtocolMessage::P2Response { cs: r.ciphertexts()? },
        TAG_C_BATCH => ProtocolMessage::CBatch { cs: r.ciphertexts()? },
        TAG_GAMMA_BATCH => ProtocolMessage::GammaBatch { gammas: r.ciphertexts()? },
        TAG_OUTCOME => {
            let result = match r.take(1)?[0] {
                0x01 => ComparisonOutcome::Greater,
                0x00 => ComparisonOutcome::NotGreater,
                other => return Err(Error::MalformedFrame(format!("unknown outcome byte {other:#04x}"))),
            };
            ProtocolMessage::Outcome { result }
        }
        TAG_AUCTION_BID => {
            let bidder_id = std::str::from_utf8(r.bytes()?)
                .map_err(|_| Error::MalformedFrame("bidder id is not UTF-8".into()))?
                .to_owned();
            ProtocolMessage::AuctionBid { bidder_id, shares: r.uints()? }
        }
        TAG_AUCTION_RESULT => ProtocolMessage::AuctionResult { shares: r.uints()? },
        other => return Err(Error::MalformedFrame(format!("unregistered message type {other:#04x}"))),
    };
    r.finish()?;
    Ok(msg)
}
