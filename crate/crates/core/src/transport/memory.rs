use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::time::Duration;

use super::{decode, encode, Direction, Frame, Transcript, Transport};
use crate::error::{Error, Result};
use crate::message::ProtocolMessage;

/// In-process endpoint. Frames travel as the same bytes TCP would carry.
#[derive(Debug)]
pub struct MemoryEndpoint {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    transcript: Transcript,
}

/// Two connected endpoints (conventionally A first, B second).
pub fn memory_pair() -> (MemoryEndpoint, MemoryEndpoint) {
    let (tx_ab, rx_ab) = channel();
    let (tx_ba, rx_ba) = channel();
    (
        MemoryEndpoint { tx: tx_ab, rx: rx_ba, transcript: Transcript::default() },
        MemoryEndpoint { tx: tx_ba, rx: rx_ab, transcript: Transcript::default() },
    )
}

impl Transport for MemoryEndpoint {
    fn send(&mut self, msg: &ProtocolMessage) -> Result<()> {
        let bytes = encode(msg)?.to_bytes();
        self.transcript.record(Direction::Sent, &bytes);
        self.tx.send(bytes).map_err(|_| Error::Disconnected)
    }

    fn receive(&mut self, timeout: Option<Duration>) -> Result<ProtocolMessage> {
        let bytes = match timeout {
            None => self.rx.recv().map_err(|_| Error::Disconnected)?,
            Some(d) if d.is_zero() => self.rx.try_recv().map_err(|e| match e {
                TryRecvError::Empty => Error::Timeout,
                TryRecvError::Disconnected => Error::Disconnected,
            })?,
            Some(d) => self.rx.recv_timeout(d).map_err(|e| match e {
                RecvTimeoutError::Timeout => Error::Timeout,
                RecvTimeoutError::Disconnected => Error::Disconnected,
            })?,
        };
        self.transcript.record(Direction::Received, &bytes);
        decode(&Frame::parse(&bytes)?)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::ComparisonOutcome;

    #[test]
    fn send_then_receive() {
        let (mut a, mut b) = memory_pair();
        let msg = ProtocolMessage::Outcome { result: ComparisonOutcome::Greater };
        a.send(&msg).unwrap();
        assert_eq!(b.receive(Some(Duration::from_secs(1))).unwrap(), msg);
        assert_eq!(a.transcript().len(), 1);
        assert_eq!(b.transcript().entries[0].0, Direction::Received);
    }

    #[test]
    fn empty_channel_times_out() {
        let (_a, mut b) = memory_pair();
        assert!(matches!(b.receive(Some(Duration::ZERO)), Err(Error::Timeout)));
        assert!(matches!(b.receive(Some(Duration::from_millis(5))), Err(Error::Timeout)));
    }

    #[test]
    fn fifo_order() {
        let (mut a, mut b) = memory_pair();
        let m1 = ProtocolMessage::AuctionResult { shares: vec![1] };
        let m2 = ProtocolMessage::AuctionResult { shares: vec![2] };
        a.send(&m1).unwrap();
        a.send(&m2).unwrap();
        assert_eq!(b.receive(None).unwrap(), m1);
        assert_eq!(b.receive(None).unwrap(), m2);
    }

    #[test]
    fn dropped_peer_is_a_disconnect() {
        let (a, mut b) = memory_pair();
        drop(a);
        assert!(matches!(b.receive(None), Err(Error::Disconnected)));
        assert!(matches!(
            b.send(&ProtocolMessage::AuctionResult { shares: vec![] }),
            Err(Error::Disconnected)
        ));
    }
}
