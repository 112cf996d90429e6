use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use super::{decode, encode, Direction, Frame, Transcript, Transport};
use crate::error::{Error, Result};
use crate::message::ProtocolMessage;

/// Sent by both sides right after connecting.
pub const PROTOCOL_VERSION: u32 = 0x0000_0001;

const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(30);

/// TCP endpoint. Party A listens and accepts; party B connects.
#[derive(Debug)]
pub struct TcpEndpoint {
    stream: TcpStream,
    transcript: Transcript,
}

fn map_io(e: io::Error) -> Error {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout,
        io::ErrorKind::UnexpectedEof
        | io::ErrorKind::ConnectionReset
        | io::ErrorKind::ConnectionAborted
        | io::ErrorKind::BrokenPipe => Error::Disconnected,
        _ => Error::Io(e),
    }
}

impl TcpEndpoint {
    pub fn accept(listener: &TcpListener, timeout: Option<Duration>) -> Result<Self> {
        Self::accept_with_version(listener, PROTOCOL_VERSION, timeout)
    }

    /// Waits for one peer and runs the version handshake.
    pub fn accept_with_version(listener: &TcpListener, version: u32, timeout: Option<Duration>) -> Result<Self> {
        let deadline = timeout.map(|t| Instant::now() + t);
        listener.set_nonblocking(true)?;
        let stream = loop {
            match listener.accept() {
                Ok((stream, _)) => break stream,
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if deadline.is_some_and(|d| Instant::now() >= d) {
                        return Err(Error::Timeout);
                    }
                    thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(Error::Io(e)),
            }
        };
        listener.set_nonblocking(false)?;
        stream.set_nonblocking(false)?;
        Self::handshake(stream, version, timeout)
    }

    pub fn connect(addr: impl ToSocketAddrs, timeout: Option<Duration>) -> Result<Self> {
        Self::connect_with_version(addr, PROTOCOL_VERSION, timeout)
    }

    /// Connects, retrying refused connections until `timeout` elapses.
    pub fn connect_with_version(addr: impl ToSocketAddrs, version: u32, timeout: Option<Duration>) -> Result<Self> {
        let addrs: Vec<_> = addr.to_socket_addrs()?.collect();
        let deadline = timeout.map(|t| Instant::now() + t);
        loop {
            let mut last_err = None;
            for a in &addrs {
                match TcpStream::connect(a) {
                    Ok(stream) => return Self::handshake(stream, version, timeout),
                    Err(e) => last_err = Some(e),
                }
            }
            if deadline.is_none_or(|d| Instant::now() >= d) {
                return Err(last_err.map(map_io).unwrap_or(Error::Timeout));
            }
            thread::sleep(Duration::from_millis(20));
        }
    }

    fn handshake(mut stream: TcpStream, version: u32, timeout: Option<Duration>) -> Result<Self> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout.unwrap_or(DEFAULT_HANDSHAKE_TIMEOUT)))?;
        stream.write_all(&version.to_be_bytes()).map_err(map_io)?;
        let mut peer = [0u8; 4];
        stream.read_exact(&mut peer).map_err(map_io)?;
        let peer = u32::from_be_bytes(peer);
        if peer != version {
            return Err(Error::VersionMismatch { local: version, peer });
        }
        Ok(TcpEndpoint { stream, transcript: Transcript::default() })
    }

    pub fn local_addr(&self) -> Result<std::net::SocketAddr> {
        Ok(self.stream.local_addr()?)
    }
}

impl Transport for TcpEndpoint {
    fn send(&mut self, msg: &ProtocolMessage) -> Result<()> {
        let bytes = encode(msg)?.to_bytes();
        self.stream.write_all(&bytes).map_err(map_io)?;
        self.transcript.record(Direction::Sent, &bytes);
        Ok(())
    }

    /// A timeout in the middle of a frame leaves the stream unusable; the
    /// session must then be abandoned.
    fn receive(&mut self, timeout: Option<Duration>) -> Result<ProtocolMessage> {
        let timeout = timeout.map(|t| t.max(Duration::from_micros(1)));
        self.stream.set_read_timeout(timeout)?;
        let frame = Frame::read_from(&mut self.stream).map_err(|e| match e {
            Error::Io(io) => map_io(io),
            other => other,
        })?;
        let bytes = frame.to_bytes();
        self.transcript.record(Direction::Received, &bytes);
        decode(&frame)
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
