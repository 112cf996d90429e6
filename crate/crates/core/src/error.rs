use thiserror::Error;

/// Errors raised anywhere in the comparison toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("timed out waiting for peer")]
    Timeout,
    #[error("peer disconnected")]
    Disconnected,
    #[error("protocol version mismatch: local {local:#010x}, peer {peer:#010x}")]
    VersionMismatch { local: u32, peer: u32 },
    #[error("key file: {0}")]
    KeyFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that happen while two parties are talking
    /// (as opposed to bad input supplied by the caller).
    pub fn is_session_failure(&self) -> bool {
        matches!(
            self,
            Error::Timeout
                | Error::Disconnected
                | Error::VersionMismatch { .. }
                | Error::Io(_)
                | Error::MalformedFrame(_)
                | Error::MalformedCiphertext(_)
                | Error::Protocol(_)
                | Error::State(_)
                | Error::Integrity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
