//! Chat-completion gateway with live, record and replay modes.
//!
//! Replay never touches the transport; a missing transcript is a
//! [`GatewayError::ReplayMiss`], which means fixtures drifted from the code
//! that builds the requests.

mod http;
mod store;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use orthought_core::{ChatModel, Completion, CompletionRequest};
use thiserror::Error;

pub use http::{DEFAULT_MODEL, HttpTransport, ProviderConfig, parse_chat_response};
pub use store::{TRANSCRIPT_VERSION, Transcript, TranscriptStore, cache_key};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Live,
    Record,
    Replay,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown mode {other:?} (live, record, replay)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Record => "record",
            Self::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    /// Timeouts, connection failures, 429 and 5xx; worth retrying.
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
}

/// Sends one request to a provider.
pub trait Transport: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError>;
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("replay miss: no recorded completion for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    InvalidRequest(#[from] orthought_core::chat::InvalidRequest),
    #[error("transcript store: {0}")]
    Store(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

pub struct Gateway {
    mode: Mode,
    transport: Option<Box<dyn Transport>>,
    store: Option<TranscriptStore>,
    retry: RetryPolicy,
    completions: AtomicUsize,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("store", &self.store.as_ref().map(|s| s.dir()))
            .field("completions", &self.completions())
            .finish()
    }
}

impl Gateway {
    pub fn live(transport: Box<dyn Transport>) -> Self {
        Self::build(Mode::Live, Some(transport), None)
    }

    pub fn record(transport: Box<dyn Transport>, store: TranscriptStore) -> Self {
        Self::build(Mode::Record, Some(transport), Some(store))
    }

    pub fn replay(store: TranscriptStore) -> Self {
        Self::build(Mode::Replay, None, Some(store))
    }

    /// Wires a gateway for `mode`, using the HTTP transport configured from
    /// the environment for live and record modes.
    pub fn from_env(mode: Mode, transcripts: Option<&std::path::Path>) -> Result<Self, GatewayError> {
        let store = transcripts.map(TranscriptStore::open).transpose()?;
        let http = || -> Result<Box<dyn Transport>, GatewayError> {
            let config = ProviderConfig::from_env();
            if config.api_key.is_none() {
                return Err(GatewayError::Config(
                    "no API key: set ORTHOUGHT_API_KEY or OPENAI_API_KEY".into(),
                ));
            }
            Ok(Box::new(HttpTransport::new(&config)))
        };
        match mode {
            Mode::Live => Ok(Self::live(http()?)),
            Mode::Record | Mode::Replay => {
                let store =
                    store.ok_or_else(|| GatewayError::Config(format!("{mode} mode needs a transcript directory")))?;
                if mode == Mode::Record {
                    Ok(Self::record(http()?, store))
                } else {
                    Ok(Self::replay(store))
                }
            }
        }
    }

    fn build(mode: Mode, transport: Option<Box<dyn Transport>>, store: Option<TranscriptStore>) -> Self {
        Self {
            mode,
            transport,
            store,
            retry: RetryPolicy::default(),
            completions: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Completions served so far, in any mode.
    pub fn completions(&self) -> usize {
        self.completions.load(Ordering::SeqCst)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        request.validate()?;
        let completion = match self.mode {
            Mode::Replay => {
                let store = self
                    .store
                    .as_ref()
                    .ok_or_else(|| GatewayError::Config("replay without store".into()))?;
                let digest = cache_key(request);
                store
                    .load(&digest)?
                    .ok_or(GatewayError::ReplayMiss { digest })?
                    .completion
            }
            Mode::Live => self.send_with_retry(request)?,
            Mode::Record => {
                let store = self
                    .store
                    .as_ref()
                    .ok_or_else(|| GatewayError::Config("record without store".into()))?;
                let completion = self.send_with_retry(request)?;
                store.save(request, &completion)?;
                completion
            }
        };
        self.completions.fetch_add(1, Ordering::SeqCst);
        Ok(completion)
    }

    fn send_with_retry(&self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| GatewayError::Config("no provider transport configured".into()))?;
        let mut delay = self.retry.base_delay;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts.max(1) {
            match transport.send(request) {
                Ok(c) => return Ok(c),
                Err(TransportError::Fatal(msg)) => return Err(GatewayError::Provider(msg)),
                Err(TransportError::Transient(msg)) => {
                    log::warn!("completion attempt {attempt} failed: {msg}");
                    last = msg;
                    if attempt < self.retry.attempts {
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(GatewayError::Provider(format!(
            "gave up after {} attempts: {last}",
            self.retry.attempts.max(1)
        )))
    }
}

impl ChatModel for Gateway {
    type Error = GatewayError;

    fn complete(&self, request: &CompletionRequest) -> Result<Completion, GatewayError> {
        Gateway::complete(self, request)
    }
}

/// A transport driven by a closure; used to script providers in tests and
/// fixture generation.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&CompletionRequest) -> Result<Completion, TransportError> + Send + Sync,
{
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError> {
        (self.0)(request)
    }
}
