//! Minimal HTTP GET abstraction over the network or an in-memory
//! federation.

use std::io::Read;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub host: String,
    /// Path with query string, starting with `/`.
    pub path: String,
    pub bearer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn new(status: u16, body: impl Into<Vec<u8>>) -> Self {
        HttpResponse {
            status,
            headers: Vec::new(),
            body: body.into(),
        }
    }

    pub fn with_header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.push((name.to_string(), value.into()));
        self
    }

    /// First header named `name`, compared case-insensitively.
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("transport error: {0}")]
    Other(String),
}

pub trait Transport: Send + Sync {
    fn get(&self, req: &Request) -> Result<HttpResponse, TransportError>;
}

const MAX_BODY: u64 = 32 * 1024 * 1024;

/// Blocking network transport. The scheme is configurable so a local
/// plain-HTTP test server can stand in for real hosts.
pub struct UreqTransport {
    agent: ureq::Agent,
    scheme: String,
}

impl UreqTransport {
    pub fn new(scheme: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("fedipol/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        UreqTransport {
            agent,
            scheme: scheme.to_string(),
        }
    }

    pub fn https(timeout: Duration) -> Self {
        Self::new("https", timeout)
    }
}

impl Transport for UreqTransport {
    fn get(&self, req: &Request) -> Result<HttpResponse, TransportError> {
        let url = format!("{}://{}{}", self.scheme, req.host, req.path);
        let mut call = self.agent.get(&url).header("Accept", "application/json");
        if let Some(token) = &req.bearer {
            call = call.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = call.call().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            ureq::Error::HostNotFound | ureq::Error::ConnectionFailed => TransportError::Connect(e.to_string()),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
            other => TransportError::Other(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| v.to_str().ok().map(|v| (k.as_str().to_string(), v.to_string())))
            .collect();
        let mut body = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY)
            .read_to_end(&mut body)
            .map_err(|e| TransportError::Other(e.to_string()))?;
        Ok(HttpResponse { status, headers, body })
    }
}
