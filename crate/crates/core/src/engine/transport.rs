//! Agent wire protocol and transports.
//!
//! One JSON object per line in each direction. Requests carry
//! `conversation_id`, `turn` and `utterance`; responses carry `utterance`
//! and, for agents that expose them, the `actions` they meant.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRequest {
    pub conversation_id: String,
    pub turn: usize,
    pub utterance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentResponse {
    pub utterance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<String>>,
    /// Set by agents that could not process the request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AgentResponse {
    pub fn protocol_error(message: impl Into<String>) -> Self {
        AgentResponse {
            utterance: String::new(),
            actions: None,
            error: Some(message.into()),
        }
    }
}

/// An agent reachable in-process. Takes and returns one protocol line.
pub trait AgentService: Send + Sync {
    fn handle_line(&self, line: &str) -> String;
}

/// Functions an agent declares it supports; each is worth 4 reward points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Capability {
    Disclose,
    Refine,
    Inquire,
    Navigate,
    MixedInitiative,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::Disclose,
        Capability::Refine,
        Capability::Inquire,
        Capability::Navigate,
        Capability::MixedInitiative,
    ];
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Capability {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Capability::ALL
            .into_iter()
            .find(|c| c.to_string().to_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown capability `{s}`")))
    }
}

#[derive(Clone)]
pub enum Transport {
    /// A child process per conversation, spoken to over its standard streams.
    Stdio { program: String, args: Vec<String> },
    /// One TCP connection per conversation.
    Tcp { address: String },
    /// An in-process agent; requests still pass through the JSON encoding.
    Loopback(Arc<dyn AgentService>),
}

impl fmt::Debug for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transport::Stdio { program, args } => write!(f, "Stdio({program} {})", args.join(" ")),
            Transport::Tcp { address } => write!(f, "Tcp({address})"),
            Transport::Loopback(_) => f.write_str("Loopback"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentEndpoint {
    pub name: String,
    pub transport: Transport,
    pub timeout: Duration,
    pub capabilities: BTreeSet<Capability>,
}

impl AgentEndpoint {
    /// Endpoint with the default timeout and all capabilities declared.
    pub fn new(name: impl Into<String>, transport: Transport) -> Self {
        AgentEndpoint {
            name: name.into(),
            transport,
            timeout: DEFAULT_TIMEOUT,
            capabilities: Capability::ALL.into_iter().collect(),
        }
    }

    pub fn with_capabilities(mut self, capabilities: impl IntoIterator<Item = Capability>) -> Result<Self> {
        self.capabilities = capabilities.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.capabilities.is_empty() {
            return Err(Error::Config(format!("agent `{}` declares no capability", self.name)));
        }
        Ok(())
    }

    /// Opens a fresh connection for one conversation.
    pub fn connect(&self) -> Result<Box<dyn Connection>> {
        match &self.transport {
            Transport::Stdio { program, args } => Ok(Box::new(StdioConnection::spawn(program, args, self.timeout)?)),
            Transport::Tcp { address } => Ok(Box::new(TcpConnection::connect(address, self.timeout)?)),
            Transport::Loopback(service) => Ok(Box::new(LoopbackConnection(Arc::clone(service)))),
        }
    }
}

/// A conversation-scoped channel to an agent.
pub trait Connection {
    fn exchange(&mut self, request: &AgentRequest) -> Result<AgentResponse>;
}

fn encode(request: &AgentRequest) -> String {
    serde_json::to_string(request).expect("request serializes")
}

fn decode(line: &str) -> Result<AgentResponse> {
    let response: AgentResponse = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Protocol(format!("malformed response: {e}")))?;
    match response.error {
        Some(e) => Err(Error::Protocol(format!("agent reported: {e}"))),
        None => Ok(response),
    }
}

struct LoopbackConnection(Arc<dyn AgentService>);

impl Connection for LoopbackConnection {
    fn exchange(&mut self, request: &AgentRequest) -> Result<AgentResponse> {
        decode(&self.0.handle_line(&encode(request)))
    }
}

struct StdioConnection {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl StdioConnection {
    fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Protocol(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioConnection {
            child,
            stdin,
            lines,
            timeout,
        })
    }
}

impl Connection for StdioConnection {
    fn exchange(&mut self, request: &AgentRequest) -> Result<AgentResponse> {
        writeln!(self.stdin, "{}", encode(request))
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Protocol(format!("agent disconnected: {e}")))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => decode(&line),
            Ok(Err(e)) => Err(Error::Protocol(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Protocol(format!("no response within {:?}", self.timeout))),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Protocol("agent closed its output".into())),
        }
    }
}

impl Drop for StdioConnection {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct TcpConnection {
    writer: TcpStream,
    reader: BufReader<TcpStream>,
}

impl TcpConnection {
    fn connect(address: &str, timeout: Duration) -> Result<Self> {
        let fail = |e: std::io::Error| Error::Protocol(format!("cannot reach {address}: {e}"));
        let addr = address
            .to_socket_addrs()
            .map_err(fail)?
            .next()
            .ok_or_else(|| Error::Protocol(format!("{address} resolves to nothing")))?;
        let stream = TcpStream::connect_timeout(&addr, timeout).map_err(fail)?;
        stream.set_read_timeout(Some(timeout)).map_err(fail)?;
        stream.set_write_timeout(Some(timeout)).map_err(fail)?;
        stream.set_nodelay(true).map_err(fail)?;
        let reader = BufReader::new(stream.try_clone().map_err(fail)?);
        Ok(TcpConnection { writer: stream, reader })
    }
}

impl Connection for TcpConnection {
    fn exchange(&mut self, request: &AgentRequest) -> Result<AgentResponse> {
        writeln!(self.writer, "{}", encode(request)).map_err(|e| Error::Protocol(format!("send failed: {e}")))?;
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(Error::Protocol("agent closed the connection".into())),
            Ok(_) => decode(&line),
            Err(e) => Err(Error::Protocol(format!("receive failed: {e}"))),
        }
    }
}

/// Answers protocol lines from `input` until it closes.
pub fn serve_lines(service: &dyn AgentService, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", service.handle_line(&line))?;
        output.flush()?;
    }
    Ok(())
}

/// Serves every connection on its own thread until the listener fails.
pub fn serve_tcp(service: Arc<dyn AgentService>, listener: std::net::TcpListener) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let service = Arc::clone(&service);
        std::thread::spawn(move || {
            let Ok(reader) = stream.try_clone() else { return };
            let _ = serve_lines(service.as_ref(), BufReader::new(reader), stream);
        });
    }
    Ok(())
}
