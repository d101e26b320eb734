//! Live frame source: a TCP peer or a child process writing protocol lines
//! to stdout.

use std::io::{BufRead, BufReader, Read};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::replay::{Decoded, RecordDecoder};
use super::{EstimatedFrame, GatewayError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp://host:port`
    Tcp(String),
    /// `exec:program arg1 arg2`; arguments are split on whitespace.
    Command { program: String, args: Vec<String> },
}

impl FromStr for Endpoint {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        if let Some(cmd) = s.strip_prefix("exec:") {
            let mut parts = cmd.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or_else(|| GatewayError::Connect(format!("empty command in {s:?}")))?;
            return Ok(Endpoint::Command { program, args: parts.collect() });
        }
        Err(GatewayError::Connect(format!("unrecognized endpoint {s:?}; use tcp://host:port or exec:<command>")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiveOptions {
    /// Longest wait for the next line before the stream fails.
    pub idle_timeout: Option<Duration>,
    pub connect_timeout: Duration,
}

impl Default for LiveOptions {
    fn default() -> Self {
        Self { idle_timeout: Some(Duration::from_secs(30)), connect_timeout: Duration::from_secs(5) }
    }
}

enum Peer {
    Tcp(TcpStream),
    Child(Child),
}

/// Frames as they arrive from a live peer.
///
/// A malformed line is a protocol violation: it is reported once and the
/// stream closes. A clean peer close ends the stream without error.
pub struct LiveStream {
    lines: Receiver<std::io::Result<String>>,
    decoder: RecordDecoder,
    idle_timeout: Option<Duration>,
    peer: Option<Peer>,
    done: bool,
}

fn spawn_reader<R: Read + Send + 'static>(source: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::sync_channel(64);
    thread::spawn(move || {
        let mut reader = BufReader::new(source);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {
                    if tx.send(Ok(line)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        }
    });
    rx
}

pub fn connect_external(endpoint: &Endpoint, opts: LiveOptions) -> Result<LiveStream, GatewayError> {
    let (lines, peer) = match endpoint {
        Endpoint::Tcp(addr) => {
            let sock_addr = addr
                .to_socket_addrs()
                .map_err(|e| GatewayError::Connect(format!("{addr}: {e}")))?
                .next()
                .ok_or_else(|| GatewayError::Connect(format!("{addr}: no address")))?;
            let stream = TcpStream::connect_timeout(&sock_addr, opts.connect_timeout)
                .map_err(|e| GatewayError::Connect(format!("{addr}: {e}")))?;
            let reader = stream.try_clone().map_err(|e| GatewayError::Connect(e.to_string()))?;
            (spawn_reader(reader), Peer::Tcp(stream))
        }
        Endpoint::Command { program, args } => {
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::null())
                .stdout(Stdio::piped())
                .spawn()
                .map_err(|e| GatewayError::Connect(format!("{program}: {e}")))?;
            let stdout = child.stdout.take().expect("stdout is piped");
            (spawn_reader(stdout), Peer::Child(child))
        }
    };
    Ok(LiveStream { lines, decoder: RecordDecoder::default(), idle_timeout: opts.idle_timeout, peer: Some(peer), done: false })
}

impl LiveStream {
    fn close(&mut self) {
        self.done = true;
        match self.peer.take() {
            Some(Peer::Tcp(s)) => {
                let _ = s.shutdown(Shutdown::Both);
            }
            Some(Peer::Child(mut c)) => {
                let _ = c.kill();
                let _ = c.wait();
            }
            None => {}
        }
    }

    fn recv(&self) -> Result<Option<std::io::Result<String>>, GatewayError> {
        match self.idle_timeout {
            Some(t) => match self.lines.recv_timeout(t) {
                Ok(item) => Ok(Some(item)),
                Err(RecvTimeoutError::Disconnected) => Ok(None),
                Err(RecvTimeoutError::Timeout) => Err(GatewayError::IdleTimeout(t)),
            },
            None => Ok(self.lines.recv().ok()),
        }
    }
}

impl Iterator for LiveStream {
    type Item = Result<EstimatedFrame, GatewayError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.recv() {
                Ok(Some(Ok(line))) => line,
                Ok(Some(Err(e))) => {
                    self.close();
                    return Some(Err(GatewayError::Io(e)));
                }
                Ok(None) => {
                    // Peer closed; reap the child if there is one.
                    self.close();
                    return None;
                }
                Err(e) => {
                    self.close();
                    return Some(Err(e));
                }
            };
            match self.decoder.decode(&line) {
                Decoded::Blank => continue,
                Decoded::Frame(f) => return Some(Ok(f)),
                Decoded::Rejected(e @ GatewayError::TimestampRegression { .. }) => return Some(Err(e)),
                Decoded::Rejected(GatewayError::Parse { line, message } | GatewayError::Validation { line, message }) => {
                    self.close();
                    return Some(Err(GatewayError::ProtocolViolation { line, message }));
                }
                Decoded::Rejected(e) => {
                    self.close();
                    return Some(Err(e));
                }
            }
        }
        None
    }
}

impl Drop for LiveStream {
    fn drop(&mut self) {
        self.close();
    }
}
