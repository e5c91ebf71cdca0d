//! Point-to-point message transports between rank-workers.
//!
//! A transport delivers tagged `f64` buffers between ranks, in send order
//! for a fixed (sender, receiver) pair, exactly once. Receives match on
//! `(source, tag)`; messages that arrive for another tag are stashed until
//! asked for.

use std::collections::{HashMap, VecDeque};
use std::str::FromStr;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::{Duration, Instant};

use crate::error::{Result, SaleError};

pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    fn send(&mut self, dest: usize, tag: u64, data: Vec<f64>) -> Result<()>;
    fn recv(&mut self, src: usize, tag: u64) -> Result<Vec<f64>>;
    fn kind(&self) -> TransportKind;

    /// Weighted neighbor edges a transport may use for worker placement.
    fn set_placement_hints(&mut self, _edges: &[(usize, u64)]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportKind {
    InProcess,
    MultiProcess,
}

impl TransportKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::InProcess => "inprocess",
            Self::MultiProcess => "multiprocess",
        }
    }
}

impl FromStr for TransportKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inprocess" => Ok(Self::InProcess),
            "multiprocess" => Ok(Self::MultiProcess),
            other => Err(format!("unknown transport '{other}' (expected inprocess|multiprocess)")),
        }
    }
}

impl std::fmt::Display for TransportKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

struct Envelope {
    src: usize,
    tag: u64,
    deliver_at: Option<Instant>,
    data: Vec<f64>,
}

/// Rank endpoint of a set of workers inside one process, connected by
/// unbounded FIFO channels.
pub struct InProcessTransport {
    rank: usize,
    size: usize,
    peers: Vec<Sender<Envelope>>,
    inbox: Receiver<Envelope>,
    stash: HashMap<(usize, u64), VecDeque<Envelope>>,
    delay: Duration,
    timeout: Duration,
    hints: Vec<(usize, u64)>,
}

/// Connected endpoints for `size` in-process ranks.
pub fn in_process_endpoints(size: usize) -> Vec<InProcessTransport> {
    let (senders, receivers): (Vec<_>, Vec<_>) = (0..size).map(|_| channel()).unzip();
    receivers
        .into_iter()
        .enumerate()
        .map(|(rank, inbox)| InProcessTransport {
            rank,
            size,
            peers: senders.clone(),
            inbox,
            stash: HashMap::new(),
            delay: Duration::ZERO,
            timeout: Duration::from_secs(300),
            hints: Vec::new(),
        })
        .collect()
}

impl InProcessTransport {
    /// Test hook: every message sent from this endpoint becomes receivable
    /// only `ms` milliseconds after the send.
    pub fn set_delivery_delay_ms(&mut self, ms: u64) {
        self.delay = Duration::from_millis(ms);
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    pub fn placement_hints(&self) -> &[(usize, u64)] {
        &self.hints
    }

    fn deliver(env: Envelope) -> Vec<f64> {
        if let Some(at) = env.deliver_at {
            let now = Instant::now();
            if at > now {
                std::thread::sleep(at - now);
            }
        }
        env.data
    }
}

impl Transport for InProcessTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn kind(&self) -> TransportKind {
        TransportKind::InProcess
    }

    fn send(&mut self, dest: usize, tag: u64, data: Vec<f64>) -> Result<()> {
        let deliver_at = (!self.delay.is_zero()).then(|| Instant::now() + self.delay);
        let peer = self.peers.get(dest).ok_or(SaleError::Transport {
            neighbor: dest,
            reason: "no such rank".into(),
        })?;
        peer.send(Envelope { src: self.rank, tag, deliver_at, data }).map_err(|_| {
            SaleError::Transport { neighbor: dest, reason: "receiver has shut down".into() }
        })
    }

    fn recv(&mut self, src: usize, tag: u64) -> Result<Vec<f64>> {
        if let Some(queue) = self.stash.get_mut(&(src, tag)) {
            if let Some(env) = queue.pop_front() {
                return Ok(Self::deliver(env));
            }
        }
        let deadline = Instant::now() + self.timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match self.inbox.recv_timeout(remaining) {
                Ok(env) if env.src == src && env.tag == tag => return Ok(Self::deliver(env)),
                Ok(env) => self.stash.entry((env.src, env.tag)).or_default().push_back(env),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(SaleError::Transport {
                        neighbor: src,
                        reason: format!("timed out waiting for tag {tag:#x}"),
                    })
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(SaleError::Transport {
                        neighbor: src,
                        reason: "all senders disconnected".into(),
                    })
                }
            }
        }
    }

    fn set_placement_hints(&mut self, edges: &[(usize, u64)]) {
        self.hints = edges.to_vec();
    }
}
