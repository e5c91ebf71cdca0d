//! Multi-process transport: one OS process per rank, fully connected over
//! loopback TCP. Frames are `tag: u64 LE`, `len: u64 LE`, then `len` f64 LE.

use std::collections::{HashMap, VecDeque};
use std::io::{BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use super::transport::{Transport, TransportKind};
use crate::error::{Result, SaleError};

#[derive(Default)]
struct Mailbox {
    queues: HashMap<(usize, u64), VecDeque<Vec<f64>>>,
    closed: Vec<usize>,
}

type Shared = Arc<(Mutex<Mailbox>, Condvar)>;

pub struct SocketTransport {
    rank: usize,
    size: usize,
    writers: Vec<Option<TcpStream>>,
    mailbox: Shared,
    timeout: Duration,
}

fn io_err(neighbor: usize, e: std::io::Error) -> SaleError {
    SaleError::Transport { neighbor, reason: e.to_string() }
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn spawn_reader(src: usize, stream: TcpStream, mailbox: Shared) {
    std::thread::spawn(move || {
        let mut r = BufReader::new(stream);
        loop {
            let frame = (|| -> std::io::Result<(u64, Vec<f64>)> {
                let tag = read_u64(&mut r)?;
                let len = read_u64(&mut r)? as usize;
                let mut bytes = vec![0u8; len * 8];
                r.read_exact(&mut bytes)?;
                let data = bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                    .collect();
                Ok((tag, data))
            })();
            let (lock, cv) = &*mailbox;
            let mut mb = lock.lock().expect("mailbox poisoned");
            match frame {
                Ok((tag, data)) => mb.queues.entry((src, tag)).or_default().push_back(data),
                Err(_) => {
                    mb.closed.push(src);
                    cv.notify_all();
                    return;
                }
            }
            cv.notify_all();
        }
    });
}

impl SocketTransport {
    /// Connect rank `rank` to every peer. `listener` must already be bound
    /// to `peers[rank]`. Lower ranks are dialed, higher ranks accepted.
    pub fn connect(rank: usize, peers: &[SocketAddr], listener: TcpListener) -> Result<Self> {
        let size = peers.len();
        let mailbox: Shared = Arc::new((Mutex::new(Mailbox::default()), Condvar::new()));
        let mut writers: Vec<Option<TcpStream>> = (0..size).map(|_| None).collect();
        for (peer, addr) in peers.iter().enumerate().take(rank) {
            let mut s = dial(*addr).map_err(|e| io_err(peer, e))?;
            s.write_all(&(rank as u64).to_le_bytes()).map_err(|e| io_err(peer, e))?;
            s.set_nodelay(true).ok();
            writers[peer] = Some(s);
        }
        for _ in rank + 1..size {
            let (mut s, _) = listener.accept().map_err(|e| io_err(rank, e))?;
            let peer = read_u64(&mut s).map_err(|e| io_err(rank, e))? as usize;
            if peer >= size || writers[peer].is_some() {
                return Err(SaleError::Transport { neighbor: peer, reason: "bad handshake".into() });
            }
            s.set_nodelay(true).ok();
            writers[peer] = Some(s);
        }
        for (peer, w) in writers.iter().enumerate() {
            if let Some(s) = w {
                let r = s.try_clone().map_err(|e| io_err(peer, e))?;
                spawn_reader(peer, r, mailbox.clone());
            }
        }
        Ok(Self { rank, size, writers, mailbox, timeout: Duration::from_secs(300) })
    }
}

fn dial(addr: SocketAddr) -> std::io::Result<TcpStream> {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() > deadline => return Err(e),
            Err(_) => std::thread::sleep(Duration::from_millis(20)),
        }
    }
}

impl Transport for SocketTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn kind(&self) -> TransportKind {
        TransportKind::MultiProcess
    }

    fn send(&mut self, dest: usize, tag: u64, data: Vec<f64>) -> Result<()> {
        let stream = self.writers.get_mut(dest).and_then(|w| w.as_mut()).ok_or(
            SaleError::Transport { neighbor: dest, reason: "not connected".into() },
        )?;
        let mut frame = Vec::with_capacity(16 + 8 * data.len());
        frame.extend_from_slice(&tag.to_le_bytes());
        frame.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for v in &data {
            frame.extend_from_slice(&v.to_le_bytes());
        }
        stream.write_all(&frame).map_err(|e| io_err(dest, e))
    }

    fn recv(&mut self, src: usize, tag: u64) -> Result<Vec<f64>> {
        let deadline = Instant::now() + self.timeout;
        let (lock, cv) = &*self.mailbox;
        let mut mb = lock.lock().expect("mailbox poisoned");
        loop {
            if let Some(data) = mb.queues.get_mut(&(src, tag)).and_then(|q| q.pop_front()) {
                return Ok(data);
            }
            if mb.closed.contains(&src) {
                return Err(SaleError::Transport { neighbor: src, reason: "connection closed".into() });
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(SaleError::Transport {
                    neighbor: src,
                    reason: format!("timed out waiting for tag {tag:#x}"),
                });
            }
            mb = cv.wait_timeout(mb, remaining).expect("mailbox poisoned").0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_ranks_over_loopback() {
        let listeners: Vec<_> =
            (0..3).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
        let addrs: Vec<_> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, l)| {
                let addrs = addrs.clone();
                std::thread::spawn(move || {
                    let mut t = SocketTransport::connect(rank, &addrs, l).unwrap();
                    for dest in 0..3 {
                        if dest != rank {
                            t.send(dest, 5, vec![rank as f64, dest as f64]).unwrap();
                        }
                    }
                    let mut got = Vec::new();
                    for src in 0..3 {
                        if src != rank {
                            got.push(t.recv(src, 5).unwrap());
                        }
                    }
                    got
                })
            })
            .collect();
        for (rank, h) in handles.into_iter().enumerate() {
            let got = h.join().unwrap();
            let srcs: Vec<_> = (0..3).filter(|s| *s != rank).collect();
            for (g, s) in got.iter().zip(srcs) {
                assert_eq!(g, &vec![s as f64, rank as f64]);
            }
        }
    }
}
