//! Multi-process backend. The harness starts one `salebench worker`
//! process per rank. Each worker binds a loopback port and prints it, the
//! harness answers with the effective config and the full peer list on
//! stdin, and the worker streams its [`RankOutput`] back on stdout as
//! text lines. Floats use Rust's shortest round-trip formatting, so the
//! harness sees bit-identical values.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use sale_core::halo::{Communicator, ExchangeStats, SocketTransport};

use crate::config::RunConfig;
use crate::run::{run_rank, RankCycle, RankFailure, RankOutput, RunError};
use crate::verify::CellSample;

/// Overrides the executable used for worker processes.
pub const WORKER_EXE_VAR: &str = "SALEBENCH_EXE";

pub fn worker_executable() -> Result<PathBuf, RunError> {
    if let Some(p) = std::env::var_os(WORKER_EXE_VAR) {
        return Ok(PathBuf::from(p));
    }
    std::env::current_exe().map_err(|e| RunError::Worker(format!("cannot locate the worker executable: {e}")))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn join_u64(values: &[u64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Text form of a rank's output, one record per line.
pub fn encode_output(o: &RankOutput) -> String {
    let mut s = format!("INIT {}\nP0 {}\n", o.init_ms, join(&o.initial));
    for c in &o.cycles {
        let st = &c.stats;
        s += &format!(
            "ROW {} {} {} {} {} {} {} {} {} {}\n",
            c.t,
            c.dt,
            c.wall_ms,
            st.calls,
            st.halo_rounds,
            st.reductions,
            join_u64(&st.messages),
            join_u64(&st.elements),
            join_u64(&st.bytes),
            join(&c.partials)
        );
    }
    for c in &o.cells {
        s += &format!(
            "CELL {} {} {} {} {} {} {} {} {}\n",
            c.global[0], c.global[1], c.global[2], c.center[0], c.center[1], c.center[2], c.volume, c.density, c.pressure
        );
    }
    if let Some(f) = &o.error {
        s += &format!("ERR {} {} {}\n", f.cycle, f.transport, f.message.replace('\n', " "));
    }
    s += "END\n";
    s
}

fn bad(line: &str) -> RunError {
    RunError::Worker(format!("malformed worker output line '{line}'"))
}

fn nums<T: std::str::FromStr>(words: &[&str], line: &str) -> Result<Vec<T>, RunError> {
    words.iter().map(|w| w.parse().map_err(|_| bad(line))).collect()
}

pub fn decode_output(text: &str) -> Result<RankOutput, RunError> {
    let mut o = RankOutput::default();
    let mut ended = false;
    for line in text.lines() {
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        let words: Vec<&str> = rest.split_whitespace().collect();
        match tag {
            "INIT" => o.init_ms = rest.trim().parse().map_err(|_| bad(line))?,
            "P0" => o.initial = nums(&words, line)?,
            "ROW" => {
                if words.len() < 15 {
                    return Err(bad(line));
                }
                let f: Vec<f64> = nums(&words[..3], line)?;
                let u: Vec<u64> = nums(&words[3..15], line)?;
                o.cycles.push(RankCycle {
                    t: f[0],
                    dt: f[1],
                    wall_ms: f[2],
                    stats: ExchangeStats {
                        calls: u[0],
                        halo_rounds: u[1],
                        reductions: u[2],
                        messages: [u[3], u[4], u[5]],
                        elements: [u[6], u[7], u[8]],
                        bytes: [u[9], u[10], u[11]],
                    },
                    partials: nums(&words[15..], line)?,
                });
            }
            "CELL" => {
                if words.len() != 9 {
                    return Err(bad(line));
                }
                let g: Vec<usize> = nums(&words[..3], line)?;
                let f: Vec<f64> = nums(&words[3..], line)?;
                o.cells.push(CellSample {
                    global: [g[0], g[1], g[2]],
                    center: [f[0], f[1], f[2]],
                    volume: f[3],
                    density: f[4],
                    pressure: f[5],
                });
            }
            "ERR" => {
                let mut parts = rest.splitn(3, ' ');
                let cycle = parts.next().and_then(|w| w.parse().ok()).ok_or_else(|| bad(line))?;
                let transport = parts.next().and_then(|w| w.parse().ok()).ok_or_else(|| bad(line))?;
                let message = parts.next().unwrap_or("").to_string();
                o.error = Some(RankFailure { cycle, transport, message });
            }
            "END" => ended = true,
            _ => return Err(bad(line)),
        }
    }
    if !ended {
        return Err(RunError::Worker("worker output ended early".into()));
    }
    Ok(o)
}

/// Launch one worker per rank from `exe`, wire them together and collect
/// their outputs in rank order.
pub fn run_multiprocess(cfg: &RunConfig, exe: &Path) -> Result<Vec<RankOutput>, RunError> {
    let n = cfg.rank_count();
    let werr = |what: &str, e: std::io::Error| RunError::Worker(format!("{what}: {e}"));
    let mut children = Vec::with_capacity(n);
    for rank in 0..n {
        let child = Command::new(exe)
            .args(["worker", "--rank", &rank.to_string(), "--size", &n.to_string()])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| werr(&format!("cannot start {}", exe.display()), e))?;
        children.push(child);
    }
    let mut readers = Vec::with_capacity(n);
    let mut addrs = Vec::with_capacity(n);
    for child in &mut children {
        let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        reader.read_line(&mut line).map_err(|e| werr("reading worker address", e))?;
        let addr = line
            .strip_prefix("ADDR ")
            .and_then(|a| a.trim().parse::<SocketAddr>().ok())
            .ok_or_else(|| RunError::Worker(format!("worker did not report an address (got '{}')", line.trim())))?;
        addrs.push(addr);
        readers.push(reader);
    }
    let mut message = String::new();
    for (k, v) in cfg.to_pairs() {
        if k != "out" {
            message += &format!("{k}={v}\n");
        }
    }
    message += &format!("PEERS {}\nGO\n", addrs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "));
    for child in &mut children {
        let mut stdin = child.stdin.take().expect("piped stdin");
        stdin.write_all(message.as_bytes()).map_err(|e| werr("sending config to worker", e))?;
    }
    // drain every pipe concurrently so no worker blocks on a full pipe
    let texts: Vec<std::io::Result<String>> = std::thread::scope(|s| {
        let handles: Vec<_> = readers
            .into_iter()
            .map(|mut r| {
                s.spawn(move || {
                    let mut text = String::new();
                    r.read_to_string(&mut text).map(|_| text)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("reader thread")).collect()
    });
    for (rank, child) in children.iter_mut().enumerate() {
        let status = child.wait().map_err(|e| werr("waiting for worker", e))?;
        if !status.success() {
            return Err(RunError::Worker(format!("worker {rank} exited with {status}")));
        }
    }
    texts
        .into_iter()
        .map(|t| decode_output(&t.map_err(|e| werr("reading worker output", e))?))
        .collect()
}

/// Entry point of a worker process.
pub fn worker_main(rank: usize, size: usize) -> Result<(), RunError> {
    let werr = |what: &str, e: std::io::Error| RunError::Worker(format!("rank {rank}: {what}: {e}"));
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| werr("bind", e))?;
    let addr = listener.local_addr().map_err(|e| werr("local address", e))?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "ADDR {addr}").and_then(|_| stdout.flush()).map_err(|e| werr("stdout", e))?;
    let mut pairs = Vec::new();
    let mut peers: Vec<SocketAddr> = Vec::new();
    for line in std::io::stdin().lock().lines() {
        let line = line.map_err(|e| werr("stdin", e))?;
        if line == "GO" {
            break;
        } else if let Some(list) = line.strip_prefix("PEERS ") {
            peers = list
                .split_whitespace()
                .map(|a| a.parse().map_err(|_| RunError::Worker(format!("bad peer address '{a}'"))))
                .collect::<Result<_, _>>()?;
        } else if let Some((k, v)) = line.split_once('=') {
            pairs.push((k.to_string(), v.to_string()));
        }
    }
    if peers.len() != size || peers[rank] != addr {
        return Err(RunError::Worker(format!("rank {rank}: peer list does not match ({} of {size})", peers.len())));
    }
    let cfg = RunConfig::from_pairs(&pairs)?;
    let transport = SocketTransport::connect(rank, &peers, listener)
        .map_err(|e| RunError::Worker(format!("rank {rank}: {e}")))?;
    let out = run_rank(&cfg, rank, Communicator::new(Box::new(transport)));
    stdout.write_all(encode_output(&out).as_bytes()).and_then(|_| stdout.flush()).map_err(|e| werr("stdout", e))
}
