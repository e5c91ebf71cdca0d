//! Run orchestration: one worker per rank, per-cycle timing and counters,
//! and rank-ordered reduction of the conservation audit.

use std::time::{Duration, Instant};

use sale_core::halo::{in_process_endpoints, run_on_endpoints, Communicator, ExchangeStats};
use sale_core::hydro::{lagrangian_cycle, Rezone, SimulationState};
use sale_core::oracles::{combine_partials, local_partials, AuditPartials, ConservationTotals};
use sale_core::problems::init_problem;
use sale_core::remap::eulerian_cycle;
use sale_core::SaleError;
use thiserror::Error;

use crate::config::{Backend, ConfigError, RunConfig};
use crate::report::{CycleRow, RunReport};
use crate::verify::{verify, CellSample, Verification};

/// How long a rank waits for a neighbor message before giving up.
pub const RECV_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("numerical failure at cycle {cycle} on rank {rank}: {message}")]
    Numerical { cycle: u64, rank: usize, message: String },

    #[error("worker failure: {0}")]
    Worker(String),

    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
}

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output { .. } => 2,
            Self::Numerical { .. } => 3,
            Self::Worker(_) => 1,
        }
    }
}

/// One cycle as seen by one rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCycle {
    pub t: f64,
    pub dt: f64,
    pub wall_ms: f64,
    pub stats: ExchangeStats,
    pub partials: Vec<f64>,
}

/// A rank's failure, in a form that survives the trip through a worker
/// process.
#[derive(Debug, Clone, PartialEq)]
pub struct RankFailure {
    pub cycle: u64,
    /// Lost contact with a neighbor, usually because that neighbor failed.
    pub transport: bool,
    pub message: String,
}

impl RankFailure {
    pub fn new(cycle: u64, e: &SaleError) -> Self {
        Self { cycle, transport: matches!(e, SaleError::Transport { .. }), message: e.to_string() }
    }
}

/// Everything a rank reports back to the harness.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankOutput {
    pub init_ms: f64,
    pub initial: Vec<f64>,
    pub cycles: Vec<RankCycle>,
    pub cells: Vec<CellSample>,
    pub error: Option<RankFailure>,
}

fn step(s: &mut SimulationState, comm: &mut Communicator) -> sale_core::Result<()> {
    match s.params.rezone {
        Rezone::Lagrange => lagrangian_cycle(s, comm),
        Rezone::Euler => eulerian_cycle(s, comm),
    }
}

/// Cell samples of the interior cells, for verification.
pub fn cell_samples(s: &SimulationState) -> Vec<CellSample> {
    let active = s.active();
    // inert axes carry a single vertex layer
    let bit = |c: isize, d: usize| if active[d] { (c >> d) & 1 } else { 0 };
    s.domain_cells(false)
        .into_iter()
        .map(|[i, j, k]| {
            let mut center = [0.0; 3];
            for c in 0..8isize {
                let at = s.x.offset(i + bit(c, 0), j + bit(c, 1), k + bit(c, 2));
                let x = s.x.vec3_at(at);
                for d in 0..3 {
                    center[d] += 0.125 * x[d];
                }
            }
            let volume = s.volume.get(0, i, j, k);
            CellSample {
                global: s.global_cell(i, j, k),
                center,
                volume,
                density: s.cell_mass.get(0, i, j, k) / volume,
                pressure: s.pressure.get(0, i, j, k),
            }
        })
        .collect()
}

/// The work of one rank: initialize, prime the time step, run cycles
/// until the cycle limit or the end time.
pub fn run_rank(cfg: &RunConfig, rank: usize, mut comm: Communicator) -> RankOutput {
    let mut out = RankOutput::default();
    let layout = match cfg.layout() {
        Ok(l) => l,
        Err(e) => {
            out.error = Some(RankFailure { cycle: 0, transport: false, message: e.to_string() });
            return out;
        }
    };
    let t0 = Instant::now();
    let mut s = match init_problem(&layout, rank, &cfg.problem, cfg.params())
        .and_then(|mut s| s.prime_timestep(&mut comm).map(|_| s))
    {
        Ok(s) => s,
        Err(e) => {
            out.error = Some(RankFailure::new(0, &e));
            return out;
        }
    };
    out.init_ms = t0.elapsed().as_secs_f64() * 1e3;
    out.initial = local_partials(&s).0;
    let t_end = cfg.t_end();
    for _ in 0..cfg.cycles {
        // stop once the clipped final step has landed on t_end
        if s.t >= t_end * (1.0 - 1e-12) {
            break;
        }
        let before = comm.stats();
        let start = Instant::now();
        if let Err(e) = step(&mut s, &mut comm) {
            out.error = Some(RankFailure::new(s.cycle + 1, &e));
            return out;
        }
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        out.cycles.push(RankCycle {
            t: s.t,
            dt: s.dt,
            wall_ms,
            stats: comm.stats().since(&before),
            partials: local_partials(&s).0,
        });
    }
    if cfg.verify {
        out.cells = cell_samples(&s);
    }
    out
}

/// Run on one thread per rank.
pub fn run_in_process(cfg: &RunConfig) -> Vec<RankOutput> {
    let mut endpoints = in_process_endpoints(cfg.rank_count());
    for ep in &mut endpoints {
        ep.set_timeout(RECV_TIMEOUT);
    }
    run_on_endpoints(endpoints, |rank, comm| run_rank(cfg, rank, comm))
}

/// Validate, run on the configured backend and assemble the report,
/// attaching oracle errors when `verify` is set.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunReport, RunError> {
    cfg.validate()?;
    let outputs = match cfg.backend {
        Backend::InProcess => run_in_process(cfg),
        Backend::MultiProcess => crate::worker::run_multiprocess(cfg, &crate::worker::worker_executable()?)?,
    };
    assemble(cfg, outputs)
}

/// Pick the error to report: the lowest rank with a numerical error wins
/// over transport errors, which are usually a consequence.
fn first_error(outputs: &[RankOutput]) -> Option<RunError> {
    outputs
        .iter()
        .enumerate()
        .filter_map(|(rank, o)| o.error.as_ref().map(|f| (rank, f)))
        .min_by_key(|(rank, f)| (f.transport, *rank))
        .map(|(rank, f)| RunError::Numerical { cycle: f.cycle, rank, message: f.message.clone() })
}

/// Combine per-rank outputs into a report: wall time is the slowest rank,
/// bytes are averaged per directed neighbor link, totals are summed in
/// rank order.
pub fn assemble(cfg: &RunConfig, outputs: Vec<RankOutput>) -> Result<RunReport, RunError> {
    if let Some(e) = first_error(&outputs) {
        return Err(e);
    }
    let n = outputs[0].cycles.len();
    if outputs.iter().any(|o| o.cycles.len() != n) {
        return Err(RunError::Worker("ranks ran different numbers of cycles".into()));
    }
    let totals = |pick: &dyn Fn(&RankOutput) -> &Vec<f64>| -> ConservationTotals {
        combine_partials(&outputs.iter().map(|o| AuditPartials(pick(o).clone())).collect::<Vec<_>>())
    };
    let mut rows = Vec::with_capacity(n);
    for c in 0..n {
        let first = &outputs[0].cycles[c];
        let mut bytes = [0.0; 3];
        for class in 0..3 {
            let mut sent = 0u64;
            let mut links = 0u64;
            for o in &outputs {
                let st = &o.cycles[c].stats;
                sent += st.bytes[class];
                if st.halo_rounds > 0 {
                    links += st.messages[class] / st.halo_rounds;
                }
            }
            if links > 0 {
                bytes[class] = sent as f64 / links as f64;
            }
        }
        rows.push(CycleRow {
            cycle: c as u64 + 1,
            t: first.t,
            dt: first.dt,
            wall_ms: outputs.iter().map(|o| o.cycles[c].wall_ms).fold(0.0, f64::max),
            exchange_calls: first.stats.calls,
            bytes,
            totals: totals(&|o| &o.cycles[c].partials),
        });
    }
    let initial = totals(&|o| &o.initial);
    let init_ms = outputs.iter().map(|o| o.init_ms).fold(0.0, f64::max);
    let verification = if cfg.verify {
        let t = rows.last().map_or(0.0, |r| r.t);
        let cells: Vec<CellSample> = outputs.into_iter().flat_map(|o| o.cells).collect();
        Some(verify(cfg, &cells, t))
    } else {
        None
    };
    Ok(RunReport::new(cfg, rows, initial, init_ms, verification))
}

/// True when the verification ran and failed.
pub fn verification_failed(v: &Option<Verification>) -> bool {
    v.as_ref().is_some_and(|v| !v.passed)
}
