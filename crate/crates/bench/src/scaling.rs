//! Strong and weak scaling suites.

use std::fmt::Write as _;

use sale_core::hydro::Rezone;
use sale_core::oracles::{efficiency, ScalingMode, ScalingRecord};

use crate::config::{ConfigError, RunConfig};
use crate::run::{run_simulation, RunError};

/// Communication calls per cycle reported by the original code (Lagrangian).
pub const REFERENCE_CALLS_LAGRANGE: f64 = 45.0;
/// Communication calls per cycle reported by the original code (Eulerian).
pub const REFERENCE_CALLS_EULER: f64 = 60.0;

pub const SCALING_HEADER: &str = "mode,rezone,ranks,px,py,pz,cells_x,cells_y,cells_z,block_x,block_y,block_z,\
cycles,time_ms,init_ms,efficiency,exchange_calls_per_cycle,reference_calls_per_cycle,bytes_face,bytes_edge,bytes_corner";

pub fn reference_calls(rezone: Rezone) -> f64 {
    match rezone {
        Rezone::Lagrange => REFERENCE_CALLS_LAGRANGE,
        Rezone::Euler => REFERENCE_CALLS_EULER,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub ranks: usize,
    pub ranks_per_axis: [usize; 3],
    pub cells: [usize; 3],
    /// Largest block any rank holds.
    pub block: [usize; 3],
    pub cycles: usize,
    pub time_ms: f64,
    pub init_ms: f64,
    pub efficiency: f64,
    pub calls_per_cycle: f64,
    /// Mean bytes per directed link over the run, by class.
    pub bytes: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub rezone: Rezone,
    pub rows: Vec<ScalingRow>,
    pub warnings: Vec<String>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SCALING_HEADER);
        s.push('\n');
        let t = |a: [usize; 3]| format!("{},{},{}", a[0], a[1], a[2]);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:.3},{:.3},{},{},{},{},{},{}",
                self.mode.name(),
                self.rezone.name(),
                r.ranks,
                t(r.ranks_per_axis),
                t(r.cells),
                t(r.block),
                r.cycles,
                r.time_ms,
                r.init_ms,
                r.efficiency,
                r.calls_per_cycle,
                reference_calls(self.rezone),
                r.bytes[0],
                r.bytes[1],
                r.bytes[2]
            );
        }
        s
    }
}

/// Split `n` ranks over the active axes as evenly as possible, larger
/// factors first.
pub fn split_ranks(n: usize, active: [bool; 3]) -> Option<[usize; 3]> {
    let axes: Vec<usize> = (0..3).filter(|d| active[*d]).collect();
    let mut best: Option<([usize; 3], usize)> = None;
    let divisors: Vec<usize> = (1..=n).filter(|d| n % d == 0).collect();
    for &a in &divisors {
        for &b in divisors.iter().filter(|b| (n / a) % **b == 0) {
            let c = n / a / b;
            let f = [a, b, c];
            let mut split = [1usize; 3];
            let mut ok = true;
            for (slot, &v) in f.iter().enumerate() {
                match axes.get(slot) {
                    Some(&d) => split[d] = v,
                    None => ok &= v == 1,
                }
            }
            if !ok || split.iter().product::<usize>() != n {
                continue;
            }
            let used = axes.iter().map(|d| split[*d]);
            let spread = used.clone().max().unwrap_or(1) - used.min().unwrap_or(1);
            if best.as_ref().is_none_or(|(_, s)| spread < *s) {
                best = Some((split, spread));
            }
        }
    }
    best.map(|(s, _)| s)
}

fn block_of(cells: [usize; 3], ranks: [usize; 3]) -> [usize; 3] {
    std::array::from_fn(|d| cells[d].div_ceil(ranks[d]))
}

/// Run `base` once per rank count. Strong mode keeps `base.cells`; weak
/// mode grows the grid so every rank holds `per_rank` cells.
pub fn run_scaling_suite(
    base: &RunConfig,
    mode: ScalingMode,
    rank_list: &[usize],
    per_rank: [usize; 3],
) -> Result<ScalingReport, RunError> {
    let key = |reason: &str| ConfigError::Invalid { key: "ranks_list".into(), reason: reason.into() };
    if rank_list.first() != Some(&1) {
        return Err(key("the rank list must start at 1").into());
    }
    let active: [bool; 3] = match mode {
        ScalingMode::Strong => std::array::from_fn(|d| base.cells[d] > 1),
        ScalingMode::Weak => std::array::from_fn(|d| per_rank[d] > 1),
    };
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in rank_list {
        let ranks = split_ranks(n, active).ok_or_else(|| key(&format!("{n} ranks do not fit the active axes")))?;
        let mut cfg = base.clone();
        cfg.ranks = ranks;
        cfg.verify = false;
        cfg.out = None;
        if mode == ScalingMode::Weak {
            cfg.cells = std::array::from_fn(|d| per_rank[d] * ranks[d]);
        }
        if n > hw {
            warnings.push(format!("{n} ranks oversubscribe {hw} hardware threads; timings are serialized"));
        }
        let report = run_simulation(&cfg)?;
        let cycles = report.rows.len();
        let mut bytes = [0.0; 3];
        for r in &report.rows {
            for c in 0..3 {
                bytes[c] += r.bytes[c] / cycles.max(1) as f64;
            }
        }
        records.push(ScalingRecord { mode, cores: n, time: report.total_wall_ms });
        rows.push(ScalingRow {
            ranks: n,
            ranks_per_axis: ranks,
            cells: cfg.cells,
            block: block_of(cfg.cells, ranks),
            cycles,
            time_ms: report.total_wall_ms,
            init_ms: report.init_ms,
            efficiency: 0.0,
            calls_per_cycle: report.calls_per_cycle,
            bytes,
        });
    }
    let eff = efficiency(&records, mode).map_err(|e| RunError::Worker(e.to_string()))?;
    for (row, (_, e)) in rows.iter_mut().zip(eff) {
        row.efficiency = e;
    }
    Ok(ScalingReport { mode, rezone: base.rezone, rows, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubes_split_evenly() {
        assert_eq!(split_ranks(1, [true; 3]), Some([1, 1, 1]));
        assert_eq!(split_ranks(8, [true; 3]), Some([2, 2, 2]));
        assert_eq!(split_ranks(27, [true; 3]), Some([3, 3, 3]));
        let s = split_ranks(12, [true; 3]).unwrap();
        assert_eq!(s.iter().product::<usize>(), 12);
        assert_eq!(*s.iter().max().unwrap(), 3);
    }

    #[test]
    fn inert_axes_keep_one_rank() {
        assert_eq!(split_ranks(4, [true, false, false]), Some([4, 1, 1]));
        assert_eq!(split_ranks(4, [true, true, false]), Some([2, 2, 1]));
        assert_eq!(split_ranks(2, [false; 3]), None);
    }

    #[test]
    fn rank_list_must_start_at_one() {
        let base = RunConfig::defaults(sale_core::problems::ProblemKind::Sedov);
        let e = run_scaling_suite(&base, ScalingMode::Strong, &[2, 4], [8; 3]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn small_strong_suite() {
        let mut base = RunConfig::defaults(sale_core::problems::ProblemKind::Sedov);
        base.cells = [8, 8, 8];
        base.cycles = 3;
        let r = run_scaling_suite(&base, ScalingMode::Strong, &[1, 8], [8; 3]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].efficiency, 1.0);
        assert_eq!(r.rows[1].block, [4, 4, 4]);
        assert!(r.rows[1].efficiency > 0.0);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with(SCALING_HEADER));
    }
}
