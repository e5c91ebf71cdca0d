//! Run reports and their CSV form.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sale_core::oracles::ConservationTotals;

use crate::config::RunConfig;
use crate::run::RunError;
use crate::verify::Verification;

pub const CSV_HEADER: &str = "cycle,t,dt,wall_ms,exchange_calls,bytes_face,bytes_edge,bytes_corner,\
total_mass,total_energy,total_momentum_x,total_momentum_y,total_momentum_z";

/// Columns of [`CSV_HEADER`] that depend only on the physics, not on
/// timing or decomposition.
pub const PHYSICS_COLUMNS: [&str; 7] = [
    "t",
    "dt",
    "total_mass",
    "total_energy",
    "total_momentum_x",
    "total_momentum_y",
    "total_momentum_z",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRow {
    pub cycle: u64,
    pub t: f64,
    pub dt: f64,
    /// Slowest rank's wall time for the cycle.
    pub wall_ms: f64,
    /// Halo rounds plus reductions issued by each rank.
    pub exchange_calls: u64,
    /// Mean bytes per directed neighbor link, by face, edge, corner class.
    pub bytes: [f64; 3],
    pub totals: ConservationTotals,
}

impl CycleRow {
    pub fn physics(&self) -> [f64; 7] {
        let m = self.totals.momentum;
        [self.t, self.dt, self.totals.total_mass(), self.totals.total_energy(), m[0], m[1], m[2]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Effective configuration.
    pub config: Vec<(String, String)>,
    pub rows: Vec<CycleRow>,
    /// Totals right after initialization.
    pub initial: ConservationTotals,
    /// Initialization time, kept out of `total_wall_ms`.
    pub init_ms: f64,
    /// Sum of the per-cycle wall times.
    pub total_wall_ms: f64,
    pub calls_per_cycle: f64,
    pub verification: Option<Verification>,
}

impl RunReport {
    pub fn new(
        cfg: &RunConfig,
        rows: Vec<CycleRow>,
        initial: ConservationTotals,
        init_ms: f64,
        verification: Option<Verification>,
    ) -> Self {
        let total_wall_ms = rows.iter().map(|r| r.wall_ms).sum();
        let calls_per_cycle = if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| r.exchange_calls as f64).sum::<f64>() / rows.len() as f64
        };
        Self { config: cfg.to_pairs(), rows, initial, init_ms, total_wall_ms, calls_per_cycle, verification }
    }

    pub fn final_time(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    /// Largest `|mass − mass₀|/mass₀` over the run.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial.total_mass();
        self.rows.iter().map(|r| (r.totals.total_mass() - m0).abs() / m0).fold(0.0, f64::max)
    }

    /// Largest mass change between consecutive cycles, relative.
    pub fn mass_drift_per_cycle(&self) -> f64 {
        let mut prev = self.initial.total_mass();
        let mut worst: f64 = 0.0;
        for r in &self.rows {
            let m = r.totals.total_mass();
            worst = worst.max((m - prev).abs() / prev);
            prev = m;
        }
        worst
    }

    /// Largest total-energy change over any window of `window` cycles,
    /// relative to the initial energy.
    pub fn energy_drift_per(&self, window: usize) -> f64 {
        let e0 = self.initial.total_energy();
        let series: Vec<f64> =
            std::iter::once(e0).chain(self.rows.iter().map(|r| r.totals.total_energy())).collect();
        let mut worst: f64 = 0.0;
        for a in 0..series.len() {
            let b = (a + window).min(series.len() - 1);
            worst = worst.max((series[b] - series[a]).abs() / e0.abs());
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(128 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let m = r.totals.momentum;
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:.3},{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
                r.cycle,
                r.t,
                r.dt,
                r.wall_ms,
                r.exchange_calls,
                r.bytes[0],
                r.bytes[1],
                r.bytes[2],
                r.totals.total_mass(),
                r.totals.total_energy(),
                m[0],
                m[1],
                m[2]
            );
        }
        s
    }

    /// Summary lines: effective config, timing split, verification.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.config {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "build = {}", if cfg!(debug_assertions) { "debug" } else { "release" });
        let _ = writeln!(s, "cycles_run = {}", self.rows.len());
        let _ = writeln!(s, "final_t = {:e}", self.final_time());
        let _ = writeln!(s, "init_ms = {:.3}", self.init_ms);
        let _ = writeln!(s, "total_wall_ms = {:.3}", self.total_wall_ms);
        let _ = writeln!(s, "calls_per_cycle = {}", self.calls_per_cycle);
        let _ = writeln!(s, "mass_drift = {:e}", self.mass_drift());
        let _ = writeln!(s, "energy_drift_20 = {:e}", self.energy_drift_per(20));
        if let Some(v) = &self.verification {
            let _ = writeln!(s, "verify_metric = {}", v.metric);
            let _ = writeln!(s, "verify_value = {:e}", v.value);
            let _ = writeln!(s, "verify_tolerance = {:e}", v.tolerance);
            let _ = writeln!(s, "verify_passed = {}", v.passed);
            let _ = writeln!(s, "verify_detail = {}", v.detail);
        }
        s
    }
}

/// Sidecar path holding the summary next to a CSV file.
pub fn summary_path(csv: &Path) -> PathBuf {
    let mut p = csv.as_os_str().to_owned();
    p.push(".summary");
    PathBuf::from(p)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Output { path: path.display().to_string(), reason: e.to_string() })
}

/// Write the CSV to `path` and the summary to `path.summary`.
pub fn emit_report(report: &RunReport, path: &Path) -> Result<(), RunError> {
    write_file(path, &report.to_csv())?;
    write_file(&summary_path(path), &report.summary())
}

/// Parse the physics columns back out of a CSV written by
/// [`RunReport::to_csv`].
pub fn physics_columns(csv: &str) -> Vec<[f64; 7]> {
    let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
    let idx: Vec<usize> =
        PHYSICS_COLUMNS.iter().map(|c| header.iter().position(|h| h == c).expect("physics column")).collect();
    csv.lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            std::array::from_fn(|i| cols[idx[i]].parse().expect("number"))
        })
        .collect()
}
