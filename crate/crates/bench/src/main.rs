use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sale_bench::config::{read_config_file, RunConfig};
use sale_bench::report::{emit_report, write_file};
use sale_bench::run::{run_simulation, verification_failed, RunError};
use sale_bench::scaling::run_scaling_suite;
use sale_bench::worker::worker_main;
use sale_bench::EXIT_VERIFY_FAILED;
use sale_core::oracles::{noh_exact, riemann_solve, sedov_profile, sedov_shock_radius, sedov_xi0, Primitive, ScalingMode};

#[derive(Parser)]
#[command(name = "salebench", version, about = "SALE hydro mini-app benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its per-cycle CSV.
    Run(RunArgs),
    /// Run a strong or weak scaling suite.
    Scale(ScaleArgs),
    /// Evaluate an analytic reference solution.
    #[command(subcommand)]
    Oracle(OracleCommand),
    #[command(hide = true)]
    Worker {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        size: usize,
    },
}

/// Run settings shared by `run` and `scale`; each overrides the config file.
#[derive(Args, Default)]
struct RunFlags {
    /// Flat `key = value` file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    rezone: Option<String>,
    /// Cells per axis, `NX,NY,NZ`.
    #[arg(long)]
    cells: Option<String>,
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    exchange: Option<String>,
    #[arg(long)]
    materials: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
}

impl RunFlags {
    fn pairs(&self) -> Result<Vec<(String, String)>, RunError> {
        let mut pairs = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Vec::new(),
        };
        let flags = [
            ("problem", &self.problem),
            ("rezone", &self.rezone),
            ("cells", &self.cells),
            ("cycles", &self.cycles),
            ("t_end", &self.t_end),
            ("cfl", &self.cfl),
            ("backend", &self.backend),
            ("exchange", &self.exchange),
            ("materials", &self.materials),
            ("gamma", &self.gamma),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v.clone()));
            }
        }
        Ok(pairs)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: RunFlags,
    /// Ranks per axis, `PX,PY,PZ`.
    #[arg(long)]
    ranks: Option<String>,
    /// Compare the final state against the problem's oracle.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScaleArgs {
    #[command(flatten)]
    flags: RunFlags,
    #[arg(long)]
    mode: ScalingMode,
    /// Rank counts, starting at 1.
    #[arg(long, value_delimiter = ',', required = true)]
    ranks_list: Vec<usize>,
    /// Cells per rank in weak mode.
    #[arg(long, value_delimiter = ',', default_value = "24,24,24")]
    per_rank: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact Riemann solution sampled at time `t` on `[0, 1]`.
    Riemann {
        /// Left state `rho,u,p`.
        #[arg(long, value_delimiter = ',', default_value = "1,0,1")]
        left: Vec<f64>,
        /// Right state `rho,u,p`.
        #[arg(long, value_delimiter = ',', default_value = "0.125,0,0.1")]
        right: Vec<f64>,
        #[arg(long, default_value_t = 1.4)]
        gamma: f64,
        #[arg(long, default_value_t = 0.2)]
        t: f64,
        #[arg(long, default_value_t = 0.5)]
        x0: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sedov similarity profile and shock radius.
    Sedov {
        #[arg(long, default_value_t = 1.4)]
        gamma: f64,
        /// Energy of the full spherical blast.
        #[arg(long, default_value_t = 1.0)]
        e0: f64,
        #[arg(long, default_value_t = 1.0)]
        rho0: f64,
        #[arg(long, default_value_t = 0.05)]
        t: f64,
        #[arg(long, default_value_t = 4000)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Planar Noh solution sampled at time `t` on `[0, 1]`.
    Noh {
        #[arg(long, default_value_t = 5.0 / 3.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        rho0: f64,
        #[arg(long, default_value_t = 0.6)]
        t: f64,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn triple(v: &[usize]) -> Result<[usize; 3], RunError> {
    if v.is_empty() || v.len() > 3 || v.contains(&0) {
        return Err(sale_bench::ConfigError::Invalid {
            key: "per_rank".into(),
            reason: "expected 1 to 3 positive counts".into(),
        }
        .into());
    }
    Ok(std::array::from_fn(|d| v.get(d).copied().unwrap_or(1)))
}

/// Write to stdout; a reader that hangs up early (`| head`) is not an error.
fn print_stdout(text: &str) -> Result<(), RunError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(RunError::Output { path: "<stdout>".into(), reason: e.to_string() })
        }
        _ => Ok(()),
    }
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), RunError> {
    match out {
        Some(p) => write_file(p, text),
        None => print_stdout(text),
    }
}

fn cmd_run(a: RunArgs) -> Result<i32, RunError> {
    let mut pairs = a.flags.pairs()?;
    if let Some(r) = a.ranks {
        pairs.push(("ranks".into(), r));
    }
    if a.verify {
        pairs.push(("verify".into(), "true".into()));
    }
    if let Some(o) = &a.out {
        pairs.push(("out".into(), o.display().to_string()));
    }
    let cfg = RunConfig::from_pairs(&pairs)?;
    let report = run_simulation(&cfg)?;
    match &cfg.out {
        Some(p) => emit_report(&report, p)?,
        None => print_stdout(&report.to_csv())?,
    }
    eprint!("{}", report.summary());
    Ok(if verification_failed(&report.verification) { EXIT_VERIFY_FAILED } else { 0 })
}

fn cmd_scale(a: ScaleArgs) -> Result<i32, RunError> {
    let cfg = RunConfig::from_pairs(&a.flags.pairs()?)?;
    let suite = run_scaling_suite(&cfg, a.mode, &a.ranks_list, triple(&a.per_rank)?)?;
    for w in &suite.warnings {
        eprintln!("warning: {w}");
    }
    emit_text(&a.out, &suite.to_csv())?;
    Ok(0)
}

fn oracle_error(e: sale_core::SaleError) -> RunError {
    RunError::Numerical { cycle: 0, rank: 0, message: e.to_string() }
}

fn state(v: &[f64], key: &str) -> Result<Primitive, RunError> {
    match v {
        [rho, u, p] => Ok(Primitive { rho: *rho, u: *u, p: *p }),
        _ => Err(sale_bench::ConfigError::Invalid { key: key.into(), reason: "expected rho,u,p".into() }.into()),
    }
}

fn cmd_oracle(c: OracleCommand) -> Result<i32, RunError> {
    match c {
        OracleCommand::Riemann { left, right, gamma, t, x0, points, out } => {
            let sol = riemann_solve(state(&left, "left")?, state(&right, "right")?, gamma).map_err(oracle_error)?;
            let mut s = format!("# p_star = {} u_star = {}\nx,rho,u,p\n", sol.p_star, sol.u_star);
            for i in 0..points {
                let x = (i as f64 + 0.5) / points as f64;
                let q = sol.sample((x - x0) / t);
                s += &format!("{x},{},{},{}\n", q.rho, q.u, q.p);
            }
            emit_text(&out, &s)?;
        }
        OracleCommand::Sedov { gamma, e0, rho0, t, steps, out } => {
            let xi0 = sedov_xi0(gamma).map_err(oracle_error)?;
            let r = sedov_shock_radius(e0, rho0, gamma, t).map_err(oracle_error)?;
            let mut s = format!("# xi0 = {xi0} shock_radius = {r}\nlambda,g,v,h\n");
            for p in sedov_profile(gamma, steps) {
                s += &format!("{},{},{},{}\n", p.lambda, p.g, p.v, p.h);
            }
            emit_text(&out, &s)?;
        }
        OracleCommand::Noh { gamma, rho0, t, points, out } => {
            let mut s = String::from("x,rho,u,p\n");
            for i in 0..points {
                let x = (i as f64 + 0.5) / points as f64;
                let q = noh_exact(rho0, gamma, t, x);
                s += &format!("{x},{},{},{}\n", q.rho, q.u, q.p);
            }
            emit_text(&out, &s)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Scale(a) => cmd_scale(a),
        Command::Oracle(c) => cmd_oracle(c),
        Command::Worker { rank, size } => worker_main(rank, size).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
