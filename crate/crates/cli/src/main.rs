use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use lerw_core::harness::{
    fit_exponent, run_loop_law, run_phi_sweep, run_scan, run_verify, write_scan_csv, Config, Report,
};
use lerw_core::identity::{lhs_theorem31, lhs_theorem51, rhs_theorem31, IdentityContext, Variant};
use lerw_core::montecarlo::{estimate_edge_probability, McConfig, DEFAULT_CHUNK};
use lerw_core::{build_domain, LatticePoint, LerwError};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

const DEFAULT_SAMPLES: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_STRIDE: usize = 1;

#[derive(Parser, Debug)]
#[command(
    name = "lerw-edge",
    version,
    about = "Probability that planar loop-erased random walk uses the edge {0,1}"
)]
struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "LERW_EDGE_THREADS")]
    threads: Option<usize>,

    /// JSON file with default settings.
    #[arg(long, global = true, env = "LERW_EDGE_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct McArgs {
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Attempts per independently seeded chunk.
    #[arg(long)]
    chunk: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact edge probability from the identity; `--exhaustive` adds the
    /// enumeration value for small n.
    EdgeProb {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Exact columns over a list of n, optional Monte Carlo, and the exponent fit.
    Scan {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long)]
        mc: bool,
        #[command(flatten)]
        mc_args: McArgs,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Odd-loop mass against ln(n)/8.
    LoopLaw {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
    },
    /// Φ and the boundary-pair identity for one pair.
    Phi {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        zeta1: Point,
        #[arg(long, allow_hyphen_values = true)]
        zeta2: Point,
        #[arg(long)]
        exhaustive: bool,
    },
    /// Φ over boundary pairs at a stride.
    PhiSweep {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Exhaustive oracle suite.
    Verify {
        #[arg(long, default_value_t = 3)]
        n_max: u32,
    },
    /// Monte Carlo estimate of the edge probability.
    Mc {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        mc_args: McArgs,
        /// Fix both endpoints instead of crossing left to right.
        #[arg(long, allow_hyphen_values = true, requires = "zeta2")]
        zeta1: Option<Point>,
        #[arg(long, allow_hyphen_values = true, requires = "zeta1")]
        zeta2: Option<Point>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
struct Point(LatticePoint);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| format!("expected x,y, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Point(LatticePoint::new(parse(x)?, parse(y)?)))
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] LerwError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(LerwError::Numerical(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 2,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

fn mc_config(n: u32, a: &McArgs, cfg: &Config) -> McConfig {
    McConfig {
        n,
        samples: a.samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES),
        seed: a.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        variant: Variant::Theorem31,
        chunk: a.chunk.or(cfg.chunk).unwrap_or(DEFAULT_CHUNK),
    }
}

fn emit(report: &Report) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", report.to_json())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(t) = cli.threads.or(cfg.threads) {
        if t == 0 {
            return Err(LerwError::precondition("--threads must be positive").into());
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let caps = cfg.caps();

    match cli.command {
        Command::EdgeProb { n, exhaustive } => {
            let d = build_domain(n)?;
            let mut rep = rhs_theorem31(&d)?;
            if exhaustive {
                rep = rep.with_lhs(lhs_theorem31(&d, caps)?);
            }
            emit(&Report::new(
                "edge-prob",
                &json!({"n": n, "exhaustive": exhaustive}),
                &[rep],
            ))
        }
        Command::Scan {
            n,
            mc,
            mc_args,
            csv,
        } => {
            let mc_cfg = mc.then(|| mc_config(0, &mc_args, &cfg));
            let scan = run_scan(&n, mc_cfg.as_ref())?;
            let mut params = json!({"n": n, "mc": mc});
            if let Some(c) = &mc_cfg {
                params["samples"] = json!(c.samples);
                params["seed"] = json!(c.seed);
                params["chunk"] = json!(c.chunk);
            }
            let mut report = Report::new("scan", &params, &scan.rows);
            if scan.rows.len() >= 4 {
                report = report.with_fit(fit_exponent(&scan)?);
            }
            if let Some(path) = csv {
                let file = BufWriter::new(File::create(&path)?);
                write_scan_csv(&scan.rows, file)?;
            }
            emit(&report)
        }
        Command::LoopLaw { n_list } => {
            let rows = run_loop_law(&n_list)?;
            emit(&Report::new("loop-law", &json!({"n_list": n_list}), &rows))
        }
        Command::Phi {
            n,
            zeta1,
            zeta2,
            exhaustive,
        } => {
            let d = build_domain(n)?;
            let ctx = IdentityContext::with_profile(&d)?;
            let mut rep = ctx.theorem51(zeta1.0, zeta2.0)?;
            if exhaustive {
                rep = rep.with_lhs(lhs_theorem51(&d, zeta1.0, zeta2.0, caps)?);
            }
            let phi = ctx
                .profile()
                .expect("profile requested")
                .phi(zeta1.0, zeta2.0)?;
            let row = json!({"zeta1": zeta1, "zeta2": zeta2, "phi": phi, "report": rep});
            let params = json!({"n": n, "zeta1": zeta1, "zeta2": zeta2, "exhaustive": exhaustive});
            emit(&Report::new("phi", &params, &[row]))
        }
        Command::PhiSweep { n, stride } => {
            let stride = stride.or(cfg.stride).unwrap_or(DEFAULT_STRIDE);
            let rows = run_phi_sweep(n, stride)?;
            emit(&Report::new(
                "phi-sweep",
                &json!({"n": n, "stride": stride}),
                &rows,
            ))
        }
        Command::Verify { n_max } => {
            let checks = run_verify(n_max, caps)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            emit(&Report::new("verify", &json!({"n_max": n_max}), &checks))?;
            for c in &checks {
                eprintln!(
                    "{} {} ({:e} vs {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            if failed > 0 {
                return Err(CliError::VerifyFailed(failed));
            }
            Ok(())
        }
        Command::Mc {
            n,
            mc_args,
            zeta1,
            zeta2,
        } => {
            let mut mc = mc_config(n, &mc_args, &cfg);
            if let (Some(a), Some(b)) = (zeta1, zeta2) {
                mc.variant = Variant::Theorem51 {
                    zeta1: a.0,
                    zeta2: b.0,
                };
            }
            let est = estimate_edge_probability(&mc)?;
            emit(&Report::new("mc", &mc, &[est]))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lerw-edge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
