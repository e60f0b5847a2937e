//! `nwl` — certification and solver pipeline for the nonlocal dispersive
//! equation `u_t + (u^2 + Lu)_x = 0`.
//!
//! Exit codes: 0 all checks passed, 1 a certified check failed,
//! 2 numerical/resolution failure, 3 invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "nwl", version, about = "nonlocal wave library pipeline")]
struct Cli {
    /// JSON run configuration (symbol, grid size, tolerances)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts (env NWL_OUT overrides)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Grid size override
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Kernel truncation override
    #[arg(long = "M", global = true)]
    m_trunc: Option<u64>,

    /// Solve-tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed override for randomized checks
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Thread count recorded in the manifest (runs are single-threaded
    /// per command; independent commands may be run concurrently)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the symbol: order fits and complete monotonicity
    SymbolCheck,
    /// Build the convolution kernel and check decrease on (0, pi)
    Kernel {
        /// Also run the origin-behaviour diagnostics (slower)
        #[arg(long)]
        origin: bool,
    },
    /// Solve the steady equation at a fixed speed
    Solve {
        /// Wave speed
        #[arg(long)]
        c: f64,
    },
    /// Continue the small-amplitude branch toward the highest wave
    Branch,
    /// Structural audit (reflection criterion, defect, crest count) of a
    /// solved profile
    Symmetry {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
    /// Run a lemma verifier on a solved profile
    Verify {
        #[command(subcommand)]
        lemma: VerifyLemma,
    },
    /// Evolve a solved profile and measure traveling drift
    Evolve {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        /// Number of wave periods to integrate
        #[arg(long, default_value_t = 1)]
        periods: u32,
        /// Drift bound for the pass verdict
        #[arg(long, default_value_t = 1e-5)]
        drift_tol: f64,
    },
    /// Full pipeline: symbol-check, kernel, branch, cross-check,
    /// symmetry audit, evolution
    All,
}

#[derive(Subcommand)]
enum VerifyLemma {
    /// Touching lemma: L(phi - phibar) positivity and G_p > 0
    Touching {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        /// Reflection axis
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Evaluation point for Lw
        #[arg(long, allow_negative_numbers = true)]
        xbar: f64,
    },
    /// Boundary-point lemma: two-route evaluation of K*w'(lambda)
    Boundary {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        /// Reflection axis
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Half-separation of the shifted test pair
        #[arg(long, default_value_t = 0.2)]
        shift: f64,
    },
}

fn load_config(cli: &Cli) -> nwl_core::Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| {
        nwl_core::Error::InvalidInput("--config is required for this subcommand".into())
    })?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(m) = cli.m_trunc {
        cfg.m_trunc = m;
    }
    if let Some(t) = cli.tol {
        cfg.tolerances.solve = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> nwl_core::Result<bool> {
    let out = report::resolve_out_dir(cli.out.as_deref());
    let cfg = load_config(cli)?;
    let threads = cli.threads;
    match &cli.command {
        Command::SymbolCheck => commands::symbol_check(&cfg, &out, threads),
        Command::Kernel { origin } => commands::kernel(&cfg, &out, threads, *origin),
        Command::Solve { c } => commands::solve(&cfg, &out, threads, *c),
        Command::Branch => commands::branch(&cfg, &out, threads),
        Command::Symmetry { profile, meta } => {
            commands::symmetry(&cfg, &out, threads, profile, meta)
        }
        Command::Verify { lemma } => match lemma {
            VerifyLemma::Touching {
                profile,
                meta,
                lambda,
                xbar,
            } => commands::verify_touching_cmd(&cfg, &out, threads, profile, meta, *lambda, *xbar),
            VerifyLemma::Boundary {
                profile,
                meta,
                lambda,
                shift,
            } => commands::verify_boundary_cmd(&cfg, &out, threads, profile, meta, *lambda, *shift),
        },
        Command::Evolve {
            profile,
            meta,
            periods,
            drift_tol,
        } => commands::evolve(&cfg, &out, threads, profile, meta, *periods, *drift_tol),
        Command::All => commands::all(&cfg, &out, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("nwl: a certified check failed (see report artifacts)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("nwl: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
