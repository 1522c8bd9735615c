use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gwrc::tree::TreeMode;
use gwrc_cli::{parse_config, run_experiment, write_atomic, CliError, Format, Method, Overrides, Status};

#[derive(Parser)]
#[command(name = "gwrc", version, about = "Random walks on Galton-Watson trees with random conductances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Walk length for direct runs.
    #[arg(long, global = true)]
    steps: Option<u64>,
    /// Tree samples for formula-based runs and stationarity.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Relative width at which conductance brackets stop deepening.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    max_depth: Option<u32>,
    #[arg(long, global = true)]
    confirm_level: Option<u32>,
    #[arg(long, global = true)]
    checkpoint_every: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Output file, written atomically. Standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever `method` the configuration names.
    Run,
    /// Speed estimate by one method.
    Speed {
        #[arg(long, value_enum)]
        method: Option<SpeedMethod>,
    },
    /// Conductance bracket for the subtree at a child-position path.
    Bounds {
        /// Comma-separated child positions from the root, e.g. `0,2`.
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<u32>>,
    },
    /// Escape-direction law at the root, optionally with simulated walks.
    Theta {
        #[arg(long)]
        walks: Option<u64>,
    },
    /// Binary-tree two-point example over a grid of `eps:a` pairs.
    Ex1 {
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        grid: Option<Vec<(f64, f64)>>,
    },
    /// Tests `v < v_SRW` for equal-mean conductances.
    Slowdown,
    /// Paired stationarity check of the augmented tree law.
    Stationarity,
    /// Invariant battery and replay determinism.
    Selfcheck,
    /// JSON snapshot of a finite piece of the tree.
    DumpTree {
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        path: Option<Vec<u32>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpeedMethod {
    Direct,
    Formula,
    Covariance,
    Srw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Augmented,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (eps, a) = s.split_once(':').ok_or("expected eps:a")?;
    Ok((
        eps.trim().parse().map_err(|e| format!("{e}"))?,
        a.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn overrides(cli: &Cli) -> Overrides {
    let c = &cli.common;
    let mut o = Overrides {
        seed: c.seed,
        replicas: c.replicas,
        n_steps: c.steps,
        samples: c.samples,
        tolerance: c.tolerance,
        max_depth: c.max_depth,
        confirm_level: c.confirm_level,
        checkpoint_every: c.checkpoint_every,
        output: c.out.clone(),
        format: c.format.map(|f| match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }),
        mode: c.mode.map(|m| match m {
            ModeArg::Plain => TreeMode::Plain,
            ModeArg::Augmented => TreeMode::Augmented,
        }),
        ..Overrides::default()
    };
    match &cli.command {
        Command::Run => {}
        Command::Speed { method } => {
            o.method = method.map(|m| match m {
                SpeedMethod::Direct => Method::Direct,
                SpeedMethod::Formula => Method::Formula,
                SpeedMethod::Covariance => Method::Covariance,
                SpeedMethod::Srw => Method::Srw,
            });
        }
        Command::Bounds { path } => {
            o.method = Some(Method::Bounds);
            o.path = path.clone();
        }
        Command::Theta { walks } => {
            o.method = Some(Method::Theta);
            o.walks = *walks;
        }
        Command::Ex1 { grid } => {
            o.method = Some(Method::Ex1);
            o.ex1_grid = grid.clone();
        }
        Command::Slowdown => o.method = Some(Method::Slowdown),
        Command::Stationarity => o.method = Some(Method::Stationarity),
        Command::Selfcheck => o.method = Some(Method::Selfcheck),
        Command::DumpTree { depth, path } => {
            o.method = Some(Method::DumpTree);
            o.depth = *depth;
            o.path = path.clone();
        }
    }
    o
}

fn execute(cli: &Cli) -> Result<Status, CliError> {
    let mut cfg = parse_config(cli.common.config.as_deref(), &overrides(cli))?;
    if let Command::Speed { method: None } = cli.command {
        if !cfg.method.is_speed() {
            cfg.method = Method::Direct;
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    let report = pool.install(|| run_experiment(&cfg))?;
    match &cfg.output {
        Some(path) => write_atomic(path, report.body.as_bytes())?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.body.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                })?;
        }
    }
    Ok(report.status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
