use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use surfnet::config::{parse_config, ConfigError, ExperimentConfig};
use surfnet::experiment::{sweep, SweepRecord};
use surfnet::lattice::{sample_entanglement_pattern, Site};
use surfnet::rearrange::select_placement;
use surfnet::report::{best_operating_point, rates_at, rates_from_sweep, write_rates_csv, write_sweep_csv, RatesSettings};
use surfnet::rng::TrialStreams;

#[derive(Parser)]
#[command(name = "surfnet", version, about = "Surface-code entanglement distribution between two qubit arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one batch at the first `e_swap` and first `w_thr` of the config.
    Simulate(RunArgs),
    /// Run every `(e_swap, w_thr)` pair of the config.
    Sweep(RunArgs),
    /// Waiting time, distillation and bandwidth for each operating point.
    Rates(RunArgs),
    /// Dump one sampled pattern with its placement and SWAP schedule.
    RearrangeDemo(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `trials` from the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; stdout when absent. A `<out>.json` sidecar records the run.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<surfnet::Error> for Failure {
    fn from(e: surfnet::Error) -> Self {
        use surfnet::Error::*;
        match e {
            InvalidParameter { .. } | InsufficientEntanglement { .. } | Unattainable(_) | EmptyPattern => {
                Failure::Validation(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    seed: u64,
    trials: usize,
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Demo {
    grid_size: usize,
    seed: u64,
    pattern: Vec<Site>,
    distance: usize,
    center: Site,
    origin: Site,
    /// `(source, target)` per data qubit.
    assignment: Vec<(Site, Site)>,
    assignment_weight: u64,
    swaps: Vec<(Site, Site)>,
    swap_counts: Vec<u32>,
    total_swaps: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Rates(a) => ("rates", a),
        Command::RearrangeDemo(a) => ("rearrange-demo", a),
    };
    let mut config = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Failure::Validation("--trials must be at least 1".into()));
        }
        config.trials = trials;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Failure::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Runtime(e.to_string()))?;

    let body = pool.install(|| match &cli.command {
        Command::Simulate(_) => {
            let mut c = config.clone();
            c.e_swaps.truncate(1);
            c.w_thrs.truncate(1);
            render_sweep(&run_sweep(&c)?, args.format)
        }
        Command::Sweep(_) => render_sweep(&run_sweep(&config)?, args.format),
        Command::Rates(_) => rates(&config, args.format),
        Command::RearrangeDemo(_) => demo(&config),
    })?;

    match &args.out {
        None => io::stdout().lock().write_all(&body)?,
        Some(path) => {
            fs::write(path, &body)?;
            let sidecar = Sidecar {
                command: name,
                seed: config.seed,
                trials: config.trials,
                config: &config,
            };
            fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
        }
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>, Failure> {
    Ok(sweep(&config.protocol(), &config.e_swaps, &config.w_thrs, config.trials, config.seed)?)
}

fn render_sweep(records: &[SweepRecord], format: Format) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_sweep_csv(records, &mut buf)?,
        Format::Json => serde_json::to_writer_pretty(&mut buf, records)?,
    }
    Ok(buf)
}

fn rates(config: &ExperimentConfig, format: Format) -> Result<Vec<u8>, Failure> {
    let settings = RatesSettings {
        hardware: config.hardware,
        distillation: config.distillation,
        target_p_gen: config.target_p_gen,
        target_e_post: config.target_e_post,
    };
    let rows = match config.operating_point {
        Some((e_log, p_log)) => vec![rates_at(&settings, e_log, p_log)?],
        None => rates_from_sweep(&settings, &run_sweep(config)?)?,
    };
    match best_operating_point(&rows) {
        Some(r) => eprintln!(
            "best point: e_log = {:.3e}, p_log = {:.3}, e_post = {:.3e}, bandwidth = {:.3} /s",
            r.e_log, r.p_log, r.e_post, r.bandwidth
        ),
        None => eprintln!("no operating point reaches e_post <= {:e}", config.target_e_post),
    }
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_rates_csv(&rows, &mut buf)?,
        Format::Json => serde_json::to_writer_pretty(&mut buf, &rows)?,
    }
    Ok(buf)
}

fn demo(config: &ExperimentConfig) -> Result<Vec<u8>, Failure> {
    let protocol = config.protocol();
    let mut streams = TrialStreams::derive(config.seed, 0);
    let pattern = sample_entanglement_pattern(protocol.grid, protocol.p_gen, &mut streams.placement)?;
    let placement = select_placement(&pattern, &protocol.placement)?;
    let demo = Demo {
        grid_size: protocol.grid.size(),
        seed: config.seed,
        pattern: pattern.sites().collect(),
        distance: placement.distance,
        center: placement.center,
        origin: placement.layout.origin(),
        assignment: placement.plan.assignment.pairs.clone(),
        assignment_weight: placement.plan.assignment.total_weight,
        total_swaps: placement.plan.total_swaps(),
        swaps: placement.plan.swaps,
        swap_counts: placement.plan.swap_counts,
    };
    let mut buf = serde_json::to_vec_pretty(&demo)?;
    buf.push(b'\n');
    Ok(buf)
}
