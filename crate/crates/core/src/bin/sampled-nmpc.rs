use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sampled_nmpc::bench::{
    run_experiment, sweep, validate_log, write_error, BenchError, ErrorReport, ExperimentConfig, Overrides,
    SweepConfig, STEPS_CSV,
};
use sampled_nmpc::complexity::calibrate;
use sampled_nmpc::plant::Plan;
use sampled_nmpc::sampling::{draw_samples, halton_point, SamplerState};

#[derive(Parser)]
#[command(name = "sampled-nmpc", version, about = "Sampling-based suboptimal NMPC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment.
    Run(RunArgs),
    /// Run a list or grid of experiments and write a combined sweep.csv.
    Sweep(RunArgs),
    /// Re-check a per-step log against the plant's constraints and dynamics.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Log to check; defaults to steps.csv in the run's output directory.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure the per-operation costs c1 (step) and c2 (cost evaluation).
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        repetitions: usize,
        /// Also write the calibration JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the first samples of a sequence as CSV.
    HaltonDump {
        #[arg(long)]
        count: usize,
        /// Dimension of raw unit-cube Halton points (ignored with --config).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        skip: u64,
        /// Draw from the configured sampler over the plant's input box instead.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lanes: Option<usize>,
    #[arg(long)]
    budget_ms: Option<f64>,
    #[arg(long)]
    no_prune: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            lanes: self.lanes,
            budget_ms: self.budget_ms,
            no_prune: self.no_prune,
        }
    }
}

fn output_dir(flag: Option<&Path>, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag.or(configured) {
        return p.to_path_buf();
    }
    let root = std::env::var_os("SAMPLED_NMPC_OUT").map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(name)
}

fn print_json<T: serde::Serialize>(value: &T) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn fail(err: &BenchError, dir: Option<&Path>) -> ExitCode {
    if let Some(dir) = dir {
        if !matches!(err, BenchError::Solver { .. }) {
            let _ = write_error(dir, err);
        }
    }
    eprintln!("{}", serde_json::to_string(&ErrorReport::from_error(err)).expect("serializable"));
    ExitCode::from(err.exit_code() as u8)
}

fn run(args: &RunArgs) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c.resolve(),
        Err(e) => return fail(&e, args.out.as_deref()),
    };
    args.overrides().apply(&mut cfg);
    let dir = output_dir(args.out.as_deref(), cfg.output_dir.as_deref(), cfg.display_name());
    match run_experiment(&cfg, &dir) {
        Ok(artifacts) => {
            print_json(&artifacts);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&dir)),
    }
}

fn run_sweep(args: &RunArgs) -> ExitCode {
    let loaded = SweepConfig::load(&args.config).and_then(|s| Ok((s.expand()?, s.output_dir)));
    let (mut configs, configured_dir) = match loaded {
        Ok(v) => v,
        Err(e) => return fail(&e, args.out.as_deref()),
    };
    let overrides = args.overrides();
    for cfg in &mut configs {
        overrides.apply(cfg);
    }
    let dir = output_dir(args.out.as_deref(), configured_dir.as_deref(), "sweep");
    match sweep(&configs, &dir) {
        Ok(outcome) => {
            print_json(&serde_json::json!({
                "sweep_csv": outcome.sweep_csv,
                "runs": outcome.rows.len(),
                "failures": outcome.failures(),
            }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, Some(&dir)),
    }
}

fn validate(config: &Path, log: Option<&Path>, out: Option<&Path>) -> ExitCode {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c.resolve(),
        Err(e) => return fail(&e, None),
    };
    let path = match log {
        Some(p) => p.to_path_buf(),
        None => output_dir(out, cfg.output_dir.as_deref(), cfg.display_name()).join(STEPS_CSV),
    };
    match validate_log(&cfg, &path) {
        Ok(report) => {
            print_json(&report);
            if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => fail(&e, None),
    }
}

fn run_calibrate(config: &Path, repetitions: usize, out: Option<&Path>) -> ExitCode {
    let cfg = match ExperimentConfig::load(config).map(ExperimentConfig::resolve) {
        Ok(c) => c,
        Err(e) => return fail(&e, None),
    };
    if let Err(e) = cfg.validate() {
        return fail(&e, None);
    }
    let problem = cfg.plant.problem(cfg.horizon);
    let (_, u_eq) = problem.model.equilibrium();
    let plan = Plan::constant(&u_eq, cfg.horizon).expect("horizon validated");
    let cal = calibrate(
        problem.model.as_ref(),
        &problem.constraints,
        &problem.cost,
        &cfg.initial_state_vec(),
        &plan,
        repetitions,
    );
    let text = serde_json::to_string_pretty(&cal).expect("serializable");
    if let Some(path) = out {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            return fail(&BenchError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            }, None);
        }
    }
    println!("{text}");
    ExitCode::SUCCESS
}

fn halton_dump(count: usize, dim: usize, skip: u64, config: Option<&Path>) -> ExitCode {
    let mut out = std::io::stdout().lock();
    match config {
        None => {
            if dim == 0 {
                return fail(&BenchError::Config("--dim must be at least 1".into()), None);
            }
            let header: Vec<String> = (0..dim).map(|i| format!("q{i}")).collect();
            let _ = writeln!(out, "index,{}", header.join(","));
            for i in 0..count as u64 {
                let index = skip + i + 1;
                let row: Vec<String> = halton_point(index, dim).iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{index},{}", row.join(","));
            }
        }
        Some(path) => {
            let cfg = match ExperimentConfig::load(path).map(ExperimentConfig::resolve) {
                Ok(c) => c,
                Err(e) => return fail(&e, None),
            };
            let problem = cfg.plant.problem(cfg.horizon.max(1));
            let mut sampler_cfg = cfg.sampler.clone().unwrap_or_default();
            sampler_cfg.skip += skip;
            let mut state = SamplerState::new(sampler_cfg);
            let samples = match draw_samples(&mut state, &problem.constraints.input_box, count) {
                Ok(s) => s,
                Err(e) => return fail(&BenchError::Config(e.to_string()), None),
            };
            let m = problem.model.input_dim();
            let header: Vec<String> = (0..m).map(|i| format!("u{i}")).collect();
            let _ = writeln!(out, "index,{}", header.join(","));
            for (i, u) in samples.iter().enumerate() {
                let row: Vec<String> = u.iter().map(|v| format!("{v:.16e}")).collect();
                let _ = writeln!(out, "{i},{}", row.join(","));
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Validate { config, log, out } => validate(config, log.as_deref(), out.as_deref()),
        Command::Calibrate { config, repetitions, out } => run_calibrate(config, *repetitions, out.as_deref()),
        Command::HaltonDump { count, dim, skip, config } => halton_dump(*count, *dim, *skip, config.as_deref()),
    }
}
