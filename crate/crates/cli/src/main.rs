//! `iago` command line: criterion-noise study, single optimization runs and
//! the multi-run policy benchmark.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use iago::bench::{self, BenchConfig, BenchError};

#[derive(Parser)]
#[command(name = "iago", version, about = "Informational global optimization under heavy noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated criterion profiles for each configured virtual batch size.
    CriterionNoise(Common),
    /// One run of every configured policy.
    Optimize(Common),
    /// `runs` seeded runs of every configured policy plus percentile summary.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of runs per policy.
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<BenchConfig, BenchError> {
        let mut config = BenchConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Appends timestamped lines to `run.log` in the output directory. Result
/// files never carry timestamps.
struct Log {
    path: PathBuf,
}

impl Log {
    fn line(&self, msg: &str) {
        eprintln!("{msg}");
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        if let Ok(mut f) = OpenOptions::new().create(true).append(true).open(&self.path) {
            let _ = writeln!(f, "[{secs:.3}] {msg}");
        }
    }
}

fn exit_code(err: &BenchError) -> u8 {
    match err {
        BenchError::Config(_) => 2,
        BenchError::Numerical(iago::Error::InvalidSpecification(_) | iago::Error::InvalidArgument(_)) => 2,
        BenchError::Numerical(_) => 3,
        BenchError::Io { .. } => 1,
    }
}

fn wrote(log: &Log, paths: &[PathBuf]) {
    for p in paths {
        log.line(&format!("wrote {}", p.display()));
    }
}

fn criterion_noise(config: &BenchConfig, out: &Path, log: &Log) -> Result<(), BenchError> {
    let report = bench::criterion_noise_study(config)?;
    for e in &report.entries {
        log.line(&format!("K={} rho={:.4} mean_sd={:.4e} range={:.4e}", e.virtual_batch, e.rho, e.mean_sd, e.range));
    }
    wrote(log, &bench::write_study_outputs(&report, config, out)?);
    Ok(())
}

fn run_bench(config: &BenchConfig, out: &Path, log: &Log) -> Result<(), BenchError> {
    let outcome = bench::bench(config)?;
    for r in &outcome.runs {
        match (&r.error, r.trace.as_ref()) {
            (Some(e), _) => log.line(&format!("warning: {} run {} failed: {e}", r.policy.label(), r.run)),
            (None, Some(t)) => {
                let s = t.last();
                log.line(&format!("{} run {}: xhat={:?} Mhat={:.4} H={:.4}", r.policy.label(), r.run, s.xhat, s.mhat, s.entropy));
            }
            (None, None) => {}
        }
    }
    let summary = &outcome.summary;
    if summary.failed_runs > 0 {
        log.line(&format!("warning: {} of {} runs failed", summary.failed_runs, outcome.runs.len()));
    }
    wrote(log, &bench::write_bench_outputs(&outcome, config, out)?);
    if summary.completed_runs == 0 {
        return Err(BenchError::Numerical(iago::Error::InsufficientData("every run failed".into())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::CriterionNoise(c) => ("criterion-noise", c),
        Command::Optimize(c) => ("optimize", c),
        Command::Bench(c) => ("bench", c),
    };
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("error: cannot create {}: {e}", common.out.display());
        return ExitCode::from(1);
    }
    let log = Log { path: common.out.join("run.log") };

    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log.line(&format!("error: thread pool: {e}"));
            return ExitCode::from(2);
        }
    }

    let result = common.load().and_then(|mut config| {
        log.line(&format!("{name} {} seed={} runs={}", common.config.display(), config.seed, config.runs));
        match cli.command {
            Command::CriterionNoise(_) => criterion_noise(&config, &common.out, &log),
            Command::Optimize(_) => {
                config.runs = 1;
                run_bench(&config, &common.out, &log)
            }
            Command::Bench(_) => run_bench(&config, &common.out, &log),
        }
    });
    match result {
        Ok(()) => {
            log.line("done");
            ExitCode::SUCCESS
        }
        Err(e) => {
            log.line(&format!("error: {e}"));
            ExitCode::from(exit_code(&e))
        }
    }
}
