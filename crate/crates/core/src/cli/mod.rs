//! `d2dsim` command line: `run <config>`, `validate`, `--version`.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 a trial failed at
//! run time (constraint audit or internal error), 3 a validation property
//! failed.

pub mod config;
pub mod validate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::experiment::{
    run_slicing_comparison_with, run_sweep_with, with_workers, ExecMode, Scenario, SweepResult,
};
pub use config::{parse as parse_config, ConfigError, RunConfig};
pub use validate::{run_validation, Fault, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Worker cap for trial execution; 0 or unset means one per core.
pub const THREADS_ENV: &str = "D2DSIM_THREADS";

pub const SWEEP_CSV: &str = "sweep.csv";
pub const TRIALS_CSV: &str = "trials.csv";
pub const DIAGNOSTICS_LOG: &str = "diagnostics.log";

#[derive(Debug, Parser)]
#[command(name = "d2dsim", version, about = "D2D spectrum reuse simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    DeltaSignFlip,
    PowerOvershoot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sweeps described by a configuration file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Check the allocation and matching code against brute-force oracles.
    Validate {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        max_cu: usize,
        #[arg(long, default_value_t = 6)]
        max_d2d: usize,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            inject_fault,
        } => {
            let overshoot = matches!(inject_fault, Some(FaultArg::PowerOvershoot));
            cmd_run(&config, out.as_deref(), overshoot)
        }
        Command::Validate {
            instances,
            seed,
            max_cu,
            max_d2d,
            inject_fault,
        } => {
            let opts = ValidateOptions {
                instances,
                seed,
                max_cu,
                max_d2d,
                fault: matches!(inject_fault, Some(FaultArg::DeltaSignFlip))
                    .then_some(Fault::DeltaSignFlip),
            };
            cmd_validate(&opts)
        }
    }
}

fn thread_cap() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")),
        _ => Ok(0),
    }
}

fn write_diagnostics(dir: &Path, message: &str) {
    if fs::create_dir_all(dir).is_ok() {
        let _ = fs::write(dir.join(DIAGNOSTICS_LOG), format!("{message}\n"));
    }
}

/// Loads, validates and runs a configuration file, then writes `sweep.csv`
/// and `trials.csv`. Nothing but `diagnostics.log` is written on failure.
pub fn cmd_run(config_path: &Path, out_override: Option<&Path>, inject_overshoot: bool) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config_path.display());
            return EXIT_CONFIG;
        }
    };
    if let Some(out) = out_override {
        cfg.output_dir = out.to_path_buf();
    }
    cfg.scenario.inject_power_overshoot = inject_overshoot;
    let fail = |code: i32, message: String| {
        eprintln!("error: {message}");
        write_diagnostics(&cfg.output_dir, &message);
        code
    };
    if let Err(e) = cfg.scenario.validate() {
        return fail(EXIT_CONFIG, format!("{}: {e}", config_path.display()));
    }
    let workers = match thread_cap() {
        Ok(n) => n,
        Err(e) => return fail(EXIT_CONFIG, e),
    };

    let results = match execute(&cfg, workers) {
        Ok(r) => r,
        Err(e @ Error::InvalidParameter { .. }) | Err(e @ Error::TooManyD2d { .. }) => {
            return fail(EXIT_CONFIG, e.to_string())
        }
        Err(e) => return fail(EXIT_RUNTIME, e.to_string()),
    };

    let (sweep, trials) = render_csvs(&results, &cfg.label);
    let written = fs::create_dir_all(&cfg.output_dir)
        .and_then(|_| fs::write(cfg.output_dir.join(SWEEP_CSV), sweep))
        .and_then(|_| fs::write(cfg.output_dir.join(TRIALS_CSV), trials));
    if let Err(e) = written {
        return fail(
            EXIT_CONFIG,
            format!("cannot write results to {}: {e}", cfg.output_dir.display()),
        );
    }
    print!("{}", summary_table(&results, &cfg.label));
    println!("wrote {}", cfg.output_dir.join(SWEEP_CSV).display());
    println!("wrote {}", cfg.output_dir.join(TRIALS_CSV).display());
    EXIT_OK
}

/// Runs the sweep (and the sliced scenario when configured) with at most
/// `workers` threads.
pub fn execute(cfg: &RunConfig, workers: usize) -> Result<Vec<SweepResult>, Error> {
    let scenario = &cfg.scenario;
    with_workers(workers, || {
        if cfg.slicing_comparison {
            run_slicing_comparison_with(scenario, ExecMode::default()).map(|(a, b)| vec![a, b])
        } else {
            run_sweep_with(scenario, Scenario::Baseline, ExecMode::default()).map(|a| vec![a])
        }
    })?
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `(sweep.csv, trials.csv)` contents.
pub fn render_csvs(results: &[SweepResult], label: &str) -> (Vec<u8>, Vec<u8>) {
    let sweep = csv_bytes(
        &[
            "scenario",
            "label",
            "n_cu",
            "m_d2d",
            "mean_bpshz",
            "std_bpshz",
            "min",
            "max",
            "mean_served",
        ],
        results.iter().flat_map(|r| {
            r.points.iter().map(move |p| {
                vec![
                    r.scenario.name().to_string(),
                    label.to_string(),
                    r.n_cu.to_string(),
                    p.m_d2d.to_string(),
                    p.mean_bpshz.to_string(),
                    p.std_bpshz.to_string(),
                    p.min_bpshz.to_string(),
                    p.max_bpshz.to_string(),
                    p.mean_served.to_string(),
                ]
            })
        }),
    );
    let trials = csv_bytes(
        &[
            "scenario",
            "m_d2d",
            "drop_index",
            "seed",
            "sum_bpshz",
            "served",
            "unserved",
        ],
        results.iter().flat_map(|r| {
            r.trials().map(move |t| {
                let m = &t.metrics;
                vec![
                    r.scenario.name().to_string(),
                    m.m_d2d.to_string(),
                    t.drop_index.to_string(),
                    m.seed.to_string(),
                    m.sum_spectral_efficiency_bpshz.to_string(),
                    m.served_d2d_count.to_string(),
                    m.unserved_d2d_count.to_string(),
                ]
            })
        }),
    );
    (sweep, trials)
}

pub fn summary_table(results: &[SweepResult], label: &str) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(
            s,
            "{label} / scenario {}: {} CUs, {:.0} Hz channels, SINR floor {:.3} ({:.2} dB)",
            r.scenario.name(),
            r.n_cu,
            r.channel_bandwidth_hz,
            r.sinr_min,
            crate::units::linear_to_db(r.sinr_min)
        );
        let _ = writeln!(
            s,
            "{:>6} {:>10} {:>9} {:>9} {:>9} {:>9} {:>10}",
            "m_d2d", "mean", "std", "min", "max", "served", "sum/chan"
        );
        for p in &r.points {
            let _ = writeln!(
                s,
                "{:>6} {:>10.4} {:>9.4} {:>9.4} {:>9.4} {:>9.2} {:>10.4}",
                p.m_d2d,
                p.mean_bpshz,
                p.std_bpshz,
                p.min_bpshz,
                p.max_bpshz,
                p.mean_served,
                p.mean_sum_bpshz / r.n_cu as f64
            );
        }
    }
    s
}

pub fn cmd_validate(opts: &ValidateOptions) -> i32 {
    if opts.instances == 0 {
        eprintln!("warning: --instances 0 checks nothing; randomized properties pass vacuously");
    }
    if opts.max_cu == 0 {
        eprintln!("error: --max-cu must be >= 1");
        return EXIT_CONFIG;
    }
    let stdout = std::io::stdout();
    let outcomes = run_validation(opts, &mut stdout.lock());
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed()).collect();
    if failed.is_empty() {
        EXIT_OK
    } else {
        for o in failed {
            if let Some(f) = &o.failure {
                eprintln!("reproduce: {} failed at instance seed {}", o.name, f.seed);
            }
        }
        EXIT_VALIDATION
    }
}
