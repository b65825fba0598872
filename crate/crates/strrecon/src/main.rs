use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use strrecon::average::expect_report;
use strrecon::corpus::Family;
use strrecon::harness::{run_experiment, Algo, ExperimentConfig, Mode, RunReport};

/// Reconstruct hidden binary strings through substring oracle queries and
/// measure the query cost.
#[derive(Parser)]
#[command(name = "strrecon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single reconstruction trial.
    Run(TrialArgs),
    /// Run every hidden string of length n (n <= 24).
    Exhaustive(TrialArgs),
    /// Run seeded random trials over a corpus family.
    Montecarlo(TrialArgs),
    /// Print the exact expected query count of the average-case algorithm.
    Expect(ExpectArgs),
    /// Exhaustively run with transcripts and check every run's consistency.
    Verify(TrialArgs),
}

#[derive(Args)]
struct TrialArgs {
    /// Algorithm: basic | average | randomized.
    #[arg(long)]
    algo: Algo,
    /// Hidden string length.
    #[arg(long)]
    n: usize,
    /// Trial count (montecarlo only).
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Corpus family: random | allzero | allone | periodic:PAT | debruijn:K
    /// | runlength:D | nearend:OFF[:RUN].
    #[arg(long, default_value = "random")]
    family: Family,
    /// Master RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the C1 constant (randomized).
    #[arg(long)]
    c1: Option<usize>,
    /// Override the C2 constant (randomized).
    #[arg(long)]
    c2: Option<usize>,
    /// Failure budget delta in (0, 1] (randomized).
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Enable white-box soundness assertions.
    #[arg(long)]
    whitebox: bool,
    /// Write per-trial rows as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write the summary report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExpectArgs {
    /// Hidden string length.
    #[arg(long)]
    n: usize,
    /// Write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

impl TrialArgs {
    fn into_config(self, mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.algo, mode, self.n);
        cfg.trials = self.trials;
        cfg.family = self.family;
        cfg.c1 = self.c1;
        cfg.c2 = self.c2;
        cfg.delta = self.delta;
        cfg.rng_seed = self.seed;
        cfg.whitebox = self.whitebox;
        cfg.csv = self.csv;
        cfg.json = self.json;
        cfg
    }
}

fn print_report(report: &RunReport) {
    let a = &report.aggregates;
    let cfg = &report.config;
    println!(
        "algo={} n={} trials={} family={} seed={}",
        cfg.algo,
        cfg.n,
        a.trials,
        report.rows.first().map(|r| r.family.as_str()).unwrap_or("-"),
        cfg.rng_seed
    );
    if let Some(p) = &report.params {
        println!(
            "params: c1={} c2={} delta={} q={}{}",
            p.c1,
            p.c2,
            p.delta,
            p.q,
            if p.guarantee_void { " (guarantee void)" } else { "" }
        );
    }
    println!(
        "correct {}/{}  mean {:.3}  max {}  p50/p90/p99 {}/{}/{}",
        a.correct, a.trials, a.mean_queries, a.max_queries, a.p50, a.p90, a.p99
    );
    println!(
        "threshold {}  exceedance {} ({:.3}%)",
        a.threshold,
        a.exceedance_count,
        a.exceedance_frac * 100.0
    );
    if !a.branches.is_empty() {
        let items: Vec<String> = a.branches.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("branches: {}", items.join(" "));
    }
    if !a.geometries.is_empty() {
        let items: Vec<String> = a.geometries.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("second-seed geometries: {}", items.join(" "));
    }
    if let Some(s) = &a.sampling {
        println!(
            "sampling: taken {} of {} draws, expected {:.2} (sigma {:.2}, 5-sigma {})",
            s.taken,
            s.draws,
            s.expected,
            s.sigma,
            if s.within_five_sigma { "ok" } else { "EXCEEDED" }
        );
    }
    if a.verdicts_failed > 0 {
        println!("verify: {} transcript verdicts FAILED", a.verdicts_failed);
    } else if report.rows.iter().any(|r| r.verdict_ok.is_some()) {
        println!("verify: all {} transcripts consistent", a.trials);
    }
    if !report.re_reduction_ok {
        println!("WARNING: parallel and sequential aggregation disagreed");
    }
    match report.exit_code() {
        0 => println!("PASS"),
        2 => println!("BOUND VIOLATED"),
        _ => println!("FAILED: incorrect reconstruction"),
    }
}

fn run_trials(args: TrialArgs, mode: Mode) -> Result<ExitCode> {
    let cfg = args.into_config(mode);
    let report = run_experiment(&cfg)?;
    print_report(&report);
    Ok(ExitCode::from(report.exit_code() as u8))
}

fn run_expect(args: ExpectArgs) -> Result<ExitCode> {
    let report = expect_report(args.n);
    println!(
        "n={}  exact mean {}/{} ~= {:.6}  bound {}",
        report.n,
        report.exact_mean.num,
        report.exact_mean.den,
        report.exact_mean.approx,
        report.mean_bound
    );
    println!(
        "seed-phase mean {}/{} ~= {:.6}",
        report.seed_mean.num, report.seed_mean.den, report.seed_mean.approx
    );
    println!("d,count,seed_measured,seed_closed_form,total_per_string");
    for row in &report.rows {
        println!(
            "{},{},{},{},{}",
            row.d, row.count, row.seed_measured, row.seed_closed_form, row.total_per_string
        );
    }
    if let Some(path) = args.json {
        let mut text = serde_json::to_string_pretty(&report).context("serializing report")?;
        text.push('\n');
        std::fs::write(&path, text)
            .with_context(|| format!("writing JSON to {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Die quietly on SIGPIPE (e.g. when piped into `head`) instead of
    // panicking on a failed stdout write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_trials(args, Mode::Single),
        Command::Exhaustive(args) => run_trials(args, Mode::Exhaustive),
        Command::Montecarlo(args) => run_trials(args, Mode::MonteCarlo),
        Command::Expect(args) => run_expect(args),
        Command::Verify(args) => run_trials(args, Mode::Verify),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
