//! Experiment orchestration: corpus generation, parallel trial execution,
//! aggregation with re-reduction checking, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::fs;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::average::reconstruct_average;
use crate::basic::basic;
use crate::bitstr::BitString;
use crate::corpus::{gen_corpus_entry, Family};
use crate::oracle::Oracle;
use crate::randomized::{derive_params, double_seed, Params};
use crate::verify::check_run;

/// Hard cap for exhaustive enumeration.
pub const EXHAUSTIVE_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Basic,
    Average,
    Randomized,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Basic => "basic",
            Algo::Average => "average",
            Algo::Randomized => "randomized",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Algo::Basic),
            "average" => Ok(Algo::Average),
            "randomized" => Ok(Algo::Randomized),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Exhaustive,
    MonteCarlo,
    Expect,
    Verify,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub mode: Mode,
    pub n: usize,
    pub trials: u64,
    pub family: Family,
    pub c1: Option<usize>,
    pub c2: Option<usize>,
    pub delta: f64,
    pub rng_seed: u64,
    pub whitebox: bool,
    /// Worker count; None uses STRRECON_THREADS or all cores.
    pub workers: Option<usize>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(algo: Algo, mode: Mode, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            algo,
            mode,
            n,
            trials: 1,
            family: Family::Random,
            c1: None,
            c2: None,
            delta: 1.0,
            rng_seed: 0,
            whitebox: false,
            workers: None,
            csv: None,
            json: None,
        }
    }
}

/// One executed trial. The first eight fields are the CSV row; the rest
/// feed aggregation and the JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub n: usize,
    pub trial: u64,
    pub family: String,
    pub algo: Algo,
    pub branch: String,
    pub queries: u64,
    pub correct: bool,
    pub seed: u64,
    pub digest: u64,
    pub geometry: Option<&'static str>,
    pub sample_draws: u64,
    pub samples_taken: u64,
    pub r0: f64,
    pub scan_missed_overlap: bool,
    pub verdict_ok: Option<bool>,
}

/// Aggregate binomial check on the sampling coin: the total number of taken
/// samples against the exact sum of per-run draw expectations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingCheck {
    pub draws: u64,
    pub taken: u64,
    pub expected: f64,
    pub sigma: f64,
    pub within_five_sigma: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregates {
    pub trials: u64,
    pub correct: u64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub threshold: u64,
    pub exceedance_count: u64,
    pub exceedance_frac: f64,
    pub branches: BTreeMap<String, u64>,
    pub geometries: BTreeMap<String, u64>,
    pub scan_missed_overlaps: u64,
    pub verdicts_failed: u64,
    pub sampling: Option<SamplingCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub params: Option<Params>,
    pub aggregates: Aggregates,
    /// Some row was incorrect or failed verification.
    pub failed: bool,
    /// The algorithm's asserted query bound was violated.
    pub bound_violated: bool,
    /// Sequential and parallel reductions agreed.
    pub re_reduction_ok: bool,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl RunReport {
    /// Exit-code contract: 0 pass, 2 bound violation, 3 correctness
    /// violation.
    pub fn exit_code(&self) -> i32 {
        if self.failed {
            3
        } else if self.bound_violated {
            2
        } else {
            0
        }
    }
}

fn mix(seed: u64, domain: u64, index: u64) -> u64 {
    let mut z = seed ^ domain.rotate_left(17) ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const DOMAIN_CORPUS: u64 = 0xc0c0;
const DOMAIN_ALGO: u64 = 0xa160;

fn hidden_for_trial(cfg: &ExperimentConfig, trial: u64) -> Result<BitString> {
    match cfg.mode {
        Mode::Exhaustive | Mode::Verify => Ok(BitString::from_u64(trial, cfg.n)),
        Mode::Single | Mode::MonteCarlo => {
            gen_corpus_entry(&cfg.family, cfg.n, mix(cfg.rng_seed, DOMAIN_CORPUS, 0), trial)
                .map_err(anyhow::Error::msg)
        }
        Mode::Expect => bail!("expect mode has no trials"),
    }
}

fn family_label(cfg: &ExperimentConfig) -> String {
    match cfg.mode {
        Mode::Exhaustive | Mode::Verify => "exhaustive".into(),
        _ => cfg.family.name(),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    params: Option<&Params>,
    family: &str,
    trial: u64,
) -> Result<TrialRow> {
    let hidden = hidden_for_trial(cfg, trial)?;
    let need_transcript = matches!(cfg.mode, Mode::Verify);
    let mut o = Oracle::with_options(hidden, need_transcript, cfg.whitebox);
    let seed = mix(cfg.rng_seed, DOMAIN_ALGO, trial);

    let mut geometry = None;
    let mut sample_draws = 0;
    let mut samples_taken = 0;
    let mut r0 = 0.0;
    let mut scan_missed = false;
    let (result, branch) = match cfg.algo {
        Algo::Basic => {
            let d = o.hidden().max_run(false);
            let out = basic(&mut o, &BitString::zeros(d), &BitString::zeros(d + 1));
            (out, "Basic".to_string())
        }
        Algo::Average => {
            let out = reconstruct_average(&mut o);
            (out, "Average".to_string())
        }
        Algo::Randomized => {
            let p = params.expect("randomized params derived once per experiment");
            let outcome = double_seed(&mut o, p, seed);
            geometry = outcome.diagnostics.second_seed_geometry;
            sample_draws = outcome.diagnostics.sample_draws;
            samples_taken = outcome.diagnostics.samples_taken;
            r0 = outcome.params.r0;
            scan_missed = outcome.diagnostics.scan_missed_overlap;
            (outcome.result, outcome.branch.name().to_string())
        }
    };

    let correct = &result == o.hidden();
    let verdict_ok = if need_transcript {
        Some(check_run(o.transcript().unwrap(), &result, o.hidden()).ok)
    } else {
        None
    };
    Ok(TrialRow {
        n: cfg.n,
        trial,
        family: family.to_string(),
        algo: cfg.algo,
        branch,
        queries: o.total_queries(),
        correct,
        seed,
        digest: o.hidden().digest(),
        geometry,
        sample_draws,
        samples_taken,
        r0,
        scan_missed_overlap: scan_missed,
        verdict_ok,
    })
}

#[derive(Default, Clone, PartialEq, Debug)]
struct Partial {
    trials: u64,
    correct: u64,
    total_queries: u128,
    max_queries: u64,
    exceedance: u64,
    branches: BTreeMap<String, u64>,
    geometries: BTreeMap<String, u64>,
    scan_missed: u64,
    verdicts_failed: u64,
    draws: u64,
    taken: u64,
    expected_bits: u64,
    variance_bits: u64,
}

impl Partial {
    fn absorb(&mut self, row: &TrialRow, threshold: u64) {
        self.trials += 1;
        self.correct += row.correct as u64;
        self.total_queries += row.queries as u128;
        self.max_queries = self.max_queries.max(row.queries);
        self.exceedance += (row.queries > threshold) as u64;
        *self.branches.entry(row.branch.clone()).or_default() += 1;
        if let Some(g) = row.geometry {
            *self.geometries.entry(g.to_string()).or_default() += 1;
        }
        self.scan_missed += row.scan_missed_overlap as u64;
        self.verdicts_failed += matches!(row.verdict_ok, Some(false)) as u64;
        self.draws += row.sample_draws;
        self.taken += row.samples_taken;
        // Accumulate the binomial moments in fixed order as f64 bit images
        // so the parallel merge is exactly associative.
        let e = f64::from_bits(self.expected_bits) + row.sample_draws as f64 * row.r0;
        let v = f64::from_bits(self.variance_bits)
            + row.sample_draws as f64 * row.r0 * (1.0 - row.r0);
        self.expected_bits = e.to_bits();
        self.variance_bits = v.to_bits();
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.trials += other.trials;
        self.correct += other.correct;
        self.total_queries += other.total_queries;
        self.max_queries = self.max_queries.max(other.max_queries);
        self.exceedance += other.exceedance;
        for (k, v) in other.branches {
            *self.branches.entry(k).or_default() += v;
        }
        for (k, v) in other.geometries {
            *self.geometries.entry(k).or_default() += v;
        }
        self.scan_missed += other.scan_missed;
        self.verdicts_failed += other.verdicts_failed;
        self.draws += other.draws;
        self.taken += other.taken;
        let e = f64::from_bits(self.expected_bits) + f64::from_bits(other.expected_bits);
        let v = f64::from_bits(self.variance_bits) + f64::from_bits(other.variance_bits);
        self.expected_bits = e.to_bits();
        self.variance_bits = v.to_bits();
        self
    }
}

fn quantile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let idx = ((sorted.len() as f64 - 1.0) * q).ceil() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

fn aggregates_from(partial: Partial, sorted: &[u64], threshold: u64, sampling: bool) -> Aggregates {
    let trials = partial.trials;
    let mean = if trials == 0 {
        0.0
    } else {
        partial.total_queries as f64 / trials as f64
    };
    let expected = f64::from_bits(partial.expected_bits);
    let variance = f64::from_bits(partial.variance_bits);
    let sampling = sampling.then(|| {
        let sigma = variance.sqrt();
        let diff = (partial.taken as f64 - expected).abs();
        SamplingCheck {
            draws: partial.draws,
            taken: partial.taken,
            expected,
            sigma,
            within_five_sigma: diff <= 5.0 * sigma + 1e-9,
        }
    });
    Aggregates {
        trials,
        correct: partial.correct,
        mean_queries: mean,
        max_queries: partial.max_queries,
        p50: quantile(sorted, 0.50),
        p90: quantile(sorted, 0.90),
        p99: quantile(sorted, 0.99),
        threshold,
        exceedance_count: partial.exceedance,
        exceedance_frac: if trials == 0 {
            0.0
        } else {
            partial.exceedance as f64 / trials as f64
        },
        branches: partial.branches,
        geometries: partial.geometries,
        scan_missed_overlaps: partial.scan_missed,
        verdicts_failed: partial.verdicts_failed,
        sampling,
    }
}

/// The query threshold the exceedance column counts against.
fn threshold_for(cfg: &ExperimentConfig, params: Option<&Params>) -> u64 {
    match cfg.algo {
        // The run seed pair costs exactly n - d + (d+1) + 1.
        Algo::Basic => cfg.n as u64 + 2,
        // Expectation bound; per-row exceedances are informational.
        Algo::Average => cfg.n as u64 + 6,
        Algo::Randomized => {
            let c2 = params.map(|p| p.c2).unwrap_or(0) as u64;
            cfg.n as u64 + c2 + 1
        }
    }
}

fn bound_violated(cfg: &ExperimentConfig, params: Option<&Params>, agg: &Aggregates) -> bool {
    match cfg.algo {
        Algo::Basic => agg.exceedance_count > 0,
        // Expectation bound over uniform hidden strings; structured
        // families only report exceedance, they do not gate.
        Algo::Average => {
            let uniform = matches!(cfg.mode, Mode::Exhaustive | Mode::Verify)
                || cfg.family == Family::Random;
            uniform && agg.mean_queries > (cfg.n as f64 + 6.0) + 1e-9
        }
        Algo::Randomized => {
            let p = params.expect("randomized params");
            !p.guarantee_void && agg.exceedance_frac > cfg.delta
        }
    }
}

fn resolve_workers(cfg: &ExperimentConfig) -> usize {
    if let Some(w) = cfg.workers {
        return w.max(1);
    }
    if let Ok(v) = std::env::var("STRRECON_THREADS") {
        if let Ok(w) = v.trim().parse::<usize>() {
            return w.max(1);
        }
    }
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
}

/// Runs the configured experiment: executes trials in parallel, aggregates
/// (with a sequential re-reduction check), and writes any requested CSV and
/// JSON outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let trials = match cfg.mode {
        Mode::Exhaustive | Mode::Verify => {
            if cfg.n > EXHAUSTIVE_CAP {
                bail!("exhaustive mode is capped at n = {EXHAUSTIVE_CAP}, got {}", cfg.n);
            }
            1u64 << cfg.n
        }
        Mode::Single => 1,
        Mode::MonteCarlo => cfg.trials,
        Mode::Expect => bail!("expect mode emits an analytic report, not trials"),
    };
    if cfg.n == 0 {
        bail!("n must be positive");
    }
    let params = match cfg.algo {
        Algo::Randomized => Some(derive_params(cfg.n.max(2), cfg.delta, cfg.c1, cfg.c2)),
        _ => None,
    };
    let family = family_label(cfg);

    let workers = resolve_workers(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;
    let rows: Vec<TrialRow> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, params.as_ref(), &family, trial))
            .collect::<Result<Vec<_>>>()
    })?;

    let threshold = threshold_for(cfg, params.as_ref());
    let sampling = cfg.algo == Algo::Randomized;

    // Parallel reduction, then a sequential re-reduction as a consistency
    // check on the merge.
    let par_partial = pool.install(|| {
        rows.par_iter()
            .fold(Partial::default, |mut acc, row| {
                acc.absorb(row, threshold);
                acc
            })
            .reduce(Partial::default, Partial::merge)
    });
    let mut seq_partial = Partial::default();
    for row in &rows {
        seq_partial.absorb(row, threshold);
    }
    // Float accumulation order differs between the two reductions, so
    // compare those fields with tolerance and everything else exactly.
    let re_reduction_ok = {
        let close = |a: u64, b: u64| {
            let (a, b) = (f64::from_bits(a), f64::from_bits(b));
            (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
        };
        let mut a = par_partial.clone();
        let mut b = seq_partial.clone();
        let floats_ok = close(a.expected_bits, b.expected_bits)
            && close(a.variance_bits, b.variance_bits);
        a.expected_bits = 0;
        a.variance_bits = 0;
        b.expected_bits = 0;
        b.variance_bits = 0;
        floats_ok && a == b
    };

    let mut sorted: Vec<u64> = rows.iter().map(|r| r.queries).collect();
    sorted.sort_unstable();
    let aggregates = aggregates_from(seq_partial, &sorted, threshold, sampling);

    let failed = aggregates.correct != aggregates.trials || aggregates.verdicts_failed > 0;
    let violated = bound_violated(cfg, params.as_ref(), &aggregates);

    let report = RunReport {
        schema: 1,
        config: cfg.clone(),
        params,
        aggregates,
        failed,
        bound_violated: violated,
        re_reduction_ok,
        rows,
    };

    if let Some(path) = &cfg.csv {
        fs::write(path, render_csv(&report.rows))
            .with_context(|| format!("writing CSV to {}", path.display()))?;
    }
    if let Some(path) = &cfg.json {
        let mut text = serde_json::to_string_pretty(&report).context("serializing summary")?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing JSON to {}", path.display()))?;
    }
    Ok(report)
}

/// Fixed-column CSV of the per-trial rows.
pub fn render_csv(rows: &[TrialRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str("n,trial,family,algo,branch,queries,correct,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.trial, r.family, r.algo, r.branch, r.queries, r.correct, r.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(algo: Algo, mode: Mode, n: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(algo, mode, n);
        c.whitebox = true;
        c.rng_seed = 17;
        c
    }

    #[test]
    fn exhaustive_basic_small() {
        let mut c = cfg(Algo::Basic, Mode::Exhaustive, 6);
        c.workers = Some(2);
        let report = run_experiment(&c).unwrap();
        assert_eq!(report.aggregates.trials, 64);
        assert_eq!(report.aggregates.correct, 64);
        assert!(!report.failed);
        assert!(!report.bound_violated);
        assert!(report.re_reduction_ok);
        assert_eq!(report.aggregates.max_queries, 8);
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn exhaustive_average_matches_mean_bound() {
        let mut c = cfg(Algo::Average, Mode::Exhaustive, 10);
        c.workers = Some(2);
        let report = run_experiment(&c).unwrap();
        assert!(!report.failed);
        assert!(!report.bound_violated, "mean {}", report.aggregates.mean_queries);
        assert!(report.aggregates.mean_queries <= 16.0);
    }

    #[test]
    fn verify_mode_checks_every_transcript() {
        let mut c = cfg(Algo::Randomized, Mode::Verify, 7);
        c.c1 = Some(1);
        c.c2 = Some(40);
        let report = run_experiment(&c).unwrap();
        assert_eq!(report.aggregates.trials, 128);
        assert_eq!(report.aggregates.verdicts_failed, 0);
        assert!(report.rows.iter().all(|r| r.verdict_ok == Some(true)));
        assert!(!report.failed);
    }

    #[test]
    fn montecarlo_randomized_runs_and_reports() {
        let mut c = cfg(Algo::Randomized, Mode::MonteCarlo, 1024);
        c.trials = 40;
        c.c1 = Some(3);
        let report = run_experiment(&c).unwrap();
        assert!(!report.failed);
        assert_eq!(report.aggregates.trials, 40);
        assert!(report.aggregates.branches.contains_key("EasyCase"));
        let s = report.aggregates.sampling.as_ref().unwrap();
        assert!(s.within_five_sigma);
    }

    #[test]
    fn csv_is_identical_across_worker_counts() {
        let mut base = cfg(Algo::Randomized, Mode::MonteCarlo, 256);
        base.trials = 64;
        base.c1 = Some(2);
        base.c2 = Some(0);
        let mut texts = Vec::new();
        for workers in [1usize, 3, 8] {
            let mut c = base.clone();
            c.workers = Some(workers);
            let report = run_experiment(&c).unwrap();
            assert!(!report.failed);
            texts.push(render_csv(&report.rows));
        }
        assert_eq!(texts[0], texts[1]);
        assert_eq!(texts[1], texts[2]);
        assert!(texts[0].starts_with("n,trial,family,algo,branch,queries,correct,seed\n"));
    }

    #[test]
    fn exhaustive_cap_enforced() {
        let c = cfg(Algo::Basic, Mode::Exhaustive, 25);
        let err = run_experiment(&c).unwrap_err();
        assert!(err.to_string().contains("capped"));
    }

    #[test]
    fn corpus_families_flow_through() {
        for family in ["allzero", "allone", "periodic:0011", "debruijn:6", "runlength:3"] {
            let mut c = cfg(Algo::Basic, Mode::MonteCarlo, 64);
            c.trials = 4;
            c.family = family.parse().unwrap();
            let report = run_experiment(&c).unwrap();
            assert!(!report.failed, "family {family}");
            assert!(report.rows.iter().all(|r| r.family == family));
        }
    }

    #[test]
    fn json_and_csv_outputs_land_on_disk() {
        let dir = std::env::temp_dir().join(format!("strrecon-harness-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let mut c = cfg(Algo::Average, Mode::MonteCarlo, 32);
        c.trials = 5;
        c.csv = Some(dir.join("rows.csv"));
        c.json = Some(dir.join("summary.json"));
        let report = run_experiment(&c).unwrap();
        let csv = fs::read_to_string(dir.join("rows.csv")).unwrap();
        assert_eq!(csv, render_csv(&report.rows));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(json.get("schema").unwrap(), 1);
        assert!(json.get("aggregates").unwrap().get("mean_queries").is_some());
        assert!(json.get("rows").is_none(), "rows stay out of the summary");
        fs::remove_dir_all(&dir).ok();
    }
}
