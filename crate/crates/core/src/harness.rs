//! Batch experiment orchestration: seeded trial sweeps over strategy and
//! dimension, summary statistics with scaling fits, and CSV/JSON
//! persistence.
//!
//! Sweeps are deterministic end to end: trial `i` derives its seed from the
//! root seed alone, every trial draws a fresh uniform target from its own
//! stream, and trials may run in parallel because results are collected in
//! trial order. Identical configurations therefore produce byte-identical
//! output files.

use crate::algorithms::{build, default_budget, BuildError};
use crate::model::{run, HiddenInstance, RunRecord};
use crate::rng::{stream, trial_seed, StreamKind};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("bad config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

fn bad_config(message: impl Into<String>) -> HarnessError {
    HarnessError::Config(message.into())
}

/// Output encoding for records and summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(bad_config(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

/// One sweep: a strategy, a list of dimensions, and seeded trials.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub algo_id: String,
    /// Dimensions to sweep, ascending.
    pub n_list: Vec<usize>,
    /// Population size; 0 picks the strategy's fixed/default shape.
    pub mu: usize,
    /// Offspring count; 0 picks the strategy's fixed/default shape.
    pub lambda: usize,
    pub trials: u64,
    pub root_seed: u64,
    /// Query budget = `budget_factor` × the strategy's natural scale.
    pub budget_factor: u64,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl SweepConfig {
    pub fn new(algo_id: impl Into<String>, n_list: Vec<usize>) -> Self {
        SweepConfig {
            algo_id: algo_id.into(),
            n_list,
            mu: 0,
            lambda: 0,
            trials: 1,
            root_seed: 1,
            budget_factor: 40,
            output_path: None,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(bad_config("trials must be at least 1"));
        }
        if self.n_list.is_empty() {
            return Err(bad_config("n list must not be empty"));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad_config("n list must be strictly ascending"));
        }
        Ok(())
    }

    /// Parses the flat `key=value` config format. Keys match the CLI
    /// flags: `algo`, `n` (comma-separated list), `mu`, `lambda`,
    /// `trials`, `seed`, `budget-factor`, `out`, `format`. Blank lines
    /// and `#` comments are ignored.
    pub fn from_key_values(text: &str) -> Result<Self, HarnessError> {
        let mut config = SweepConfig::new("", vec![]);
        let mut saw_algo = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad_config(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let parse_int = |what: &str| -> Result<u64, HarnessError> {
                value
                    .parse::<u64>()
                    .map_err(|_| bad_config(format!("{what} must be an integer, got {value:?}")))
            };
            match key {
                "algo" => {
                    config.algo_id = value.to_string();
                    saw_algo = true;
                }
                "n" => {
                    config.n_list = value
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<usize>()
                                .map_err(|_| bad_config(format!("bad n value {v:?}")))
                        })
                        .collect::<Result<_, _>>()?;
                }
                "mu" => config.mu = parse_int("mu")? as usize,
                "lambda" => config.lambda = parse_int("lambda")? as usize,
                "trials" => config.trials = parse_int("trials")?,
                "seed" => config.root_seed = parse_int("seed")?,
                "budget-factor" => config.budget_factor = parse_int("budget-factor")?,
                "out" => config.output_path = Some(PathBuf::from(value)),
                "format" => config.format = value.parse()?,
                other => return Err(bad_config(format!("unknown key {other:?}"))),
            }
        }
        if !saw_algo {
            return Err(bad_config("missing required key: algo"));
        }
        if config.n_list.is_empty() {
            return Err(bad_config("missing required key: n"));
        }
        config.validate()?;
        Ok(config)
    }
}

/// One finished trial, flattened for emission. Field order matches the
/// CSV column order exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub algo: String,
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub seed: u64,
    pub trial: u64,
    pub queries: u64,
    pub generations: u64,
    pub success: bool,
    /// A failure-cause label, or `"none"` on success.
    pub failure_cause: String,
}

impl TrialRecord {
    pub const CSV_HEADER: &'static str =
        "algo,n,mu,lambda,seed,trial,queries,generations,success,failure_cause";

    fn from_run(record: RunRecord, trial: u64) -> Self {
        TrialRecord {
            failure_cause: record.failure_label().to_string(),
            algo: record.algo,
            n: record.n,
            mu: record.mu,
            lambda: record.lambda,
            seed: record.seed,
            trial,
            queries: record.queries,
            generations: record.generations,
            success: record.success,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.algo,
            self.n,
            self.mu,
            self.lambda,
            self.seed,
            self.trial,
            self.queries,
            self.generations,
            u8::from(self.success),
            self.failure_cause
        )
    }
}

/// Runs the sweep: for every dimension, `trials` independent runs with
/// seeds split off the root seed and a fresh uniform target each. Trials
/// run in parallel; records come back sorted by (n, trial), identical to
/// serial execution.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.n_list.len() * config.trials as usize);
    for &n in &config.n_list {
        // Build once eagerly so parameter errors surface before any work.
        let probe = build(&config.algo_id, n, config.mu, config.lambda)?;
        let budget = default_budget(&config.algo_id, n, probe.lambda(), config.budget_factor);
        drop(probe);
        let batch: Vec<TrialRecord> = (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                let algo = build(&config.algo_id, n, config.mu, config.lambda)
                    .expect("parameters validated above");
                let seed = trial_seed(config.root_seed, trial);
                let mut instance_rng = stream(seed, StreamKind::Instance, 0);
                let instance = HiddenInstance::random(n, &mut instance_rng);
                TrialRecord::from_run(run(algo.as_ref(), &instance, budget, seed), trial)
            })
            .collect();
        records.extend(batch);
    }
    Ok(records)
}

/// Order statistics of one measured quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

impl Stats {
    fn from_values(values: &mut [u64]) -> Stats {
        values.sort_unstable();
        let mean = if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<u64>() as f64 / values.len() as f64
        };
        Stats {
            mean,
            median: quantile(values, 0.5),
            p10: quantile(values, 0.1),
            p90: quantile(values, 0.9),
        }
    }
}

/// Linear-interpolation quantile of an ascending-sorted slice.
pub fn quantile(sorted: &[u64], q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "quantile level out of range");
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] as f64 * (1.0 - frac) + sorted[hi] as f64 * frac
}

/// Aggregate results of one (algo, n) group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub algo: String,
    pub n: usize,
    pub trials: u64,
    pub success_rate: f64,
    pub queries: Stats,
    pub generations: Stats,
    /// Failure-cause label → count, over failed trials only.
    pub failures: BTreeMap<String, u64>,
}

/// Sweep summary: per-(algo, n) statistics plus a fitted log-log scaling
/// slope of median queries against n for every strategy with at least two
/// dimensions.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
    pub slopes: BTreeMap<String, f64>,
}

/// Summarizes records grouped by (algo, n), groups sorted the same way.
pub fn summarize(records: &[TrialRecord]) -> Summary {
    let mut grouped: BTreeMap<(String, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry((r.algo.clone(), r.n)).or_default().push(r);
    }
    let mut groups = Vec::with_capacity(grouped.len());
    for ((algo, n), rows) in grouped {
        let mut queries: Vec<u64> = rows.iter().map(|r| r.queries).collect();
        let mut generations: Vec<u64> = rows.iter().map(|r| r.generations).collect();
        let successes = rows.iter().filter(|r| r.success).count();
        let mut failures: BTreeMap<String, u64> = BTreeMap::new();
        for r in rows.iter().filter(|r| !r.success) {
            *failures.entry(r.failure_cause.clone()).or_default() += 1;
        }
        groups.push(GroupSummary {
            algo,
            n,
            trials: rows.len() as u64,
            success_rate: successes as f64 / rows.len() as f64,
            queries: Stats::from_values(&mut queries),
            generations: Stats::from_values(&mut generations),
            failures,
        });
    }
    let mut slopes = BTreeMap::new();
    let mut by_algo: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for g in &groups {
        by_algo
            .entry(&g.algo)
            .or_default()
            .push((g.n as f64, g.queries.median));
    }
    for (algo, points) in by_algo {
        if let Some(slope) = fit_scaling(&points) {
            slopes.insert(algo.to_string(), slope);
        }
    }
    Summary { groups, slopes }
}

/// Least-squares slope of log₂ y against log₂ x. `None` with fewer than
/// two distinct points or any non-positive coordinate.
pub fn fit_scaling(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log2(), y.log2())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    Some(sxy / sxx)
}

/// Records as CSV: pinned header, one line per trial, success as 1/0.
pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(TrialRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Records as a JSON array of objects keyed like the CSV columns, with
/// success as true/false.
pub fn records_to_json(records: &[TrialRecord]) -> String {
    let mut out = serde_json::to_string_pretty(records).expect("records always serialize");
    out.push('\n');
    out
}

/// Parses CSV produced by [`records_to_csv`] (round-trip inverse).
pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TrialRecord::CSV_HEADER => {}
        other => return Err(bad_config(format!("bad CSV header: {other:?}"))),
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(bad_config(format!(
                "line {}: expected 10 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let int = |i: usize| -> Result<u64, HarnessError> {
            fields[i]
                .parse::<u64>()
                .map_err(|_| bad_config(format!("line {}: bad integer {:?}", lineno + 2, fields[i])))
        };
        records.push(TrialRecord {
            algo: fields[0].to_string(),
            n: int(1)? as usize,
            mu: int(2)? as usize,
            lambda: int(3)? as usize,
            seed: int(4)?,
            trial: int(5)?,
            queries: int(6)?,
            generations: int(7)?,
            success: match fields[8] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(bad_config(format!(
                        "line {}: success must be 1 or 0, got {other:?}",
                        lineno + 2
                    )))
                }
            },
            failure_cause: fields[9].to_string(),
        });
    }
    Ok(records)
}

/// Summary as JSON.
pub fn summary_to_json(summary: &Summary) -> String {
    let mut out = serde_json::to_string_pretty(summary).expect("summary always serializes");
    out.push('\n');
    out
}

/// Renders records in `format` and writes them to `path`, or to stdout
/// when `path` is `None`.
pub fn emit_records(
    records: &[TrialRecord],
    format: OutputFormat,
    path: Option<&Path>,
) -> Result<(), HarnessError> {
    let text = match format {
        OutputFormat::Csv => records_to_csv(records),
        OutputFormat::Json => records_to_json(records),
    };
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_sweep(algo: &str, n_list: Vec<usize>, trials: u64, seed: u64) -> SweepConfig {
        SweepConfig {
            trials,
            root_seed: seed,
            ..SweepConfig::new(algo, n_list)
        }
    }

    #[test]
    fn sweeps_replay_byte_identically() {
        let config = small_sweep("two-plus-one", vec![32, 64], 3, 99);
        let a = records_to_csv(&run_sweep(&config).unwrap());
        let b = records_to_csv(&run_sweep(&config).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn different_root_seeds_draw_different_targets() {
        let a = run_sweep(&small_sweep("rls", vec![256], 5, 1)).unwrap();
        let b = run_sweep(&small_sweep("rls", vec![256], 5, 2)).unwrap();
        assert_ne!(
            a.iter().map(|r| r.queries).collect::<Vec<_>>(),
            b.iter().map(|r| r.queries).collect::<Vec<_>>()
        );
    }

    #[test]
    fn pair_walk_sweep_always_succeeds() {
        let records = run_sweep(&small_sweep("two-plus-one", vec![16, 64], 20, 7)).unwrap();
        let summary = summarize(&records);
        for g in &summary.groups {
            assert_eq!(g.success_rate, 1.0);
            assert!(g.failures.is_empty());
        }
    }

    #[test]
    fn records_round_trip_through_csv() {
        let records = run_sweep(&small_sweep("rls", vec![32, 64], 4, 12)).unwrap();
        let parsed = parse_csv(&records_to_csv(&records)).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn empty_record_list_gives_header_only_csv() {
        assert_eq!(
            records_to_csv(&[]),
            format!("{}\n", TrialRecord::CSV_HEADER)
        );
    }

    #[test]
    fn json_serializes_success_as_bool_and_cause_as_label() {
        let records = run_sweep(&small_sweep("two-plus-one", vec![16], 1, 3)).unwrap();
        let json = records_to_json(&records);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let row = &value.as_array().unwrap()[0];
        assert_eq!(row["success"], serde_json::Value::Bool(true));
        assert_eq!(row["failure_cause"], "none");
        assert_eq!(row["algo"], "two-plus-one");
        // CSV spells the same record with 1/0.
        let csv = records_to_csv(&records);
        assert!(csv.lines().nth(1).unwrap().ends_with(",1,none"));
    }

    #[test]
    fn fit_scaling_recovers_known_slopes() {
        let ns = [256.0, 512.0, 1024.0, 2048.0, 4096.0, 8192.0];
        let linear: Vec<(f64, f64)> = ns.iter().map(|&n| (n, 3.0 * n)).collect();
        assert!((fit_scaling(&linear).unwrap() - 1.0).abs() < 1e-9);
        let constant: Vec<(f64, f64)> = ns.iter().map(|&n| (n, 7.0)).collect();
        assert!(fit_scaling(&constant).unwrap().abs() < 1e-9);
        let nlogn: Vec<(f64, f64)> = ns.iter().map(|&n| (n, 2.0 * n * n.ln())).collect();
        let slope = fit_scaling(&nlogn).unwrap();
        assert!(slope > 1.0 && slope < 1.25, "n·ln n slope was {slope}");
        assert_eq!(fit_scaling(&[(4.0, 2.0)]), None);
        assert_eq!(fit_scaling(&[(4.0, 2.0), (4.0, 8.0)]), None);
    }

    #[test]
    fn summary_quantiles_are_ordered_and_rate_bounded() {
        let records = run_sweep(&small_sweep("rls", vec![64, 128], 9, 5)).unwrap();
        let summary = summarize(&records);
        assert_eq!(summary.groups.len(), 2);
        for g in &summary.groups {
            assert!((0.0..=1.0).contains(&g.success_rate));
            for s in [&g.queries, &g.generations] {
                assert!(s.p10 <= s.median && s.median <= s.p90);
                let fails: u64 = g.failures.values().sum();
                assert_eq!(
                    fails,
                    g.trials - (g.success_rate * g.trials as f64).round() as u64
                );
            }
        }
        assert!(summary.slopes.contains_key("rls"));
    }

    #[test]
    fn config_file_round_trip() {
        let text = "\
# comment line
algo = rls
n = 32, 64   # inline comment
trials = 4
seed = 11
budget-factor = 50
format = json
out = /tmp/records.json
";
        let config = SweepConfig::from_key_values(text).unwrap();
        assert_eq!(config.algo_id, "rls");
        assert_eq!(config.n_list, vec![32, 64]);
        assert_eq!(config.trials, 4);
        assert_eq!(config.root_seed, 11);
        assert_eq!(config.budget_factor, 50);
        assert_eq!(config.format, OutputFormat::Json);
        assert_eq!(config.output_path.as_deref(), Some(Path::new("/tmp/records.json")));
    }

    #[test]
    fn config_file_rejects_bad_input() {
        assert!(SweepConfig::from_key_values("n = 8").is_err());
        assert!(SweepConfig::from_key_values("algo = rls").is_err());
        assert!(SweepConfig::from_key_values("algo = rls\nn = 8\nwat = 1").is_err());
        assert!(SweepConfig::from_key_values("algo = rls\nn = 64, 32").is_err());
        assert!(SweepConfig::from_key_values("algo = rls\nn = 8\ntrials = 0").is_err());
        assert!(SweepConfig::from_key_values("algo = rls\nn = 8\nformat = yaml").is_err());
    }

    proptest! {
        #[test]
        fn quantile_is_monotone_in_level(
            mut values in proptest::collection::vec(0u64..1_000_000, 1..80),
            q1 in 0.0f64..=1.0,
            q2 in 0.0f64..=1.0,
        ) {
            values.sort_unstable();
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(quantile(&values, lo) <= quantile(&values, hi));
        }

        #[test]
        fn quantile_stays_within_range(
            mut values in proptest::collection::vec(0u64..1_000_000, 1..80),
            q in 0.0f64..=1.0,
        ) {
            values.sort_unstable();
            let v = quantile(&values, q);
            prop_assert!(v >= values[0] as f64 && v <= values[values.len() - 1] as f64);
        }
    }
}
