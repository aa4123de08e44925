//! Experiment runner: every method on every `(dataset, k, repetition)`, with the
//! partition method capped at the cheapest competitor's distance count, plus result
//! persistence and summaries.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{grid_rpkm, kmpp_init, lloyd_full, minibatch, MinibatchStop, Seeder};
use crate::bwkm::{bwkm, BwkmConfig, StopCondition, StopRule};
use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::lloyd::{CentroidSet, DistanceLedger, LloydStop, Tolerance};
use crate::metrics::{exact_error, relative_error};
use crate::record::{IterationRow, Method, StopReason, TrialRecord};
use crate::rng::RngStream;

/// Version tag written on every result line.
pub const SCHEMA: &str = "bwkm-trial/1";

/// Distance budget given to the partition method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BudgetPolicy {
    /// The smallest ledger count among the competitors of the same repetition.
    MinOfBaselines,
    Fixed(u64),
}

impl FromStr for BudgetPolicy {
    type Err = Error;

    /// `min-of-baselines` or `fixed:N`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "min-of-baselines" {
            return Ok(BudgetPolicy::MinOfBaselines);
        }
        s.strip_prefix("fixed:")
            .and_then(|x| x.parse::<f64>().ok())
            .filter(|x| *x >= 1.0 && x.fract() == 0.0 && *x < u64::MAX as f64)
            .map(|x| BudgetPolicy::Fixed(x as u64))
            .ok_or_else(|| Error::InvalidConfig(format!("bad budget policy `{s}`")))
    }
}

impl TryFrom<String> for BudgetPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BudgetPolicy> for String {
    fn from(p: BudgetPolicy) -> String {
        p.to_string()
    }
}

impl fmt::Display for BudgetPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetPolicy::MinOfBaselines => f.write_str("min-of-baselines"),
            BudgetPolicy::Fixed(b) => write!(f, "fixed:{b}"),
        }
    }
}

/// One experiment sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ks: Vec<usize>,
    pub repetitions: usize,
    /// Repetition `r` uses seed `seed + r`.
    pub seed: u64,
    pub methods: Vec<Method>,
    pub budget: BudgetPolicy,
    /// Relative Lloyd tolerance, as a fraction of the mean squared error at the start.
    pub lloyd_tolerance: f64,
    pub lloyd_max_iterations: usize,
    /// Mini-batch size.
    pub batch: usize,
    /// Fixed mini-batch iteration count; by default it runs until the cheapest Lloyd
    /// method's distance count.
    pub minibatch_iterations: Option<usize>,
    pub chain_length: usize,
    pub grid_levels: usize,
    pub m: Option<usize>,
    pub m_prime: Option<usize>,
    pub s: Option<usize>,
    pub r: usize,
    /// Extra stop conditions for the partition method, e.g. `boundary` or `iters:50`.
    pub stop: Vec<String>,
    pub test_mode: bool,
    /// Record wall-clock time per trial; off by default so output is byte-reproducible.
    pub timing: bool,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ks: vec![3, 9, 27],
            repetitions: 40,
            seed: 0,
            methods: vec![
                Method::Bwkm,
                Method::LloydForgy,
                Method::LloydKmpp,
                Method::LloydKmc2,
                Method::Minibatch,
                Method::KmppInit,
            ],
            budget: BudgetPolicy::MinOfBaselines,
            lloyd_tolerance: 1e-4,
            lloyd_max_iterations: 100,
            batch: 100,
            minibatch_iterations: None,
            chain_length: 200,
            grid_levels: 5,
            m: None,
            m_prime: None,
            s: None,
            r: 5,
            stop: vec!["boundary".into(), "iters:100".into()],
            test_mode: false,
            timing: false,
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return bad("k list must be nonempty with every k >= 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if !(self.lloyd_tolerance >= 0.0) {
            return bad("lloyd tolerance must be >= 0".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        self.stop_rule()?;
        Ok(())
    }

    fn stop_rule(&self) -> Result<StopRule> {
        let conditions = self
            .stop
            .iter()
            .map(|s| s.parse::<StopCondition>())
            .collect::<Result<Vec<_>>>()?;
        StopRule::any_of(conditions)
    }

    fn lloyd_stop(&self) -> LloydStop {
        LloydStop {
            tolerance: Tolerance::Relative(self.lloyd_tolerance),
            max_iterations: self.lloyd_max_iterations,
            distance_limit: None,
        }
    }

    /// Configuration of the partition method for one trial.
    pub fn bwkm_config(&self, k: usize, seed: u64, budget: Option<u64>) -> Result<BwkmConfig> {
        let mut stop = self.stop_rule()?;
        if let Some(b) = budget {
            stop = stop.with_budget(b);
        }
        let mut c = BwkmConfig::new(k).with_seed(seed).with_stop(stop);
        c.m = self.m;
        c.m_prime = self.m_prime;
        c.s = self.s;
        c.r = self.r;
        c.lloyd_tolerance = Tolerance::Relative(self.lloyd_tolerance);
        c.lloyd_max_iterations = self.lloyd_max_iterations;
        c.test_mode = self.test_mode;
        Ok(c)
    }
}

/// Stream id of a method's random generator within a trial.
fn stream_of(method: Method) -> u64 {
    Method::ALL.iter().position(|&m| m == method).unwrap() as u64 + 1
}

fn timed<T>(timing: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, Option<f64>)> {
    // no clock on wasm32-unknown-unknown, so only read it when asked
    if !timing {
        return Ok((f()?, None));
    }
    let start = Instant::now();
    let out = f()?;
    Ok((out, Some(start.elapsed().as_secs_f64() * 1e3)))
}

/// Runs one method. `budget` caps the partition method and, when no iteration count is
/// fixed, mini-batch.
pub fn run_trial(
    config: &ExperimentConfig,
    method: Method,
    dataset: &Dataset,
    k: usize,
    seed: u64,
    budget: Option<u64>,
) -> Result<TrialRecord> {
    Ok(run_method(config, method, dataset, k, seed, budget)?.1)
}

/// [`run_trial`] that also returns the final centroids.
pub fn run_method(
    config: &ExperimentConfig,
    method: Method,
    dataset: &Dataset,
    k: usize,
    seed: u64,
    budget: Option<u64>,
) -> Result<(CentroidSet, TrialRecord)> {
    let mut ledger = DistanceLedger::new();
    let mut rng = RngStream::new(seed, stream_of(method));
    let stop = config.lloyd_stop();
    let ((centroids, mut record), wall_ms) = timed(config.timing, || match method {
        Method::Bwkm => bwkm(dataset, &config.bwkm_config(k, seed, budget)?, &mut ledger),
        Method::LloydForgy => lloyd_full(dataset, k, Seeder::Forgy, &stop, &mut rng, &mut ledger),
        Method::LloydKmpp => lloyd_full(dataset, k, Seeder::KmeansPP, &stop, &mut rng, &mut ledger),
        Method::LloydKmc2 => {
            let seeder = Seeder::Kmc2 {
                chain_length: config.chain_length,
            };
            lloyd_full(dataset, k, seeder, &stop, &mut rng, &mut ledger)
        }
        Method::Minibatch => {
            let stop = match (config.minibatch_iterations, budget) {
                (Some(t), _) => MinibatchStop::Iterations(t),
                (None, Some(b)) => MinibatchStop::Budget(b),
                (None, None) => MinibatchStop::Iterations(100),
            };
            minibatch(
                dataset,
                k,
                config.batch.min(dataset.n()),
                stop,
                &mut rng,
                &mut ledger,
            )
        }
        Method::GridRpkm => grid_rpkm(dataset, k, config.grid_levels, &stop, &mut rng, &mut ledger),
        Method::KmppInit => kmpp_init(dataset, k, &mut rng, &mut ledger),
    })?;
    if let Some(last) = record.rows.last_mut() {
        if last.exact_error.is_none() {
            last.exact_error = Some(exact_error(dataset, &centroids));
        }
    }
    record.seed = seed;
    record.wall_ms = wall_ms;
    Ok((centroids, record))
}

/// All methods of one `(dataset, k, repetition)`, sorted by method.
fn run_group(
    config: &ExperimentConfig,
    name: &str,
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let has = |m: Method| config.methods.contains(&m);
    let mut records = Vec::new();
    for m in [Method::LloydForgy, Method::LloydKmpp, Method::LloydKmc2] {
        if has(m) {
            records.push(run_trial(config, m, dataset, k, seed, None)?);
        }
    }
    let cheapest_lloyd = records.iter().map(TrialRecord::final_distances).min();
    for m in [Method::Minibatch, Method::GridRpkm, Method::KmppInit] {
        if has(m) {
            records.push(run_trial(config, m, dataset, k, seed, cheapest_lloyd)?);
        }
    }
    if has(Method::Bwkm) {
        let budget = match config.budget {
            BudgetPolicy::Fixed(b) => Some(b),
            BudgetPolicy::MinOfBaselines => records
                .iter()
                .filter(|r| r.method.is_competitor())
                .map(TrialRecord::final_distances)
                .min(),
        };
        records.push(run_trial(config, Method::Bwkm, dataset, k, seed, budget)?);
    }
    for r in &mut records {
        r.dataset = name.to_string();
    }
    records.sort_by_key(|r| r.method);
    Ok(records)
}

/// Runs the sweep. Output order is by dataset (as given), then k, seed and method,
/// independent of the number of worker threads.
pub fn run_experiment(
    config: &ExperimentConfig,
    datasets: &[(String, Dataset)],
) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let mut groups = Vec::new();
    for (name, ds) in datasets {
        for &k in &config.ks {
            for rep in 0..config.repetitions {
                groups.push((name.as_str(), ds, k, config.seed + rep as u64));
            }
        }
    }
    let run =
        |&(name, ds, k, seed): &(&str, &Dataset, usize, u64)| run_group(config, name, ds, k, seed);
    let results: Vec<Result<Vec<TrialRecord>>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            pool.install(|| groups.par_iter().map(run).collect())
        }
        #[cfg(not(feature = "parallel"))]
        {
            groups.iter().map(run).collect()
        }
    };
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// One persisted row. `stop_reason` is set on the last row of a trial only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub schema: String,
    pub method: Method,
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub iter: usize,
    pub distances: u64,
    pub weighted_error: f64,
    pub exact_error: Option<f64>,
    pub cells: usize,
    pub boundary: usize,
    pub stop_reason: Option<StopReason>,
    pub wall_ms: Option<f64>,
}

pub fn result_lines(record: &TrialRecord) -> impl Iterator<Item = ResultLine> + '_ {
    let last = record.rows.len().saturating_sub(1);
    record
        .rows
        .iter()
        .enumerate()
        .map(move |(i, row)| ResultLine {
            schema: SCHEMA.to_string(),
            method: record.method,
            dataset: record.dataset.clone(),
            k: record.k,
            seed: record.seed,
            iter: row.iter,
            distances: row.distances,
            weighted_error: row.weighted_error,
            exact_error: row.exact_error,
            cells: row.cells,
            boundary: row.boundary,
            stop_reason: (i == last).then_some(record.stop_reason),
            wall_ms: record.wall_ms,
        })
}

fn io_err(context: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(context, e)
}

pub fn write_jsonl(mut out: impl Write, records: &[TrialRecord]) -> Result<()> {
    for record in records {
        for line in result_lines(record) {
            let text = serde_json::to_string(&line).map_err(|e| Error::Io {
                context: "encoding results".into(),
                message: e.to_string(),
            })?;
            writeln!(out, "{text}").map_err(io_err("writing results"))?;
        }
    }
    out.flush().map_err(io_err("writing results"))
}

pub fn write_csv(out: impl Write, records: &[TrialRecord]) -> Result<()> {
    let to_err = |e: csv::Error| Error::Io {
        context: "writing results".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    for record in records {
        for line in result_lines(record) {
            w.serialize(line).map_err(to_err)?;
        }
    }
    w.flush().map_err(io_err("writing results"))
}

/// Reads records back from JSONL written by [`write_jsonl`].
pub fn read_jsonl(input: impl BufRead) -> Result<Vec<TrialRecord>> {
    let mut records: Vec<TrialRecord> = Vec::new();
    let mut open = false;
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(io_err("reading results"))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ResultLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if parsed.schema != SCHEMA {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("unknown schema `{}`", parsed.schema),
            });
        }
        if !open {
            let mut r = TrialRecord::new(parsed.method, parsed.k, parsed.seed);
            r.dataset.clone_from(&parsed.dataset);
            records.push(r);
            open = true;
        }
        let record = records.last_mut().expect("opened above");
        record.rows.push(IterationRow {
            iter: parsed.iter,
            distances: parsed.distances,
            weighted_error: parsed.weighted_error,
            exact_error: parsed.exact_error,
            cells: parsed.cells,
            boundary: parsed.boundary,
        });
        if let Some(reason) = parsed.stop_reason {
            record.stop_reason = reason;
            record.wall_ms = parsed.wall_ms;
            open = false;
        }
    }
    if open {
        return Err(Error::Parse {
            line: 0,
            message: "last trial has no stop reason".into(),
        });
    }
    Ok(records)
}

/// Relative error of every record against the best final error of its
/// `(dataset, k, seed)` group. Same order as `records`.
pub fn relative_errors(records: &[TrialRecord]) -> Result<Vec<f64>> {
    let mut groups: BTreeMap<(&str, usize, u64), BTreeMap<String, f64>> = BTreeMap::new();
    for r in records {
        let e = r.final_exact_error().ok_or_else(|| {
            Error::InvalidConfig(format!("{} record has no final exact error", r.method))
        })?;
        groups
            .entry((r.dataset.as_str(), r.k, r.seed))
            .or_default()
            .insert(r.method.to_string(), e);
    }
    let rel: BTreeMap<_, _> = groups
        .into_iter()
        .map(|(key, errors)| Ok((key, relative_error(&errors)?)))
        .collect::<Result<_>>()?;
    Ok(records
        .iter()
        .map(|r| rel[&(r.dataset.as_str(), r.k, r.seed)][r.method.as_str()])
        .collect())
}

/// Per `(dataset, k, method)` averages over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub k: usize,
    pub method: Method,
    pub trials: usize,
    pub mean_relative_error: f64,
    /// Half-width of the normal-approximation 95% interval of the mean.
    pub ci95: f64,
    pub mean_distances: f64,
    pub mean_error: f64,
}

pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    let rel = relative_errors(records)?;
    let mut acc: BTreeMap<(String, usize, Method), Vec<(f64, f64, f64)>> = BTreeMap::new();
    for (r, e) in records.iter().zip(rel) {
        acc.entry((r.dataset.clone(), r.k, r.method))
            .or_default()
            .push((
                e,
                r.final_distances() as f64,
                r.final_exact_error().unwrap_or(f64::NAN),
            ));
    }
    Ok(acc
        .into_iter()
        .map(|((dataset, k, method), v)| {
            let t = v.len() as f64;
            let mean = v.iter().map(|x| x.0).sum::<f64>() / t;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (t - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                dataset,
                k,
                method,
                trials: v.len(),
                mean_relative_error: mean,
                ci95: 1.96 * (var / t).sqrt(),
                mean_distances: v.iter().map(|x| x.1).sum::<f64>() / t,
                mean_error: v.iter().map(|x| x.2).sum::<f64>() / t,
            }
        })
        .collect())
}

/// Plain-text table of a summary.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>4} {:<12} {:>6} {:>12} {:>10} {:>14} {:>14}",
        "dataset", "k", "method", "trials", "rel_error", "ci95", "distances", "error"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>4} {:<12} {:>6} {:>12.6} {:>10.6} {:>14.0} {:>14.6e}",
            r.dataset,
            r.k,
            r.method.as_str(),
            r.trials,
            r.mean_relative_error,
            r.ci95,
            r.mean_distances,
            r.mean_error
        );
    }
    s
}
