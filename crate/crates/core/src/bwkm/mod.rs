//! Boundary weighted k-means.
//!
//! The dataset is summarised by a partition into axis-aligned cells, each standing in
//! for its points through their center of mass and count. Weighted Lloyd runs on those
//! summaries; afterwards only cells whose misassignment value is positive (the
//! boundary) are split, so refinement concentrates where cluster memberships may
//! differ inside a cell. When the boundary is empty, every cell is provably well
//! assigned and the centroids are a fixed point of Lloyd on the full dataset.

mod misassignment;
mod partition;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use misassignment::{
    epsilon_w, misassignment, misassignment_value, weighted_bound, well_assigned_check,
    MisassignmentReport,
};
pub use partition::{
    cutting_probabilities, cutting_round_cost, initial_partition, refine, starting_partition,
    CuttingProbabilities, InitParams, InitialPartition, StartingPartition,
};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Dataset, PartitionState};
use crate::lloyd::{
    weighted_lloyd_observed, AssignmentCache, CentroidSet, DistanceLedger, LloydExit, LloydStep,
    LloydStop, Tolerance, WeightedSet,
};
use crate::metrics::exact_error;
use crate::record::{IterationRow, Method, StopReason, TrialRecord};
use crate::rng::RngStream;
use crate::seeding::kmeanspp;

/// A single stopping condition of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCondition {
    /// Hard cap on the ledger count.
    DistanceBudget(u64),
    EmptyBoundary,
    /// Stop once no centroid moved more than `epsilon_w(l, n, eps)` in an outer iteration.
    CentroidShift(f64),
    /// Stop once the weighted-error bound falls to the threshold.
    WeightedBound(f64),
    MaxOuterIterations(usize),
}

impl FromStr for StopCondition {
    type Err = Error;

    /// `budget:X`, `boundary`, `shift:EPS`, `bound:T` or `iters:N`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad stop rule `{s}`"));
        let (name, arg) = match s.split_once(':') {
            Some((name, arg)) => (name, Some(arg)),
            None => (s, None),
        };
        let num = |arg: Option<&str>| -> Result<f64> {
            arg.and_then(|a| a.parse::<f64>().ok())
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(bad)
        };
        match name {
            "budget" => {
                let x = num(arg)?;
                if x < 1.0 || x.fract() != 0.0 {
                    return Err(bad());
                }
                Ok(StopCondition::DistanceBudget(x as u64))
            }
            "boundary" if arg.is_none() => Ok(StopCondition::EmptyBoundary),
            "shift" => Ok(StopCondition::CentroidShift(num(arg)?)),
            "bound" => Ok(StopCondition::WeightedBound(num(arg)?)),
            "iters" => {
                let x = num(arg)?;
                if x.fract() != 0.0 {
                    return Err(bad());
                }
                Ok(StopCondition::MaxOuterIterations(x as usize))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StopCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCondition::DistanceBudget(b) => write!(f, "budget:{b}"),
            StopCondition::EmptyBoundary => f.write_str("boundary"),
            StopCondition::CentroidShift(e) => write!(f, "shift:{e}"),
            StopCondition::WeightedBound(t) => write!(f, "bound:{t}"),
            StopCondition::MaxOuterIterations(n) => write!(f, "iters:{n}"),
        }
    }
}

/// Any-of combination of stop conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    conditions: Vec<StopCondition>,
}

impl StopRule {
    pub fn any_of(conditions: Vec<StopCondition>) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::InvalidConfig("stop rule needs a condition".into()));
        }
        if conditions
            .iter()
            .any(|c| matches!(c, StopCondition::DistanceBudget(0)))
        {
            return Err(Error::InvalidConfig("distance budget must be > 0".into()));
        }
        Ok(Self { conditions })
    }

    pub fn conditions(&self) -> &[StopCondition] {
        &self.conditions
    }

    /// Tightest distance budget, if any.
    pub fn budget(&self) -> Option<u64> {
        self.conditions
            .iter()
            .filter_map(|c| match c {
                StopCondition::DistanceBudget(b) => Some(*b),
                _ => None,
            })
            .min()
    }

    /// Replaces every budget with `budget`.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.conditions
            .retain(|c| !matches!(c, StopCondition::DistanceBudget(_)));
        self.conditions.push(StopCondition::DistanceBudget(budget));
        self
    }

    fn empty_boundary(&self) -> bool {
        self.conditions.contains(&StopCondition::EmptyBoundary)
    }

    fn max_outer(&self) -> Option<usize> {
        self.conditions
            .iter()
            .filter_map(|c| match c {
                StopCondition::MaxOuterIterations(n) => Some(*n),
                _ => None,
            })
            .min()
    }

    fn shift(&self) -> Option<f64> {
        self.conditions.iter().find_map(|c| match c {
            StopCondition::CentroidShift(e) => Some(*e),
            _ => None,
        })
    }

    fn bound(&self) -> Option<f64> {
        self.conditions.iter().find_map(|c| match c {
            StopCondition::WeightedBound(t) => Some(*t),
            _ => None,
        })
    }
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            conditions: vec![
                StopCondition::EmptyBoundary,
                StopCondition::MaxOuterIterations(100),
            ],
        }
    }
}

/// Parameters of one BWKM run. `None` fields take their size-dependent defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BwkmConfig {
    pub k: usize,
    /// Initial partition size.
    pub m: Option<usize>,
    /// Starting partition size.
    pub m_prime: Option<usize>,
    /// Sample size for the initial partition.
    pub s: Option<usize>,
    /// Repetitions per cutting-probability estimate.
    pub r: usize,
    pub stop: StopRule,
    pub seed: u64,
    /// Inner weighted Lloyd tolerance and iteration cap.
    pub lloyd_tolerance: Tolerance,
    pub lloyd_max_iterations: usize,
    /// Draw the samples with replacement instead of without.
    pub sample_with_replacement: bool,
    /// Record the full-dataset error after each outer iteration (outside the ledger).
    pub test_mode: bool,
}

impl BwkmConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            m: None,
            m_prime: None,
            s: None,
            r: 5,
            stop: StopRule::default(),
            seed: 0,
            lloyd_tolerance: Tolerance::Relative(1e-4),
            lloyd_max_iterations: 100,
            sample_with_replacement: false,
            test_mode: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    /// Fills in defaults for a dataset of `n` points in `d` dimensions and validates
    /// the explicit choices.
    ///
    /// Defaults: `m = ceil(10 sqrt(k d))`, `s = ceil(sqrt(n))`, `r = 5`,
    /// `m' = max(k + 1, ceil(sqrt(k d)))`, with `m` raised to `m' + 1` and `s` capped at
    /// `n - 1` when the formulas would violate `m > m' > k` or `s < n`.
    pub fn resolve(&self, n: usize, d: usize) -> Result<InitParams> {
        let k = self.k;
        if k == 0 {
            return Err(Error::ZeroK);
        }
        if k > n {
            return Err(Error::TooFewPoints { k, available: n });
        }
        if self.r == 0 {
            return Err(Error::InvalidConfig("r must be >= 1".into()));
        }
        let kd = (k * d) as f64;
        let m_prime = match self.m_prime {
            Some(mp) if mp <= k => {
                return Err(Error::InvalidConfig(format!(
                    "m' = {mp} must exceed k = {k}"
                )))
            }
            Some(mp) => mp,
            None => (k + 1).max(kd.sqrt().ceil() as usize),
        };
        let m = match self.m {
            Some(m) if m <= m_prime => {
                return Err(Error::InvalidConfig(format!(
                    "m = {m} must exceed m' = {m_prime}"
                )))
            }
            Some(m) => m,
            None => ((10.0 * kd.sqrt()).ceil() as usize).max(m_prime + 1),
        };
        let s = match self.s {
            Some(s) if s == 0 || (s >= n && n > 1) => {
                return Err(Error::InvalidConfig(format!(
                    "s = {s} must satisfy 0 < s < n = {n}"
                )))
            }
            Some(s) => s,
            None => ((n as f64).sqrt().ceil() as usize).min(n.saturating_sub(1).max(1)),
        };
        Ok(InitParams {
            k,
            m,
            m_prime,
            s,
            r: self.r,
            with_replacement: self.sample_with_replacement,
        })
    }
}

/// Snapshot handed to observers after each outer iteration.
#[derive(Debug)]
pub struct OuterIteration<'a> {
    pub iteration: usize,
    pub state: &'a PartitionState,
    pub centroids: &'a CentroidSet,
    pub cache: &'a AssignmentCache,
    pub report: &'a MisassignmentReport,
    pub distances: u64,
}

/// Hooks into a BWKM run, used for verification and visualisation.
pub trait BwkmObserver {
    fn lloyd_step(&mut self, _state: &PartitionState, _step: &LloydStep<'_>) {}
    fn outer_iteration(&mut self, _it: &OuterIteration<'_>) {}
}

impl BwkmObserver for () {}

#[derive(Debug, Clone)]
pub struct BwkmOutcome {
    pub centroids: CentroidSet,
    pub record: TrialRecord,
    /// Final partition, with the assignment and report matching `centroids`.
    pub state: PartitionState,
    pub cache: AssignmentCache,
    pub report: MisassignmentReport,
    pub params: InitParams,
    /// Ledger count spent building the initial partition.
    pub init_distances: u64,
    pub init_rounds: usize,
    pub init_early_stop: bool,
}

/// Runs BWKM and returns the centroids with their trial record.
pub fn bwkm(
    dataset: &Dataset,
    config: &BwkmConfig,
    ledger: &mut DistanceLedger,
) -> Result<(CentroidSet, TrialRecord)> {
    let out = run_bwkm(dataset, config, ledger, &mut ())?;
    Ok((out.centroids, out.record))
}

struct Inner<'a> {
    dataset: &'a Dataset,
    config: &'a BwkmConfig,
    budget: Option<u64>,
}

impl Inner<'_> {
    fn lloyd(
        &self,
        state: &PartitionState,
        start: CentroidSet,
        tolerance: Tolerance,
        ledger: &mut DistanceLedger,
        observer: &mut dyn BwkmObserver,
    ) -> Result<crate::lloyd::LloydOutcome> {
        let ws = WeightedSet::from_partition(state);
        let stop = LloydStop {
            tolerance,
            max_iterations: self.config.lloyd_max_iterations,
            distance_limit: self.budget,
        };
        weighted_lloyd_observed(&ws, start, &stop, ledger, &mut |step| {
            observer.lloyd_step(state, step)
        })
    }

    fn row(
        &self,
        iteration: usize,
        state: &PartitionState,
        lloyd: &crate::lloyd::LloydOutcome,
        report: &MisassignmentReport,
        ledger: &DistanceLedger,
    ) -> IterationRow {
        IterationRow {
            iter: iteration,
            distances: ledger.count(),
            weighted_error: lloyd.error,
            exact_error: self
                .config
                .test_mode
                .then(|| exact_error(self.dataset, &lloyd.centroids)),
            cells: state.len(),
            boundary: report.boundary_size(),
        }
    }
}

/// Runs BWKM, reporting progress to `observer`.
pub fn run_bwkm(
    dataset: &Dataset,
    config: &BwkmConfig,
    ledger: &mut DistanceLedger,
    observer: &mut dyn BwkmObserver,
) -> Result<BwkmOutcome> {
    let n = dataset.n();
    let params = config.resolve(n, dataset.d())?;
    let k = params.k;
    let budget = config.stop.budget();
    let inner = Inner {
        dataset,
        config,
        budget,
    };
    let mut rng = RngStream::new(config.seed, 0);
    let start_count = ledger.count();

    // seeding and the first assignment over at most m cells must remain affordable
    let reserve = (2 * params.m.max(params.m_prime) * k) as u64;
    let init = initial_partition(dataset, &params, &mut rng, ledger, budget, reserve)?;
    let init_distances = ledger.count() - start_count;
    let mut state = init.state;

    let ws = WeightedSet::from_partition(&state);
    if !ledger.fits(2 * (ws.len() * k) as u64, budget) {
        return Err(Error::BudgetExhausted);
    }
    let seeds = kmeanspp(&ws, k.min(ws.len()), &mut rng, ledger)?;
    let seeds = pad_centroids(seeds, k);
    let mut lloyd = inner.lloyd(&state, seeds, config.lloyd_tolerance, ledger, observer)?;

    let mut record = TrialRecord::new(Method::Bwkm, k, config.seed);
    let bbox_diagonal = bounding_box(dataset)?.diagonal();
    let rule = &config.stop;
    let mut previous: Option<CentroidSet> = None;
    let mut outer = 0;

    let stop_reason = loop {
        let mut report = misassignment(&state, &lloyd.cache)?;
        if report.is_boundary_empty() && lloyd.exit != LloydExit::Stable {
            // settle on an exact fixed point before trusting an empty boundary
            if ledger.fits((state.len() * k) as u64, budget) {
                lloyd = inner.lloyd(
                    &state,
                    lloyd.centroids.clone(),
                    Tolerance::None,
                    ledger,
                    observer,
                )?;
                report = misassignment(&state, &lloyd.cache)?;
            }
        }
        record.push_row(inner.row(outer, &state, &lloyd, &report, ledger));
        observer.outer_iteration(&OuterIteration {
            iteration: outer,
            state: &state,
            centroids: &lloyd.centroids,
            cache: &lloyd.cache,
            report: &report,
            distances: ledger.count(),
        });

        if report.is_boundary_empty() {
            if rule.empty_boundary() && lloyd.exit == LloydExit::Stable {
                break StopReason::EmptyBoundary;
            }
            if state.cells.iter().all(|c| c.is_degenerate()) {
                break StopReason::Exhausted;
            }
        }
        if lloyd.exit == LloydExit::Budget {
            break StopReason::DistanceBudget;
        }
        if let Some(threshold) = rule.bound() {
            if weighted_bound(&state, &lloyd.cache, &report) <= threshold {
                break StopReason::WeightedBound;
            }
        }
        if let (Some(eps), Some(prev)) = (rule.shift(), previous.as_ref()) {
            if ledger.fits(k as u64, budget) {
                let shift = prev.max_shift(&lloyd.centroids, ledger);
                if shift <= epsilon_w(bbox_diagonal, n, eps) {
                    break StopReason::CentroidShift;
                }
            }
        }
        if rule.max_outer().is_some_and(|max| outer >= max) {
            break StopReason::MaxOuterIterations;
        }
        if report.is_boundary_empty() {
            // boundary empty but not yet a fixed point and no budget left to settle it
            break StopReason::DistanceBudget;
        }
        let boundary = report.boundary_size();
        if !ledger.fits(((state.len() + boundary) * k) as u64, budget) {
            break StopReason::DistanceBudget;
        }

        state = refine(dataset, &state, &report, &mut rng)?;
        previous = Some(lloyd.centroids.clone());
        lloyd = inner.lloyd(
            &state,
            lloyd.centroids.clone(),
            config.lloyd_tolerance,
            ledger,
            observer,
        )?;
        outer += 1;
    };
    record.stop_reason = stop_reason;
    let report = misassignment(&state, &lloyd.cache)?;
    Ok(BwkmOutcome {
        centroids: lloyd.centroids,
        record,
        state,
        cache: lloyd.cache,
        report,
        params,
        init_distances,
        init_rounds: init.rounds,
        init_early_stop: init.early_stop,
    })
}

/// Repeats centers when fewer than `k` distinct summaries exist (duplicate-heavy data).
fn pad_centroids(c: CentroidSet, k: usize) -> CentroidSet {
    if c.k() == k {
        return c;
    }
    let d = c.d();
    let mut flat = c.as_flat().to_vec();
    let base = flat.clone();
    while flat.len() < k * d {
        let j = (flat.len() / d) % (base.len() / d);
        flat.extend_from_slice(&base[j * d..(j + 1) * d]);
    }
    CentroidSet::new(flat, d).expect("finite centers")
}
