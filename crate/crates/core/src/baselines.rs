//! Comparison methods: full Lloyd with three seedings, mini-batch k-means, grid-based
//! recursive partition k-means, and k-means++ on its own.

use std::collections::BTreeMap;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, Block, CellSubset, Dataset, PartitionState};
use crate::lloyd::{
    assign, nearest_center, weighted_lloyd_observed, CentroidSet, DistanceLedger, LloydExit,
    LloydOutcome, LloydStop, WeightedSet,
};
use crate::metrics::exact_error;
use crate::record::{IterationRow, Method, StopReason, TrialRecord};
use crate::rng::RngStream;
use crate::seeding::{forgy, kmc2, kmeanspp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeder {
    Forgy,
    KmeansPP,
    Kmc2 { chain_length: usize },
}

impl Seeder {
    pub fn method(self) -> Method {
        match self {
            Seeder::Forgy => Method::LloydForgy,
            Seeder::KmeansPP => Method::LloydKmpp,
            Seeder::Kmc2 { .. } => Method::LloydKmc2,
        }
    }

    pub fn seed(
        self,
        dataset: &Dataset,
        k: usize,
        rng: &mut RngStream,
        ledger: &mut DistanceLedger,
    ) -> Result<CentroidSet> {
        match self {
            Seeder::Forgy => forgy(&WeightedSet::unit(dataset), k, rng),
            Seeder::KmeansPP => kmeanspp(&WeightedSet::unit(dataset), k, rng, ledger),
            Seeder::Kmc2 { chain_length } => kmc2(dataset, k, chain_length, rng, ledger),
        }
    }
}

fn exit_reason(exit: LloydExit) -> StopReason {
    match exit {
        LloydExit::Tolerance => StopReason::Tolerance,
        LloydExit::Stable => StopReason::Stable,
        LloydExit::MaxIterations => StopReason::MaxIterations,
        LloydExit::Budget => StopReason::DistanceBudget,
    }
}

/// Runs weighted Lloyd and records one row per iteration, plus one for the starting
/// assignment.
fn recorded_lloyd(
    ws: &WeightedSet,
    start: CentroidSet,
    stop: &LloydStop,
    ledger: &mut DistanceLedger,
    record: &mut TrialRecord,
    first_iter: usize,
    cells: usize,
) -> Result<LloydOutcome> {
    let pass = (ws.len() * start.k()) as u64;
    let rows = &mut record.rows;
    let out = weighted_lloyd_observed(ws, start, stop, ledger, &mut |step| {
        if step.iteration == 1 {
            rows.push(IterationRow {
                iter: first_iter,
                distances: step.distances - pass,
                weighted_error: step.error_before,
                exact_error: None,
                cells,
                boundary: 0,
            });
        }
        rows.push(IterationRow {
            iter: first_iter + step.iteration,
            distances: step.distances,
            weighted_error: step.error_after,
            exact_error: None,
            cells,
            boundary: 0,
        });
    })?;
    if out.iterations == 0 {
        record.push_row(IterationRow {
            iter: first_iter,
            distances: ledger.count(),
            weighted_error: out.error,
            exact_error: None,
            cells,
            boundary: 0,
        });
    }
    Ok(out)
}

fn finish(record: &mut TrialRecord, dataset: &Dataset, c: &CentroidSet, reason: StopReason) {
    record.stop_reason = reason;
    if let Some(last) = record.rows.last_mut() {
        last.exact_error = Some(exact_error(dataset, c));
    }
}

/// Lloyd on the raw points from the given seeding. `stop.tolerance` bounds the error
/// decrease between consecutive iterations.
pub fn lloyd_full(
    dataset: &Dataset,
    k: usize,
    seeder: Seeder,
    stop: &LloydStop,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<(CentroidSet, TrialRecord)> {
    if k > dataset.n() {
        return Err(Error::TooFewPoints {
            k,
            available: dataset.n(),
        });
    }
    let ws = WeightedSet::unit(dataset);
    let start = seeder.seed(dataset, k, rng, ledger)?;
    let mut record = TrialRecord::new(seeder.method(), k, rng.seed());
    let out = recorded_lloyd(&ws, start, stop, ledger, &mut record, 0, dataset.n())?;
    finish(&mut record, dataset, &out.centroids, exit_reason(out.exit));
    Ok((out.centroids, record))
}

/// How long mini-batch k-means runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinibatchStop {
    Iterations(usize),
    /// Until another batch would push the ledger above this count.
    Budget(u64),
}

/// Per-center learning-rate state.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatchState {
    pub centers: CentroidSet,
    /// Samples ever assigned to each center.
    pub counts: Vec<u64>,
}

impl MiniBatchState {
    pub fn new(centers: CentroidSet) -> Self {
        let k = centers.k();
        Self {
            centers,
            counts: vec![0; k],
        }
    }

    /// One batch: assign every sample against the current centers, then move each
    /// center toward its samples one at a time with rate `1 / count`. Returns the batch
    /// error under the pre-update centers.
    pub fn step(&mut self, batch: &[&[f64]], ledger: &mut DistanceLedger) -> f64 {
        let assigned: Vec<(usize, f64)> = batch
            .iter()
            .map(|p| nearest_center(p, &self.centers))
            .collect();
        ledger.charge((batch.len() * self.centers.k()) as u64);
        let d = self.centers.d();
        let mut flat = self.centers.as_flat().to_vec();
        let mut error = 0.0;
        for (p, &(j, sq)) in batch.iter().zip(&assigned) {
            error += sq;
            self.counts[j] += 1;
            let rate = 1.0 / self.counts[j] as f64;
            for (c, x) in flat[j * d..(j + 1) * d].iter_mut().zip(p.iter()) {
                *c += rate * (x - *c);
            }
        }
        self.centers = CentroidSet::new(flat, d).expect("convex steps stay finite");
        error
    }
}

/// Mini-batch k-means from a Forgy seed with batches of `b` distinct points.
///
/// Each row's weighted error is the batch error scaled by `n / b`. The final row also
/// carries the full-dataset error, computed outside the ledger.
pub fn minibatch(
    dataset: &Dataset,
    k: usize,
    b: usize,
    stop: MinibatchStop,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<(CentroidSet, TrialRecord)> {
    let n = dataset.n();
    if b == 0 || b > n {
        return Err(Error::InvalidConfig(format!(
            "batch size b = {b} must satisfy 1 <= b <= n = {n}"
        )));
    }
    let start = forgy(&WeightedSet::unit(dataset), k, rng)?;
    let mut record = TrialRecord::new(Method::Minibatch, k, rng.seed());
    let mut state = MiniBatchState::new(start);
    let per_batch = (b * k) as u64;
    let scale = n as f64 / b as f64;
    let mut t = 0;
    let reason = loop {
        match stop {
            MinibatchStop::Iterations(max) if t >= max => break StopReason::MaxIterations,
            MinibatchStop::Budget(limit) if !ledger.fits(per_batch, Some(limit)) => {
                break StopReason::DistanceBudget
            }
            _ => {}
        }
        let picks = index::sample(rng, n, b);
        let batch: Vec<&[f64]> = picks.iter().map(|i| dataset.point(i)).collect();
        let error = state.step(&batch, ledger);
        t += 1;
        record.push_row(IterationRow {
            iter: t,
            distances: ledger.count(),
            weighted_error: error * scale,
            exact_error: None,
            cells: b,
            boundary: 0,
        });
    };
    if record.rows.is_empty() {
        // no batch fit under the limit: report the seed itself
        record.rows.push(IterationRow {
            iter: 0,
            distances: ledger.count(),
            weighted_error: exact_error(dataset, &state.centers),
            exact_error: None,
            cells: b,
            boundary: 0,
        });
    }
    finish(&mut record, dataset, &state.centers, reason);
    Ok((state.centers, record))
}

/// Deepest grid level supported by the integer cell keys.
pub const MAX_GRID_LEVEL: usize = 60;

/// Partition of the dataset by the uniform grid that halves every side of the bounding
/// box `level` times. A coordinate on a cutting plane goes to the lower cell. Only
/// nonempty cells are returned, ordered by their grid coordinates.
pub fn grid_partition(dataset: &Dataset, level: usize) -> Result<PartitionState> {
    if level > MAX_GRID_LEVEL {
        return Err(Error::Guard(format!(
            "grid level {level} exceeds {MAX_GRID_LEVEL}"
        )));
    }
    let bbox = bounding_box(dataset)?;
    let d = dataset.d();
    let mut cells: BTreeMap<Vec<u64>, (Vec<f64>, Vec<f64>, Vec<usize>)> = BTreeMap::new();
    let mut key = vec![0u64; d];
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for (i, p) in dataset.points().enumerate() {
        for j in 0..d {
            let (mut a, mut b, mut code) = (bbox.lower()[j], bbox.upper()[j], 0u64);
            for _ in 0..level {
                let mid = 0.5 * (a + b);
                code <<= 1;
                if p[j] <= mid {
                    b = mid;
                } else {
                    a = mid;
                    code |= 1;
                }
            }
            key[j] = code;
            lo[j] = a;
            hi[j] = b;
        }
        cells
            .entry(key.clone())
            .or_insert_with(|| (lo.clone(), hi.clone(), Vec::new()))
            .2
            .push(i);
    }
    let cells = cells
        .into_values()
        .map(|(lo, hi, members)| {
            let block = Block::new(lo, hi)?;
            Ok(CellSubset::from_members(dataset, block, members))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionState {
        cells,
        generation: level,
    })
}

/// Grid-based recursive partition k-means: level `i` runs weighted Lloyd on the
/// `2^(i d)` grid, warm-started from level `i - 1`; level 1 is seeded by weighted
/// k-means++. Stops after `max_iter` levels or once every cell holds one distinct point.
pub fn grid_rpkm(
    dataset: &Dataset,
    k: usize,
    max_iter: usize,
    lloyd: &LloydStop,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<(CentroidSet, TrialRecord)> {
    let (n, d) = (dataset.n(), dataset.d());
    if max_iter == 0 {
        return Err(Error::InvalidConfig("grid levels must be >= 1".into()));
    }
    if d >= usize::BITS as usize || (1usize << d) > n {
        return Err(Error::Guard(format!(
            "first grid level has 2^{d} cells, more than n = {n}"
        )));
    }
    let mut record = TrialRecord::new(Method::GridRpkm, k, rng.seed());
    let mut centroids: Option<CentroidSet> = None;
    let mut level = 0;
    let reason = loop {
        level += 1;
        let state = grid_partition(dataset, level)?;
        let ws = WeightedSet::from_partition(&state);
        let start = match centroids.take() {
            Some(c) => c,
            None if ws.len() < k => {
                // too few cells to seed from; go one level deeper
                if level >= max_iter || state.cells.iter().all(|c| c.is_degenerate()) {
                    return Err(Error::TooFewPoints {
                        k,
                        available: ws.len(),
                    });
                }
                continue;
            }
            None => kmeanspp(&ws, k, rng, ledger)?,
        };
        let iter0 = record.rows.last().map_or(0, |r| r.iter + 1);
        let out = recorded_lloyd(&ws, start, lloyd, ledger, &mut record, iter0, state.len())?;
        centroids = Some(out.centroids);
        if state.cells.iter().all(|c| c.is_degenerate()) {
            break StopReason::Singletons;
        }
        if level >= max_iter {
            break StopReason::MaxIterations;
        }
        if out.exit == LloydExit::Budget {
            break StopReason::DistanceBudget;
        }
    };
    let c = centroids.expect("at least one level ran");
    finish(&mut record, dataset, &c, reason);
    Ok((c, record))
}

/// Weighted k-means++ over the raw points with no Lloyd refinement. The error of the
/// seeds costs one extra assignment pass.
pub fn kmpp_init(
    dataset: &Dataset,
    k: usize,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<(CentroidSet, TrialRecord)> {
    let ws = WeightedSet::unit(dataset);
    let c = kmeanspp(&ws, k, rng, ledger)?;
    let cache = assign(&ws, &c, ledger)?;
    let mut record = TrialRecord::new(Method::KmppInit, k, rng.seed());
    record.rows.push(IterationRow {
        iter: 0,
        distances: ledger.count(),
        weighted_error: cache.weighted_error(&ws),
        exact_error: None,
        cells: dataset.n(),
        boundary: 0,
    });
    finish(&mut record, dataset, &c, StopReason::Seeded);
    Ok((c, record))
}
