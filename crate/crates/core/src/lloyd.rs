//! Weighted Lloyd iterations over (representative, weight) pairs, with every
//! point-to-point distance evaluation charged to a [`DistanceLedger`].

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dataset, PartitionState};

/// Exact count of d-dimensional distance evaluations.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct DistanceLedger {
    count: u64,
}

impl DistanceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn charge(&mut self, evaluations: u64) {
        self.count += evaluations;
    }

    /// Whether `evaluations` more fit under `limit` (no limit always fits).
    pub fn fits(&self, evaluations: u64, limit: Option<u64>) -> bool {
        limit.is_none_or(|l| self.count + evaluations <= l)
    }
}

/// Squared Euclidean distance without bookkeeping. Callers charge the ledger in bulk.
#[inline]
pub(crate) fn sq_dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Squared Euclidean distance, charged as one evaluation.
pub fn squared_distance(p: &[f64], q: &[f64], ledger: &mut DistanceLedger) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    ledger.charge(1);
    Ok(sq_dist(p, q))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Representatives and their integer weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet {
    d: usize,
    reps: Vec<f64>,
    weights: Vec<u64>,
}

impl WeightedSet {
    pub fn new(reps: Vec<f64>, weights: Vec<u64>, d: usize) -> Result<Self> {
        if d == 0 || reps.len() != weights.len() * d {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * d,
                got: reps.len(),
            });
        }
        if weights.contains(&0) {
            return Err(Error::InvalidConfig("weights must be >= 1".into()));
        }
        Ok(Self { d, reps, weights })
    }

    /// Every point of the dataset with weight 1.
    pub fn unit(dataset: &Dataset) -> Self {
        Self {
            d: dataset.d(),
            reps: dataset.as_flat().to_vec(),
            weights: vec![1; dataset.n()],
        }
    }

    pub fn from_partition(state: &PartitionState) -> Self {
        let d = state.cells.first().map_or(1, |c| c.representative.len());
        let mut reps = Vec::with_capacity(state.len() * d);
        let mut weights = Vec::with_capacity(state.len());
        for cell in &state.cells {
            reps.extend_from_slice(&cell.representative);
            weights.push(cell.weight() as u64);
        }
        Self { d, reps, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn rep(&self, i: usize) -> &[f64] {
        &self.reps[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> u64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }
}

/// `k` centroids in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    d: usize,
    centers: Vec<f64>,
}

impl CentroidSet {
    pub fn new(centers: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || centers.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: centers.len(),
            });
        }
        if centers.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("non-finite centroid".into()));
        }
        Ok(Self { d, centers })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().to_vec()).collect();
        Self::new(flat, d)
    }

    pub fn k(&self) -> usize {
        self.centers.len() / self.d
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.d..(j + 1) * self.d]
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.centers.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.centers
    }

    /// `max_k ||c_k - c'_k||`, charged as `k` evaluations.
    pub fn max_shift(&self, other: &CentroidSet, ledger: &mut DistanceLedger) -> f64 {
        debug_assert_eq!(self.k(), other.k());
        ledger.charge(self.k() as u64);
        self.centers()
            .zip(other.centers())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Nearest and second-nearest centroid distances per representative, as produced by the
/// last assignment pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentCache {
    pub nearest: Vec<usize>,
    /// Euclidean (not squared) distance to the nearest centroid.
    pub nearest_dist: Vec<f64>,
    /// Euclidean distance to the second-nearest centroid; `+inf` when `k = 1`.
    pub second_dist: Vec<f64>,
    nearest_sq: Vec<f64>,
}

impl AssignmentCache {
    pub fn len(&self) -> usize {
        self.nearest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nearest.is_empty()
    }

    /// Weighted error from the cached distances, no new evaluations.
    pub fn weighted_error(&self, ws: &WeightedSet) -> f64 {
        let mut acc = CompensatedSum::default();
        for (i, sq) in self.nearest_sq.iter().enumerate() {
            acc.add(ws.weight(i) as f64 * sq);
        }
        acc.value()
    }
}

#[derive(Clone, Copy)]
struct Nearest {
    index: usize,
    sq: f64,
    second_sq: f64,
}

#[inline]
fn nearest_two(p: &[f64], c: &CentroidSet) -> Nearest {
    let mut best = Nearest {
        index: 0,
        sq: f64::INFINITY,
        second_sq: f64::INFINITY,
    };
    for (j, center) in c.centers().enumerate() {
        let dist = sq_dist(p, center);
        if dist < best.sq {
            best.second_sq = best.sq;
            best.sq = dist;
            best.index = j;
        } else if dist < best.second_sq {
            best.second_sq = dist;
        }
    }
    best
}

/// Nearest index and squared distance, no bookkeeping.
#[inline]
pub(crate) fn nearest_center(p: &[f64], c: &CentroidSet) -> (usize, f64) {
    let n = nearest_two(p, c);
    (n.index, n.sq)
}

#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 1 << 14;

/// Assigns every representative to its nearest centroid (ties to the lowest index).
/// Charges `|reps| * k` evaluations.
pub fn assign(
    ws: &WeightedSet,
    c: &CentroidSet,
    ledger: &mut DistanceLedger,
) -> Result<AssignmentCache> {
    if c.k() == 0 {
        return Err(Error::ZeroK);
    }
    if c.d() != ws.d() {
        return Err(Error::DimensionMismatch {
            expected: ws.d(),
            got: c.d(),
        });
    }
    let n = ws.len();
    #[cfg(feature = "parallel")]
    let found: Vec<Nearest> = if n * c.k() >= PAR_THRESHOLD {
        (0..n)
            .into_par_iter()
            .map(|i| nearest_two(ws.rep(i), c))
            .collect()
    } else {
        (0..n).map(|i| nearest_two(ws.rep(i), c)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let found: Vec<Nearest> = (0..n).map(|i| nearest_two(ws.rep(i), c)).collect();

    ledger.charge((n * c.k()) as u64);
    Ok(AssignmentCache {
        nearest: found.iter().map(|f| f.index).collect(),
        nearest_dist: found.iter().map(|f| f.sq.sqrt()).collect(),
        second_dist: found.iter().map(|f| f.second_sq.sqrt()).collect(),
        nearest_sq: found.iter().map(|f| f.sq).collect(),
    })
}

/// Moves each centroid to the weighted mean of the representatives assigned to it.
///
/// A cluster left empty is re-seeded at the representative farthest from its nearest
/// centroid (lowest index on ties), never reusing a representative for two clusters.
pub fn update(ws: &WeightedSet, cache: &AssignmentCache, k: usize) -> CentroidSet {
    let d = ws.d();
    let mut sums = vec![0.0; k * d];
    let mut mass = vec![0u64; k];
    for i in 0..ws.len() {
        let j = cache.nearest[i];
        let w = ws.weight(i);
        mass[j] += w;
        for (s, x) in sums[j * d..(j + 1) * d].iter_mut().zip(ws.rep(i)) {
            *s += w as f64 * x;
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&j| mass[j] == 0).collect();
    if !empty.is_empty() {
        let mut order: Vec<usize> = (0..ws.len()).collect();
        order.sort_by(|&a, &b| {
            cache.nearest_dist[b]
                .total_cmp(&cache.nearest_dist[a])
                .then(a.cmp(&b))
        });
        for (&j, &i) in empty.iter().zip(order.iter().cycle()) {
            sums[j * d..(j + 1) * d].copy_from_slice(ws.rep(i));
            mass[j] = 1;
        }
    }
    for j in 0..k {
        let m = mass[j] as f64;
        for s in &mut sums[j * d..(j + 1) * d] {
            *s /= m;
        }
    }
    CentroidSet { d, centers: sums }
}

/// `sum_P |P| * ||P - c_P||^2`, charging `|reps| * k` evaluations.
pub fn weighted_error(
    ws: &WeightedSet,
    c: &CentroidSet,
    ledger: &mut DistanceLedger,
) -> Result<f64> {
    Ok(assign(ws, c, ledger)?.weighted_error(ws))
}

/// Inner-loop tolerance on the weighted-error decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tolerance {
    /// `factor * (initial weighted error / total weight)`.
    Relative(f64),
    Absolute(f64),
    /// Run until the assignment stops changing.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LloydStop {
    pub tolerance: Tolerance,
    pub max_iterations: usize,
    /// Never start an assignment pass that would push the ledger above this count.
    pub distance_limit: Option<u64>,
}

impl Default for LloydStop {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::Relative(1e-4),
            max_iterations: 100,
            distance_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LloydExit {
    Tolerance,
    /// Assignment unchanged: the returned centroids are a fixed point.
    Stable,
    MaxIterations,
    Budget,
}

#[derive(Debug, Clone)]
pub struct LloydOutcome {
    pub centroids: CentroidSet,
    /// Assignment of the representatives against `centroids`.
    pub cache: AssignmentCache,
    pub error: f64,
    pub iterations: usize,
    pub exit: LloydExit,
}

/// One assign/update round, reported to observers.
#[derive(Debug)]
pub struct LloydStep<'a> {
    pub iteration: usize,
    pub before: &'a CentroidSet,
    pub after: &'a CentroidSet,
    pub error_before: f64,
    pub error_after: f64,
    /// Ledger count once `after` has been assigned.
    pub distances: u64,
}

/// Weighted Lloyd from `initial` until `stop` fires.
pub fn weighted_lloyd(
    ws: &WeightedSet,
    initial: CentroidSet,
    stop: &LloydStop,
    ledger: &mut DistanceLedger,
) -> Result<LloydOutcome> {
    weighted_lloyd_observed(ws, initial, stop, ledger, &mut |_| {})
}

/// [`weighted_lloyd`] with a callback after every completed iteration.
pub fn weighted_lloyd_observed(
    ws: &WeightedSet,
    initial: CentroidSet,
    stop: &LloydStop,
    ledger: &mut DistanceLedger,
    on_step: &mut dyn FnMut(&LloydStep<'_>),
) -> Result<LloydOutcome> {
    let k = initial.k();
    let pass = (ws.len() * k) as u64;
    if !ledger.fits(pass, stop.distance_limit) {
        return Err(Error::BudgetExhausted);
    }
    let mut centroids = initial;
    let mut cache = assign(ws, &centroids, ledger)?;
    let mut error = cache.weighted_error(ws);
    let tol = match stop.tolerance {
        Tolerance::Relative(f) => f * error / ws.total_weight().max(1) as f64,
        Tolerance::Absolute(t) => t,
        Tolerance::None => f64::NEG_INFINITY,
    };
    let mut iterations = 0;
    let exit = loop {
        if iterations >= stop.max_iterations {
            break LloydExit::MaxIterations;
        }
        if !ledger.fits(pass, stop.distance_limit) {
            break LloydExit::Budget;
        }
        let next = update(ws, &cache, k);
        let next_cache = assign(ws, &next, ledger)?;
        let next_error = next_cache.weighted_error(ws);
        iterations += 1;
        on_step(&LloydStep {
            iteration: iterations,
            before: &centroids,
            after: &next,
            error_before: error,
            error_after: next_error,
            distances: ledger.count(),
        });
        let stable = next_cache.nearest == cache.nearest;
        let decrease = error - next_error;
        centroids = next;
        cache = next_cache;
        error = next_error;
        if stable {
            break LloydExit::Stable;
        }
        if decrease <= tol {
            break LloydExit::Tolerance;
        }
    };
    Ok(LloydOutcome {
        centroids,
        cache,
        error,
        iterations,
        exit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn ws1(values: &[f64], weights: &[u64]) -> WeightedSet {
        WeightedSet::new(values.to_vec(), weights.to_vec(), 1).unwrap()
    }

    fn c1(values: &[f64]) -> CentroidSet {
        CentroidSet::new(values.to_vec(), 1).unwrap()
    }

    #[test]
    fn squared_distance_345() {
        let mut ledger = DistanceLedger::new();
        assert_eq!(
            squared_distance(&[0.0, 0.0], &[3.0, 4.0], &mut ledger),
            Ok(25.0)
        );
        assert_eq!(ledger.count(), 1);
        assert_eq!(
            squared_distance(&[1.5, 2.0], &[1.5, 2.0], &mut ledger),
            Ok(0.0)
        );
        assert!(squared_distance(&[1.0], &[1.0, 2.0], &mut ledger).is_err());
    }

    #[test]
    fn squared_distance_matches_compensated_oracle() {
        let mut rng = RngStream::new(3, 0);
        let mut ledger = DistanceLedger::new();
        for _ in 0..1000 {
            let p: Vec<f64> = (0..8).map(|_| rng.random_range(-100.0..100.0)).collect();
            let q: Vec<f64> = (0..8).map(|_| rng.random_range(-100.0..100.0)).collect();
            let mut oracle = CompensatedSum::default();
            for j in 0..8 {
                oracle.add((p[j] - q[j]) * (p[j] - q[j]));
            }
            let got = squared_distance(&p, &q, &mut ledger).unwrap();
            assert!((got - oracle.value()).abs() <= 1e-12 * oracle.value());
        }
        assert_eq!(ledger.count(), 1000);
    }

    #[test]
    fn assign_basic_and_ledger() {
        let ws = ws1(&[0.0, 1.0, 9.0, 10.0], &[1; 4]);
        let mut ledger = DistanceLedger::new();
        let cache = assign(&ws, &c1(&[0.0, 10.0]), &mut ledger).unwrap();
        assert_eq!(cache.nearest, vec![0, 0, 1, 1]);
        assert_eq!(ledger.count(), 8);
        assert_eq!(cache.second_dist, vec![10.0, 9.0, 9.0, 10.0]);
    }

    #[test]
    fn assign_tie_goes_to_lowest_index() {
        let ws = ws1(&[5.0], &[1]);
        let cache = assign(&ws, &c1(&[0.0, 10.0]), &mut DistanceLedger::new()).unwrap();
        assert_eq!(cache.nearest, vec![0]);
        assert_eq!(cache.nearest_dist, cache.second_dist);
    }

    #[test]
    fn assign_single_centroid_has_infinite_second() {
        let ws = ws1(&[1.0, 2.0], &[1, 1]);
        let cache = assign(&ws, &c1(&[0.0]), &mut DistanceLedger::new()).unwrap();
        assert!(cache.second_dist.iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn assign_rejects_empty_centroids() {
        let ws = ws1(&[1.0], &[1]);
        let empty = CentroidSet {
            d: 1,
            centers: vec![],
        };
        assert_eq!(
            assign(&ws, &empty, &mut DistanceLedger::new()),
            Err(Error::ZeroK)
        );
    }

    #[test]
    fn update_means() {
        let ws = ws1(&[0.0, 1.0, 9.0, 10.0], &[1; 4]);
        let cache = assign(&ws, &c1(&[0.0, 10.0]), &mut DistanceLedger::new()).unwrap();
        assert_eq!(update(&ws, &cache, 2), c1(&[0.5, 9.5]));
    }

    #[test]
    fn update_weighted_mean() {
        let ws = ws1(&[0.0, 3.0], &[2, 1]);
        let cache = assign(&ws, &c1(&[0.0, 100.0]), &mut DistanceLedger::new()).unwrap();
        assert_eq!(update(&ws, &cache, 2).center(0), &[1.0]);
    }

    #[test]
    fn empty_cluster_reseeded_at_farthest_rep() {
        let ws = ws1(&[0.0, 1.0, 7.0], &[1; 3]);
        let cache = assign(&ws, &c1(&[0.0, 100.0]), &mut DistanceLedger::new()).unwrap();
        let next = update(&ws, &cache, 2);
        assert_eq!(next.center(1), &[7.0]);
    }

    #[test]
    fn reseeding_never_increases_error_over_dropping() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..200 {
            let vals: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..10.0)).collect();
            let ws = ws1(&vals, &[1; 20]);
            // centroid 2 is far away and ends up empty
            let c = c1(&[2.0, 8.0, 1e6]);
            let mut ledger = DistanceLedger::new();
            let cache = assign(&ws, &c, &mut ledger).unwrap();
            let repaired = update(&ws, &cache, 3);
            let dropped = CentroidSet {
                d: 1,
                centers: repaired.as_flat()[..2].to_vec(),
            };
            let e_repaired = weighted_error(&ws, &repaired, &mut ledger).unwrap();
            let e_dropped = weighted_error(&ws, &dropped, &mut ledger).unwrap();
            assert!(e_repaired <= e_dropped);
        }
    }

    #[test]
    fn weighted_error_examples() {
        let ws = ws1(&[0.0, 10.0], &[2, 1]);
        let mut ledger = DistanceLedger::new();
        assert_eq!(weighted_error(&ws, &c1(&[0.0, 10.0]), &mut ledger), Ok(0.0));
        assert_eq!(weighted_error(&ws, &c1(&[1.0]), &mut ledger), Ok(83.0));
        assert_eq!(ledger.count(), 4 + 2);
    }

    #[test]
    fn lloyd_fixed_point_takes_one_iteration() {
        let ws = ws1(&[0.0, 1.0, 9.0, 10.0], &[1; 4]);
        let out = weighted_lloyd(
            &ws,
            c1(&[0.5, 9.5]),
            &LloydStop::default(),
            &mut DistanceLedger::new(),
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.exit, LloydExit::Stable);
        assert_eq!(out.centroids, c1(&[0.5, 9.5]));
    }

    #[test]
    fn lloyd_converges() {
        let ws = ws1(&[0.0, 1.0, 9.0, 10.0], &[1; 4]);
        let out = weighted_lloyd(
            &ws,
            c1(&[0.0, 10.0]),
            &LloydStop::default(),
            &mut DistanceLedger::new(),
        )
        .unwrap();
        assert_eq!(out.centroids, c1(&[0.5, 9.5]));
        assert_eq!(out.error, 1.0);
    }

    #[test]
    fn lloyd_error_monotone_over_seeded_runs() {
        let mut rng = RngStream::new(17, 0);
        for _ in 0..100 {
            let reps: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
            let weights: Vec<u64> = (0..50).map(|_| rng.random_range(1..20)).collect();
            let ws = WeightedSet::new(reps, weights, 2).unwrap();
            let start: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut errors = Vec::new();
            let stop = LloydStop {
                tolerance: Tolerance::None,
                ..Default::default()
            };
            weighted_lloyd_observed(
                &ws,
                CentroidSet::new(start, 2).unwrap(),
                &stop,
                &mut DistanceLedger::new(),
                &mut |s| errors.push((s.error_before, s.error_after)),
            )
            .unwrap();
            for (before, after) in errors {
                assert!(after <= before + 1e-12 * before.abs());
            }
        }
    }

    #[test]
    fn lloyd_respects_distance_limit() {
        let ws = ws1(&[0.0, 1.0, 2.0, 8.0, 9.0, 10.0], &[1; 6]);
        let mut ledger = DistanceLedger::new();
        let stop = LloydStop {
            tolerance: Tolerance::None,
            max_iterations: 100,
            distance_limit: Some(20),
        };
        let out = weighted_lloyd(&ws, c1(&[0.0, 1.0]), &stop, &mut ledger).unwrap();
        assert!(ledger.count() <= 20);
        assert_eq!(out.exit, LloydExit::Budget);
        assert!(weighted_lloyd(&ws, c1(&[0.0, 1.0]), &stop, &mut ledger).is_err());
    }

    #[test]
    fn unit_weights_match_textbook_lloyd() {
        let mut rng = RngStream::new(23, 0);
        let rows: Vec<[f64; 2]> = (0..60)
            .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let ws = WeightedSet::unit(&ds);
        let c0 = CentroidSet::from_rows(&[rows[0], rows[1], rows[2]]).unwrap();

        // textbook Lloyd written independently
        let mut c: Vec<[f64; 2]> = vec![rows[0], rows[1], rows[2]];
        for _ in 0..5 {
            let mut sum = [[0.0; 2]; 3];
            let mut cnt = [0usize; 3];
            for p in &rows {
                let mut best = 0;
                let mut bd = f64::INFINITY;
                for (j, cj) in c.iter().enumerate() {
                    let dd = (p[0] - cj[0]).powi(2) + (p[1] - cj[1]).powi(2);
                    if dd < bd {
                        bd = dd;
                        best = j;
                    }
                }
                sum[best][0] += p[0];
                sum[best][1] += p[1];
                cnt[best] += 1;
            }
            for j in 0..3 {
                c[j] = [sum[j][0] / cnt[j] as f64, sum[j][1] / cnt[j] as f64];
            }
        }
        let stop = LloydStop {
            tolerance: Tolerance::None,
            max_iterations: 5,
            distance_limit: None,
        };
        let out = weighted_lloyd(&ws, c0, &stop, &mut DistanceLedger::new()).unwrap();
        assert_eq!(out.centroids, CentroidSet::from_rows(&c).unwrap());
    }
}
