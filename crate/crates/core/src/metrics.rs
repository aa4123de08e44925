//! Quality measures and exact oracles. Nothing here touches a distance ledger.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::lloyd::{nearest_center, CentroidSet, CompensatedSum};
use crate::rng::RngStream;

/// Full-dataset k-means error `sum_x min_c ||x - c||^2`.
pub fn exact_error(dataset: &Dataset, c: &CentroidSet) -> f64 {
    let mut acc = CompensatedSum::default();
    for p in dataset.points() {
        acc.add(nearest_center(p, c).1);
    }
    acc.value()
}

/// Nearest-centroid label of every point.
pub fn labels(dataset: &Dataset, c: &CentroidSet) -> Vec<usize> {
    dataset.points().map(|p| nearest_center(p, c).0).collect()
}

/// `(E_M - min E) / min E` for every method.
pub fn relative_error(errors: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    for (method, &value) in errors {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveError {
                method: method.clone(),
                value,
            });
        }
    }
    let best = errors.values().copied().fold(f64::INFINITY, f64::min);
    Ok(errors
        .iter()
        .map(|(m, &e)| (m.clone(), (e - best) / best))
        .collect())
}

/// Largest `k^n` the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

struct Search<'a> {
    dataset: &'a Dataset,
    k: usize,
    labels: Vec<usize>,
    sums: Vec<f64>,
    sq: Vec<f64>,
    counts: Vec<usize>,
    best: f64,
    best_labels: Vec<usize>,
}

impl Search<'_> {
    fn cost(&self, used: usize) -> f64 {
        let d = self.dataset.d();
        (0..used)
            .map(|g| {
                let s = &self.sums[g * d..(g + 1) * d];
                let norm: f64 = s.iter().map(|x| x * x).sum();
                self.sq[g] - norm / self.counts[g] as f64
            })
            .sum()
    }

    /// Restricted-growth labelings: point `i` joins one of the groups already in use or
    /// opens the next one, so every partition is visited once.
    fn visit(&mut self, i: usize, used: usize) {
        if i == self.dataset.n() {
            let cost = self.cost(used);
            if cost < self.best {
                self.best = cost;
                self.best_labels.clone_from(&self.labels);
            }
            return;
        }
        let d = self.dataset.d();
        let p = self.dataset.point(i);
        let norm: f64 = p.iter().map(|x| x * x).sum();
        for g in 0..(used + 1).min(self.k) {
            self.labels[i] = g;
            for (s, x) in self.sums[g * d..(g + 1) * d].iter_mut().zip(p) {
                *s += x;
            }
            self.sq[g] += norm;
            self.counts[g] += 1;
            self.visit(i + 1, used.max(g + 1));
            for (s, x) in self.sums[g * d..(g + 1) * d].iter_mut().zip(p) {
                *s -= x;
            }
            self.sq[g] -= norm;
            self.counts[g] -= 1;
        }
    }
}

/// Global optimum of the k-means error by exhaustive search over all groupings.
///
/// Returns a group label per point and the optimal error, recomputed with two-pass
/// group means. Groupings with fewer than `k` nonempty groups are included.
pub fn brute_force_optimum(dataset: &Dataset, k: usize) -> Result<(Vec<usize>, f64)> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    let n = dataset.n();
    if (k as f64).powi(n as i32) > BRUTE_FORCE_LIMIT {
        return Err(Error::Guard(format!(
            "exhaustive search over {k}^{n} assignments exceeds {BRUTE_FORCE_LIMIT:e}"
        )));
    }
    let d = dataset.d();
    let mut search = Search {
        dataset,
        k,
        labels: vec![0; n],
        sums: vec![0.0; k * d],
        sq: vec![0.0; k],
        counts: vec![0; k],
        best: f64::INFINITY,
        best_labels: vec![0; n],
    };
    search.visit(0, 0);
    let labels = search.best_labels;
    Ok((labels.clone(), partition_error(dataset, &labels, k)))
}

/// Error of a labeling with each group at its mean.
pub fn partition_error(dataset: &Dataset, labels: &[usize], k: usize) -> f64 {
    let d = dataset.d();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (p, &g) in dataset.points().zip(labels) {
        counts[g] += 1;
        for (s, x) in sums[g * d..(g + 1) * d].iter_mut().zip(p) {
            *s += x;
        }
    }
    for g in 0..k {
        if counts[g] > 0 {
            for s in &mut sums[g * d..(g + 1) * d] {
                *s /= counts[g] as f64;
            }
        }
    }
    let mut acc = CompensatedSum::default();
    for (p, &g) in dataset.points().zip(labels) {
        acc.add(crate::lloyd::sq_dist(p, &sums[g * d..(g + 1) * d]));
    }
    acc.value()
}

/// Synthetic Gaussian mixture with its ground truth.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub dataset: Dataset,
    /// Component of every point.
    pub labels: Vec<usize>,
    pub centers: CentroidSet,
}

/// `k_true` unit-variance Gaussian components with balanced sizes.
///
/// Component centers sit on distinct sites of a cubic lattice with spacing `separation`,
/// so any two centers are at least `separation` apart. Point order is shuffled.
pub fn synthesize_mixture_labeled(
    n: usize,
    d: usize,
    k_true: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Result<Mixture> {
    if k_true == 0 {
        return Err(Error::ZeroK);
    }
    if d == 0 {
        return Err(Error::InvalidConfig("d must be >= 1".into()));
    }
    if n < k_true {
        return Err(Error::TooFewPoints {
            k: k_true,
            available: n,
        });
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "separation must be finite and >= 0, got {separation}"
        )));
    }
    let mut side = 1usize;
    while side
        .checked_pow(d as u32)
        .is_none_or(|sites| sites < k_true)
    {
        side += 1;
    }
    let sites = side.pow(d as u32);
    let mut centers = Vec::with_capacity(k_true * d);
    for site in index::sample(rng, sites, k_true).iter() {
        let mut rest = site;
        for _ in 0..d {
            centers.push((rest % side) as f64 * separation);
            rest /= side;
        }
    }
    let mut order: Vec<usize> = (0..n).map(|i| i % k_true).collect();
    order.shuffle(rng);
    let mut coords = Vec::with_capacity(n * d);
    for &g in &order {
        for j in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            coords.push(centers[g * d + j] + z);
        }
    }
    Ok(Mixture {
        dataset: Dataset::from_flat(coords, d)?,
        labels: order,
        centers: CentroidSet::new(centers, d)?,
    })
}

/// [`synthesize_mixture_labeled`] without the ground truth.
pub fn synthesize_mixture(
    n: usize,
    d: usize,
    k_true: usize,
    separation: f64,
    rng: &mut RngStream,
) -> Result<Dataset> {
    Ok(synthesize_mixture_labeled(n, d, k_true, separation, rng)?.dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
    }

    #[test]
    fn exact_error_examples() {
        let ds = Dataset::from_values(&[0.0, 1.0, 9.0, 10.0]).unwrap();
        let same = CentroidSet::new(vec![0.0, 1.0, 9.0, 10.0], 1).unwrap();
        assert_eq!(exact_error(&ds, &same), 0.0);
        let c = CentroidSet::new(vec![0.5, 9.5], 1).unwrap();
        assert_eq!(exact_error(&ds, &c), 1.0);
    }

    #[test]
    fn relative_error_examples() {
        let r = relative_error(&map(&[("A", 2.0), ("B", 2.2)])).unwrap();
        assert_eq!(r["A"], 0.0);
        assert!((r["B"] - 0.1).abs() < 1e-12);
        let r = relative_error(&map(&[("A", 3.0), ("B", 3.0)])).unwrap();
        assert!(r.values().all(|&v| v == 0.0));
        assert!(matches!(
            relative_error(&map(&[("A", 0.0)])),
            Err(Error::NonPositiveError { .. })
        ));
        assert!(relative_error(&map(&[("A", f64::NAN)])).is_err());
    }

    #[test]
    fn relative_error_scale_invariant() {
        let base = map(&[("A", 2.0), ("B", 2.7), ("C", 5.5)]);
        let r = relative_error(&base).unwrap();
        for lambda in [1e-3, 0.5, 7.0, 1e6] {
            let scaled: BTreeMap<String, f64> =
                base.iter().map(|(k, v)| (k.clone(), v * lambda)).collect();
            let s = relative_error(&scaled).unwrap();
            for (k, v) in &r {
                assert!((s[k] - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn brute_force_examples() {
        let ds = Dataset::from_values(&[0.0, 1.0, 10.0]).unwrap();
        let (labels, opt) = brute_force_optimum(&ds, 2).unwrap();
        assert_eq!(opt, 0.5);
        assert_eq!(labels[0], labels[1]);
        assert_ne!(labels[0], labels[2]);

        let ds = Dataset::from_values(&[4.0, -1.0, 2.5]).unwrap();
        assert_eq!(brute_force_optimum(&ds, 3).unwrap().1, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let ds = Dataset::from_values(&[0.0; 30]).unwrap();
        assert!(matches!(brute_force_optimum(&ds, 2), Err(Error::Guard(_))));
    }

    #[test]
    fn mixture_zero_separation_is_one_blob() {
        let m = synthesize_mixture_labeled(300, 2, 4, 0.0, &mut RngStream::new(1, 0)).unwrap();
        assert!(m.centers.as_flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mixture_centers_are_separated_and_balanced() {
        let mut rng = RngStream::new(5, 0);
        let m = synthesize_mixture_labeled(1000, 3, 5, 12.0, &mut rng).unwrap();
        for a in 0..5 {
            for b in a + 1..5 {
                let d = crate::lloyd::sq_dist(m.centers.center(a), m.centers.center(b));
                assert!(d.sqrt() >= 12.0 - 1e-12);
            }
        }
        let mut sizes = [0; 5];
        for &g in &m.labels {
            sizes[g] += 1;
        }
        assert_eq!(sizes, [200; 5]);
    }

    #[test]
    fn mixture_component_means_near_targets() {
        let (n, d, k) = (4000, 2, 4);
        let m = synthesize_mixture_labeled(n, d, k, 20.0, &mut RngStream::new(8, 0)).unwrap();
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0.0; k];
        for (p, &g) in m.dataset.points().zip(&m.labels) {
            counts[g] += 1.0;
            for j in 0..d {
                sums[g * d + j] += p[j];
            }
        }
        let radius = 5.0 / ((n / k) as f64).sqrt();
        for g in 0..k {
            for j in 0..d {
                let mean = sums[g * d + j] / counts[g];
                assert!((mean - m.centers.center(g)[j]).abs() <= radius);
            }
        }
    }

    #[test]
    fn mixture_is_reproducible() {
        let a = synthesize_mixture(50, 2, 3, 5.0, &mut RngStream::new(3, 0)).unwrap();
        let b = synthesize_mixture(50, 2, 3, 5.0, &mut RngStream::new(3, 0)).unwrap();
        assert_eq!(a, b);
    }
}
