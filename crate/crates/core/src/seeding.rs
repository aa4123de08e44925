//! Centroid initialization: Forgy, (weighted) k-means++ and the KMC2 Markov chain.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Dataset;
use crate::lloyd::{sq_dist, CentroidSet, DistanceLedger, WeightedSet};
use crate::rng::RngStream;

/// `k` distinct representatives chosen uniformly without replacement. Weights are ignored.
pub fn forgy(ws: &WeightedSet, k: usize, rng: &mut RngStream) -> Result<CentroidSet> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if ws.len() < k {
        return Err(Error::TooFewPoints {
            k,
            available: ws.len(),
        });
    }
    let picks = index::sample(rng, ws.len(), k);
    let mut centers = Vec::with_capacity(k * ws.d());
    for i in picks.iter() {
        centers.extend_from_slice(ws.rep(i));
    }
    CentroidSet::new(centers, ws.d())
}

/// Draws an index with probability proportional to `mass`, skipping zero entries.
/// Returns `None` when the total mass is zero.
fn draw_proportional(mass: &[f64], rng: &mut RngStream) -> Option<usize> {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &m) in mass.iter().enumerate() {
        if m > 0.0 {
            acc += m;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Weighted k-means++: weights act as multiplicities in every draw.
pub fn kmeanspp(
    ws: &WeightedSet,
    k: usize,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<CentroidSet> {
    if ws.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let weights: Vec<f64> = ws.weights().iter().map(|&w| w as f64).collect();
    let first = draw_proportional(&weights, rng).expect("weights are positive");
    kmeanspp_with_first(ws, first, k, rng, ledger)
}

/// k-means++ continuing from a fixed first representative.
///
/// Each further pick has probability proportional to `weight * D(x)^2`, where `D(x)` is
/// the distance to the closest pick so far. If every unchosen representative has zero
/// mass (duplicates), the pick falls back to uniform over the unchosen ones.
pub fn kmeanspp_with_first(
    ws: &WeightedSet,
    first: usize,
    k: usize,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<CentroidSet> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if ws.len() < k {
        return Err(Error::TooFewPoints {
            k,
            available: ws.len(),
        });
    }
    let n = ws.len();
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    let mut min_sq = vec![f64::INFINITY; n];
    let mut current = first;
    loop {
        chosen[current] = true;
        picks.push(current);
        if picks.len() == k {
            break;
        }
        let c = ws.rep(current);
        for i in 0..n {
            let d = sq_dist(ws.rep(i), c);
            if d < min_sq[i] {
                min_sq[i] = d;
            }
        }
        ledger.charge(n as u64);
        let mass: Vec<f64> = (0..n)
            .map(|i| {
                if chosen[i] {
                    0.0
                } else {
                    ws.weight(i) as f64 * min_sq[i]
                }
            })
            .collect();
        current = match draw_proportional(&mass, rng) {
            Some(i) => i,
            None => {
                let open: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
                open[rng.random_range(0..open.len())]
            }
        };
    }
    let mut centers = Vec::with_capacity(k * ws.d());
    for i in picks {
        centers.extend_from_slice(ws.rep(i));
    }
    CentroidSet::new(centers, ws.d())
}

/// Exact k-means++ probabilities for the next pick given the current centers.
pub fn d2_distribution(ws: &WeightedSet, centers: &CentroidSet) -> Vec<f64> {
    let mass: Vec<f64> = (0..ws.len())
        .map(|i| {
            let m = centers
                .centers()
                .map(|c| sq_dist(ws.rep(i), c))
                .fold(f64::INFINITY, f64::min);
            ws.weight(i) as f64 * m
        })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.into_iter().map(|m| m / total).collect()
}

/// KMC2 seeding: the first center is uniform; each later center is the state of a
/// Metropolis-Hastings chain of `chain_length` steps with uniform proposals and target
/// proportional to the squared distance to the centers chosen so far.
///
/// Each chain step evaluates the candidate against every current center, so adding the
/// `j`-th center (`j` centers already present) costs `chain_length * j` evaluations.
pub fn kmc2(
    dataset: &Dataset,
    k: usize,
    chain_length: usize,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<CentroidSet> {
    if k == 0 {
        return Err(Error::ZeroK);
    }
    if chain_length == 0 {
        return Err(Error::InvalidConfig("chain length must be >= 1".into()));
    }
    let n = dataset.n();
    let d = dataset.d();
    let mut centers: Vec<f64> = dataset.point(rng.random_range(0..n)).to_vec();
    let min_to_centers = |p: &[f64], centers: &[f64]| {
        centers
            .chunks_exact(d)
            .map(|c| sq_dist(p, c))
            .fold(f64::INFINITY, f64::min)
    };
    for placed in 1..k {
        let mut x = rng.random_range(0..n);
        let mut dx = min_to_centers(dataset.point(x), &centers);
        for _ in 1..chain_length {
            let y = rng.random_range(0..n);
            let dy = min_to_centers(dataset.point(y), &centers);
            let accept = if dx == 0.0 {
                true
            } else {
                rng.random::<f64>() < dy / dx
            };
            if accept {
                x = y;
                dx = dy;
            }
        }
        ledger.charge((chain_length * placed) as u64);
        centers.extend_from_slice(dataset.point(x));
    }
    CentroidSet::new(centers, d)
}
