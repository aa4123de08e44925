//! Construction of the initial partition and its boundary-driven refinement.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;

use super::misassignment::{misassignment_value, MisassignmentReport};
use crate::error::{Error, Result};
use crate::geometry::{Dataset, PartitionState};
use crate::lloyd::{assign, DistanceLedger, WeightedSet};
use crate::rng::RngStream;
use crate::seeding::kmeanspp;

/// Draws `count` indices with replacement, proportional to `mass`, and returns the
/// distinct ones in ascending order. `None` if the mass is all zero.
fn sample_distinct(mass: &[f64], count: usize, rng: &mut RngStream) -> Option<Vec<usize>> {
    let dist = WeightedIndex::new(mass).ok()?;
    let mut hit = vec![false; mass.len()];
    for _ in 0..count {
        hit[dist.sample(rng)] = true;
    }
    Some(
        hit.iter()
            .enumerate()
            .filter_map(|(i, &h)| h.then_some(i))
            .collect(),
    )
}

/// Sample of `s` dataset indices.
fn draw_sample(n: usize, s: usize, with_replacement: bool, rng: &mut RngStream) -> Vec<usize> {
    if with_replacement {
        (0..s).map(|_| rng.random_range(0..n)).collect()
    } else {
        index::sample(rng, n, s.min(n)).into_vec()
    }
}

/// Number of sample points per cell.
fn sample_counts(owner: &[usize], sample: &[usize], cells: usize) -> Vec<usize> {
    let mut counts = vec![0; cells];
    for &i in sample {
        counts[owner[i]] += 1;
    }
    counts
}

#[derive(Debug, Clone)]
pub struct StartingPartition {
    pub state: PartitionState,
    /// Set when every cell became unsplittable before reaching the target size.
    pub degenerate_stop: bool,
}

/// Grows the single bounding-box cell to `m_prime` cells. Each round draws a sample of
/// size `s` and splits cells sampled with probability proportional to
/// `diagonal * |cell ∩ sample|`.
pub fn starting_partition(
    dataset: &Dataset,
    m_prime: usize,
    s: usize,
    with_replacement: bool,
    rng: &mut RngStream,
) -> Result<StartingPartition> {
    let mut state = PartitionState::root(dataset);
    let n = dataset.n();
    while state.len() < m_prime {
        let sample = draw_sample(n, s, with_replacement, rng);
        let counts = sample_counts(&state.cell_of(n), &sample, state.len());
        let mut mass: Vec<f64> = state
            .cells
            .iter()
            .zip(&counts)
            .map(|(cell, &c)| cell.diagonal() * c as f64)
            .collect();
        if mass.iter().all(|&m| m == 0.0) {
            // the sample missed every splittable cell; use the full counts instead
            mass = state
                .cells
                .iter()
                .map(|cell| cell.diagonal() * cell.weight() as f64)
                .collect();
        }
        let draws = state.len().min(m_prime - state.len());
        let Some(selected) = sample_distinct(&mass, draws, rng) else {
            return Ok(StartingPartition {
                state,
                degenerate_stop: true,
            });
        };
        state.split_cells(dataset, &selected);
    }
    Ok(StartingPartition {
        state,
        degenerate_stop: false,
    })
}

#[derive(Debug, Clone)]
pub struct CuttingProbabilities {
    pub probabilities: Vec<f64>,
    /// No cell was misassigned in any repetition; probabilities follow
    /// `diagonal * |cell ∩ last sample|` instead.
    pub fallback: bool,
}

/// Estimates, for every cell, how likely it is to straddle a cluster border.
///
/// For each of `r` repetitions: draw a sample of size `s`, summarise it per cell, seed
/// `k` centroids by weighted k-means++ over those summaries, and accumulate each cell's
/// misassignment value. The probabilities are the accumulated values normalised to one.
#[allow(clippy::too_many_arguments)]
pub fn cutting_probabilities(
    dataset: &Dataset,
    state: &PartitionState,
    k: usize,
    s: usize,
    r: usize,
    with_replacement: bool,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
) -> Result<CuttingProbabilities> {
    if state.len() <= k {
        return Err(Error::InvalidConfig(format!(
            "cutting probabilities need more than k = {k} cells, have {}",
            state.len()
        )));
    }
    let n = dataset.n();
    let d = dataset.d();
    let owner = state.cell_of(n);
    let mut acc = vec![0.0; state.len()];
    let mut last_counts = vec![0; state.len()];
    for _ in 0..r {
        let sample = draw_sample(n, s, with_replacement, rng);
        let counts = sample_counts(&owner, &sample, state.len());
        let mut sums = vec![0.0; state.len() * d];
        for &i in &sample {
            let c = owner[i];
            for (acc, x) in sums[c * d..(c + 1) * d].iter_mut().zip(dataset.point(i)) {
                *acc += x;
            }
        }
        let occupied: Vec<usize> = (0..state.len()).filter(|&c| counts[c] > 0).collect();
        let mut reps = Vec::with_capacity(occupied.len() * d);
        for &c in &occupied {
            let w = counts[c] as f64;
            reps.extend(sums[c * d..(c + 1) * d].iter().map(|x| x / w));
        }
        let weights = occupied.iter().map(|&c| counts[c] as u64).collect();
        let ws = WeightedSet::new(reps, weights, d)?;
        let centers = kmeanspp(&ws, k.min(ws.len()), rng, ledger)?;
        let cache = assign(&ws, &centers, ledger)?;
        for (slot, &c) in occupied.iter().enumerate() {
            let delta = cache.second_dist[slot] - cache.nearest_dist[slot];
            acc[c] += misassignment_value(state.cells[c].diagonal(), delta);
        }
        last_counts = counts;
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        return Ok(CuttingProbabilities {
            probabilities: acc.into_iter().map(|a| a / total).collect(),
            fallback: false,
        });
    }
    let mass: Vec<f64> = state
        .cells
        .iter()
        .zip(&last_counts)
        .map(|(cell, &c)| cell.diagonal() * c as f64)
        .collect();
    let total: f64 = mass.iter().sum();
    let probabilities = if total > 0.0 {
        mass.into_iter().map(|m| m / total).collect()
    } else {
        vec![0.0; state.len()]
    };
    Ok(CuttingProbabilities {
        probabilities,
        fallback: true,
    })
}

/// Resolved partition-construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitParams {
    pub k: usize,
    pub m: usize,
    pub m_prime: usize,
    pub s: usize,
    pub r: usize,
    pub with_replacement: bool,
}

#[derive(Debug, Clone)]
pub struct InitialPartition {
    pub state: PartitionState,
    /// Rounds of probability-driven splitting after the starting partition.
    pub rounds: usize,
    pub fallback_rounds: usize,
    /// Stopped before reaching `m` cells (degenerate cells or distance limit).
    pub early_stop: bool,
}

/// Upper bound on the evaluations one [`cutting_probabilities`] call may charge.
pub fn cutting_round_cost(p: &InitParams) -> u64 {
    // k-means++ and one assignment pass over at most `s` sample summaries
    (2 * p.r * p.s * p.k) as u64
}

/// Starting partition to `m_prime` cells, then probability-driven splitting until `m`.
///
/// With a `distance_limit`, a round only starts if its worst-case cost plus `reserve`
/// still fits under the limit.
pub fn initial_partition(
    dataset: &Dataset,
    params: &InitParams,
    rng: &mut RngStream,
    ledger: &mut DistanceLedger,
    distance_limit: Option<u64>,
    reserve: u64,
) -> Result<InitialPartition> {
    let start = starting_partition(
        dataset,
        params.m_prime,
        params.s,
        params.with_replacement,
        rng,
    )?;
    let mut state = start.state;
    let mut rounds = 0;
    let mut fallback_rounds = 0;
    let mut early_stop = start.degenerate_stop;
    while state.len() < params.m && !early_stop {
        if state.len() <= params.k
            || !ledger.fits(cutting_round_cost(params) + reserve, distance_limit)
        {
            early_stop = true;
            break;
        }
        let probs = cutting_probabilities(
            dataset,
            &state,
            params.k,
            params.s,
            params.r,
            params.with_replacement,
            rng,
            ledger,
        )?;
        rounds += 1;
        fallback_rounds += probs.fallback as usize;
        let draws = state.len().min(params.m - state.len());
        let Some(selected) = sample_distinct(&probs.probabilities, draws, rng) else {
            early_stop = true;
            break;
        };
        if state.split_cells(dataset, &selected) == 0 {
            early_stop = true;
        }
    }
    Ok(InitialPartition {
        state,
        rounds,
        fallback_rounds,
        early_stop,
    })
}

/// Splits boundary cells: `|boundary|` draws with replacement proportional to the
/// misassignment values, each distinct drawn cell split once along its longest side.
pub fn refine(
    dataset: &Dataset,
    state: &PartitionState,
    report: &MisassignmentReport,
    rng: &mut RngStream,
) -> Result<PartitionState> {
    if report.epsilon.len() != state.len() {
        return Err(Error::StaleCache {
            cache: report.epsilon.len(),
            cells: state.len(),
        });
    }
    let boundary = report.boundary_size();
    if boundary == 0 {
        return Err(Error::Converged);
    }
    let selected = sample_distinct(&report.epsilon, boundary, rng).ok_or(Error::Converged)?;
    let mut next = state.clone();
    next.split_cells(dataset, &selected);
    Ok(next)
}
