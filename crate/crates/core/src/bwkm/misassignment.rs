//! The misassignment function, the boundary it defines, and the error bounds that
//! follow from it.

use crate::error::{Error, Result};
use crate::geometry::{CellSubset, Dataset, PartitionState};
use crate::lloyd::{nearest_center, AssignmentCache, CentroidSet};

/// `max(0, 2 * diagonal - delta)`. Zero certifies that every point of the cell shares the
/// representative's nearest centroid.
#[inline]
pub fn misassignment_value(diagonal: f64, delta: f64) -> f64 {
    (2.0 * diagonal - delta).max(0.0)
}

/// Per-cell misassignment values against the centroids of the last assignment pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MisassignmentReport {
    pub epsilon: Vec<f64>,
    /// Gap between second-nearest and nearest centroid distances of the representative.
    pub delta: Vec<f64>,
    pub in_boundary: Vec<bool>,
}

impl MisassignmentReport {
    pub fn boundary_size(&self) -> usize {
        self.in_boundary.iter().filter(|&&b| b).count()
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_boundary
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn is_boundary_empty(&self) -> bool {
        !self.in_boundary.contains(&true)
    }
}

/// Evaluates the misassignment function for every cell from cached distances alone.
pub fn misassignment(
    state: &PartitionState,
    cache: &AssignmentCache,
) -> Result<MisassignmentReport> {
    if cache.len() != state.len() {
        return Err(Error::StaleCache {
            cache: cache.len(),
            cells: state.len(),
        });
    }
    let delta: Vec<f64> = cache
        .second_dist
        .iter()
        .zip(&cache.nearest_dist)
        .map(|(second, first)| second - first)
        .collect();
    let epsilon: Vec<f64> = state
        .cells
        .iter()
        .zip(&delta)
        .map(|(cell, &gap)| misassignment_value(cell.diagonal(), gap))
        .collect();
    let in_boundary = epsilon.iter().map(|&e| e > 0.0).collect();
    Ok(MisassignmentReport {
        epsilon,
        delta,
        in_boundary,
    })
}

/// Brute-force check that all members of `cell` share one nearest centroid.
/// Not charged to any ledger; meant for verification only.
pub fn well_assigned_check(dataset: &Dataset, cell: &CellSubset, c: &CentroidSet) -> bool {
    let mut members = cell.members.iter();
    let Some(&first) = members.next() else {
        return true;
    };
    let (label, _) = nearest_center(dataset.point(first), c);
    members.all(|&i| nearest_center(dataset.point(i), c).0 == label)
}

/// Upper bound on `|E^D(C) - E^P(C)|`:
/// `sum_B 2 |P| eps_B (2 l_B + ||rep - c_rep||) + (|P| - 1) / 2 * l_B^2`.
pub fn weighted_bound(
    state: &PartitionState,
    cache: &AssignmentCache,
    report: &MisassignmentReport,
) -> f64 {
    state
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let w = cell.weight() as f64;
            let l = cell.diagonal();
            2.0 * w * report.epsilon[i] * (2.0 * l + cache.nearest_dist[i])
                + (w - 1.0) / 2.0 * l * l
        })
        .sum()
}

/// Centroid-displacement threshold `sqrt(l^2 + eps^2 / n^2) - l`.
///
/// If every centroid moves by at most this much, the full-dataset error changes by at
/// most `eps^2 / n`, hence by at most `eps` whenever `eps <= n`.
pub fn epsilon_w(l: f64, n: usize, eps: f64) -> f64 {
    let n = n as f64;
    // (l^2 + t) - l^2 over (sqrt + l) avoids cancellation for large l
    let t = (eps / n) * (eps / n);
    t / ((l * l + t).sqrt() + l)
}
