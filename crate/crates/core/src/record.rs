//! Per-trial bookkeeping shared by every method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why a trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    DistanceBudget,
    EmptyBoundary,
    CentroidShift,
    WeightedBound,
    MaxOuterIterations,
    /// Error decrease fell under the Lloyd threshold.
    Tolerance,
    /// Assignment stopped changing.
    Stable,
    MaxIterations,
    /// Every cell holds a single distinct point.
    Singletons,
    /// Seeding-only method.
    Seeded,
    /// Partition could not be refined any further.
    Exhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DistanceBudget => "distance_budget",
            StopReason::EmptyBoundary => "empty_boundary",
            StopReason::CentroidShift => "centroid_shift",
            StopReason::WeightedBound => "weighted_bound",
            StopReason::MaxOuterIterations => "max_outer_iterations",
            StopReason::Tolerance => "tolerance",
            StopReason::Stable => "stable",
            StopReason::MaxIterations => "max_iterations",
            StopReason::Singletons => "singletons",
            StopReason::Seeded => "seeded",
            StopReason::Exhausted => "exhausted",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Clustering methods known to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bwkm,
    LloydForgy,
    LloydKmpp,
    LloydKmc2,
    Minibatch,
    GridRpkm,
    KmppInit,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Bwkm,
        Method::LloydForgy,
        Method::LloydKmpp,
        Method::LloydKmc2,
        Method::Minibatch,
        Method::GridRpkm,
        Method::KmppInit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bwkm => "bwkm",
            Method::LloydForgy => "lloyd-forgy",
            Method::LloydKmpp => "lloyd-kmpp",
            Method::LloydKmc2 => "lloyd-kmc2",
            Method::Minibatch => "minibatch",
            Method::GridRpkm => "grid-rpkm",
            Method::KmppInit => "kmpp-init",
        }
    }

    /// Methods whose cost sets the shared distance budget.
    pub fn is_competitor(self) -> bool {
        matches!(
            self,
            Method::LloydForgy | Method::LloydKmpp | Method::LloydKmc2 | Method::Minibatch
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// One progress snapshot of a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iter: usize,
    /// Ledger count when the row was taken.
    pub distances: u64,
    pub weighted_error: f64,
    /// Full-dataset error, measured outside the ledger.
    pub exact_error: Option<f64>,
    pub cells: usize,
    pub boundary: usize,
}

/// One `(method, dataset, k, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: Method,
    pub dataset: String,
    pub k: usize,
    pub seed: u64,
    pub rows: Vec<IterationRow>,
    pub stop_reason: StopReason,
    pub wall_ms: Option<f64>,
}

impl TrialRecord {
    pub fn new(method: Method, k: usize, seed: u64) -> Self {
        Self {
            method,
            dataset: String::new(),
            k,
            seed,
            rows: Vec::new(),
            stop_reason: StopReason::MaxIterations,
            wall_ms: None,
        }
    }

    pub fn final_row(&self) -> Option<&IterationRow> {
        self.rows.last()
    }

    pub fn final_distances(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.distances)
    }

    pub fn final_exact_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.exact_error)
    }

    /// Appends a row unless it repeats the previous ledger count, in which case it
    /// replaces it.
    pub(crate) fn push_row(&mut self, row: IterationRow) {
        match self.rows.last_mut() {
            Some(last) if last.distances >= row.distances => *last = row,
            _ => self.rows.push(row),
        }
    }
}
