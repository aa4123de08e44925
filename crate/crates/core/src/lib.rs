//! Boundary weighted k-means (BWKM) with its comparison methods and an instrumented
//! benchmark harness.
//!
//! Every routine that evaluates point-to-point distances charges a [`DistanceLedger`],
//! which is the cost axis used to compare methods. Exact quality measures in
//! [`metrics`] never touch a ledger.
//!
//! ```
//! use bwkm_core::{bwkm, synthesize_mixture, BwkmConfig, DistanceLedger, RngStream};
//!
//! let data = synthesize_mixture(2000, 2, 3, 10.0, &mut RngStream::new(1, 0)).unwrap();
//! let mut ledger = DistanceLedger::new();
//! let (centroids, record) = bwkm(&data, &BwkmConfig::new(3).with_seed(7), &mut ledger).unwrap();
//! assert_eq!(centroids.k(), 3);
//! assert_eq!(record.final_distances(), ledger.count());
//! ```

pub mod baselines;
pub mod bench;
pub mod bwkm;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lloyd;
pub mod metrics;
pub mod record;
pub mod rng;
pub mod seeding;

pub use baselines::{
    grid_partition, grid_rpkm, kmpp_init, lloyd_full, minibatch, MinibatchStop, Seeder,
};
pub use bench::{run_experiment, BudgetPolicy, ExperimentConfig};
pub use bwkm::{bwkm, run_bwkm, BwkmConfig, BwkmOutcome, StopCondition, StopRule};
pub use error::{Error, Result};
pub use geometry::{Block, CellSubset, Dataset, PartitionState};
pub use lloyd::{
    assign, update, weighted_error, weighted_lloyd, AssignmentCache, CentroidSet, DistanceLedger,
    LloydStop, Tolerance, WeightedSet,
};
pub use metrics::{brute_force_optimum, exact_error, relative_error, synthesize_mixture};
pub use record::{IterationRow, Method, StopReason, TrialRecord};
pub use rng::RngStream;
