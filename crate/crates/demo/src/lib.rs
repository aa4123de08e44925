//! Browser demo: watch BWKM refine its partition on a 2-D mixture, compare its distance
//! count with Lloyd's, and probe the misassignment test on a hand-drawn cell.
//!
//! The logic lives in plain functions returning JSON so it can be tested natively; the
//! `wasm_bindgen` layer only converts errors.

use bwkm_core::bench::{run_trial, ExperimentConfig};
use bwkm_core::bwkm::{misassignment_value, run_bwkm, BwkmObserver, OuterIteration};
use bwkm_core::metrics::exact_error;
use bwkm_core::{
    BwkmConfig, CentroidSet, Dataset, DistanceLedger, Error, Method, Result, RngStream,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize)]
pub struct CellView {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub weight: usize,
    pub epsilon: f64,
}

/// One outer iteration as drawn on the canvas.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub distances: u64,
    pub error: f64,
    pub boundary: usize,
    pub centroids: Vec<Vec<f64>>,
    pub cells: Vec<CellView>,
}

struct Recorder<'a> {
    dataset: &'a Dataset,
    snapshots: Vec<Snapshot>,
}

impl BwkmObserver for Recorder<'_> {
    fn outer_iteration(&mut self, it: &OuterIteration<'_>) {
        let cells = it
            .state
            .cells
            .iter()
            .zip(&it.report.epsilon)
            .map(|(cell, &epsilon)| CellView {
                lower: cell.fit_box.lower().to_vec(),
                upper: cell.fit_box.upper().to_vec(),
                weight: cell.weight(),
                epsilon,
            })
            .collect();
        self.snapshots.push(Snapshot {
            iteration: it.iteration,
            distances: it.distances,
            error: exact_error(self.dataset, it.centroids),
            boundary: it.report.boundary_size(),
            centroids: it.centroids.centers().map(<[f64]>::to_vec).collect(),
            cells,
        });
    }
}

/// BWKM on `dataset`, one snapshot per outer iteration.
pub fn bwkm_snapshots(
    dataset: &Dataset,
    k: usize,
    seed: u64,
    max_outer: usize,
) -> Result<Vec<Snapshot>> {
    let stop = format!("iters:{max_outer}").parse()?;
    let config = BwkmConfig::new(k)
        .with_seed(seed)
        .with_stop(bwkm_core::StopRule::any_of(vec![
            bwkm_core::StopCondition::EmptyBoundary,
            stop,
        ])?);
    let mut recorder = Recorder {
        dataset,
        snapshots: Vec::new(),
    };
    run_bwkm(dataset, &config, &mut DistanceLedger::new(), &mut recorder)?;
    Ok(recorder.snapshots)
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub method: Method,
    /// `(distances, exact error)` after each iteration.
    pub points: Vec<(u64, f64)>,
}

/// Error against distance count for BWKM and the two Lloyd baselines.
pub fn compare_curves(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Curve>> {
    let config = ExperimentConfig {
        test_mode: true,
        ..ExperimentConfig::default()
    };
    [Method::Bwkm, Method::LloydKmpp, Method::LloydForgy]
        .into_iter()
        .map(|method| {
            let record = run_trial(&config, method, dataset, k, seed, None)?;
            let points = record
                .rows
                .iter()
                .filter_map(|r| r.exact_error.map(|e| (r.distances, e)))
                .collect();
            Ok(Curve { method, points })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub diagonal: f64,
    /// Gap between the second-nearest and nearest centroid distances of the box center.
    pub delta: f64,
    pub epsilon: f64,
    pub nearest: usize,
}

/// Misassignment value of an axis-aligned cell whose representative is its center.
pub fn probe_cell(lower: &[f64], upper: &[f64], centroids: &[f64]) -> Result<Probe> {
    let d = lower.len();
    if upper.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: upper.len(),
        });
    }
    let c = CentroidSet::new(centroids.to_vec(), d)?;
    if c.k() < 2 {
        return Err(Error::InvalidConfig("need at least two centroids".into()));
    }
    let center: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(a, b)| (a + b) / 2.0)
        .collect();
    let diagonal = lower
        .iter()
        .zip(upper)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    let mut dist: Vec<(f64, usize)> = c
        .centers()
        .enumerate()
        .map(|(j, q)| {
            let sq: f64 = center.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            (sq.sqrt(), j)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let delta = dist[1].0 - dist[0].0;
    Ok(Probe {
        diagonal,
        delta,
        epsilon: misassignment_value(diagonal, delta),
        nearest: dist[0].1,
    })
}

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn json(value: &impl Serialize) -> std::result::Result<String, JsError> {
    serde_json::to_string(value).map_err(to_js)
}

/// A generated 2-D mixture held on the Rust side.
#[wasm_bindgen]
pub struct Demo {
    dataset: Dataset,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        components: usize,
        separation: f64,
        seed: u32,
    ) -> std::result::Result<Demo, JsError> {
        let mut rng = RngStream::new(u64::from(seed), 0);
        let dataset =
            bwkm_core::synthesize_mixture(n, 2, components, separation, &mut rng).map_err(to_js)?;
        Ok(Demo { dataset })
    }

    /// Flat `x0, y0, x1, y1, ...`.
    pub fn points(&self) -> Vec<f64> {
        self.dataset.as_flat().to_vec()
    }

    /// JSON array of snapshots, one per outer iteration.
    pub fn bwkm(
        &self,
        k: usize,
        seed: u32,
        max_outer: usize,
    ) -> std::result::Result<String, JsError> {
        json(&bwkm_snapshots(&self.dataset, k, u64::from(seed), max_outer).map_err(to_js)?)
    }

    /// JSON array of error-against-distances curves.
    pub fn compare(&self, k: usize, seed: u32) -> std::result::Result<String, JsError> {
        json(&compare_curves(&self.dataset, k, u64::from(seed)).map_err(to_js)?)
    }
}

/// JSON [`Probe`] for a box and flat centroid coordinates.
#[wasm_bindgen]
pub fn probe(
    lower: Vec<f64>,
    upper: Vec<f64>,
    centroids: Vec<f64>,
) -> std::result::Result<String, JsError> {
    json(&probe_cell(&lower, &upper, &centroids).map_err(to_js)?)
}
