//! End-to-end harnesses comparing empirical Wasserstein distances with the
//! closed-form bounds: Boolean percolation, discretisation and soft RGGs.
//!
//! Every run is a pure function of its configuration and seed. Replications
//! draw from their own [`RngStream`] and parallel results are merged in
//! index order, so tables are byte-identical across thread counts.

pub mod boolean;
pub mod discretisation;
pub mod soft_rgg;

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::gospa::GospaParams;
use crate::space::RngStream;
use crate::stats::log_log_slope;
use crate::transport::{null_calibration, GraphSampler};

pub use boolean::{run_boolean_experiment, run_boolean_experiment_cached, sample_boolean_percolation, BooleanConfig};
pub use discretisation::{
    discretise_model, run_discretisation_experiment, run_discretisation_experiment_cached, DiscretisationConfig,
    DiscretisationGrid, DiscretisedModel,
};
pub use soft_rgg::{
    bounded_functionals, run_soft_rgg_experiment, run_soft_rgg_experiment_cached, RggLaw, SoftRggConfig,
};

/// Version of the CSV layout written by [`ExperimentTable::write_csv`].
pub const SCHEMA_VERSION: u32 = 1;

/// Hex SHA-256 of the JSON serialisation of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// A results table with a provenance header.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentTable {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ExperimentTable {
    pub fn new<T: Serialize>(experiment: &str, config: &T, seed: u64, columns: &[&str]) -> Result<Self> {
        Ok(ExperimentTable {
            experiment: experiment.to_string(),
            config_hash: config_hash(config)?,
            seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Writes `#`-prefixed provenance lines followed by the CSV body.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema_version={SCHEMA_VERSION}")?;
        writeln!(out, "# experiment={}", self.experiment)?;
        writeln!(out, "# config_sha256={}", self.config_hash)?;
        writeln!(out, "# seed={}", self.seed)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("utf-8 csv")
    }
}

/// Purpose of a random stream, kept in the top byte of the stream id.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Role {
    SampleA = 1,
    SampleB = 2,
    Null = 3,
}

/// Stream for replicate `index` of sweep point `point` in role `role`.
pub(crate) fn stream(seed: u64, role: Role, point: u64, index: u64) -> RngStream {
    RngStream::new(seed, ((role as u64) << 56) | (point << 32) | index)
}

/// Draws `n` items in parallel, item `i` from stream `(seed, role, point, i)`.
pub(crate) fn draw<T, F>(seed: u64, role: Role, point: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(&mut stream(seed, role, point, i)))
        .collect()
}

/// Null bands already computed in one run, keyed by a description of the
/// target law.
#[derive(Debug, Default)]
pub struct NullBandCache {
    bands: HashMap<String, f64>,
}

impl NullBandCache {
    /// Band for `key`, calibrated on first use from a stream derived from
    /// `(seed, key)` so the value does not depend on what else was cached.
    pub fn get_or_compute(
        &mut self,
        key: &str,
        sampler: &GraphSampler<'_>,
        n: usize,
        reps: usize,
        params: &GospaParams,
        seed: u64,
    ) -> Result<f64> {
        if let Some(&band) = self.bands.get(key) {
            return Ok(band);
        }
        let tag = u64::from_le_bytes(Sha256::digest(key.as_bytes())[..8].try_into().expect("8 bytes"));
        let mut rng = stream(seed, Role::Null, tag >> 40, 0);
        let band = null_calibration(sampler, n, reps, params, &mut rng)?;
        self.bands.insert(key.to_string(), band);
        Ok(band)
    }
}

/// Log-log regression slope, NaN when fewer than two points or any value is
/// not positive.
pub(crate) fn log_log_slope_or_nan(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return f64::NAN;
    }
    log_log_slope(xs, ys)
}
