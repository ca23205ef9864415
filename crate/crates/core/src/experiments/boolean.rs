//! Percolation graph of large balls in a Boolean model versus its Poisson
//! random geometric graph limit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{draw, log_log_slope_or_nan, ExperimentTable, NullBandCache, Role};
use crate::bounds::boolean_bound;
use crate::error::{Error, Result};
use crate::gospa::GospaParams;
use crate::graph::{sample_edges, Connection, LatentRadiusRule, RadiusTransform, SpatialGraph};
use crate::point_process::{poisson_count, PointPattern};
use crate::space::{RngStream, Window};
use crate::transport::{empirical_wasserstein, OtMethod};

/// Largest expected vertex count a single draw may have.
pub const MAX_EXPECTED_POINTS: f64 = 1e6;

/// Boolean model with Poisson centres of intensity `centre_intensity`,
/// Pareto radii `P(R ≥ r) = (r/r0)^{−a}` for `r ≥ r0`, thinning at `r_*`,
/// contraction by `q^{1/d}` with `q = r_*^{−b}` and updated radii
/// `R̂ = r_* + ψ(R − r_*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BooleanConfig {
    pub dim: usize,
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Tail exponent `a` of the radius law.
    pub tail_exponent: f64,
    /// Contraction exponent `b`.
    pub contraction_exponent: f64,
    pub transform: RadiusTransform,
    /// Thinning cutoffs `r_*` to sweep.
    pub r_list: Vec<f64>,
    /// Observation window after contraction.
    pub window: Window,
    pub centre_intensity: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_null_reps")]
    pub null_reps: usize,
}

fn default_r0() -> f64 {
    1.0
}

fn default_samples() -> usize {
    300
}

fn default_null_reps() -> usize {
    50
}

impl BooleanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window.dim() != self.dim {
            return Err(Error::validation("window dimension differs from dim"));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::validation("r0 must be positive"));
        }
        if !(self.tail_exponent > 0.0 && self.tail_exponent.is_finite()) {
            return Err(Error::validation("tail exponent a must be positive"));
        }
        if !(self.contraction_exponent > 0.0 && self.contraction_exponent.is_finite()) {
            return Err(Error::validation("contraction exponent b must be positive"));
        }
        if let RadiusTransform::Power { gamma, delta } = self.transform {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(Error::validation("transform exponent gamma must lie in (0, 1]"));
            }
            if !(delta >= 0.0 && delta.is_finite()) {
                return Err(Error::validation("transform exponent delta must be nonnegative"));
            }
        }
        if !(self.centre_intensity > 0.0 && self.centre_intensity.is_finite()) {
            return Err(Error::validation("centre intensity must be positive"));
        }
        if self.r_list.is_empty() {
            return Err(Error::validation("r_list is empty"));
        }
        for &r in &self.r_list {
            self.check_cutoff(r)?;
        }
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be positive"));
        }
        Ok(())
    }

    pub(crate) fn check_cutoff(&self, r_star: f64) -> Result<()> {
        if !(r_star >= self.r0 && r_star.is_finite()) {
            return Err(Error::validation("cutoff r_* must be at least r0"));
        }
        if self.keep_probability(r_star) == 0.0 {
            return Err(Error::validation("trivial thinning"));
        }
        Ok(())
    }

    /// p(r_*) = P(R ≥ r_*).
    pub fn keep_probability(&self, r_star: f64) -> f64 {
        if r_star <= self.r0 {
            1.0
        } else {
            (r_star / self.r0).powf(-self.tail_exponent)
        }
    }

    /// q = r_*^{−b}.
    pub fn contraction(&self, r_star: f64) -> f64 {
        r_star.powf(-self.contraction_exponent)
    }

    /// Intensity μ p(r_*)/q of the thinned and contracted centres.
    pub fn intensity(&self, r_star: f64) -> f64 {
        self.centre_intensity * self.keep_probability(r_star) / self.contraction(r_star)
    }

    /// Half the connection radius of the target graph, t = q^{1/d} r_*.
    pub fn target_radius(&self, r_star: f64) -> f64 {
        self.contraction(r_star).powf(1.0 / self.dim as f64) * r_star
    }

    /// Connection rule acting on contracted coordinates.
    pub fn rule(&self, r_star: f64) -> LatentRadiusRule {
        LatentRadiusRule {
            r_star,
            tail_exponent: self.tail_exponent,
            transform: self.transform,
            scale: self.contraction(r_star).powf(1.0 / self.dim as f64),
        }
    }
}

/// Connection function of the target graph, `1{‖x−y‖ ≤ 2t}`.
pub fn target_connection(cfg: &BooleanConfig, r_star: f64) -> Connection {
    Connection::Threshold {
        radius: 2.0 * cfg.target_radius(r_star),
    }
}

/// Thinned and contracted centres in the observation window: a Poisson
/// pattern of intensity μp/q, equal in law to contracting the kept centres of
/// the pre-image window.
fn sample_thinned_centres<R: Rng + ?Sized>(cfg: &BooleanConfig, r_star: f64, rng: &mut R) -> Result<PointPattern> {
    let mean = cfg.intensity(r_star) * cfg.window.volume();
    if mean > MAX_EXPECTED_POINTS {
        return Err(Error::validation(format!(
            "expected vertex count {mean} exceeds the memory guard {MAX_EXPECTED_POINTS}"
        )));
    }
    let n = poisson_count(mean, rng)?;
    Ok(PointPattern::from_vec_unchecked(
        (0..n).map(|_| cfg.window.uniform_point(rng)).collect(),
    ))
}

/// One Boolean percolation graph at cutoff `r_star`: kept centres with
/// Pareto radii conditioned on `R ≥ r_*`, joined when their uncontracted
/// distance is at most `R̂_i + R̂_j`.
pub fn sample_boolean_percolation<R: Rng + ?Sized>(
    cfg: &BooleanConfig,
    r_star: f64,
    rng: &mut R,
) -> Result<SpatialGraph> {
    cfg.validate()?;
    cfg.check_cutoff(r_star)?;
    Ok(sample_pair(cfg, r_star, rng)?.0)
}

/// Boolean graph and target graph on the same vertex pattern.
fn sample_pair<R: Rng + ?Sized>(cfg: &BooleanConfig, r_star: f64, rng: &mut R) -> Result<(SpatialGraph, SpatialGraph)> {
    let xi = sample_thinned_centres(cfg, r_star, rng)?;
    let rule = cfg.rule(r_star);
    let radii = rule.sample_radii(xi.len(), rng)?;
    let boolean_edges = rule.edges(&xi, &radii);
    let target_edges = sample_edges(&target_connection(cfg, r_star), &xi, rng)?;
    Ok((
        SpatialGraph::from_parts_unchecked(xi.clone(), boolean_edges),
        SpatialGraph::from_parts_unchecked(xi, target_edges),
    ))
}

/// Draws from the target law: Poisson vertices of intensity μp/q with
/// threshold edges at 2t.
fn sample_target(cfg: &BooleanConfig, r_star: f64, rng: &mut RngStream) -> Result<SpatialGraph> {
    let xi = sample_thinned_centres(cfg, r_star, rng)?;
    let edges = sample_edges(&target_connection(cfg, r_star), &xi, rng)?;
    Ok(SpatialGraph::from_parts_unchecked(xi, edges))
}

pub const BOOLEAN_COLUMNS: [&str; 9] = [
    "r_star",
    "mean_vertices",
    "mean_edges_boolean",
    "w_hat",
    "bound",
    "null_band",
    "within_bound",
    "slope_bound",
    "slope_w_hat",
];

/// Sweeps `cfg.r_list`, comparing the Boolean graph with its Poisson RGG
/// target by empirical Wasserstein distance, closed-form bound and null band.
pub fn run_boolean_experiment(cfg: &BooleanConfig, params: &GospaParams, seed: u64) -> Result<ExperimentTable> {
    run_boolean_experiment_cached(cfg, params, seed, &mut NullBandCache::default())
}

/// As [`run_boolean_experiment`], reusing null bands of identical target laws.
pub fn run_boolean_experiment_cached(
    cfg: &BooleanConfig,
    params: &GospaParams,
    seed: u64,
    cache: &mut NullBandCache,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    let mut table = ExperimentTable::new("boolean", &(cfg, params), seed, &BOOLEAN_COLUMNS)?;
    let mut rows = Vec::with_capacity(cfg.r_list.len());
    for (point, &r_star) in cfg.r_list.iter().enumerate() {
        let pairs = draw(seed, Role::SampleA, point as u64, cfg.n_samples, |rng| {
            sample_pair(cfg, r_star, rng)
        })?;
        let (boolean, target): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let w_hat = empirical_wasserstein(&boolean, &target, params, &OtMethod::ExactOt)?.value;
        let report = boolean_bound(cfg, r_star, params)?;
        let bound = report.recompute()?;
        if bound != report.total {
            return Err(Error::numerical("bound total differs from its terms"));
        }
        let key = format!(
            "boolean-target window={:?} intensity={:016x} radius={:016x}",
            cfg.window,
            cfg.intensity(r_star).to_bits(),
            (2.0 * cfg.target_radius(r_star)).to_bits()
        );
        let sampler = |rng: &mut RngStream| sample_target(cfg, r_star, rng);
        let null_band = cache.get_or_compute(&key, &sampler, cfg.n_samples, cfg.null_reps, params, seed)?;
        let n = boolean.len() as f64;
        let mean_vertices = boolean.iter().map(|g| g.n_vertices() as f64).sum::<f64>() / n;
        let mean_edges = boolean.iter().map(|g| g.n_edges() as f64).sum::<f64>() / n;
        rows.push([r_star, mean_vertices, mean_edges, w_hat, bound, null_band]);
    }
    let rs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let slope_bound = log_log_slope_or_nan(&rs, &rows.iter().map(|r| r[4]).collect::<Vec<_>>());
    let slope_w = log_log_slope_or_nan(&rs, &rows.iter().map(|r| r[3]).collect::<Vec<_>>());
    for [r_star, mean_vertices, mean_edges, w_hat, bound, null_band] in rows {
        let within = f64::from(u8::from(w_hat <= bound + null_band));
        table.push(vec![
            r_star,
            mean_vertices,
            mean_edges,
            w_hat,
            bound,
            null_band,
            within,
            slope_bound,
            slope_w,
        ]);
    }
    Ok(table)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn example(gamma: f64) -> BooleanConfig {
        BooleanConfig {
            dim: 2,
            r0: 1.0,
            tail_exponent: 2.0,
            contraction_exponent: 2.0,
            transform: RadiusTransform::Power { gamma, delta: 0.0 },
            r_list: vec![1e4, 1e5],
            window: Window::cube(2, 4.0).unwrap(),
            centre_intensity: 0.4,
            n_samples: 10,
            null_reps: 20,
        }
    }

    #[test]
    fn derived_quantities() {
        let cfg = example(0.5);
        cfg.validate().unwrap();
        let r = 1e4;
        assert!((cfg.keep_probability(r) - 1e-8).abs() < 1e-22);
        assert!((cfg.contraction(r) - 1e-8).abs() < 1e-22);
        assert!((cfg.intensity(r) - 0.4).abs() < 1e-12);
        assert!((cfg.target_radius(r) - 1.0).abs() < 1e-12);
        assert_eq!(cfg.keep_probability(0.5), 1.0);
        assert!(cfg.check_cutoff(0.5).is_err());
    }

    #[test]
    fn vertex_count_matches_thinned_intensity() {
        let cfg = example(0.5);
        let r = 1e4;
        let n = 2000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = RngStream::new(3, i);
                sample_boolean_percolation(&cfg, r, &mut rng).unwrap().n_vertices() as f64
            })
            .collect();
        let (mean, se) = crate::stats::mean_se(&counts);
        let expected = cfg.intensity(r) * cfg.window.volume();
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn zero_transform_gives_the_target_graph() {
        let mut cfg = example(0.5);
        cfg.transform = RadiusTransform::Zero;
        for i in 0..50 {
            let mut rng = RngStream::new(5, i);
            let (boolean, target) = sample_pair(&cfg, 1e4, &mut rng).unwrap();
            assert_eq!(boolean, target);
        }
    }

    #[test]
    fn edges_vanish_for_light_tails_as_cutoff_grows() {
        let mut cfg = example(1.0);
        cfg.tail_exponent = 3.0;
        cfg.contraction_exponent = 3.0;
        cfg.window = Window::cube(2, 2.0).unwrap();
        let mean_edges = |r: f64| {
            (0..400)
                .map(|i| {
                    let mut rng = RngStream::new(9, i);
                    sample_boolean_percolation(&cfg, r, &mut rng).unwrap().n_edges() as f64
                })
                .sum::<f64>()
                / 400.0
        };
        let (near, far) = (mean_edges(10.0), mean_edges(1e3));
        assert!(far < near, "{far} vs {near}");
        assert!(far < 0.05, "{far}");
    }

    #[test]
    fn memory_guard() {
        let mut cfg = example(0.5);
        cfg.centre_intensity = 1e6;
        let mut rng = RngStream::new(1, 1);
        assert!(sample_boolean_percolation(&cfg, 1e4, &mut rng).is_err());
    }

    #[test]
    fn experiment_rows_respect_the_bound() {
        let mut cfg = example(0.5);
        cfg.n_samples = 20;
        let params = GospaParams::default();
        let table = run_boolean_experiment(&cfg, &params, 11).unwrap();
        assert_eq!(table.rows.len(), 2);
        for row in &table.rows {
            assert_eq!(row[6], 1.0, "{row:?}");
        }
        let slope = table.column("slope_bound").unwrap()[0];
        assert!((slope + 0.5).abs() < 0.05, "{slope}");
        let again = run_boolean_experiment(&cfg, &params, 11).unwrap();
        assert_eq!(table.to_csv_string(), again.to_csv_string());
    }

    #[test]
    fn rejects_bad_gamma() {
        let mut cfg = example(0.5);
        cfg.transform = RadiusTransform::Power { gamma: 1.5, delta: 0.0 };
        assert!(cfg.validate().is_err());
    }
}
