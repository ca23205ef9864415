//! Empirical 1-Wasserstein distance between samples of graphs with the GOSPA
//! ground metric.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::solve_assignment;
use crate::error::{Error, Result};
use crate::gospa::{gospa_detailed, GospaParams};
use crate::graph::SpatialGraph;
use crate::space::RngStream;
use crate::stats::quantile;

/// Optimal-transport solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OtMethod {
    /// Assignment for equal sample sizes, transportation problem otherwise.
    #[default]
    ExactOt,
    /// Entropic transport; the value is ⟨P, C⟩ of the entropic plan.
    Sinkhorn {
        regularisation: f64,
        #[serde(default = "default_sinkhorn_iterations")]
        max_iterations: usize,
        #[serde(default = "default_sinkhorn_tolerance")]
        tolerance: f64,
    },
}

fn default_sinkhorn_iterations() -> usize {
    10_000
}

fn default_sinkhorn_tolerance() -> f64 {
    1e-9
}

impl OtMethod {
    pub fn sinkhorn(regularisation: f64) -> Self {
        OtMethod::Sinkhorn {
            regularisation,
            max_iterations: default_sinkhorn_iterations(),
            tolerance: default_sinkhorn_tolerance(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WassersteinEstimate {
    pub value: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Same-law calibration level; zero until attached.
    pub null_band: f64,
    pub method: OtMethod,
    /// Set when some ground distances are search upper bounds.
    pub upper_bound: bool,
}

impl WassersteinEstimate {
    pub fn with_null_band(mut self, band: f64) -> Self {
        self.null_band = band;
        self
    }
}

/// Row-major matrix of ground distances.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// False if any entry is an upper bound.
    pub exact: bool,
}

impl CostMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((0..self.cols).map(|j| format!("b{j}")))?;
        for row in self.data.chunks(self.cols.max(1)).take(self.rows) {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// GOSPA distances between every pair of graphs, filled in parallel by row.
pub fn cost_matrix(a: &[SpatialGraph], b: &[SpatialGraph], params: &GospaParams) -> CostMatrix {
    let rows: Vec<(Vec<f64>, bool)> = a
        .par_iter()
        .map(|ga| {
            let mut exact = true;
            let row = b
                .iter()
                .map(|gb| {
                    let r = gospa_detailed(ga, gb, params);
                    exact &= r.exact;
                    r.value
                })
                .collect();
            (row, exact)
        })
        .collect();
    let exact = rows.iter().all(|r| r.1);
    CostMatrix {
        rows: a.len(),
        cols: b.len(),
        data: rows.into_iter().flat_map(|r| r.0).collect(),
        exact,
    }
}

/// Exact optimal transport cost between uniform weights on the rows and the
/// columns.
pub fn exact_transport(cost: &CostMatrix) -> Result<f64> {
    let (n, m) = (cost.rows, cost.cols);
    if n == 0 || m == 0 {
        return Err(Error::validation("transport needs nonempty samples"));
    }
    if n == m {
        let (_, total) = solve_assignment(&cost.data, n, n);
        return Ok(total / n as f64);
    }
    Ok(transportation(&cost.data, n, m))
}

/// Uniform transportation problem by successive shortest paths on the
/// integer-scaled network: each row supplies m units, each column demands n.
fn transportation(cost: &[f64], n: usize, m: usize) -> f64 {
    let mut supply = vec![m as u64; n];
    let mut demand = vec![n as u64; m];
    let mut flow = vec![0u64; n * m];
    let mut pot_row = vec![0.0f64; n];
    let mut pot_col: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| cost[i * m + j]).fold(f64::INFINITY, f64::min))
        .collect();
    let mut pot_sink = pot_col.iter().copied().fold(f64::INFINITY, f64::min);
    let mut remaining = (n * m) as u64;
    let mut dist_row = vec![0.0; n];
    let mut dist_col = vec![0.0; m];
    let mut done_row = vec![false; n];
    let mut done_col = vec![false; m];
    // predecessor of a row: column reached through a reverse arc, or none
    // when entered from the source; predecessor of a column: a row
    let mut prev_row: Vec<Option<usize>> = vec![None; n];
    let mut prev_col = vec![0usize; m];
    while remaining > 0 {
        dist_row.fill(f64::INFINITY);
        dist_col.fill(f64::INFINITY);
        done_row.fill(false);
        done_col.fill(false);
        for i in 0..n {
            if supply[i] > 0 {
                dist_row[i] = (-pot_row[i]).max(0.0);
                prev_row[i] = None;
            }
        }
        let mut dist_sink = f64::INFINITY;
        let mut last_col = usize::MAX;
        loop {
            let mut best = f64::INFINITY;
            let mut pick = None;
            for i in 0..n {
                if !done_row[i] && dist_row[i] < best {
                    best = dist_row[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_col[j] && dist_col[j] < best {
                    best = dist_col[j];
                    pick = Some((false, j));
                }
            }
            if dist_sink <= best {
                break;
            }
            let Some((is_row, k)) = pick else { break };
            if is_row {
                done_row[k] = true;
                for j in 0..m {
                    if !done_col[j] {
                        let nd = best + (cost[k * m + j] + pot_row[k] - pot_col[j]).max(0.0);
                        if nd < dist_col[j] {
                            dist_col[j] = nd;
                            prev_col[j] = k;
                        }
                    }
                }
            } else {
                done_col[k] = true;
                for i in 0..n {
                    if !done_row[i] && flow[i * m + k] > 0 {
                        let nd = best + (-cost[i * m + k] + pot_col[k] - pot_row[i]).max(0.0);
                        if nd < dist_row[i] {
                            dist_row[i] = nd;
                            prev_row[i] = Some(k);
                        }
                    }
                }
                if demand[k] > 0 {
                    let nd = best + (pot_col[k] - pot_sink).max(0.0);
                    if nd < dist_sink {
                        dist_sink = nd;
                        last_col = k;
                    }
                }
            }
        }
        for i in 0..n {
            pot_row[i] += dist_row[i].min(dist_sink);
        }
        for j in 0..m {
            pot_col[j] += dist_col[j].min(dist_sink);
        }
        pot_sink += dist_sink;
        let mut bottleneck = demand[last_col];
        let mut j = last_col;
        loop {
            let i = prev_col[j];
            match prev_row[i] {
                None => {
                    bottleneck = bottleneck.min(supply[i]);
                    break;
                }
                Some(k) => {
                    bottleneck = bottleneck.min(flow[i * m + k]);
                    j = k;
                }
            }
        }
        demand[last_col] -= bottleneck;
        let mut j = last_col;
        loop {
            let i = prev_col[j];
            flow[i * m + j] += bottleneck;
            match prev_row[i] {
                None => {
                    supply[i] -= bottleneck;
                    break;
                }
                Some(k) => {
                    flow[i * m + k] -= bottleneck;
                    j = k;
                }
            }
        }
        remaining -= bottleneck;
    }
    let total: f64 = flow.iter().zip(cost).map(|(&f, &c)| f as f64 * c).sum();
    total / (n * m) as f64
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn iterations; returns ⟨P, C⟩ for the entropic plan P.
pub fn sinkhorn(cost: &CostMatrix, regularisation: f64, max_iterations: usize, tolerance: f64) -> Result<f64> {
    if !(regularisation > 0.0) {
        return Err(Error::validation("sinkhorn regularisation must be positive"));
    }
    let (n, m) = (cost.rows, cost.cols);
    if n == 0 || m == 0 {
        return Err(Error::validation("transport needs nonempty samples"));
    }
    let eps = regularisation;
    let log_a = -(n as f64).ln();
    let log_b = -(m as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    for _ in 0..max_iterations {
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = eps * log_a - eps * log_sum_exp(g.iter().enumerate().map(|(j, gj)| (gj - cost.get(i, j)) / eps));
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = eps * log_b - eps * log_sum_exp(f.iter().enumerate().map(|(i, fi)| (fi - cost.get(i, j)) / eps));
        }
        let err: f64 = (0..n)
            .map(|i| {
                let row: f64 = (0..m).map(|j| ((f[i] + g[j] - cost.get(i, j)) / eps).exp()).sum();
                (row - 1.0 / n as f64).abs()
            })
            .sum();
        if err < tolerance {
            break;
        }
    }
    let mut value = 0.0;
    for (i, fi) in f.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            let c = cost.get(i, j);
            value += ((fi + gj - c) / eps).exp() * c;
        }
    }
    Ok(value)
}

/// Transport cost for a precomputed cost matrix.
pub fn transport_cost(cost: &CostMatrix, method: &OtMethod) -> Result<f64> {
    match *method {
        OtMethod::ExactOt => exact_transport(cost),
        OtMethod::Sinkhorn {
            regularisation,
            max_iterations,
            tolerance,
        } => sinkhorn(cost, regularisation, max_iterations, tolerance),
    }
}

/// Plug-in Wasserstein distance between the empirical laws of two samples.
pub fn empirical_wasserstein(
    sample_a: &[SpatialGraph],
    sample_b: &[SpatialGraph],
    params: &GospaParams,
    method: &OtMethod,
) -> Result<WassersteinEstimate> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::validation("both samples must be nonempty"));
    }
    if let OtMethod::Sinkhorn { regularisation, .. } = method {
        if !(*regularisation > 0.0) {
            return Err(Error::validation("sinkhorn regularisation must be positive"));
        }
    }
    let cost = cost_matrix(sample_a, sample_b, params);
    let value = transport_cost(&cost, method)?.max(0.0);
    Ok(WassersteinEstimate {
        value,
        n_a: sample_a.len(),
        n_b: sample_b.len(),
        null_band: 0.0,
        method: *method,
        upper_bound: !cost.exact,
    })
}

/// Graph generator used by calibration and experiments.
pub type GraphSampler<'a> = dyn Fn(&mut RngStream) -> Result<SpatialGraph> + Sync + 'a;

/// 95th percentile of the exact empirical Wasserstein distance between two
/// independent samples of size `n` from the same law, over `reps` replicates.
pub fn null_calibration(
    sampler: &GraphSampler<'_>,
    n: usize,
    reps: usize,
    params: &GospaParams,
    rng: &mut RngStream,
) -> Result<f64> {
    if reps < 20 {
        return Err(Error::validation("null calibration needs at least 20 replicates"));
    }
    if n == 0 {
        return Err(Error::validation("sample size must be positive"));
    }
    let base: u64 = rng.random();
    let values = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut stream = RngStream::new(base, r);
            let a = (0..n).map(|_| sampler(&mut stream)).collect::<Result<Vec<_>>>()?;
            let b = (0..n).map(|_| sampler(&mut stream)).collect::<Result<Vec<_>>>()?;
            let cost = cost_matrix(&a, &b, params);
            exact_transport(&cost)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(quantile(&values, 0.95))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gospa::{gospa, GospaVariant};
    use crate::point_process::PointPattern;
    use crate::space::{BaseMetricParams, Point};
    use rand::SeedableRng;

    fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> CostMatrix {
        CostMatrix {
            rows,
            cols,
            data,
            exact: true,
        }
    }

    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    /// Replicates rows and columns to an equal-size assignment problem.
    fn replicated_assignment(c: &CostMatrix) -> f64 {
        let l = c.rows * c.cols / gcd(c.rows, c.cols);
        let (rr, cr) = (l / c.rows, l / c.cols);
        let mut data = Vec::with_capacity(l * l);
        for i in 0..l {
            for j in 0..l {
                data.push(c.get(i / rr, j / cr));
            }
        }
        solve_assignment(&data, l, l).1 / l as f64
    }

    #[test]
    fn transportation_matches_replicated_assignment() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..7);
            let m = rng.random_range(1..7);
            let c = matrix(n, m, (0..n * m).map(|_| rng.random::<f64>()).collect());
            let exact = exact_transport(&c).unwrap();
            assert!((exact - replicated_assignment(&c)).abs() < 1e-12, "{n}x{m}");
        }
    }

    #[test]
    fn sinkhorn_is_close_to_and_above_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let c = matrix(5, 7, (0..35).map(|_| rng.random::<f64>()).collect());
        let exact = exact_transport(&c).unwrap();
        let s = sinkhorn(&c, 0.01, 10_000, 1e-12).unwrap();
        assert!(exact <= s + 1e-9);
        assert!(s - exact < 0.05);
        assert!(sinkhorn(&c, 0.0, 10, 1e-9).is_err());
    }

    fn points_graph(xs: &[f64]) -> SpatialGraph {
        SpatialGraph::edgeless(PointPattern::new(xs.iter().map(|&x| Point::new(&[x, 0.0])).collect()).unwrap())
    }

    #[test]
    fn trivial_samples() {
        let p = GospaParams::new(BaseMetricParams::default(), GospaVariant::One);
        let a = vec![points_graph(&[0.1]), points_graph(&[0.2, 0.5]), points_graph(&[])];
        let w = empirical_wasserstein(&a, &a, &p, &OtMethod::ExactOt).unwrap();
        assert_eq!(w.value, 0.0);
        let b = vec![points_graph(&[0.4])];
        let w = empirical_wasserstein(&a[..1], &b, &p, &OtMethod::ExactOt).unwrap();
        assert_eq!(w.value, gospa(&a[0], &b[0], &p));
        assert!(empirical_wasserstein(&a, &b, &p, &OtMethod::sinkhorn(-1.0)).is_err());
        assert!(empirical_wasserstein(&[], &b, &p, &OtMethod::ExactOt).is_err());
    }

    #[test]
    fn deterministic_sampler_has_zero_null_band() {
        let p = GospaParams::default();
        let g = points_graph(&[0.3, 0.6]);
        let sampler = move |_: &mut RngStream| Ok(g.clone());
        let mut rng = RngStream::new(1, 0);
        assert_eq!(null_calibration(&sampler, 5, 20, &p, &mut rng).unwrap(), 0.0);
        assert!(null_calibration(&sampler, 5, 19, &p, &mut rng).is_err());
    }

    #[test]
    fn cost_matrix_csv() {
        let c = matrix(2, 2, vec![0.0, 0.5, 0.25, 1.0]);
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "b0,b1\n0.0,0.5\n0.25,1.0\n");
    }
}
