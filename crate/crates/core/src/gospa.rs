//! GOSPA distances between spatial graphs.
//!
//! The smaller graph (size n) is padded with m − n dummy vertices, m being
//! the larger size, and the two vertex sets are matched by a bijection. The
//! distance is the minimum over bijections of
//!
//! (1/m) [ Σ vertex costs + (1/(m−1)) Σ_{pairs} pair costs ]
//!
//! where a vertex cost is d_V(x, y) between real vertices and C_V for a
//! dummy, and a pair cost is d_E between the matched edge indicators when
//! both ends are real. A pair touching a dummy costs C_E in variant 1 and
//! C_E (1 + 1{edge in the larger graph}) in variant 2. The pair sum is absent
//! when m = 1. For equal sizes both variants reduce to the same formula.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment::solve_assignment;
use crate::error::{Error, Result};
use crate::graph::SpatialGraph;
use crate::space::{dist_v, BaseMetricParams};

/// Largest graph size for which [`gospa`] always runs to optimality and
/// [`gospa_bruteforce`] accepts its inputs.
pub const EXACT_SIZE: usize = 7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum GospaVariant {
    #[default]
    One,
    Two,
}

impl GospaVariant {
    pub fn index(self) -> u8 {
        match self {
            GospaVariant::One => 1,
            GospaVariant::Two => 2,
        }
    }
}

impl TryFrom<u8> for GospaVariant {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(GospaVariant::One),
            2 => Ok(GospaVariant::Two),
            _ => Err(Error::validation(format!("GOSPA variant must be 1 or 2, got {v}"))),
        }
    }
}

impl From<GospaVariant> for u8 {
    fn from(v: GospaVariant) -> u8 {
        v.index()
    }
}

/// Ground metric between the edge indicators of two matched vertex pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMetric {
    /// C_E · 1{e ≠ f}.
    #[default]
    Indicator,
    /// As the indicator, except that two present edges cost
    /// min(C_E, mean endpoint d_V under the better orientation).
    EndpointAware,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GospaParams {
    #[serde(default)]
    pub base: BaseMetricParams,
    #[serde(default)]
    pub variant: GospaVariant,
    #[serde(default)]
    pub edge_metric: EdgeMetric,
}

impl GospaParams {
    pub fn new(base: BaseMetricParams, variant: GospaVariant) -> Self {
        GospaParams {
            base,
            variant,
            edge_metric: EdgeMetric::Indicator,
        }
    }

    pub fn with_edge_metric(mut self, edge_metric: EdgeMetric) -> Self {
        self.edge_metric = edge_metric;
        self
    }

    pub fn cv(&self) -> f64 {
        self.base.cv()
    }

    pub fn ce(&self) -> f64 {
        self.base.ce()
    }

    /// Upper bound of the distance: C_V + (i/2) C_E.
    pub fn cap(&self) -> f64 {
        self.cv() + 0.5 * f64::from(self.variant.index()) * self.ce()
    }

    /// Penalty for one additional vertex: C_V + i C_E.
    pub fn penalty(&self) -> f64 {
        self.cv() + f64::from(self.variant.index()) * self.ce()
    }
}

/// Distance value with a flag telling whether the optimum was certified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GospaResult {
    pub value: f64,
    /// False above [`EXACT_SIZE`], where `value` comes from local search and
    /// is an upper bound.
    pub exact: bool,
}

/// GOSPA distance between two graphs.
pub fn gospa(a: &SpatialGraph, b: &SpatialGraph, params: &GospaParams) -> f64 {
    gospa_detailed(a, b, params).value
}

/// GOSPA distance with its exactness flag.
pub fn gospa_detailed(a: &SpatialGraph, b: &SpatialGraph, params: &GospaParams) -> GospaResult {
    let (small, large) = orient(a, b);
    let problem = Problem::new(small, large, params);
    problem.solve()
}

/// GOSPA distance by enumeration of all bijections of the padded vertex
/// sets. Accepts graphs of at most [`EXACT_SIZE`] vertices.
pub fn gospa_bruteforce(a: &SpatialGraph, b: &SpatialGraph, params: &GospaParams) -> Result<f64> {
    if a.n_vertices().max(b.n_vertices()) > EXACT_SIZE {
        return Err(Error::validation("oracle size cap"));
    }
    let (small, large) = if a.n_vertices() <= b.n_vertices() {
        (a, b)
    } else {
        (b, a)
    };
    let n = small.n_vertices();
    let m = large.n_vertices();
    if m == 0 {
        return Ok(0.0);
    }
    let (cv, ce) = (params.cv(), params.ce());
    let two = params.variant == GospaVariant::Two;
    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = f64::INFINITY;
    let eval = |perm: &[usize]| {
        let mut vertex = 0.0;
        for (s, &j) in perm.iter().enumerate() {
            vertex += if s < n {
                dist_v(&small.points()[s], &large.points()[j], &params.base)
            } else {
                cv
            };
        }
        let mut pair = 0.0;
        for s in 0..m {
            for t in s + 1..m {
                let (j, k) = (perm[s], perm[t]);
                let f = large.has_edge(j, k);
                pair += if t < n {
                    let e = small.has_edge(s, t);
                    match (e, f) {
                        (false, false) => 0.0,
                        (true, true) => match params.edge_metric {
                            EdgeMetric::Indicator => 0.0,
                            EdgeMetric::EndpointAware => {
                                let d =
                                    |p: usize, q: usize| dist_v(&small.points()[p], &large.points()[q], &params.base);
                                ce.min((0.5 * (d(s, j) + d(t, k))).min(0.5 * (d(s, k) + d(t, j))))
                            }
                        },
                        _ => ce,
                    }
                } else if two && f {
                    2.0 * ce
                } else {
                    ce
                };
            }
        }
        let total = if m > 1 { vertex + pair / (m - 1) as f64 } else { vertex };
        total / m as f64
    };
    loop {
        best = best.min(eval(&perm));
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Orders the pair so the first graph is the smaller one; equal sizes are
/// put in a canonical order so the computation is identical both ways.
fn orient<'g>(a: &'g SpatialGraph, b: &'g SpatialGraph) -> (&'g SpatialGraph, &'g SpatialGraph) {
    match a.n_vertices().cmp(&b.n_vertices()) {
        Ordering::Less => (a, b),
        Ordering::Greater => (b, a),
        Ordering::Equal => {
            let ka = a.points().iter().map(|p| p.key());
            let kb = b.points().iter().map(|p| p.key());
            match ka.cmp(kb).then_with(|| a.edges().iter().cmp(b.edges().iter())) {
                Ordering::Greater => (b, a),
                _ => (a, b),
            }
        }
    }
}

/// Injection search for rows of the smaller graph into columns of the
/// larger one.
struct Problem {
    n: usize,
    m: usize,
    dv: Vec<f64>,
    adj_a: Vec<bool>,
    adj_b: Vec<bool>,
    edges_b: usize,
    ce: f64,
    variant: GospaVariant,
    edge_metric: EdgeMetric,
    /// Contribution of dummy vertices and of pairs involving a dummy,
    /// excluding the variant-2 edge surcharge.
    constant: f64,
}

impl Problem {
    fn new(small: &SpatialGraph, large: &SpatialGraph, params: &GospaParams) -> Self {
        let n = small.n_vertices();
        let m = large.n_vertices();
        let mut dv = Vec::with_capacity(n * m);
        for x in small.points() {
            for y in large.points() {
                dv.push(dist_v(x, y, &params.base));
            }
        }
        let matrix = |g: &SpatialGraph| {
            let k = g.n_vertices();
            let mut adj = vec![false; k * k];
            for &(i, j) in g.edges() {
                adj[i * k + j] = true;
                adj[j * k + i] = true;
            }
            adj
        };
        let pairs = |k: usize| (k * k.saturating_sub(1) / 2) as f64;
        let dummy_pairs = pairs(m) - pairs(n);
        let constant = (m - n) as f64 * params.cv()
            + if m > 1 {
                dummy_pairs * params.ce() / (m - 1) as f64
            } else {
                0.0
            };
        Problem {
            n,
            m,
            dv,
            adj_a: matrix(small),
            adj_b: matrix(large),
            edges_b: large.n_edges(),
            ce: params.ce(),
            variant: params.variant,
            edge_metric: params.edge_metric,
            constant,
        }
    }

    fn pair_weight(&self) -> f64 {
        if self.m > 1 {
            1.0 / (self.m - 1) as f64
        } else {
            0.0
        }
    }

    fn edge_cost(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        let e = self.adj_a[i * self.n + k];
        let f = self.adj_b[j * self.m + l];
        match (e, f) {
            (false, false) => 0.0,
            (true, true) => match self.edge_metric {
                EdgeMetric::Indicator => 0.0,
                EdgeMetric::EndpointAware => {
                    let d = |p: usize, q: usize| self.dv[p * self.m + q];
                    self.ce.min((0.5 * (d(i, j) + d(k, l))).min(0.5 * (d(i, l) + d(k, j))))
                }
            },
            _ => self.ce,
        }
    }

    /// Variant-2 surcharge for edges of the larger graph not inside the image.
    fn surcharge(&self, cols: &[usize]) -> f64 {
        if self.variant == GospaVariant::One {
            return 0.0;
        }
        let mut inside = 0;
        for (s, &j) in cols.iter().enumerate() {
            for &l in &cols[s + 1..] {
                inside += self.adj_b[j * self.m + l] as usize;
            }
        }
        (self.edges_b - inside) as f64 * self.ce * self.pair_weight()
    }

    /// Objective without `constant`, before dividing by m.
    fn variable_cost(&self, cols: &[usize]) -> f64 {
        let mut vertex = 0.0;
        let mut pair = 0.0;
        for (i, &j) in cols.iter().enumerate() {
            vertex += self.dv[i * self.m + j];
            for (k, &l) in cols.iter().enumerate().skip(i + 1) {
                pair += self.edge_cost(i, k, j, l);
            }
        }
        vertex + pair * self.pair_weight() + self.surcharge(cols)
    }

    fn finish(&self, variable: f64) -> f64 {
        (self.constant + variable) / self.m as f64
    }

    fn solve(&self) -> GospaResult {
        if self.m == 0 {
            return GospaResult {
                value: 0.0,
                exact: true,
            };
        }
        if self.n == 0 {
            return GospaResult {
                value: self.finish(self.surcharge(&[])),
                exact: true,
            };
        }
        let (seed, _) = solve_assignment(&self.dv, self.n, self.m);
        let (cols, cost) = self.local_search(seed);
        if self.m > EXACT_SIZE {
            return GospaResult {
                value: self.finish(cost),
                exact: false,
            };
        }
        let (_, best) = self.branch_and_bound(cols, cost);
        GospaResult {
            value: self.finish(best),
            exact: true,
        }
    }

    fn local_search(&self, mut cols: Vec<usize>) -> (Vec<usize>, f64) {
        let mut best = self.variable_cost(&cols);
        let mut used = vec![false; self.m];
        for &j in &cols {
            used[j] = true;
        }
        loop {
            let mut improved = false;
            for i in 0..self.n {
                for k in i + 1..self.n {
                    cols.swap(i, k);
                    let c = self.variable_cost(&cols);
                    if c < best {
                        best = c;
                        improved = true;
                    } else {
                        cols.swap(i, k);
                    }
                }
                for j in 0..self.m {
                    if used[j] {
                        continue;
                    }
                    let old = cols[i];
                    cols[i] = j;
                    let c = self.variable_cost(&cols);
                    if c < best {
                        best = c;
                        improved = true;
                        used[old] = false;
                        used[j] = true;
                    } else {
                        cols[i] = old;
                    }
                }
            }
            if !improved {
                return (cols, best);
            }
        }
    }

    /// Depth-first branch and bound. At every node each unassigned row is
    /// charged its cheapest free column, counting its vertex cost and its
    /// pair costs with the rows assigned so far; pairs among unassigned rows
    /// and the variant-2 surcharge are nonnegative and left out.
    fn branch_and_bound(&self, incumbent: Vec<usize>, incumbent_cost: f64) -> (Vec<usize>, f64) {
        let mut levels = vec![vec![0.0; self.n * self.m]; self.n + 1];
        levels[0].clone_from(&self.dv);
        let mut search = Search {
            problem: self,
            levels,
            cols: Vec::with_capacity(self.n),
            used: vec![false; self.m],
            best: incumbent,
            best_cost: incumbent_cost,
        };
        search.descend(0.0);
        (search.best, search.best_cost)
    }
}

struct Search<'p> {
    problem: &'p Problem,
    /// `levels[d][r*m + c]`: vertex cost of row r at column c plus its pair
    /// costs with the first d assigned rows.
    levels: Vec<Vec<f64>>,
    cols: Vec<usize>,
    used: Vec<bool>,
    best: Vec<usize>,
    best_cost: f64,
}

impl Search<'_> {
    fn descend(&mut self, partial: f64) {
        let p = self.problem;
        let (n, m) = (p.n, p.m);
        let i = self.cols.len();
        if i == n {
            let total = partial + p.surcharge(&self.cols);
            if total < self.best_cost {
                self.best_cost = total;
                self.best.clone_from(&self.cols);
            }
            return;
        }
        let w = p.pair_weight();
        let mut candidates: Vec<(f64, usize)> = (0..m)
            .filter(|&j| !self.used[j])
            .map(|j| (self.levels[i][i * m + j], j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (step, j) in candidates {
            if partial + step >= self.best_cost {
                return;
            }
            let (done, rest) = self.levels.split_at_mut(i + 1);
            let (cur, next) = (&done[i], &mut rest[0]);
            let mut bound = 0.0;
            for r in i + 1..n {
                let mut row_min = f64::INFINITY;
                for c in 0..m {
                    let v = cur[r * m + c] + w * p.edge_cost(i, r, j, c);
                    next[r * m + c] = v;
                    if !self.used[c] && c != j {
                        row_min = row_min.min(v);
                    }
                }
                bound += row_min;
            }
            if partial + step + bound >= self.best_cost {
                continue;
            }
            self.used[j] = true;
            self.cols.push(j);
            self.descend(partial + step);
            self.cols.pop();
            self.used[j] = false;
        }
    }
}
