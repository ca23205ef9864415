//! Graph birth-death processes: single paths, the coupled construction,
//! coupling times, graph difference and generator evaluation.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{neighbours_of_new_point, Connection, DynGraph, EdgeModel, SpatialGraph};
use crate::point_process::{GibbsModel, PointPattern};
use crate::space::{integrate, integrate_stochastic, Point, QuadratureSpec};
use crate::stats::{ks_two_sample, KsResult};

/// A graph together with the process time at which it was observed.
#[derive(Clone, Debug, PartialEq)]
pub struct GbdpState {
    pub graph: SpatialGraph,
    pub clock: f64,
}

/// Summary of the state after one jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub n_vertices: usize,
    pub n_edges: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GbdpOptions {
    /// Times at which full graph snapshots are taken (ascending).
    pub observe_at: Vec<f64>,
    /// Keep a summary record after every jump.
    pub record_jumps: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbdpTrajectory {
    pub horizon: f64,
    pub records: Vec<TrajectoryRecord>,
    pub observations: Vec<GbdpState>,
    pub final_state: GbdpState,
    /// Set when the path reached the empty graph with zero birth rate and
    /// was halted there.
    pub absorbed: bool,
    pub n_jumps: usize,
}

fn product_kernel(edge_model: &EdgeModel) -> Result<&Connection> {
    edge_model
        .as_product()
        .ok_or_else(|| Error::validation("graph dynamics require a product edge kernel"))
}

fn check_observation_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::validation(
            "observation times must be ascending within [0, horizon]",
        ));
    }
    Ok(())
}

/// q(ξ) = ∫λ(x|ξ)dx + |ξ|. Zero exactly when ξ = ∅ and β ≡ 0, in which case
/// the empty graph is absorbing.
pub fn jump_rate(model: &GibbsModel, xi: &PointPattern, spec: &QuadratureSpec) -> Result<f64> {
    let births = match model.kind() {
        crate::point_process::ModelKind::Poisson => model.total_activity()?,
        _ => integrate(model.window(), spec, |x| model.intensity_given(x, xi.points()))?.value,
    };
    Ok(births + xi.len() as f64)
}

/// Simulates the graph birth-death process from `start` up to `horizon`.
///
/// Births are proposed at rate ∫β with density β/∫β and accepted with
/// probability λ(x|ξ)/β(x); an accepted vertex x joins each existing vertex y
/// independently with probability κ(x,y). Every vertex dies at rate 1 and
/// takes its edges with it.
pub fn run_gbdp<R: Rng + ?Sized>(
    vertex_model: &GibbsModel,
    edge_model: &EdgeModel,
    start: &SpatialGraph,
    horizon: f64,
    options: &GbdpOptions,
    rng: &mut R,
) -> Result<GbdpTrajectory> {
    let kappa = product_kernel(edge_model)?;
    if !(horizon >= 0.0) {
        return Err(Error::validation("horizon must be nonnegative"));
    }
    check_observation_times(&options.observe_at, horizon)?;
    let total = vertex_model.total_activity()?;
    let mut g = DynGraph::from_graph(start);
    let mut t = 0.0;
    let mut records = Vec::new();
    let mut observations = Vec::with_capacity(options.observe_at.len());
    let mut next_obs = 0;
    let mut absorbed = false;
    let mut n_jumps = 0;
    if options.record_jumps {
        records.push(TrajectoryRecord {
            time: 0.0,
            n_vertices: g.len(),
            n_edges: g.n_edges,
        });
    }
    loop {
        let rate = total + g.len() as f64;
        let t_next = if rate == 0.0 {
            absorbed = true;
            f64::INFINITY
        } else {
            t + Exp::new(rate).expect("positive rate").sample(rng)
        };
        while next_obs < options.observe_at.len() && options.observe_at[next_obs] < t_next {
            observations.push(GbdpState {
                graph: g.to_graph(),
                clock: options.observe_at[next_obs],
            });
            next_obs += 1;
        }
        if t_next > horizon {
            break;
        }
        t = t_next;
        let changed = if rng.random::<f64>() * rate < total {
            let x = vertex_model.propose_birth(rng);
            let beta = vertex_model.beta(&x);
            let lambda = vertex_model.intensity_given(&x, &g.points);
            if lambda > beta * (1.0 + 1e-12) {
                return Err(Error::numerical("envelope violated"));
            }
            if rng.random::<f64>() * beta < lambda {
                let nb = neighbours_of_new_point(kappa, &g.points, &x, rng)?;
                g.add_vertex(x, nb);
                true
            } else {
                false
            }
        } else {
            let i = rng.random_range(0..g.len());
            g.remove_vertex(i);
            true
        };
        if changed {
            n_jumps += 1;
            if options.record_jumps {
                records.push(TrajectoryRecord {
                    time: t,
                    n_vertices: g.len(),
                    n_edges: g.n_edges,
                });
            }
        }
    }
    Ok(GbdpTrajectory {
        horizon,
        records,
        observations,
        final_state: GbdpState {
            graph: g.to_graph(),
            clock: horizon,
        },
        absorbed,
        n_jumps,
    })
}

/// Generator of the graph birth-death process applied to `h` at `graph`.
///
/// The birth part integrates, against λ(x|ξ)dx, the mean over `n_inner`
/// edge draws of h(ξ+δx, σ+T) − h(ξ,σ); the death part sums
/// h(ξ−δx, σ restricted) − h(ξ,σ) over the vertices.
pub fn generator_apply<R: Rng + ?Sized>(
    vertex_model: &GibbsModel,
    edge_model: &EdgeModel,
    h: &dyn Fn(&SpatialGraph) -> f64,
    graph: &SpatialGraph,
    spec: &QuadratureSpec,
    n_inner: usize,
    rng: &mut R,
) -> Result<f64> {
    let kappa = product_kernel(edge_model)?;
    if n_inner == 0 {
        return Err(Error::validation("n_inner must be positive"));
    }
    let base = h(graph);
    let mut failure = None;
    let birth = integrate_stochastic(vertex_model.window(), spec, rng, |x, r| {
        let lambda = vertex_model.intensity_given(x, graph.points());
        if lambda == 0.0 || graph.vertices().contains(x) {
            return 0.0;
        }
        let mut acc = 0.0;
        for _ in 0..n_inner {
            let added = neighbours_of_new_point(kappa, graph.points(), x, r).and_then(|nb| graph.with_vertex(*x, &nb));
            match added {
                Ok(g2) => acc += h(&g2) - base,
                Err(e) => failure = Some(e),
            }
        }
        lambda * acc / n_inner as f64
    })?
    .value;
    if let Some(e) = failure {
        return Err(e);
    }
    let death: f64 = (0..graph.n_vertices())
        .map(|i| h(&graph.without_vertex(i)) - base)
        .sum();
    Ok(birth + death)
}

/// Number of vertices lying in exactly one graph, plus common vertices whose
/// edges to other common vertices differ between the graphs. Vertices are
/// matched by exact coordinate equality.
pub fn graph_difference(a: &SpatialGraph, b: &SpatialGraph) -> usize {
    let index_b: HashMap<_, usize> = b.points().iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
    let mut common_of_a = vec![None; a.n_vertices()];
    let mut common_of_b = vec![None; b.n_vertices()];
    let mut n_common = 0;
    for (i, p) in a.points().iter().enumerate() {
        if let Some(&j) = index_b.get(&p.key()) {
            common_of_a[i] = Some(n_common);
            common_of_b[j] = Some(n_common);
            n_common += 1;
        }
    }
    let rows = |g: &SpatialGraph, map: &[Option<usize>]| {
        let mut rows = vec![BTreeSet::new(); n_common];
        for &(i, j) in g.edges() {
            if let (Some(ci), Some(cj)) = (map[i], map[j]) {
                rows[ci].insert(cj);
                rows[cj].insert(ci);
            }
        }
        rows
    };
    let ra = rows(a, &common_of_a);
    let rb = rows(b, &common_of_b);
    let exclusive = a.n_vertices() + b.n_vertices() - 2 * n_common;
    exclusive + ra.iter().zip(&rb).filter(|(x, y)| x != y).count()
}

/// Summary of the coupled pair after one jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledRecord {
    pub time: f64,
    pub a_vertices: usize,
    pub a_edges: usize,
    pub b_vertices: usize,
    pub b_edges: usize,
    pub coupled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingOptions {
    pub observe_at: Vec<f64>,
    /// Stop simulating once the graphs coincide. The remainder of the path
    /// is then identical for both components.
    pub stop_when_coupled: bool,
    /// Keep both full graphs after every jump.
    pub record_states: bool,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            observe_at: Vec::new(),
            stop_when_coupled: true,
            record_states: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledTrajectory {
    pub horizon: f64,
    pub records: Vec<CoupledRecord>,
    /// Full `(time, A, B)` states after every jump when requested.
    pub states: Vec<(f64, SpatialGraph, SpatialGraph)>,
    pub observations: Vec<(f64, SpatialGraph, SpatialGraph)>,
    /// First time the graphs coincide; `None` if not coupled by the horizon.
    pub coupling_time: Option<f64>,
    pub absorbed: bool,
}

impl CoupledTrajectory {
    /// Coupling time, censored at the horizon for uncoupled paths.
    pub fn censored_coupling_time(&self) -> f64 {
        self.coupling_time.unwrap_or(self.horizon)
    }
}

/// Vertices of both graphs on a shared index set, with per-graph adjacency.
struct PairState {
    pts: Vec<Point>,
    in_a: Vec<bool>,
    in_b: Vec<bool>,
    adj_a: Vec<Vec<usize>>,
    adj_b: Vec<Vec<usize>>,
    n_a: usize,
    n_b: usize,
    e_a: usize,
    e_b: usize,
    exclusive_vertices: usize,
    exclusive_edges: usize,
}

impl PairState {
    fn new(a: &SpatialGraph, b: &SpatialGraph) -> Self {
        let mut pts: Vec<Point> = a.points().to_vec();
        let mut index: HashMap<_, usize> = pts.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
        let mut in_a = vec![true; pts.len()];
        let mut in_b = vec![false; pts.len()];
        let mut map_b = Vec::with_capacity(b.n_vertices());
        for p in b.points() {
            let u = *index.entry(p.key()).or_insert_with(|| {
                pts.push(*p);
                in_a.push(false);
                in_b.push(false);
                pts.len() - 1
            });
            in_b[u] = true;
            map_b.push(u);
        }
        let n = pts.len();
        let mut adj_a = vec![Vec::new(); n];
        let mut adj_b = vec![Vec::new(); n];
        for &(i, j) in a.edges() {
            adj_a[i].push(j);
            adj_a[j].push(i);
        }
        for &(i, j) in b.edges() {
            let (u, v) = (map_b[i], map_b[j]);
            adj_b[u].push(v);
            adj_b[v].push(u);
        }
        let ea: BTreeSet<(usize, usize)> = a.edges().clone();
        let eb: BTreeSet<(usize, usize)> = b
            .edges()
            .iter()
            .map(|&(i, j)| {
                let (u, v) = (map_b[i], map_b[j]);
                (u.min(v), u.max(v))
            })
            .collect();
        let exclusive_edges = ea.symmetric_difference(&eb).count();
        let exclusive_vertices = in_a.iter().zip(&in_b).filter(|(x, y)| x != y).count();
        PairState {
            pts,
            in_a,
            in_b,
            adj_a,
            adj_b,
            n_a: a.n_vertices(),
            n_b: b.n_vertices(),
            e_a: a.n_edges(),
            e_b: b.n_edges(),
            exclusive_vertices,
            exclusive_edges,
        }
    }

    fn len(&self) -> usize {
        self.pts.len()
    }

    fn coupled(&self) -> bool {
        self.exclusive_vertices == 0 && self.exclusive_edges == 0
    }

    fn intensities(&self, model: &GibbsModel, x: &Point) -> (f64, f64) {
        let beta = model.beta(x);
        let range2 = model.interaction().range().powi(2);
        let (mut la, mut lb) = (beta, beta);
        if range2 > 0.0 {
            for (u, y) in self.pts.iter().enumerate() {
                if x.dist_sq(y) <= range2 {
                    let phi = model.interaction().value(x, y);
                    if self.in_a[u] {
                        la *= phi;
                    }
                    if self.in_b[u] {
                        lb *= phi;
                    }
                }
            }
        }
        (la, lb)
    }

    fn add(&mut self, x: Point, to_a: bool, to_b: bool, shared_edges: &[usize]) {
        let id = self.pts.len();
        let mut na = Vec::new();
        let mut nb = Vec::new();
        for &u in shared_edges {
            let ea = to_a && self.in_a[u];
            let eb = to_b && self.in_b[u];
            if ea {
                na.push(u);
                self.adj_a[u].push(id);
            }
            if eb {
                nb.push(u);
                self.adj_b[u].push(id);
            }
            if ea != eb {
                self.exclusive_edges += 1;
            }
        }
        self.e_a += na.len();
        self.e_b += nb.len();
        self.n_a += to_a as usize;
        self.n_b += to_b as usize;
        if to_a != to_b {
            self.exclusive_vertices += 1;
        }
        self.pts.push(x);
        self.in_a.push(to_a);
        self.in_b.push(to_b);
        self.adj_a.push(na);
        self.adj_b.push(nb);
    }

    fn remove(&mut self, u: usize) {
        let na = std::mem::take(&mut self.adj_a[u]);
        let nb = std::mem::take(&mut self.adj_b[u]);
        self.exclusive_edges -= na.iter().filter(|v| !nb.contains(v)).count();
        self.exclusive_edges -= nb.iter().filter(|v| !na.contains(v)).count();
        self.e_a -= na.len();
        self.e_b -= nb.len();
        self.n_a -= self.in_a[u] as usize;
        self.n_b -= self.in_b[u] as usize;
        if self.in_a[u] != self.in_b[u] {
            self.exclusive_vertices -= 1;
        }
        for (adj, nbrs) in [(&mut self.adj_a, &na), (&mut self.adj_b, &nb)] {
            for &v in nbrs.iter() {
                let pos = adj[v].iter().position(|&k| k == u).expect("symmetric adjacency");
                adj[v].swap_remove(pos);
            }
        }
        let last = self.pts.len() - 1;
        if u != last {
            for adj in [&mut self.adj_a, &mut self.adj_b] {
                for k in 0..adj[last].len() {
                    let v = adj[last][k];
                    let pos = adj[v].iter().position(|&w| w == last).expect("symmetric adjacency");
                    adj[v][pos] = u;
                }
            }
        }
        self.pts.swap_remove(u);
        self.in_a.swap_remove(u);
        self.in_b.swap_remove(u);
        self.adj_a.swap_remove(u);
        self.adj_b.swap_remove(u);
    }

    fn side(&self, first: bool) -> SpatialGraph {
        let (member, adj) = if first {
            (&self.in_a, &self.adj_a)
        } else {
            (&self.in_b, &self.adj_b)
        };
        let mut local = vec![usize::MAX; self.pts.len()];
        let mut pts = Vec::new();
        for (u, p) in self.pts.iter().enumerate() {
            if member[u] {
                local[u] = pts.len();
                pts.push(*p);
            }
        }
        let mut edges = BTreeSet::new();
        for (u, nbrs) in adj.iter().enumerate() {
            for &v in nbrs {
                if u < v {
                    let (i, j) = (local[u], local[v]);
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        SpatialGraph::from_parts_unchecked(PointPattern::from_vec_unchecked(pts), edges)
    }

    fn record(&self, time: f64) -> CoupledRecord {
        CoupledRecord {
            time,
            a_vertices: self.n_a,
            a_edges: self.e_a,
            b_vertices: self.n_b,
            b_edges: self.e_b,
            coupled: self.coupled(),
        }
    }
}

/// Simulates the coupled pair of graph birth-death processes.
///
/// Both components share birth proposals and a single uniform that decides
/// acceptance in each (a maximal coupling of the two acceptance events), the
/// edge indicators from a newborn vertex to every existing vertex, and the
/// choice of the dying vertex among the union of both vertex sets. Each
/// component on its own is a graph birth-death process.
pub fn run_coupled_gbdp<R: Rng + ?Sized>(
    vertex_model: &GibbsModel,
    edge_model: &EdgeModel,
    start_a: &SpatialGraph,
    start_b: &SpatialGraph,
    horizon: f64,
    options: &CouplingOptions,
    rng: &mut R,
) -> Result<CoupledTrajectory> {
    let kappa = product_kernel(edge_model)?;
    if !(horizon >= 0.0) {
        return Err(Error::validation("horizon must be nonnegative"));
    }
    check_observation_times(&options.observe_at, horizon)?;
    let total = vertex_model.total_activity()?;
    let mut st = PairState::new(start_a, start_b);
    let mut t = 0.0;
    let mut records = vec![st.record(0.0)];
    let mut states = Vec::new();
    if options.record_states {
        states.push((0.0, st.side(true), st.side(false)));
    }
    let mut observations = Vec::with_capacity(options.observe_at.len());
    let mut next_obs = 0;
    let mut coupling_time = st.coupled().then_some(0.0);
    let mut absorbed = false;
    loop {
        let stop_now = coupling_time.is_some() && options.stop_when_coupled;
        let rate = total + st.len() as f64;
        let t_next = if stop_now || rate == 0.0 {
            absorbed = rate == 0.0;
            f64::INFINITY
        } else {
            t + Exp::new(rate).expect("positive rate").sample(rng)
        };
        while next_obs < options.observe_at.len() && options.observe_at[next_obs] < t_next {
            observations.push((options.observe_at[next_obs], st.side(true), st.side(false)));
            next_obs += 1;
        }
        if t_next > horizon {
            break;
        }
        t = t_next;
        let changed = if rng.random::<f64>() * rate < total {
            let x = vertex_model.propose_birth(rng);
            let beta = vertex_model.beta(&x);
            let (la, lb) = st.intensities(vertex_model, &x);
            if la.max(lb) > beta * (1.0 + 1e-12) {
                return Err(Error::numerical("envelope violated"));
            }
            let v = rng.random::<f64>() * beta;
            let (to_a, to_b) = (v < la, v < lb);
            if to_a || to_b {
                let shared = neighbours_of_new_point(kappa, &st.pts, &x, rng)?;
                st.add(x, to_a, to_b, &shared);
                true
            } else {
                false
            }
        } else {
            let u = rng.random_range(0..st.len());
            st.remove(u);
            true
        };
        if changed {
            records.push(st.record(t));
            if options.record_states {
                states.push((t, st.side(true), st.side(false)));
            }
            if coupling_time.is_none() && st.coupled() {
                coupling_time = Some(t);
            }
        }
    }
    Ok(CoupledTrajectory {
        horizon,
        records,
        states,
        observations,
        coupling_time,
        absorbed,
    })
}

/// One two-sample comparison in a [`MarginalCheck`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalStatistic {
    pub name: String,
    pub time: f64,
    pub ks: KsResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub statistics: Vec<MarginalStatistic>,
    pub min_p: f64,
}

/// Compares the first component of coupled paths with directly simulated
/// paths: KS tests on vertex and edge counts at every observation time.
pub fn marginal_check(coupled: &[CoupledTrajectory], direct: &[GbdpTrajectory]) -> Result<MarginalCheck> {
    if coupled.is_empty() || direct.is_empty() {
        return Err(Error::validation("marginal_check needs nonempty samples"));
    }
    let n_times = coupled[0].observations.len();
    if coupled.iter().any(|c| c.observations.len() != n_times) || direct.iter().any(|d| d.observations.len() != n_times)
    {
        return Err(Error::validation("all paths must share observation times"));
    }
    let mut statistics = Vec::new();
    for k in 0..n_times {
        let time = coupled[0].observations[k].0;
        type Count = fn(&SpatialGraph) -> usize;
        let counts: [(&str, Count); 2] = [("vertices", SpatialGraph::n_vertices), ("edges", SpatialGraph::n_edges)];
        for (name, f) in counts {
            let a: Vec<f64> = coupled.iter().map(|c| f(&c.observations[k].1) as f64).collect();
            let b: Vec<f64> = direct.iter().map(|d| f(&d.observations[k].graph) as f64).collect();
            statistics.push(MarginalStatistic {
                name: format!("{name}@{time}"),
                time,
                ks: ks_two_sample(&a, &b),
            });
        }
    }
    let min_p = statistics.iter().map(|s| s.ks.p_value).fold(1.0, f64::min);
    Ok(MarginalCheck { statistics, min_p })
}

const TRAJECTORY_HEADER: [&str; 5] = ["time", "graph_id", "n_vertices", "n_edges", "coupled_flag"];

/// CSV export of single paths; `graph_id` is the path index.
pub fn write_trajectories_csv<W: Write>(paths: &[GbdpTrajectory], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for (id, p) in paths.iter().enumerate() {
        for r in &p.records {
            w.write_record([
                format!("{:?}", r.time),
                id.to_string(),
                r.n_vertices.to_string(),
                r.n_edges.to_string(),
                "0".to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV export of a coupled path; `graph_id` is 0 for A and 1 for B.
pub fn write_coupled_csv<W: Write>(path: &CoupledTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in &path.records {
        let flag = if r.coupled { "1" } else { "0" };
        for (id, nv, ne) in [(0, r.a_vertices, r.a_edges), (1, r.b_vertices, r.b_edges)] {
            w.write_record([
                format!("{:?}", r.time),
                id.to_string(),
                nv.to_string(),
                ne.to_string(),
                flag.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
