//! Spatial graphs, product connection kernels, the latent-radius Boolean
//! rule, random geometric graph sampling and the graph GNZ residual check.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point_process::{lower_box, sample_model, GibbsModel, GnzReport, PointPattern};
use crate::space::{integrate_stochastic, Point, QuadratureSpec, RngStream, Window};

/// Version tag written into every JSON graph document.
pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// A simple undirected graph on a point pattern. Edges are stored as sorted
/// index pairs `(i, j)` with `i < j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpatialGraph {
    vertices: PointPattern,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    schema_version: u32,
    vertices: Vec<Point>,
    edges: Vec<[usize; 2]>,
}

impl SpatialGraph {
    pub fn new(vertices: PointPattern, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = vertices.len();
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::validation(format!("invalid edge ({i}, {j})")));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::validation(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(SpatialGraph { vertices, edges: set })
    }

    pub(crate) fn from_parts_unchecked(vertices: PointPattern, edges: BTreeSet<(usize, usize)>) -> Self {
        let g = SpatialGraph { vertices, edges };
        debug_assert!(g.validate().is_ok());
        g
    }

    /// The graph on `vertices` with no edges.
    pub fn edgeless(vertices: PointPattern) -> Self {
        SpatialGraph {
            vertices,
            edges: BTreeSet::new(),
        }
    }

    pub fn vertices(&self) -> &PointPattern {
        &self.vertices
    }

    pub fn points(&self) -> &[Point] {
        self.vertices.points()
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }

    /// Adds `x` as the last vertex, joined to the listed existing vertices.
    pub fn with_vertex(&self, x: Point, neighbours: &[usize]) -> Result<Self> {
        let vertices = self.vertices.with_point(x)?;
        let n = self.n_vertices();
        let mut edges = self.edges.clone();
        for &j in neighbours {
            if j >= n || !edges.insert((j, n)) {
                return Err(Error::validation(format!("invalid edge ({j}, {n})")));
            }
        }
        Ok(SpatialGraph { vertices, edges })
    }

    /// Removes vertex `i` with its incident edges; later indices shift down.
    pub fn without_vertex(&self, i: usize) -> Self {
        let shift = |k: usize| if k > i { k - 1 } else { k };
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != i && b != i)
            .map(|&(a, b)| (shift(a), shift(b)))
            .collect();
        SpatialGraph {
            vertices: self.vertices.without(i),
            edges,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PointPattern::new(self.vertices.points().to_vec())?;
        let n = self.n_vertices();
        for &(i, j) in &self.edges {
            if !(i < j && j < n) {
                return Err(Error::validation(format!("invalid edge ({i}, {j})")));
            }
        }
        Ok(())
    }

    /// Vertex and edge CSV files: `index,x1..xd` and `i,j`.
    pub fn write_csv_pair<V: Write, E: Write>(&self, dim: usize, vertices: V, edges: E) -> Result<()> {
        let mut vw = csv::Writer::from_writer(vertices);
        let mut header = vec!["index".to_string()];
        header.extend((1..=dim).map(|k| format!("x{k}")));
        vw.write_record(&header)?;
        for (i, p) in self.points().iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.coords().iter().map(|c| format!("{c:?}")));
            vw.write_record(&row)?;
        }
        vw.flush()?;
        let mut ew = csv::Writer::from_writer(edges);
        ew.write_record(["i", "j"])?;
        for &(i, j) in &self.edges {
            ew.write_record([i.to_string(), j.to_string()])?;
        }
        ew.flush()?;
        Ok(())
    }

    pub fn read_csv_pair<V: Read, E: Read>(vertices: V, edges: E) -> Result<Self> {
        let mut vr = csv::Reader::from_reader(vertices);
        let mut points = Vec::new();
        for (row, rec) in vr.records().enumerate() {
            let rec = rec?;
            let index: usize = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::validation("bad vertex index"))?;
            if index != row {
                return Err(Error::validation("vertex indices must be 0..n in order"));
            }
            let coords = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::validation(format!("bad coordinate: {e}")))?;
            points.push(Point::try_from(coords)?);
        }
        let mut er = csv::Reader::from_reader(edges);
        let mut list = Vec::new();
        for rec in er.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<usize> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::validation("bad edge row"))
            };
            list.push((parse(0)?, parse(1)?));
        }
        SpatialGraph::new(PointPattern::new(points)?, list)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            schema_version: GRAPH_SCHEMA_VERSION,
            vertices: self.points().to_vec(),
            edges: self.edges.iter().map(|&(i, j)| [i, j]).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(s)?;
        if doc.schema_version != GRAPH_SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported graph schema_version {}",
                doc.schema_version
            )));
        }
        SpatialGraph::new(
            PointPattern::new(doc.vertices)?,
            doc.edges.into_iter().map(|[i, j]| (i, j)),
        )
    }
}

/// Mutable adjacency-list graph used inside the dynamics. Vertex removal
/// moves the last vertex into the freed slot.
#[derive(Clone, Debug, Default)]
pub(crate) struct DynGraph {
    pub points: Vec<Point>,
    pub adj: Vec<Vec<usize>>,
    pub n_edges: usize,
}

impl DynGraph {
    pub fn from_graph(g: &SpatialGraph) -> Self {
        DynGraph {
            points: g.points().to_vec(),
            adj: g.adjacency(),
            n_edges: g.n_edges(),
        }
    }

    pub fn to_graph(&self) -> SpatialGraph {
        let mut edges = BTreeSet::new();
        for (i, nb) in self.adj.iter().enumerate() {
            for &j in nb {
                if i < j {
                    edges.insert((i, j));
                }
            }
        }
        SpatialGraph::from_parts_unchecked(PointPattern::from_vec_unchecked(self.points.clone()), edges)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn add_vertex(&mut self, x: Point, neighbours: Vec<usize>) {
        let id = self.points.len();
        for &j in &neighbours {
            self.adj[j].push(id);
        }
        self.n_edges += neighbours.len();
        self.points.push(x);
        self.adj.push(neighbours);
    }

    pub fn remove_vertex(&mut self, i: usize) {
        let last = self.points.len() - 1;
        let nb = std::mem::take(&mut self.adj[i]);
        self.n_edges -= nb.len();
        for &j in &nb {
            let pos = self.adj[j].iter().position(|&k| k == i).expect("symmetric adjacency");
            self.adj[j].swap_remove(pos);
        }
        if i != last {
            for k in 0..self.adj[last].len() {
                let j = self.adj[last][k];
                let pos = self.adj[j]
                    .iter()
                    .position(|&v| v == last)
                    .expect("symmetric adjacency");
                self.adj[j][pos] = i;
            }
        }
        self.points.swap_remove(i);
        self.adj.swap_remove(i);
    }
}

pub type ConnectionFn = dyn Fn(&Point, &Point) -> f64 + Send + Sync;

/// A user-supplied connection function.
#[derive(Clone)]
pub struct CustomConnection(pub Arc<ConnectionFn>);

impl fmt::Debug for CustomConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomConnection")
    }
}

/// Symmetric connection probability κ(x,y) ∈ [0,1] of a product edge kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Connection {
    Constant {
        p: f64,
    },
    /// 1{‖x−y‖ ≤ radius}.
    Threshold {
        radius: f64,
    },
    /// peak·exp(−‖x−y‖²/(2·scale²)).
    Gaussian {
        peak: f64,
        scale: f64,
    },
    /// p_near up to `inner`, falling linearly to 0 at `outer`.
    Ramp {
        p_near: f64,
        inner: f64,
        outer: f64,
    },
    #[serde(skip)]
    Custom(CustomConnection),
}

impl Connection {
    pub fn constant(p: f64) -> Self {
        Connection::Constant { p }
    }

    pub fn custom(f: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static) -> Self {
        Connection::Custom(CustomConnection(Arc::new(f)))
    }

    #[inline]
    pub fn prob(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Connection::Constant { p } => *p,
            Connection::Threshold { radius } => {
                if x.dist_sq(y) <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Connection::Gaussian { peak, scale } => peak * (-x.dist_sq(y) / (2.0 * scale * scale)).exp(),
            Connection::Ramp { p_near, inner, outer } => {
                let d = x.dist(y);
                if d <= *inner {
                    *p_near
                } else if d >= *outer {
                    0.0
                } else {
                    p_near * (outer - d) / (outer - inner)
                }
            }
            Connection::Custom(c) => (c.0)(x, y),
        }
    }

    /// Lipschitz constant in each argument, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Connection::Constant { .. } => Some(0.0),
            Connection::Threshold { .. } => None,
            Connection::Gaussian { peak, scale } => Some(peak * (-0.5f64).exp() / scale),
            Connection::Ramp { p_near, inner, outer } => Some(p_near / (outer - inner)),
            Connection::Custom(_) => None,
        }
    }

    /// Checks the parameters and the probability range on sampled pairs.
    pub fn validate(&self) -> Result<()> {
        let bad = || Error::validation("invalid connection probability");
        match self {
            Connection::Constant { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(bad());
                }
            }
            Connection::Threshold { radius } => {
                if !(*radius >= 0.0) {
                    return Err(Error::validation("threshold radius must be nonnegative"));
                }
            }
            Connection::Gaussian { peak, scale } => {
                if !(0.0..=1.0).contains(peak) {
                    return Err(bad());
                }
                if !(*scale > 0.0) {
                    return Err(Error::validation("gaussian scale must be positive"));
                }
            }
            Connection::Ramp { p_near, inner, outer } => {
                if !(0.0..=1.0).contains(p_near) {
                    return Err(bad());
                }
                if !(*inner >= 0.0 && outer > inner) {
                    return Err(Error::validation("ramp connection needs 0 <= inner < outer"));
                }
            }
            Connection::Custom(_) => {}
        }
        Ok(())
    }

    #[inline]
    fn checked_prob(&self, x: &Point, y: &Point) -> Result<f64> {
        let p = self.prob(x, y);
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(Error::validation("invalid connection probability"))
        }
    }
}

/// Transform ψ of the excess radius in the Boolean rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusTransform {
    /// ψ ≡ 0: every kept ball has radius exactly r_*.
    Zero,
    /// ψ(s) = s^gamma / r_*^delta.
    Power { gamma: f64, delta: f64 },
}

impl RadiusTransform {
    pub fn apply(&self, excess: f64, r_star: f64) -> f64 {
        match self {
            RadiusTransform::Zero => 0.0,
            RadiusTransform::Power { gamma, delta } => excess.powf(*gamma) / r_star.powf(*delta),
        }
    }
}

/// Latent-radius connection rule: each vertex carries a radius R drawn from
/// the Pareto law conditioned on R ≥ r_*, and two vertices connect when
/// `‖x−y‖ ≤ scale·(R̂_x + R̂_y)` with `R̂ = r_* + ψ(R − r_*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentRadiusRule {
    pub r_star: f64,
    pub tail_exponent: f64,
    pub transform: RadiusTransform,
    /// Factor mapping radii to the coordinates of the vertex pattern
    /// (q^{1/d} after contraction).
    pub scale: f64,
}

impl LatentRadiusRule {
    pub fn sample_radii<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        let law =
            Pareto::new(self.r_star, self.tail_exponent).map_err(|e| Error::validation(format!("radius law: {e}")))?;
        Ok((0..n).map(|_| law.sample(rng)).collect())
    }

    pub fn effective_radius(&self, radius: f64) -> f64 {
        self.r_star + self.transform.apply(radius - self.r_star, self.r_star)
    }

    /// Edges among `xi` given latent radii.
    pub fn edges(&self, xi: &PointPattern, radii: &[f64]) -> BTreeSet<(usize, usize)> {
        let eff: Vec<f64> = radii.iter().map(|&r| self.effective_radius(r)).collect();
        let pts = xi.points();
        let mut edges = BTreeSet::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i].dist(&pts[j]) <= self.scale * (eff[i] + eff[j]) {
                    edges.insert((i, j));
                }
            }
        }
        edges
    }
}

/// How edges are generated given the vertex pattern.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EdgeModel {
    Product { kappa: Connection },
    BooleanLatent { rule: LatentRadiusRule },
}

impl EdgeModel {
    pub fn product(kappa: Connection) -> Self {
        EdgeModel::Product { kappa }
    }

    pub fn as_product(&self) -> Option<&Connection> {
        match self {
            EdgeModel::Product { kappa } => Some(kappa),
            EdgeModel::BooleanLatent { .. } => None,
        }
    }
}

/// Independent edges with probabilities κ(x_i, x_j).
pub fn sample_edges<R: Rng + ?Sized>(
    kappa: &Connection,
    xi: &PointPattern,
    rng: &mut R,
) -> Result<BTreeSet<(usize, usize)>> {
    let pts = xi.points();
    let mut edges = BTreeSet::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let p = kappa.checked_prob(&pts[i], &pts[j])?;
            if rng.random::<f64>() < p {
                edges.insert((i, j));
            }
        }
    }
    Ok(edges)
}

/// Independent edges from a new vertex `x` to each vertex of `xi`; returns
/// the sorted indices of the new neighbours.
pub fn sample_edges_to_new_vertex<R: Rng + ?Sized>(
    kappa: &Connection,
    xi: &PointPattern,
    x: &Point,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if xi.contains(x) {
        return Err(Error::validation("duplicate vertex"));
    }
    neighbours_of_new_point(kappa, xi.points(), x, rng)
}

pub(crate) fn neighbours_of_new_point<R: Rng + ?Sized>(
    kappa: &Connection,
    pts: &[Point],
    x: &Point,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (j, y) in pts.iter().enumerate() {
        let p = kappa.checked_prob(y, x)?;
        if rng.random::<f64>() < p {
            out.push(j);
        }
    }
    Ok(out)
}

/// Edges for a given vertex pattern under either edge model.
pub fn sample_graph_on<R: Rng + ?Sized>(xi: PointPattern, edge_model: &EdgeModel, rng: &mut R) -> Result<SpatialGraph> {
    let edges = match edge_model {
        EdgeModel::Product { kappa } => sample_edges(kappa, &xi, rng)?,
        EdgeModel::BooleanLatent { rule } => {
            let radii = rule.sample_radii(xi.len(), rng)?;
            rule.edges(&xi, &radii)
        }
    };
    Ok(SpatialGraph::from_parts_unchecked(xi, edges))
}

/// One RGG realisation: vertices from the Gibbs model, then edges.
pub fn sample_rgg<R: Rng + ?Sized>(
    vertex_model: &GibbsModel,
    edge_model: &EdgeModel,
    rng: &mut R,
) -> Result<SpatialGraph> {
    let xi = sample_model(vertex_model, rng)?;
    sample_graph_on(xi, edge_model, rng)
}

/// Test function of the graph GNZ identity: `h(graph, x, neighbours of x)`.
pub type GraphTestFn = dyn Fn(&SpatialGraph, &Point, &[usize]) -> f64 + Sync;

/// Monte-Carlo estimate of both sides of the graph GNZ identity for a
/// product edge kernel.
pub fn graph_gnz_residual(
    vertex_model: &GibbsModel,
    edge_model: &EdgeModel,
    h: &GraphTestFn,
    n_samples: usize,
    spec: &QuadratureSpec,
    rng: &mut RngStream,
) -> Result<GnzReport> {
    let kappa = edge_model
        .as_product()
        .ok_or_else(|| Error::validation("influence condition not guaranteed"))?;
    if n_samples < 2 {
        return Err(Error::validation("graph_gnz_residual needs at least 2 samples"));
    }
    let base = rng.next_u64();
    let pairs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = RngStream::new(base, i);
            let g = sample_rgg(vertex_model, edge_model, &mut r)?;
            let mut lhs = 0.0;
            for k in 0..g.n_vertices() {
                let x = g.points()[k];
                let nb: Vec<usize> = g
                    .neighbours(k)
                    .into_iter()
                    .map(|j| if j > k { j - 1 } else { j })
                    .collect();
                lhs += h(&g.without_vertex(k), &x, &nb);
            }
            let mut failure = None;
            let rhs = integrate_stochastic(
                vertex_model.window(),
                spec,
                &mut r,
                |x, r| match neighbours_of_new_point(kappa, g.points(), x, r) {
                    Ok(nb) => h(&g, x, &nb) * vertex_model.intensity_given(x, g.points()),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                },
            )?
            .value;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GnzReport::from_pairs(&pairs))
}

/// Built-in graph GNZ test functions: a constant, the vertex and edge
/// counts, the degree of the new vertex and a subwindow indicator.
pub fn graph_gnz_test_suite(window: &Window) -> Vec<(&'static str, Box<GraphTestFn>)> {
    let sub = lower_box(window, 0.5);
    vec![
        ("constant", Box::new(|_: &SpatialGraph, _: &Point, _: &[usize]| 1.0)),
        (
            "vertex_count",
            Box::new(|g: &SpatialGraph, _: &Point, _: &[usize]| g.n_vertices() as f64),
        ),
        (
            "edge_count",
            Box::new(|g: &SpatialGraph, _: &Point, _: &[usize]| g.n_edges() as f64),
        ),
        (
            "new_degree",
            Box::new(|_: &SpatialGraph, _: &Point, nb: &[usize]| nb.len() as f64),
        ),
        (
            "subwindow_indicator",
            Box::new(move |_: &SpatialGraph, x: &Point, _: &[usize]| f64::from(u8::from(sub.contains(x)))),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{Activity, Interaction};
    use crate::space::Window;
    use crate::stats::mean_se;

    fn pattern(n: usize, rng: &mut RngStream) -> PointPattern {
        let w = Window::unit(2);
        PointPattern::new((0..n).map(|_| w.uniform_point(rng)).collect()).unwrap()
    }

    #[test]
    fn constant_kernels_give_complete_and_empty_graphs() {
        let mut rng = RngStream::new(1, 0);
        let xi = pattern(7, &mut rng);
        assert_eq!(
            sample_edges(&Connection::constant(1.0), &xi, &mut rng).unwrap().len(),
            21
        );
        assert!(sample_edges(&Connection::constant(0.0), &xi, &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let mut rng = RngStream::new(1, 1);
        let xi = pattern(3, &mut rng);
        let err = sample_edges(&Connection::constant(1.2), &xi, &mut rng).unwrap_err();
        assert_eq!(err, Error::validation("invalid connection probability"));
        assert!(Connection::constant(-0.1).validate().is_err());
    }

    #[test]
    fn half_probability_edge_count_mean() {
        let mut rng = RngStream::new(2, 0);
        let xi = pattern(10, &mut rng);
        let counts: Vec<f64> = (0..10_000)
            .map(|_| sample_edges(&Connection::constant(0.5), &xi, &mut rng).unwrap().len() as f64)
            .collect();
        let (m, se) = mean_se(&counts);
        assert!((m - 22.5).abs() <= 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn threshold_kernel_connects_exactly_within_radius() {
        let mut rng = RngStream::new(3, 0);
        let xi = pattern(30, &mut rng);
        let x = Point::new(&[0.5, 0.5]);
        let nb = sample_edges_to_new_vertex(&Connection::Threshold { radius: 0.25 }, &xi, &x, &mut rng).unwrap();
        let expected: Vec<usize> = (0..30).filter(|&j| xi.points()[j].dist(&x) <= 0.25).collect();
        assert_eq!(nb, expected);
        assert!(
            sample_edges_to_new_vertex(&Connection::constant(1.0), &PointPattern::empty(), &x, &mut rng)
                .unwrap()
                .is_empty()
        );
        let dup = xi.points()[0];
        assert_eq!(
            sample_edges_to_new_vertex(&Connection::constant(0.5), &xi, &dup, &mut rng).unwrap_err(),
            Error::validation("duplicate vertex")
        );
    }

    #[test]
    fn hard_core_vertices_with_full_kernel_are_complete() {
        let m = GibbsModel::pairwise(Window::unit(2), Activity::constant(20.0), Interaction::hard_core(0.05)).unwrap();
        let mut rng = RngStream::new(4, 0);
        let g = sample_rgg(&m, &EdgeModel::product(Connection::constant(1.0)), &mut rng).unwrap();
        let n = g.n_vertices();
        assert_eq!(g.n_edges(), n * (n.max(1) - 1) / 2);
    }

    #[test]
    fn vertex_insertion_and_removal() {
        let pts = PointPattern::new(vec![
            Point::new(&[0.0, 0.0]),
            Point::new(&[1.0, 0.0]),
            Point::new(&[0.0, 1.0]),
        ])
        .unwrap();
        let g = SpatialGraph::new(pts, [(0, 1), (1, 2)]).unwrap();
        let h = g.with_vertex(Point::new(&[1.0, 1.0]), &[0, 2]).unwrap();
        assert_eq!(h.n_edges(), 4);
        assert_eq!(h.neighbours(3), vec![0, 2]);
        let k = h.without_vertex(1);
        assert_eq!(k.n_vertices(), 3);
        assert_eq!(k.edges().iter().copied().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert!(SpatialGraph::new(PointPattern::empty(), [(0, 1)]).is_err());
    }

    #[test]
    fn dyn_graph_matches_static_operations() {
        let mut rng = RngStream::new(5, 0);
        let xi = pattern(8, &mut rng);
        let edges = sample_edges(&Connection::constant(0.4), &xi, &mut rng).unwrap();
        let g = SpatialGraph::new(xi, edges).unwrap();
        let mut d = DynGraph::from_graph(&g);
        d.remove_vertex(2);
        let back = d.to_graph();
        assert_eq!(back.n_vertices(), 7);
        assert_eq!(back.n_edges(), d.n_edges);
        let expect = g.without_vertex(2);
        assert_eq!(back.n_edges(), expect.n_edges());
        back.validate().unwrap();
    }

    #[test]
    fn csv_and_json_round_trips() {
        let mut rng = RngStream::new(6, 0);
        let xi = pattern(6, &mut rng);
        let edges = sample_edges(&Connection::constant(0.5), &xi, &mut rng).unwrap();
        let g = SpatialGraph::new(xi, edges).unwrap();
        let (mut v, mut e) = (Vec::new(), Vec::new());
        g.write_csv_pair(2, &mut v, &mut e).unwrap();
        assert!(String::from_utf8_lossy(&v).starts_with("index,x1,x2"));
        assert_eq!(SpatialGraph::read_csv_pair(&v[..], &e[..]).unwrap(), g);
        let js = g.to_json();
        assert!(js.contains("\"schema_version\": 1"));
        assert_eq!(SpatialGraph::from_json(&js).unwrap(), g);
    }

    #[test]
    fn psi_zero_is_a_hard_threshold() {
        let rule = LatentRadiusRule {
            r_star: 0.1,
            tail_exponent: 2.0,
            transform: RadiusTransform::Zero,
            scale: 1.0,
        };
        let mut rng = RngStream::new(7, 0);
        let xi = pattern(25, &mut rng);
        let radii = rule.sample_radii(25, &mut rng).unwrap();
        assert!(radii.iter().all(|&r| r >= 0.1));
        let e = rule.edges(&xi, &radii);
        let t = sample_edges(&Connection::Threshold { radius: 0.2 }, &xi, &mut rng).unwrap();
        assert_eq!(e, t);
    }

    #[test]
    fn graph_gnz_rejects_non_product_kernels() {
        let m = GibbsModel::poisson(Window::unit(2), Activity::constant(1.0)).unwrap();
        let rule = LatentRadiusRule {
            r_star: 0.1,
            tail_exponent: 2.0,
            transform: RadiusTransform::Zero,
            scale: 1.0,
        };
        let err = graph_gnz_residual(
            &m,
            &EdgeModel::BooleanLatent { rule },
            &|_, _, _| 1.0,
            10,
            &QuadratureSpec::grid(4),
            &mut RngStream::new(0, 0),
        )
        .unwrap_err();
        assert_eq!(err, Error::validation("influence condition not guaranteed"));
    }
}
