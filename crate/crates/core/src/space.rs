//! Points, box windows, the truncated vertex metric, quadrature and seeded
//! random streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A point in R^d for d ≤ 3, stored inline so it is `Copy`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    /// Builds a point from its coordinates. Panics if `coords` has more than
    /// three entries; use `TryFrom<Vec<f64>>` for fallible construction.
    pub fn new(coords: &[f64]) -> Self {
        assert!(!coords.is_empty() && coords.len() <= MAX_DIM, "dimension must be 1..=3");
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim() {
            let d = self.coords[k] - other.coords[k];
            s += d * d;
        }
        s
    }

    /// Coordinate-wise scaling about the origin.
    pub fn scaled(&self, factor: f64) -> Point {
        let mut p = *self;
        for k in 0..self.dim() {
            p.coords[k] *= factor;
        }
        p
    }

    /// Bit pattern of the coordinates; equal keys mean exactly equal points.
    pub fn key(&self) -> [u64; MAX_DIM] {
        let mut k = [0u64; MAX_DIM];
        for (slot, c) in k.iter_mut().zip(self.coords()) {
            // Normalise -0.0 so that equal values give equal keys.
            *slot = (c + 0.0).to_bits();
        }
        k
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.coords()[k]
    }
}

impl std::fmt::Debug for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords().to_vec()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() || v.len() > MAX_DIM {
            return Err(Error::validation(format!("point dimension {} outside 1..=3", v.len())));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("non-finite coordinate"));
        }
        Ok(Point::new(&v))
    }
}

/// Axis-aligned box `[lower, upper]` carrying Lebesgue reference measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec", into = "WindowSpec")]
pub struct Window {
    lower: Point,
    upper: Point,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;
    fn try_from(s: WindowSpec) -> Result<Self> {
        Window::new(&s.lower, &s.upper)
    }
}

impl From<Window> for WindowSpec {
    fn from(w: Window) -> Self {
        WindowSpec {
            lower: w.lower.into(),
            upper: w.upper.into(),
        }
    }
}

impl Window {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() || lower.len() > MAX_DIM {
            return Err(Error::validation("window bounds must share a dimension in 1..=3"));
        }
        for (l, u) in lower.iter().zip(upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::validation("window requires lower < upper"));
            }
        }
        Ok(Window {
            lower: Point::new(lower),
            upper: Point::new(upper),
        })
    }

    /// The unit cube `[0,1]^d`.
    pub fn unit(dim: usize) -> Self {
        Window::new(&vec![0.0; dim], &vec![1.0; dim]).expect("valid unit cube")
    }

    /// The cube `[0, side]^d`.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Window::new(&vec![0.0; dim], &vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn side(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lower.dist(&self.upper)
    }

    pub fn centre(&self) -> Point {
        let c: Vec<f64> = (0..self.dim()).map(|k| 0.5 * (self.lower[k] + self.upper[k])).collect();
        Point::new(&c)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim() && (0..self.dim()).all(|k| p[k] >= self.lower[k] && p[k] <= self.upper[k])
    }

    /// Image of the window under `x ↦ factor·x`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let lo: Vec<f64> = self.lower.scaled(factor).into();
        let hi: Vec<f64> = self.upper.scaled(factor).into();
        Window::new(&lo, &hi)
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (k, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = self.lower[k] + self.side(k) * rng.random::<f64>();
        }
        Point::new(&c[..self.dim()])
    }

    /// All 2^d corners.
    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                let c: Vec<f64> = (0..d)
                    .map(|k| {
                        if mask >> k & 1 == 1 {
                            self.upper[k]
                        } else {
                            self.lower[k]
                        }
                    })
                    .collect();
                Point::new(&c)
            })
            .collect()
    }

    /// Midpoints of the tensor grid with `per_axis` cells along every axis.
    pub fn midpoint_nodes(&self, per_axis: usize) -> Vec<Point> {
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut c = [0.0; MAX_DIM];
        for idx in 0..total {
            let mut rest = idx;
            for (k, slot) in c.iter_mut().enumerate().take(d) {
                let i = rest % per_axis;
                rest /= per_axis;
                *slot = self.lower[k] + self.side(k) * (i as f64 + 0.5) / per_axis as f64;
            }
            out.push(Point::new(&c[..d]));
        }
        out
    }
}

/// Caps of the vertex and edge base metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricCaps", into = "MetricCaps")]
pub struct BaseMetricParams {
    cv: f64,
    ce: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricCaps {
    cv: f64,
    ce: f64,
}

impl TryFrom<MetricCaps> for BaseMetricParams {
    type Error = Error;
    fn try_from(m: MetricCaps) -> Result<Self> {
        BaseMetricParams::new(m.cv, m.ce)
    }
}

impl From<BaseMetricParams> for MetricCaps {
    fn from(b: BaseMetricParams) -> Self {
        MetricCaps { cv: b.cv, ce: b.ce }
    }
}

impl Default for BaseMetricParams {
    fn default() -> Self {
        BaseMetricParams { cv: 1.0, ce: 1.0 }
    }
}

impl BaseMetricParams {
    pub fn new(cv: f64, ce: f64) -> Result<Self> {
        if !(cv > 0.0 && cv.is_finite() && ce > 0.0 && ce.is_finite()) {
            return Err(Error::validation("metric caps C_V and C_E must be positive"));
        }
        Ok(BaseMetricParams { cv, ce })
    }

    pub fn cv(&self) -> f64 {
        self.cv
    }

    pub fn ce(&self) -> f64 {
        self.ce
    }
}

/// Truncated Euclidean vertex metric `min(‖x−y‖, C_V)`.
pub fn dist_v(x: &Point, y: &Point, params: &BaseMetricParams) -> f64 {
    x.dist(y).min(params.cv)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    TensorGrid,
    MonteCarlo,
}

/// How integrals over the window are evaluated.
///
/// In tensor-grid mode `resolution` is the number of midpoint cells per axis;
/// in Monte-Carlo mode it is the number of uniform draws, taken from a stream
/// seeded by `seed` unless the caller supplies its own generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub mode: QuadratureMode,
    pub resolution: usize,
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

impl QuadratureSpec {
    /// Midpoint grid with 64 points per axis for d ≤ 2 and 32 for d = 3.
    pub fn default_for(dim: usize) -> Self {
        QuadratureSpec {
            mode: QuadratureMode::TensorGrid,
            resolution: if dim <= 2 { 64 } else { 32 },
            tolerance: 1e-9,
            seed: 0,
        }
    }

    pub fn grid(resolution: usize) -> Self {
        QuadratureSpec {
            mode: QuadratureMode::TensorGrid,
            resolution,
            tolerance: 1e-9,
            seed: 0,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec {
            mode: QuadratureMode::MonteCarlo,
            resolution: samples,
            tolerance: 1e-9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::validation("quadrature resolution must be at least 2"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("quadrature tolerance must be positive"));
        }
        Ok(())
    }
}

/// A numerical estimate with its standard error (zero for deterministic rules).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn checked(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical("non-finite integrand"))
    }
}

/// Integral of `f` over the window with respect to Lebesgue measure.
/// Monte-Carlo mode draws from a stream seeded by `spec.seed`.
pub fn integrate<F: Fn(&Point) -> f64>(window: &Window, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    let mut rng = RngStream::new(spec.seed, 0);
    integrate_with_rng(window, spec, f, &mut rng)
}

/// As [`integrate`], but Monte-Carlo draws come from `rng`.
pub fn integrate_with_rng<F: Fn(&Point) -> f64, R: Rng + ?Sized>(
    window: &Window,
    spec: &QuadratureSpec,
    f: F,
    rng: &mut R,
) -> Result<Estimate> {
    spec.validate()?;
    let vol = window.volume();
    match spec.mode {
        QuadratureMode::TensorGrid => {
            let nodes = window.midpoint_nodes(spec.resolution);
            let mut sum = 0.0;
            for x in &nodes {
                sum += checked(f(x))?;
            }
            Ok(Estimate {
                value: sum * vol / nodes.len() as f64,
                std_error: 0.0,
            })
        }
        QuadratureMode::MonteCarlo => {
            let n = spec.resolution;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = checked(f(&window.uniform_point(rng)))?;
                s += v;
                s2 += v * v;
            }
            let mean = s / n as f64;
            let var = ((s2 / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0)).max(0.0);
            Ok(Estimate {
                value: vol * mean,
                std_error: vol * (var / n as f64).sqrt(),
            })
        }
    }
}

/// Integral of a randomised integrand `f(x, rng)` whose expectation over
/// `rng` is the function of interest. The estimate is unbiased in both modes.
pub fn integrate_stochastic<R, F>(window: &Window, spec: &QuadratureSpec, rng: &mut R, mut f: F) -> Result<Estimate>
where
    R: Rng + ?Sized,
    F: FnMut(&Point, &mut R) -> f64,
{
    spec.validate()?;
    let vol = window.volume();
    let values: Vec<f64> = match spec.mode {
        QuadratureMode::TensorGrid => window
            .midpoint_nodes(spec.resolution)
            .iter()
            .map(|x| f(x, rng))
            .collect(),
        QuadratureMode::MonteCarlo => (0..spec.resolution)
            .map(|_| {
                let x = window.uniform_point(rng);
                f(&x, rng)
            })
            .collect(),
    };
    let n = values.len() as f64;
    let mut s = 0.0;
    let mut s2 = 0.0;
    for v in &values {
        s += checked(*v)?;
        s2 += v * v;
    }
    let mean = s / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(Estimate {
        value: vol * mean,
        std_error: vol * (var / n).sqrt(),
    })
}

/// Integral of `f(x, y)` over the product window.
pub fn integrate_pairs<F: Fn(&Point, &Point) -> f64>(window: &Window, spec: &QuadratureSpec, f: F) -> Result<Estimate> {
    spec.validate()?;
    let vol2 = window.volume() * window.volume();
    match spec.mode {
        QuadratureMode::TensorGrid => {
            let nodes = window.midpoint_nodes(spec.resolution);
            let mut sum = 0.0;
            for x in &nodes {
                for y in &nodes {
                    sum += checked(f(x, y))?;
                }
            }
            let n = nodes.len() as f64;
            Ok(Estimate {
                value: sum * vol2 / (n * n),
                std_error: 0.0,
            })
        }
        QuadratureMode::MonteCarlo => {
            let mut rng = RngStream::new(spec.seed, 0);
            let n = spec.resolution;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = window.uniform_point(&mut rng);
                let y = window.uniform_point(&mut rng);
                let v = checked(f(&x, &y))?;
                s += v;
                s2 += v * v;
            }
            let mean = s / n as f64;
            let var = ((s2 / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0)).max(0.0);
            Ok(Estimate {
                value: vol2 * mean,
                std_error: vol2 * (var / n as f64).sqrt(),
            })
        }
    }
}

/// A reproducible random stream identified by `(seed, stream id)`.
///
/// Distinct stream ids under one seed give independent ChaCha8 streams, so
/// parallel replications can each own a stream and still merge
/// deterministically.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// A child stream keyed by `index`, independent of this stream's state.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(splitmix64(self.seed ^ splitmix64(self.stream)), index)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_v_examples() {
        let p = BaseMetricParams::new(1.0, 1.0).unwrap();
        let o = Point::new(&[0.0, 0.0]);
        assert_eq!(dist_v(&o, &o, &p), 0.0);
        assert!((dist_v(&o, &Point::new(&[0.3, 0.0]), &p) - 0.3).abs() < 1e-15);
        assert_eq!(dist_v(&o, &Point::new(&[3.0, 4.0]), &p), 1.0);
    }

    #[test]
    fn window_rejects_degenerate_boxes() {
        assert!(Window::new(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(Window::new(&[0.0], &[1.0, 1.0]).is_err());
        assert!(Window::new(&[0.0; 4], &[1.0; 4]).is_err());
        assert_eq!(Window::cube(2, 3.0).unwrap().volume(), 9.0);
    }

    #[test]
    fn grid_integrals_of_simple_functions() {
        let w = Window::unit(2);
        let spec = QuadratureSpec::default_for(2);
        let one = integrate(&w, &spec, |_| 1.0).unwrap().value;
        assert!((one - 1.0).abs() < spec.tolerance);
        let lin = integrate(&w, &spec, |x| x[0]).unwrap().value;
        assert!((lin - 0.5).abs() < spec.tolerance);
        let aff = integrate(&w, &spec, |x| 3.0 * x[0] - 2.0 * x[1] + 1.0).unwrap().value;
        assert!((aff - 1.5).abs() < spec.tolerance);
    }

    #[test]
    fn grid_and_monte_carlo_agree_on_gaussian_bump() {
        let w = Window::unit(2);
        let f = |x: &Point| (-(x[0] * x[0] + x[1] * x[1])).exp();
        let grid = integrate(&w, &QuadratureSpec::default_for(2), f).unwrap();
        let mc = integrate(&w, &QuadratureSpec::monte_carlo(20_000, 11), f).unwrap();
        assert!(mc.std_error > 0.0);
        assert!((grid.value - mc.value).abs() <= 3.0 * mc.std_error);
        // erf(1)^2 π / 4
        let exact = 0.557_746_285_351_034_f64;
        assert!((grid.value - exact).abs() < 1e-4);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let w = Window::unit(1);
        let err = integrate(&w, &QuadratureSpec::grid(8), |_| f64::NAN).unwrap_err();
        assert_eq!(err, Error::numerical("non-finite integrand"));
    }

    #[test]
    fn pair_integral_of_product() {
        let w = Window::unit(1);
        let v = integrate_pairs(&w, &QuadratureSpec::grid(32), |x, y| x[0] * y[0])
            .unwrap()
            .value;
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn equal_streams_repeat_and_distinct_streams_differ() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        let mut c = RngStream::new(42, 4);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..16).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        let s1 = a.substream(1).next_u64();
        let s2 = RngStream::new(42, 3).substream(1).next_u64();
        assert_eq!(s1, s2);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn point_serde_round_trip() {
        let p = Point::new(&[0.25, -1.5]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.25,-1.5]");
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<Point>("[1,2,3,4]").is_err());
    }
}
