//! Finite point patterns, Poisson and inhibitory pairwise-interaction Gibbs
//! models, exact and birth-death samplers, and GNZ residual checks.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{integrate, integrate_with_rng, unit_ball_volume, Point, QuadratureSpec, RngStream, Window};
use crate::stats::mean_se;

/// A finite simple point pattern. Point order is significant: graph edges
/// refer to positions in this list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointPattern {
    points: Vec<Point>,
}

impl PointPattern {
    pub fn empty() -> Self {
        PointPattern { points: Vec::new() }
    }

    /// Validates dimensions and pairwise distinctness.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if let Some(first) = points.first() {
            if points.iter().any(|p| p.dim() != first.dim()) {
                return Err(Error::validation("points of mixed dimension"));
            }
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert(p.key()) {
                return Err(Error::validation("duplicate vertex"));
            }
        }
        Ok(PointPattern { points })
    }

    pub(crate) fn from_vec_unchecked(points: Vec<Point>) -> Self {
        debug_assert!(PointPattern::new(points.clone()).is_ok());
        PointPattern { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.points.iter().any(|p| p == x)
    }

    /// The pattern with `x` appended as its last point.
    pub fn with_point(&self, x: Point) -> Result<Self> {
        if self.contains(&x) {
            return Err(Error::validation("duplicate vertex"));
        }
        let mut points = self.points.clone();
        points.push(x);
        Ok(PointPattern { points })
    }

    /// The pattern with point `i` removed; later points shift down by one.
    pub fn without(&self, i: usize) -> Self {
        let mut points = self.points.clone();
        points.remove(i);
        PointPattern { points }
    }

    pub fn count_in(&self, w: &Window) -> usize {
        self.points.iter().filter(|p| w.contains(p)).count()
    }

    /// CSV with header `x1,..,xd` and one row per point.
    pub fn write_csv<W: Write>(&self, dim: usize, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record((1..=dim).map(|k| format!("x{k}")))?;
        for p in &self.points {
            wtr.write_record(p.coords().iter().map(|c| format!("{c:?}")))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, dim: usize) -> String {
        let mut buf = Vec::new();
        self.write_csv(dim, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf8 csv")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let dim = headers.len();
        for (k, h) in headers.iter().enumerate() {
            if h != format!("x{}", k + 1) {
                return Err(Error::validation(format!("unexpected column {h}")));
            }
        }
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let coords = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::validation(format!("bad coordinate: {e}")))?;
            if coords.len() != dim {
                return Err(Error::validation("ragged point row"));
            }
            points.push(Point::try_from(coords)?);
        }
        PointPattern::new(points)
    }
}

type PointFn = dyn Fn(&Point) -> f64 + Send + Sync;
type PairFn = dyn Fn(&Point, &Point) -> f64 + Send + Sync;

/// A user-supplied activity function with a known upper bound.
#[derive(Clone)]
pub struct CustomActivity {
    pub f: Arc<PointFn>,
    pub sup: f64,
}

impl fmt::Debug for CustomActivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomActivity(sup={})", self.sup)
    }
}

/// Activity β(x) ≥ 0 of a Gibbs model, or the intensity of a Poisson model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Activity {
    Constant {
        value: f64,
    },
    /// `intercept + slope·x`, required to be nonnegative on the window.
    Affine {
        intercept: f64,
        slope: Vec<f64>,
    },
    #[serde(skip)]
    Custom(CustomActivity),
}

impl Activity {
    pub fn constant(value: f64) -> Self {
        Activity::Constant { value }
    }

    pub fn custom(f: impl Fn(&Point) -> f64 + Send + Sync + 'static, sup: f64) -> Self {
        Activity::Custom(CustomActivity { f: Arc::new(f), sup })
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            Activity::Constant { value } => *value,
            Activity::Affine { intercept, slope } => {
                intercept + slope.iter().zip(x.coords()).map(|(s, c)| s * c).sum::<f64>()
            }
            Activity::Custom(c) => (c.f)(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Activity::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// Upper bound of β on the window (exact for the parametric families).
    pub fn sup(&self, window: &Window) -> f64 {
        match self {
            Activity::Constant { value } => *value,
            Activity::Affine { .. } => window.corners().iter().map(|c| self.value(c)).fold(0.0, f64::max),
            Activity::Custom(c) => c.sup,
        }
    }

    /// ∫β over the window; closed form for the parametric families.
    pub fn integral(&self, window: &Window) -> Result<f64> {
        match self {
            Activity::Constant { value } => Ok(value * window.volume()),
            Activity::Affine { .. } => Ok(self.value(&window.centre()) * window.volume()),
            Activity::Custom(_) => {
                Ok(integrate(window, &QuadratureSpec::default_for(window.dim()), |x| self.value(x))?.value)
            }
        }
    }

    pub fn validate(&self, window: &Window) -> Result<()> {
        match self {
            Activity::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::validation("activity must be finite and nonnegative"));
                }
            }
            Activity::Affine { intercept, slope } => {
                if slope.len() != window.dim() || !intercept.is_finite() {
                    return Err(Error::validation("affine activity does not match window dimension"));
                }
                if window.corners().iter().any(|c| self.value(c) < 0.0) {
                    return Err(Error::validation("affine activity negative on the window"));
                }
            }
            Activity::Custom(c) => {
                if !(c.sup.is_finite() && c.sup >= 0.0) {
                    return Err(Error::validation("custom activity needs a finite upper bound"));
                }
                for x in window.midpoint_nodes(8) {
                    let v = (c.f)(&x);
                    if !(v >= 0.0 && v <= c.sup) {
                        return Err(Error::validation("custom activity outside [0, sup] on the window"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A user-supplied symmetric interaction with values in [0,1], equal to 1
/// beyond `range`.
#[derive(Clone)]
pub struct CustomInteraction {
    pub f: Arc<PairFn>,
    pub range: f64,
}

impl fmt::Debug for CustomInteraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomInteraction(range={})", self.range)
    }
}

/// Pair interaction φ(x,y) ∈ [0,1] of an inhibitory pairwise model.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Interaction {
    /// φ ≡ 1: the Poisson case.
    None,
    /// φ = gamma within distance `range`, 1 beyond. `gamma = 0` is hard-core.
    Strauss { range: f64, gamma: f64 },
    /// φ = gamma up to `inner`, rising linearly to 1 at `outer`.
    Ramp { inner: f64, outer: f64, gamma: f64 },
    #[serde(skip)]
    Custom(CustomInteraction),
}

impl Interaction {
    pub fn hard_core(range: f64) -> Self {
        Interaction::Strauss { range, gamma: 0.0 }
    }

    pub fn custom(f: impl Fn(&Point, &Point) -> f64 + Send + Sync + 'static, range: f64) -> Self {
        Interaction::Custom(CustomInteraction { f: Arc::new(f), range })
    }

    #[inline]
    pub fn value(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Interaction::None => 1.0,
            Interaction::Strauss { range, gamma } => {
                if x.dist_sq(y) <= range * range {
                    *gamma
                } else {
                    1.0
                }
            }
            Interaction::Ramp { inner, outer, gamma } => {
                let d = x.dist(y);
                if d <= *inner {
                    *gamma
                } else if d >= *outer {
                    1.0
                } else {
                    gamma + (1.0 - gamma) * (d - inner) / (outer - inner)
                }
            }
            Interaction::Custom(c) => {
                if x.dist(y) > c.range {
                    1.0
                } else {
                    (c.f)(x, y)
                }
            }
        }
    }

    /// Distance beyond which φ ≡ 1.
    pub fn range(&self) -> f64 {
        match self {
            Interaction::None => 0.0,
            Interaction::Strauss { range, .. } => *range,
            Interaction::Ramp { outer, .. } => *outer,
            Interaction::Custom(c) => c.range,
        }
    }

    /// Lipschitz constant of φ in each argument, when finite.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Interaction::None => Some(0.0),
            Interaction::Strauss { gamma, .. } => (*gamma == 1.0).then_some(0.0),
            Interaction::Ramp { inner, outer, gamma } => Some((1.0 - gamma) / (outer - inner)),
            Interaction::Custom(_) => None,
        }
    }

    /// ∫_{R^d} (1 − φ(0, u)) du for the isotropic parametric families.
    pub fn deficit_integral(&self, dim: usize) -> Option<f64> {
        let cd = unit_ball_volume(dim);
        let d = dim as f64;
        match self {
            Interaction::None => Some(0.0),
            Interaction::Strauss { range, gamma } => Some((1.0 - gamma) * cd * range.powf(d)),
            Interaction::Ramp { inner, outer, gamma } => {
                // ∫_inner^outer (outer − s)/(outer − inner) · d·c_d s^{d−1} ds
                let shell = d * cd / (outer - inner)
                    * (outer * (outer.powf(d) - inner.powf(d)) / d
                        - (outer.powf(d + 1.0) - inner.powf(d + 1.0)) / (d + 1.0));
                Some((1.0 - gamma) * (cd * inner.powf(d) + shell))
            }
            Interaction::Custom(_) => None,
        }
    }

    fn validate(&self, window: &Window) -> Result<()> {
        match self {
            Interaction::None => Ok(()),
            Interaction::Strauss { range, gamma } => {
                if !(*range >= 0.0 && range.is_finite()) {
                    return Err(Error::validation("interaction range must be nonnegative"));
                }
                if !(0.0..=1.0).contains(gamma) {
                    return Err(Error::validation("unsupported model: local stability not guaranteed"));
                }
                Ok(())
            }
            Interaction::Ramp { inner, outer, gamma } => {
                if !(*inner >= 0.0 && outer > inner && outer.is_finite()) {
                    return Err(Error::validation("ramp interaction needs 0 <= inner < outer"));
                }
                if !(0.0..=1.0).contains(gamma) {
                    return Err(Error::validation("unsupported model: local stability not guaranteed"));
                }
                Ok(())
            }
            Interaction::Custom(c) => {
                let mut rng = RngStream::new(0x5eed, 0);
                for _ in 0..512 {
                    let x = window.uniform_point(&mut rng);
                    let y = window.uniform_point(&mut rng);
                    let (a, b) = ((c.f)(&x, &y), (c.f)(&y, &x));
                    if !(a >= 0.0) || a > 1.0 {
                        return Err(Error::validation("unsupported model: local stability not guaranteed"));
                    }
                    if (a - b).abs() > 1e-12 {
                        return Err(Error::validation("interaction is not symmetric"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Poisson,
    PairwiseInteraction,
}

/// Conditional-intensity model λ(x|ξ) = β(x)·∏_{y∈ξ} φ(x,y) on a window.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GibbsModelSpec", into = "GibbsModelSpec")]
pub struct GibbsModel {
    window: Window,
    activity: Activity,
    interaction: Interaction,
    beta_sup: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GibbsModelSpec {
    window: Window,
    activity: Activity,
    #[serde(default = "no_interaction")]
    interaction: Interaction,
}

fn no_interaction() -> Interaction {
    Interaction::None
}

impl TryFrom<GibbsModelSpec> for GibbsModel {
    type Error = Error;
    fn try_from(s: GibbsModelSpec) -> Result<Self> {
        GibbsModel::pairwise(s.window, s.activity, s.interaction)
    }
}

impl From<GibbsModel> for GibbsModelSpec {
    fn from(m: GibbsModel) -> Self {
        GibbsModelSpec {
            window: m.window,
            activity: m.activity,
            interaction: m.interaction,
        }
    }
}

impl GibbsModel {
    pub fn poisson(window: Window, activity: Activity) -> Result<Self> {
        GibbsModel::pairwise(window, activity, Interaction::None)
    }

    pub fn pairwise(window: Window, activity: Activity, interaction: Interaction) -> Result<Self> {
        activity.validate(&window)?;
        interaction.validate(&window)?;
        let beta_sup = activity.sup(&window);
        Ok(GibbsModel {
            window,
            activity,
            interaction,
            beta_sup,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn activity(&self) -> &Activity {
        &self.activity
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn kind(&self) -> ModelKind {
        match self.interaction {
            Interaction::None => ModelKind::Poisson,
            _ => ModelKind::PairwiseInteraction,
        }
    }

    pub fn beta(&self, x: &Point) -> f64 {
        self.activity.value(x)
    }

    pub fn beta_sup(&self) -> f64 {
        self.beta_sup
    }

    /// Λ = ∫β over the window: the rate of dominating birth proposals.
    pub fn total_activity(&self) -> Result<f64> {
        self.activity.integral(&self.window)
    }

    /// λ(x|ξ) for `ξ` given as a slice of points; `x` is not checked.
    #[inline]
    pub fn intensity_given(&self, x: &Point, xi: &[Point]) -> f64 {
        let mut v = self.activity.value(x);
        if let Interaction::None = self.interaction {
            return v;
        }
        let r2 = self.interaction.range().powi(2);
        for y in xi {
            if x.dist_sq(y) <= r2 {
                v *= self.interaction.value(x, y);
                if v == 0.0 {
                    break;
                }
            }
        }
        v
    }

    /// Draws a point with density β/∫β by rejection from the uniform law.
    pub(crate) fn propose_birth<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        if self.activity.as_constant().is_some() {
            return self.window.uniform_point(rng);
        }
        loop {
            let x = self.window.uniform_point(rng);
            if rng.random::<f64>() * self.beta_sup < self.beta(&x) {
                return x;
            }
        }
    }
}

/// λ(x|ξ); errors when `x` lies outside the model window.
pub fn conditional_intensity(model: &GibbsModel, x: &Point, xi: &PointPattern) -> Result<f64> {
    if !model.window().contains(x) {
        return Err(Error::validation("point outside window"));
    }
    Ok(model.intensity_given(x, xi.points()))
}

/// Exact Poisson sampler: N ~ Poisson(∫β), then i.i.d. points with density β/∫β.
pub fn sample_poisson<R: Rng + ?Sized>(model: &GibbsModel, rng: &mut R) -> Result<PointPattern> {
    if model.kind() != ModelKind::Poisson {
        return Err(Error::validation("sample_poisson requires a poisson model"));
    }
    let total = model.total_activity()?;
    let n = poisson_count(total, rng)?;
    let points = (0..n).map(|_| model.propose_birth(rng)).collect();
    Ok(PointPattern::from_vec_unchecked(points))
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::numerical(format!("poisson mean: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Default burn-in: 50·⌈∫β⌉ jumps.
pub fn default_burn_in(model: &GibbsModel) -> Result<u64> {
    Ok(50 * model.total_activity()?.ceil() as u64)
}

/// Converts a jump budget into the run length of the continuous-time chain.
///
/// At stationarity an inhibitory chain makes at most 2∫β jumps per unit time,
/// so the returned time covers at least `n_jumps` jumps on average. Reading
/// the state at a fixed time (rather than at a jump epoch) keeps the output
/// distributed according to the chain's law at that time.
pub fn horizon_for_jumps(model: &GibbsModel, n_jumps: u64) -> Result<f64> {
    let total = model.total_activity()?;
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(n_jumps as f64 / (2.0 * total))
}

/// Runs the dominated spatial birth-death chain from the empty pattern for
/// `n_jumps` jumps' worth of time (see [`horizon_for_jumps`]).
pub fn sample_gibbs<R: Rng + ?Sized>(model: &GibbsModel, n_jumps: u64, rng: &mut R) -> Result<PointPattern> {
    let horizon = horizon_for_jumps(model, n_jumps)?;
    run_birth_death(model, PointPattern::empty(), horizon, rng)
}

/// Dominated birth-death dynamics up to time `horizon`: proposals at rate ∫β
/// with density β/∫β, accepted with probability λ(x|ξ)/β(x); every point dies
/// at rate 1.
pub fn run_birth_death<R: Rng + ?Sized>(
    model: &GibbsModel,
    start: PointPattern,
    horizon: f64,
    rng: &mut R,
) -> Result<PointPattern> {
    let total = model.total_activity()?;
    let mut pts = start.points;
    let mut t = 0.0;
    loop {
        let rate = total + pts.len() as f64;
        if rate == 0.0 {
            break;
        }
        t += Exp::new(rate).expect("positive rate").sample(rng);
        if t > horizon {
            break;
        }
        if rng.random::<f64>() * rate < total {
            let x = model.propose_birth(rng);
            let beta = model.beta(&x);
            let lambda = model.intensity_given(&x, &pts);
            if lambda > beta * (1.0 + 1e-12) {
                return Err(Error::numerical("envelope violated"));
            }
            if rng.random::<f64>() * beta < lambda {
                pts.push(x);
            }
        } else {
            let i = rng.random_range(0..pts.len());
            pts.swap_remove(i);
        }
    }
    Ok(PointPattern::from_vec_unchecked(pts))
}

/// Draws one realisation of the model: exact for Poisson, birth-death with
/// default burn-in otherwise.
pub fn sample_model<R: Rng + ?Sized>(model: &GibbsModel, rng: &mut R) -> Result<PointPattern> {
    match model.kind() {
        ModelKind::Poisson => sample_poisson(model, rng),
        ModelKind::PairwiseInteraction => sample_gibbs(model, default_burn_in(model)?, rng),
    }
}

/// Both sides of the GNZ identity with the standard error of their paired
/// difference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnzReport {
    pub lhs_estimate: f64,
    pub rhs_estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl GnzReport {
    pub(crate) fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let n = pairs.len();
        let lhs = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let rhs = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let diffs: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        GnzReport {
            lhs_estimate: lhs,
            rhs_estimate: rhs,
            std_error: mean_se(&diffs).1,
            n_samples: n,
        }
    }

    /// |lhs − rhs| in units of the standard error.
    pub fn z_score(&self) -> f64 {
        let d = (self.lhs_estimate - self.rhs_estimate).abs();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }
}

/// Monte-Carlo estimate of both sides of
/// `E Σ_{x∈Ξ} h(Ξ−δx, x) = E ∫ h(Ξ,x) λ(x|Ξ) dx`.
pub fn gnz_residual(
    model: &GibbsModel,
    h: &(dyn Fn(&PointPattern, &Point) -> f64 + Sync),
    n_samples: usize,
    spec: &QuadratureSpec,
    rng: &mut RngStream,
) -> Result<GnzReport> {
    if n_samples < 2 {
        return Err(Error::validation("gnz_residual needs at least 2 samples"));
    }
    let base = rng.next_u64();
    let pairs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = RngStream::new(base, i);
            let xi = sample_model(model, &mut r)?;
            let lhs: f64 = (0..xi.len()).map(|k| h(&xi.without(k), &xi.points()[k])).sum();
            let rhs = integrate_with_rng(
                model.window(),
                spec,
                |x| h(&xi, x) * model.intensity_given(x, xi.points()),
                &mut r,
            )?
            .value;
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GnzReport::from_pairs(&pairs))
}

/// Test function `h(ξ, x)` of the GNZ identity.
pub type PointTestFn = dyn Fn(&PointPattern, &Point) -> f64 + Send + Sync;

/// Lower corner box of `window` covering the fraction `frac` of each side.
pub(crate) fn lower_box(window: &Window, frac: f64) -> Window {
    let d = window.dim();
    let hi: Vec<f64> = (0..d).map(|k| window.lower()[k] + frac * window.side(k)).collect();
    Window::new(window.lower().coords(), &hi).expect("sub-box of a valid window")
}

/// Built-in GNZ test functions: a constant, the pattern size, a subwindow
/// indicator and the number of points near x.
pub fn gnz_test_suite(window: &Window) -> Vec<(&'static str, Box<PointTestFn>)> {
    let sub = lower_box(window, 0.5);
    let r2 = (0.1 * window.diameter()).powi(2);
    vec![
        ("constant", Box::new(|_: &PointPattern, _: &Point| 1.0)),
        ("count", Box::new(|xi: &PointPattern, _: &Point| xi.len() as f64)),
        (
            "subwindow_indicator",
            Box::new(move |_: &PointPattern, x: &Point| f64::from(u8::from(sub.contains(x)))),
        ),
        (
            "near_count",
            Box::new(move |xi: &PointPattern, x: &Point| xi.iter().filter(|y| y.dist_sq(x) <= r2).count() as f64),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    fn unit() -> Window {
        Window::unit(2)
    }

    #[test]
    fn conditional_intensity_examples() {
        let hc = GibbsModel::pairwise(unit(), Activity::constant(4.0), Interaction::hard_core(0.1)).unwrap();
        let x = Point::new(&[0.5, 0.5]);
        assert_eq!(conditional_intensity(&hc, &x, &PointPattern::empty()).unwrap(), 4.0);
        let near = PointPattern::new(vec![Point::new(&[0.55, 0.5])]).unwrap();
        assert_eq!(conditional_intensity(&hc, &x, &near).unwrap(), 0.0);
        let far = PointPattern::new(vec![Point::new(&[0.9, 0.9])]).unwrap();
        assert_eq!(conditional_intensity(&hc, &x, &far).unwrap(), 4.0);
        let poi = GibbsModel::poisson(unit(), Activity::constant(4.0)).unwrap();
        assert_eq!(conditional_intensity(&poi, &x, &near).unwrap(), 4.0);
        let outside = Point::new(&[1.5, 0.5]);
        assert_eq!(
            conditional_intensity(&poi, &outside, &near).unwrap_err(),
            Error::validation("point outside window")
        );
    }

    #[test]
    fn attractive_interactions_are_rejected() {
        let err = GibbsModel::pairwise(
            unit(),
            Activity::constant(1.0),
            Interaction::Strauss { range: 0.1, gamma: 1.5 },
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::validation("unsupported model: local stability not guaranteed")
        );
    }

    #[test]
    fn duplicate_points_are_rejected() {
        let p = Point::new(&[0.1, 0.2]);
        assert!(PointPattern::new(vec![p, p]).is_err());
    }

    #[test]
    fn poisson_counts_have_poisson_moments() {
        let m = GibbsModel::poisson(unit(), Activity::constant(5.0)).unwrap();
        let mut rng = RngStream::new(1, 0);
        let counts: Vec<f64> = (0..10_000)
            .map(|_| sample_poisson(&m, &mut rng).unwrap().len() as f64)
            .collect();
        let (mean, se) = mean_se(&counts);
        assert!((mean - 5.0).abs() <= 3.0 * se, "mean {mean} se {se}");
        let var = counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / 9_999.0;
        assert!((var - 5.0).abs() < 0.3, "variance {var}");
    }

    #[test]
    fn zero_activity_gives_empty_patterns() {
        let m = GibbsModel::poisson(unit(), Activity::constant(0.0)).unwrap();
        let mut rng = RngStream::new(2, 0);
        assert!(sample_poisson(&m, &mut rng).unwrap().is_empty());
        assert!(sample_gibbs(&m, 100, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn inhomogeneous_poisson_places_more_points_where_beta_is_large() {
        let act = Activity::Affine {
            intercept: 0.0,
            slope: vec![20.0, 0.0],
        };
        let m = GibbsModel::poisson(unit(), act).unwrap();
        assert!((m.total_activity().unwrap() - 10.0).abs() < 1e-12);
        let mut rng = RngStream::new(3, 0);
        let right = Window::new(&[0.5, 0.0], &[1.0, 1.0]).unwrap();
        let (mut r, mut all) = (0usize, 0usize);
        for _ in 0..2000 {
            let p = sample_poisson(&m, &mut rng).unwrap();
            r += p.count_in(&right);
            all += p.len();
        }
        // fraction of ∫β on x1 > 1/2 is 3/4
        let frac = r as f64 / all as f64;
        assert!((frac - 0.75).abs() < 0.02, "{frac}");
    }

    #[test]
    fn birth_death_chain_matches_exact_poisson_counts() {
        let m = GibbsModel::poisson(unit(), Activity::constant(6.0)).unwrap();
        let burn = default_burn_in(&m).unwrap();
        let mut r1 = RngStream::new(4, 0);
        let mut r2 = RngStream::new(4, 1);
        let a: Vec<f64> = (0..1000)
            .map(|_| sample_gibbs(&m, burn, &mut r1).unwrap().len() as f64)
            .collect();
        let b: Vec<f64> = (0..1000)
            .map(|_| sample_poisson(&m, &mut r2).unwrap().len() as f64)
            .collect();
        let ks = ks_two_sample(&a, &b);
        assert!(ks.statistic < ks.critical_5pct, "{ks:?}");
    }

    #[test]
    fn hard_core_samples_respect_exclusion() {
        let r = 0.08;
        let m = GibbsModel::pairwise(unit(), Activity::constant(60.0), Interaction::hard_core(r)).unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..50 {
            let p = sample_gibbs(&m, default_burn_in(&m).unwrap(), &mut rng).unwrap();
            for (i, x) in p.iter().enumerate() {
                for y in &p.points()[i + 1..] {
                    assert!(x.dist(y) > r);
                }
            }
        }
    }

    #[test]
    fn gnz_trivial_cases() {
        let m = GibbsModel::poisson(unit(), Activity::constant(5.0)).unwrap();
        let mut rng = RngStream::new(6, 0);
        let spec = QuadratureSpec::grid(16);
        let zero = gnz_residual(&m, &|_, _| 0.0, 100, &spec, &mut rng).unwrap();
        assert_eq!(zero.lhs_estimate, 0.0);
        assert_eq!(zero.rhs_estimate, 0.0);
        let one = gnz_residual(&m, &|_, _| 1.0, 4000, &spec, &mut rng).unwrap();
        assert!((one.rhs_estimate - 5.0).abs() < 1e-12);
        assert!(one.z_score() <= 3.0, "{one:?}");
    }

    #[test]
    fn ramp_deficit_integral_matches_quadrature() {
        let phi = Interaction::Ramp {
            inner: 0.05,
            outer: 0.15,
            gamma: 0.2,
        };
        let w = Window::new(&[-0.2, -0.2], &[0.2, 0.2]).unwrap();
        let o = Point::new(&[0.0, 0.0]);
        let q = integrate(&w, &QuadratureSpec::grid(400), |x| 1.0 - phi.value(&o, x))
            .unwrap()
            .value;
        let exact = phi.deficit_integral(2).unwrap();
        assert!((q - exact).abs() / exact < 1e-3, "{q} vs {exact}");
    }

    #[test]
    fn pattern_csv_round_trip() {
        let p = PointPattern::new(vec![Point::new(&[0.1, 0.2]), Point::new(&[1.0 / 3.0, 0.7])]).unwrap();
        let s = p.to_csv_string(2);
        assert!(s.starts_with("x1,x2\n"));
        let q = PointPattern::read_csv(s.as_bytes()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn model_serde_round_trip() {
        let m = GibbsModel::pairwise(unit(), Activity::constant(3.0), Interaction::hard_core(0.1)).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: GibbsModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back.beta_sup(), 3.0);
        assert_eq!(back.kind(), ModelKind::PairwiseInteraction);
    }
}
