//! Closed-form approximation bounds: Stein factors, the coupling-time bound
//! B*, the Glauber coupling time, and the soft-RGG, Boolean and
//! discretisation bounds.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::experiments::{BooleanConfig, DiscretisationGrid};
use crate::gospa::GospaParams;
use crate::graph::{Connection, RadiusTransform};
use crate::point_process::{Activity, GibbsModel, Interaction};
use crate::space::{integrate, integrate_pairs, unit_ball_volume, Point, QuadratureSpec, RngStream, Window};
use crate::stats::mean_se;

/// How a report's total is assembled from its named terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "terms", rename_all = "kebab-case")]
pub enum Composition {
    /// Sum over groups of the product of the named terms in each group.
    SumOfProducts(Vec<Vec<String>>),
    /// Minimum of the named terms.
    Min(Vec<String>),
}

/// A bound value with its named constituents and an echo of its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub total: f64,
    pub terms: BTreeMap<String, f64>,
    pub composition: Composition,
    pub params: BTreeMap<String, Value>,
}

impl BoundReport {
    /// Builds a report whose total is recomputed from `terms`.
    pub fn new(terms: &[(&str, f64)], composition: Composition, params: &[(&str, Value)]) -> Result<Self> {
        let terms: BTreeMap<String, f64> = terms.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &terms {
            if v.is_nan() || *v < 0.0 {
                return Err(Error::numerical(format!("bound term {k} is not a nonnegative number")));
            }
        }
        let params = params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let mut report = BoundReport {
            total: 0.0,
            terms,
            composition,
            params,
        };
        report.total = report.recompute()?;
        Ok(report)
    }

    fn term(&self, name: &str) -> Result<f64> {
        self.terms
            .get(name)
            .copied()
            .ok_or_else(|| Error::numerical(format!("bound term {name} missing")))
    }

    /// Total re-derived from the term map.
    pub fn recompute(&self) -> Result<f64> {
        match &self.composition {
            Composition::SumOfProducts(groups) => {
                let mut total = 0.0;
                for group in groups {
                    let mut prod = 1.0;
                    for name in group {
                        prod *= self.term(name)?;
                    }
                    total += prod;
                }
                if total.is_nan() {
                    return Err(Error::numerical("bound total is undefined"));
                }
                Ok(total)
            }
            Composition::Min(names) => {
                let mut best = f64::INFINITY;
                for name in names {
                    best = best.min(self.term(name)?);
                }
                Ok(best)
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn check_total_intensity(total_intensity: f64) -> Result<()> {
    if !(total_intensity > 0.0) || total_intensity.is_nan() {
        return Err(Error::validation("total intensity must be positive"));
    }
    Ok(())
}

/// Vertex Stein factor
/// `min{C_i, (1 + (1 − e^{−Λ}) log⁺Λ) C̃_i / Λ}`.
pub fn stein_factor_vertex(total_intensity: f64, params: &GospaParams) -> Result<f64> {
    check_total_intensity(total_intensity)?;
    let lam = total_intensity;
    let log_plus = lam.ln().max(0.0);
    let decay = (1.0 + (-(-lam).exp_m1()) * log_plus) / lam * params.penalty();
    Ok(params.cap().min(decay))
}

/// Edge Stein factor
/// `min{1/4, (2 − e^{−Λ})/Λ − (3/2 − e^{−Λ})/Λ²} · C_E`.
///
/// The second expression is only meaningful for Λ ≥ 1; below that the
/// factor is `C_E/4`.
pub fn stein_factor_edge(total_intensity: f64, ce: f64) -> Result<f64> {
    check_total_intensity(total_intensity)?;
    let lam = total_intensity;
    if lam < 1.0 {
        return Ok(0.25 * ce);
    }
    let e = (-lam).exp();
    let decay = (2.0 - e) / lam - (1.5 - e) / (lam * lam);
    Ok(0.25f64.min(decay) * ce)
}

/// Threshold n* splitting the coupling-time analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NStar {
    Finite(u64),
    Infinite,
}

/// Closed form used for n* = ∞.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfiniteForm {
    /// `(1+ε)/ε · log(1/(1−ε))`, the limit of the finite sum; +∞ for ε ≥ 1.
    #[default]
    LogForm,
    /// `(1+ε)/ε · (e^ε − 1)`.
    ExpForm,
}

/// Coupling-time bound B*(ε, c, n*) with the default n* = ∞ form.
pub fn coupling_bound_bstar(epsilon: f64, c: f64, n_star: NStar) -> Result<f64> {
    coupling_bound_bstar_with(epsilon, c, n_star, InfiniteForm::default())
}

const SERIES_TOL: f64 = 1e-17;

/// Coupling-time bound
///
/// `(n*−1)! (ε/c)^{n*−1} [ (1/c) Σ_{i≥n*} c^i/i! + ∫_0^c s^{−1} Σ_{i≥n*} s^i/i! ds ]
///  + (1+ε)/ε Σ_{i=1}^{n*−1} ε^i/i`
///
/// evaluated in the factored form `ε^{n*−1} [S + I]` with
/// `S = Σ_{i≥n*} (n*−1)! c^{i−n*}/i!` and `I = ∫_0^1 h(u) du`,
/// `h(u) = Σ_{i≥n*} (n*−1)! c^{i−n*+1} u^{i−1}/i!`, so that the limits
/// c → 0 and ε → 0 need no special casing.
pub fn coupling_bound_bstar_with(epsilon: f64, c: f64, n_star: NStar, form: InfiniteForm) -> Result<f64> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::validation("epsilon must be a nonnegative number"));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::validation("c must be a nonnegative number"));
    }
    let n = match n_star {
        NStar::Infinite => return Ok(infinite_form(epsilon, form)),
        NStar::Finite(0) => return Err(Error::validation("n* must be at least 1")),
        NStar::Finite(n) => n,
    };
    let tail = if epsilon == 0.0 && n > 1 {
        0.0
    } else {
        let lead = epsilon.powf((n - 1) as f64);
        if lead == 0.0 {
            0.0
        } else {
            lead * (tail_sum(c, n) + tail_integral(c, n)?)
        }
    };
    Ok(tail + head_sum(epsilon, n))
}

fn infinite_form(epsilon: f64, form: InfiniteForm) -> f64 {
    if epsilon == 0.0 {
        return 1.0;
    }
    match form {
        InfiniteForm::LogForm => {
            if epsilon >= 1.0 {
                f64::INFINITY
            } else {
                (1.0 + epsilon) * (-(-epsilon).ln_1p()) / epsilon
            }
        }
        InfiniteForm::ExpForm => (1.0 + epsilon) * epsilon.exp_m1() / epsilon,
    }
}

/// `S = Σ_{i≥n} (n−1)! c^{i−n}/i!`, first term 1/n, ratio c/(i+1).
fn tail_sum(c: f64, n: u64) -> f64 {
    let mut term = 1.0 / n as f64;
    let mut sum = term;
    let mut i = n as f64;
    while term > SERIES_TOL * sum {
        term *= c / (i + 1.0);
        sum += term;
        i += 1.0;
    }
    sum
}

/// Integrand h(u) of the integral term, first term c·u^{n−1}/n.
fn tail_integrand(c: f64, n: u64, u: f64) -> f64 {
    let mut term = c * u.powf((n - 1) as f64) / n as f64;
    if term == 0.0 {
        return 0.0;
    }
    let mut sum = term;
    let mut i = n as f64;
    while term > SERIES_TOL * sum {
        term *= c * u / (i + 1.0);
        sum += term;
        i += 1.0;
    }
    sum
}

fn tail_integral(c: f64, n: u64) -> Result<f64> {
    if c == 0.0 {
        return Ok(0.0);
    }
    let peak = tail_integrand(c, n, 1.0);
    let target = (1e-15 * peak).max(f64::MIN_POSITIVE);
    let out = quadrature::double_exponential::integrate(|u| tail_integrand(c, n, u), 0.0, 1.0, target);
    if !out.integral.is_finite() {
        return Err(Error::numerical("coupling bound integral failed"));
    }
    Ok(out.integral)
}

/// `(1+ε) Σ_{i=1}^{n−1} ε^{i−1}/i`.
fn head_sum(epsilon: f64, n: u64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for i in 1..n {
        let term = power / i as f64;
        sum += term;
        if !sum.is_finite() || (epsilon < 1.0 && term < SERIES_TOL * sum) {
            break;
        }
        power *= epsilon;
    }
    (1.0 + epsilon) * sum
}

/// Upper bound on ε = sup ∫|λ(x|ξ+δ_z) − λ(x|ξ)| dx for an inhibitory
/// pairwise model: `sup_β · ∫_{R^d} (1 − φ(0,u)) du` for the parametric
/// interactions, the quadrature sup of [`pip_epsilon_quadrature`] otherwise.
pub fn pip_epsilon(model: &GibbsModel, spec: &QuadratureSpec) -> Result<f64> {
    match model.interaction().deficit_integral(model.window().dim()) {
        Some(deficit) => Ok(model.beta_sup() * deficit),
        None => pip_epsilon_quadrature(model, spec),
    }
}

/// `sup_z ∫ β(x)(1 − φ(x,z)) dx` with the sup over the midpoint grid of the
/// window at the quadrature resolution.
pub fn pip_epsilon_quadrature(model: &GibbsModel, spec: &QuadratureSpec) -> Result<f64> {
    if let Interaction::None = model.interaction() {
        return Ok(0.0);
    }
    let window = model.window();
    let per_axis = spec.resolution.clamp(2, 16);
    let mut best: f64 = 0.0;
    for z in window.midpoint_nodes(per_axis) {
        let v = integrate(window, spec, |x| {
            model.beta(x) * (1.0 - model.interaction().value(x, &z))
        })?;
        best = best.max(v.value);
    }
    Ok(best)
}

/// B* for an inhibitory pairwise model with ε from [`pip_epsilon`],
/// c = ∫β and n* = ⌈c/ε⌉, reported as the smaller of the finite-n* and
/// n* = ∞ values.
pub fn pip_bstar(model: &GibbsModel, spec: &QuadratureSpec) -> Result<BoundReport> {
    let epsilon = pip_epsilon(model, spec)?;
    let c = model.total_activity()?;
    let (n_star, finite) = if epsilon == 0.0 {
        (None, 1.0)
    } else {
        let n = ((c / epsilon).ceil() as u64).max(1);
        (Some(n), coupling_bound_bstar(epsilon, c, NStar::Finite(n))?)
    };
    let infinite = coupling_bound_bstar(epsilon, c, NStar::Infinite)?;
    BoundReport::new(
        &[
            ("epsilon", epsilon),
            ("c", c),
            ("bstar_finite", finite),
            ("bstar_infinite", infinite),
        ],
        Composition::Min(vec!["bstar_finite".into(), "bstar_infinite".into()]),
        &[("epsilon", json!(epsilon)), ("c", json!(c)), ("n_star", json!(n_star))],
    )
}

/// Expected coupling time `n H_m` of two Glauber chains on {0,1}^n started
/// in states differing in `m` coordinates.
pub fn glauber_expected_coupling_time(n: u64, m: u64) -> Result<f64> {
    if m > n {
        return Err(Error::validation("m must not exceed n"));
    }
    Ok(n as f64 * (1..=m).map(|i| 1.0 / i as f64).sum::<f64>())
}

/// Monte-Carlo estimate of a mean time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Simulates the coupled Glauber chains with update probabilities `kappa`:
/// at rate 1 a coordinate s is chosen uniformly and both chains set it to
/// `1{U < κ_s}` with a shared uniform U. The chains start in states
/// differing in the first `m` coordinates.
pub fn simulate_glauber_coupling(kappa: &[f64], m: usize, reps: usize, seed: u64) -> Result<MeanEstimate> {
    let n = kappa.len();
    if m > n {
        return Err(Error::validation("m must not exceed n"));
    }
    if kappa.iter().any(|k| !(0.0..=1.0).contains(k)) {
        return Err(Error::validation("invalid connection probability"));
    }
    if reps < 2 {
        return Err(Error::validation("need at least two replications"));
    }
    let times: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            let mut x: Vec<bool> = (0..n).map(|s| s < m).collect();
            let mut y = vec![false; n];
            let mut differing = m;
            let mut t = 0.0;
            while differing > 0 {
                t += -(1.0 - rng.random::<f64>()).ln();
                let s = rng.random_range(0..n);
                let v = rng.random::<f64>() < kappa[s];
                if x[s] != y[s] {
                    differing -= 1;
                }
                x[s] = v;
                y[s] = v;
            }
            t
        })
        .collect();
    let (mean, std_error) = mean_se(&times);
    Ok(MeanEstimate { mean, std_error, reps })
}

/// Which inequality [`soft_rgg_bound`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SoftRggMode {
    /// Bound on |E f(G₁) − E f(G₂)| for ‖f‖_∞ ≤ 1.
    SupNorm,
    /// Wasserstein bound with the second law as the Poisson target.
    Wasserstein,
}

/// Bound between two Poisson random geometric graphs with intensities
/// `lambda1`, `lambda2` and connection functions `kappa1`, `kappa2`.
///
/// Sup-norm mode: `2∫|λ₁−λ₂| + ∫∫|κ₁−κ₂| λ₁(x)λ₂(y)`.
/// Wasserstein mode: `c_V(Λ₂)∫|λ₁−λ₂| + c_E(Λ₂)∫∫|κ₁−κ₂| λ₂(x)λ₁(y)`
/// with `Λ₂ = ∫λ₂`.
#[allow(clippy::too_many_arguments)]
pub fn soft_rgg_bound(
    window: &Window,
    lambda1: &Activity,
    lambda2: &Activity,
    kappa1: &Connection,
    kappa2: &Connection,
    params: &GospaParams,
    mode: SoftRggMode,
    spec: &QuadratureSpec,
) -> Result<BoundReport> {
    lambda1.validate(window)?;
    lambda2.validate(window)?;
    kappa1.validate()?;
    kappa2.validate()?;
    let vertex_l1 = integrate(window, spec, |x| (lambda1.value(x) - lambda2.value(x)).abs())?.value;
    let edge_l1 = integrate_pairs(window, spec, |x, y| {
        (kappa1.prob(x, y) - kappa2.prob(x, y)).abs() * lambda2.value(x) * lambda1.value(y)
    })?
    .value;
    let mut echo = vec![
        ("mode", json!(mode)),
        ("window", json!(window)),
        ("cv", json!(params.cv())),
        ("ce", json!(params.ce())),
        ("variant", json!(params.variant)),
        ("lambda1", json!(format!("{lambda1:?}"))),
        ("lambda2", json!(format!("{lambda2:?}"))),
        ("kappa1", json!(format!("{kappa1:?}"))),
        ("kappa2", json!(format!("{kappa2:?}"))),
    ];
    match mode {
        SoftRggMode::SupNorm => BoundReport::new(
            &[("vertex_weight", 2.0), ("vertex_l1", vertex_l1), ("edge_l1", edge_l1)],
            Composition::SumOfProducts(vec![
                vec!["vertex_weight".into(), "vertex_l1".into()],
                vec!["edge_l1".into()],
            ]),
            &echo,
        ),
        SoftRggMode::Wasserstein => {
            let total_intensity = integrate(window, spec, |x| lambda2.value(x))?.value;
            let c_v = stein_factor_vertex(total_intensity, params)?;
            let c_e = stein_factor_edge(total_intensity, params.ce())?;
            echo.push(("total_intensity", json!(total_intensity)));
            BoundReport::new(
                &[
                    ("c_v", c_v),
                    ("vertex_l1", vertex_l1),
                    ("c_e", c_e),
                    ("edge_l1", edge_l1),
                ],
                Composition::SumOfProducts(vec![
                    vec!["c_v".into(), "vertex_l1".into()],
                    vec!["c_e".into(), "edge_l1".into()],
                ]),
                &echo,
            )
        }
    }
}

/// `E[ψ(R − r_*)^k | R ≥ r_*]` for Pareto radii with tail exponent `a` and
/// ψ(s) = s^γ / r_*^δ: `r_*^{(γ−δ)k} Γ(γk+1) Γ(a−γk) / Γ(a)`, infinite
/// when `a ≤ γk`.
pub fn transform_moment(transform: &RadiusTransform, tail_exponent: f64, r_star: f64, k: u32) -> f64 {
    match *transform {
        RadiusTransform::Zero => 0.0,
        RadiusTransform::Power { gamma, delta } => {
            let s = gamma * k as f64;
            if tail_exponent <= s {
                return f64::INFINITY;
            }
            let log_gamma = ln_gamma(s + 1.0) + ln_gamma(tail_exponent - s) - ln_gamma(tail_exponent);
            r_star.powf((gamma - delta) * k as f64) * log_gamma.exp()
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `E[(R̂ − r_*) R̂^{d−1} | R ≥ r_*]` with `R̂ = r_* + ψ(R − r_*)`, by
/// binomial expansion into [`transform_moment`]s.
pub fn radial_expectation(cfg: &BooleanConfig, r_star: f64) -> f64 {
    let d = cfg.dim as u32;
    (0..d)
        .map(|j| {
            let m = transform_moment(&cfg.transform, cfg.tail_exponent, r_star, j + 1);
            if m == 0.0 {
                0.0
            } else {
                binomial(d - 1, j) * r_star.powi((d - 1 - j) as i32) * m
            }
        })
        .sum()
}

/// Quadrature value of [`radial_expectation`]: 10⁴ log-spaced midpoint
/// nodes on `[r_*, 10³ r_*]` plus an analytic upper bound on the tail.
pub fn radial_expectation_quadrature(cfg: &BooleanConfig, r_star: f64) -> f64 {
    const NODES: usize = 10_000;
    let (gamma, delta) = match cfg.transform {
        RadiusTransform::Zero => return 0.0,
        RadiusTransform::Power { gamma, delta } => (gamma, delta),
    };
    let a = cfg.tail_exponent;
    let d = cfg.dim as i32;
    let upper = 1e3 * r_star;
    let h = (upper / r_star).ln() / NODES as f64;
    let mut body = 0.0;
    for i in 0..NODES {
        let radius = r_star * ((i as f64 + 0.5) * h).exp();
        let psi = cfg.transform.apply(radius - r_star, r_star);
        // density a r_*^a R^{−a−1} times dR = R ds
        let weight = a * (r_star / radius).powf(a);
        body += psi * (r_star + psi).powi(d - 1) * weight;
    }
    body *= h;
    let tail: f64 = (0..d as u32)
        .map(|j| {
            let k = (j + 1) as f64;
            if a <= gamma * k {
                return f64::INFINITY;
            }
            binomial(d as u32 - 1, j)
                * r_star.powf((d - 1) as f64 - j as f64 - delta * k)
                * a
                * r_star.powf(a)
                * upper.powf(gamma * k - a)
                / (a - gamma * k)
        })
        .sum();
    body + tail
}

/// Bound between the thinned, contracted Boolean percolation graph at cutoff
/// `r_star` and the Poisson RGG with intensity λ = μp/q and connection
/// `1{‖x−y‖ ≤ 2q^{1/d}r_*}`. The vertex term vanishes for Poisson centres.
pub fn boolean_bound(cfg: &BooleanConfig, r_star: f64, params: &GospaParams) -> Result<BoundReport> {
    cfg.validate()?;
    cfg.check_cutoff(r_star)?;
    let p = cfg.keep_probability(r_star);
    let lambda = cfg.intensity(r_star);
    let volume = cfg.window.volume();
    let total_intensity = lambda * volume;
    let c_e = stein_factor_edge(total_intensity, params.ce())?;
    let d = cfg.dim as f64;
    let radial = radial_expectation(cfg, r_star);
    BoundReport::new(
        &[
            ("vertex", 0.0),
            ("c_e", c_e),
            ("intensity", lambda),
            ("c_d", unit_ball_volume(cfg.dim)),
            ("keep_probability", p),
            // q · E Ξ(X_{1/q}) = μ |X|
            ("contracted_mean_count", cfg.centre_intensity * volume),
            ("dim_factor", d * 2f64.powf(d)),
            ("radial", radial),
        ],
        Composition::SumOfProducts(vec![
            vec!["vertex".into()],
            vec![
                "c_e".into(),
                "intensity".into(),
                "c_d".into(),
                "keep_probability".into(),
                "contracted_mean_count".into(),
                "dim_factor".into(),
                "radial".into(),
            ],
        ]),
        &[
            ("config", json!(cfg)),
            ("r_star", json!(r_star)),
            ("q", json!(cfg.contraction(r_star))),
            ("total_intensity", json!(total_intensity)),
            ("cv", json!(params.cv())),
            ("ce", json!(params.ce())),
            ("variant", json!(params.variant)),
        ],
    )
}

/// Vertex term `2 c_V(Λ) Λ q/(1−q)` for determinantal centres, Λ = λ|X|.
pub fn dpp_vertex_term(total_intensity: f64, q: f64, params: &GospaParams) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::validation("contraction q must lie in [0, 1)"));
    }
    let c_v = stein_factor_vertex(total_intensity, params)?;
    Ok(2.0 * c_v * total_intensity * q / (1.0 - q))
}

/// General and Lipschitz forms of the discretisation bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretisationBound {
    pub general: BoundReport,
    pub lipschitz: Option<BoundReport>,
}

/// Bound between an RGG with constant-activity inhibitory pairwise vertices
/// and its discretisation on `grid`:
///
/// general: `r_V + C_i B* β² ‖φ − φ∘t‖₁ + ¼ C_E β² ‖κ − κ∘t‖₁`;
/// Lipschitz: `(1 + (2 C_i B* L_V + ½ C_E L_E) β² |X|²) r_V`.
pub fn discretisation_bound(
    model: &GibbsModel,
    kappa: &Connection,
    grid: &DiscretisationGrid,
    lipschitz: Option<(f64, f64)>,
    params: &GospaParams,
    spec: &QuadratureSpec,
) -> Result<DiscretisationBound> {
    let beta = model
        .activity()
        .as_constant()
        .ok_or_else(|| Error::validation("discretisation bound needs a constant activity"))?;
    if grid.window() != model.window() {
        return Err(Error::validation("grid window differs from model window"));
    }
    kappa.validate()?;
    let window = model.window();
    let phi = model.interaction();
    let bstar = pip_bstar(model, spec)?;
    let r_v = grid.r_v();
    let project = |x: &Point| grid.project(x);
    let phi_l1 = integrate_pairs(window, spec, |x, y| {
        (phi.value(x, y) - phi.value(&project(x), &project(y))).abs()
    })?
    .value;
    let kappa_l1 = integrate_pairs(window, spec, |x, y| {
        (kappa.prob(x, y) - kappa.prob(&project(x), &project(y))).abs()
    })?
    .value;
    let beta_sq = beta * beta;
    let echo = [
        ("beta", json!(beta)),
        ("interaction", json!(format!("{phi:?}"))),
        ("kappa", json!(format!("{kappa:?}"))),
        ("grid", json!(grid)),
        ("cv", json!(params.cv())),
        ("ce", json!(params.ce())),
        ("variant", json!(params.variant)),
        ("bstar_report", json!(bstar)),
    ];
    let general = BoundReport::new(
        &[
            ("r_v", r_v),
            ("c_i", params.cap()),
            ("bstar", bstar.total),
            ("beta_sq", beta_sq),
            ("phi_l1", phi_l1),
            ("edge_weight", 0.25),
            ("ce", params.ce()),
            ("kappa_l1", kappa_l1),
        ],
        Composition::SumOfProducts(vec![
            vec!["r_v".into()],
            vec!["c_i".into(), "bstar".into(), "beta_sq".into(), "phi_l1".into()],
            vec!["edge_weight".into(), "ce".into(), "beta_sq".into(), "kappa_l1".into()],
        ]),
        &echo,
    )?;
    let lipschitz = match lipschitz {
        None => None,
        Some((l_v, l_e)) => {
            if !(l_v >= 0.0 && l_e >= 0.0) {
                return Err(Error::validation("Lipschitz constants must be nonnegative"));
            }
            let mass_sq = beta_sq * window.volume().powi(2);
            Some(BoundReport::new(
                &[
                    ("r_v", r_v),
                    ("vertex_weight", 2.0),
                    ("c_i", params.cap()),
                    ("bstar", bstar.total),
                    ("l_v", l_v),
                    ("mass_sq", mass_sq),
                    ("edge_weight", 0.5),
                    ("ce", params.ce()),
                    ("l_e", l_e),
                ],
                Composition::SumOfProducts(vec![
                    vec!["r_v".into()],
                    vec![
                        "vertex_weight".into(),
                        "c_i".into(),
                        "bstar".into(),
                        "l_v".into(),
                        "mass_sq".into(),
                        "r_v".into(),
                    ],
                    vec![
                        "edge_weight".into(),
                        "ce".into(),
                        "l_e".into(),
                        "mass_sq".into(),
                        "r_v".into(),
                    ],
                ]),
                &echo,
            )?)
        }
    };
    Ok(DiscretisationBound { general, lipschitz })
}
