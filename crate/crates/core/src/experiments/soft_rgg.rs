//! Soft random geometric graphs with perturbed intensity and connection
//! function, checked against the Wasserstein and sup-norm bounds.

use serde::{Deserialize, Serialize};

use super::{draw, ExperimentTable, NullBandCache, Role};
use crate::bounds::{soft_rgg_bound, SoftRggMode};
use crate::error::{Error, Result};
use crate::gospa::GospaParams;
use crate::graph::{sample_rgg, Connection, EdgeModel, SpatialGraph};
use crate::point_process::{Activity, GibbsModel};
use crate::space::{QuadratureSpec, RngStream, Window};
use crate::stats::mean_se;
use crate::transport::{empirical_wasserstein, OtMethod};

/// Law of a Poisson random geometric graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RggLaw {
    pub intensity: Activity,
    pub connection: Connection,
}

impl RggLaw {
    pub fn new(intensity: Activity, connection: Connection) -> Self {
        RggLaw { intensity, connection }
    }

    fn sampler(&self, window: &Window) -> Result<impl Fn(&mut RngStream) -> Result<SpatialGraph> + Sync> {
        self.connection.validate()?;
        let model = GibbsModel::poisson(window.clone(), self.intensity.clone())?;
        let edges = EdgeModel::product(self.connection.clone());
        Ok(move |rng: &mut RngStream| sample_rgg(&model, &edges, rng))
    }
}

/// Each alternative law is compared with `target`, which plays the role of
/// the Poisson target in the Wasserstein bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoftRggConfig {
    pub window: Window,
    pub target: RggLaw,
    pub alternatives: Vec<RggLaw>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_null_reps")]
    pub null_reps: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: QuadratureSpec,
}

fn default_samples() -> usize {
    300
}

fn default_null_reps() -> usize {
    50
}

fn default_quadrature() -> QuadratureSpec {
    QuadratureSpec::grid(16)
}

impl SoftRggConfig {
    /// Target λ ≡ 5, κ ≡ 0.5 on the unit square against the 3×3 grid
    /// λ ∈ {5, 5.5, 6} × κ ∈ {0.45, 0.4, 0.3}.
    pub fn perturbation_grid() -> Self {
        let mut alternatives = Vec::new();
        for lambda in [5.0, 5.5, 6.0] {
            for kappa in [0.45, 0.4, 0.3] {
                alternatives.push(RggLaw::new(Activity::constant(lambda), Connection::constant(kappa)));
            }
        }
        SoftRggConfig {
            window: Window::unit(2),
            target: RggLaw::new(Activity::constant(5.0), Connection::constant(0.5)),
            alternatives,
            n_samples: default_samples(),
            null_reps: default_null_reps(),
            quadrature: default_quadrature(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alternatives.is_empty() {
            return Err(Error::validation("no alternative laws to compare"));
        }
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be positive"));
        }
        self.quadrature.validate()?;
        for law in std::iter::once(&self.target).chain(&self.alternatives) {
            law.intensity.validate(&self.window)?;
            law.connection.validate()?;
        }
        Ok(())
    }
}

/// A named test functional with values in [0, 1].
pub struct Functional {
    pub name: String,
    pub eval: Box<dyn Fn(&SpatialGraph) -> f64 + Send + Sync>,
}

impl Functional {
    fn new(name: impl Into<String>, eval: impl Fn(&SpatialGraph) -> f64 + Send + Sync + 'static) -> Self {
        Functional {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

fn fraction(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn corner_box(window: &Window, lo_frac: f64, hi_frac: f64) -> Window {
    let d = window.dim();
    let lo: Vec<f64> = (0..d).map(|k| window.lower()[k] + lo_frac * window.side(k)).collect();
    let hi: Vec<f64> = (0..d).map(|k| window.lower()[k] + hi_frac * window.side(k)).collect();
    Window::new(&lo, &hi).expect("sub-box of a valid window")
}

/// Twenty bounded functionals of vertex counts, edge counts, degrees and
/// subwindow occupation.
pub fn bounded_functionals(window: &Window) -> Vec<Functional> {
    let mut out = Vec::with_capacity(20);
    for k in [2, 4, 5, 6, 8] {
        out.push(Functional::new(format!("vertices_at_most_{k}"), move |g| {
            indicator(g.n_vertices() <= k)
        }));
    }
    for k in [3, 5, 7, 10] {
        out.push(Functional::new(format!("edges_at_most_{k}"), move |g| {
            indicator(g.n_edges() <= k)
        }));
    }
    out.push(Functional::new("edge_decay", |g| (-(g.n_edges() as f64) / 5.0).exp()));
    for k in [1, 2, 3] {
        out.push(Functional::new(format!("share_degree_at_least_{k}"), move |g| {
            fraction(
                (0..g.n_vertices()).filter(|&i| g.degree(i) >= k).count(),
                g.n_vertices(),
            )
        }));
    }
    out.push(Functional::new("max_degree_at_least_4", |g| {
        indicator((0..g.n_vertices()).any(|i| g.degree(i) >= 4))
    }));
    out.push(Functional::new("no_isolated_vertex", |g| {
        indicator((0..g.n_vertices()).all(|i| g.degree(i) > 0))
    }));
    out.push(Functional::new("share_isolated", |g| {
        fraction(
            (0..g.n_vertices()).filter(|&i| g.degree(i) == 0).count(),
            g.n_vertices(),
        )
    }));
    let subwindows = [
        ("lower_quarter_occupied", corner_box(window, 0.0, 0.5), 1),
        ("central_box_occupied", corner_box(window, 0.25, 0.75), 1),
        ("upper_quarter_two_points", corner_box(window, 0.5, 1.0), 2),
    ];
    for (name, sub, k) in subwindows {
        out.push(Functional::new(name, move |g| {
            indicator(g.vertices().count_in(&sub) >= k)
        }));
    }
    let sub = corner_box(window, 0.0, 0.5);
    out.push(Functional::new("lower_quarter_has_edge", move |g| {
        let pts = g.points();
        indicator(
            g.edges()
                .iter()
                .any(|&(i, j)| sub.contains(&pts[i]) && sub.contains(&pts[j])),
        )
    }));
    out
}

pub const SOFT_RGG_COLUMNS: [&str; 12] = [
    "point",
    "lambda1",
    "kappa1",
    "w_hat",
    "bound_wasserstein",
    "null_band",
    "within_wasserstein",
    "bound_sup_norm",
    "max_gap",
    "max_gap_excess",
    "functionals_within",
    "n_functionals",
];

/// Compares each alternative law with the target: empirical Wasserstein
/// distance against the Wasserstein bound plus null band, and the mean gaps
/// of [`bounded_functionals`] against the sup-norm bound plus three
/// standard errors.
pub fn run_soft_rgg_experiment(cfg: &SoftRggConfig, params: &GospaParams, seed: u64) -> Result<ExperimentTable> {
    run_soft_rgg_experiment_cached(cfg, params, seed, &mut NullBandCache::default())
}

pub fn run_soft_rgg_experiment_cached(
    cfg: &SoftRggConfig,
    params: &GospaParams,
    seed: u64,
    cache: &mut NullBandCache,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    let mut table = ExperimentTable::new("soft-rgg", &(cfg, params), seed, &SOFT_RGG_COLUMNS)?;
    let functionals = bounded_functionals(&cfg.window);
    let target_sampler = cfg.target.sampler(&cfg.window)?;
    let key = format!("soft-rgg-target window={:?} law={:?}", cfg.window, cfg.target);
    let null_band = cache.get_or_compute(&key, &target_sampler, cfg.n_samples, cfg.null_reps, params, seed)?;
    for (point, alt) in cfg.alternatives.iter().enumerate() {
        let alt_sampler = alt.sampler(&cfg.window)?;
        let a = draw(seed, Role::SampleA, point as u64, cfg.n_samples, &alt_sampler)?;
        let b = draw(seed, Role::SampleB, point as u64, cfg.n_samples, &target_sampler)?;
        let w_hat = empirical_wasserstein(&a, &b, params, &OtMethod::ExactOt)?.value;
        let bound_w = checked_total(soft_rgg_bound(
            &cfg.window,
            &alt.intensity,
            &cfg.target.intensity,
            &alt.connection,
            &cfg.target.connection,
            params,
            SoftRggMode::Wasserstein,
            &cfg.quadrature,
        )?)?;
        let bound_sup = checked_total(soft_rgg_bound(
            &cfg.window,
            &alt.intensity,
            &cfg.target.intensity,
            &alt.connection,
            &cfg.target.connection,
            params,
            SoftRggMode::SupNorm,
            &cfg.quadrature,
        )?)?;
        let mut max_gap = 0.0f64;
        let mut max_excess = f64::NEG_INFINITY;
        let mut within = 0usize;
        for f in &functionals {
            let fa: Vec<f64> = a.iter().map(|g| (f.eval)(g)).collect();
            let fb: Vec<f64> = b.iter().map(|g| (f.eval)(g)).collect();
            let (ma, sa) = mean_se(&fa);
            let (mb, sb) = mean_se(&fb);
            let gap = (ma - mb).abs();
            let excess = gap - (bound_sup + 3.0 * sa.hypot(sb));
            max_gap = max_gap.max(gap);
            max_excess = max_excess.max(excess);
            if excess <= 0.0 {
                within += 1;
            }
        }
        table.push(vec![
            point as f64,
            alt.intensity.as_constant().unwrap_or(f64::NAN),
            constant_connection(&alt.connection),
            w_hat,
            bound_w,
            null_band,
            f64::from(u8::from(w_hat <= bound_w + null_band)),
            bound_sup,
            max_gap,
            max_excess,
            within as f64,
            functionals.len() as f64,
        ]);
    }
    Ok(table)
}

fn constant_connection(kappa: &Connection) -> f64 {
    match kappa {
        Connection::Constant { p } => *p,
        _ => f64::NAN,
    }
}

fn checked_total(report: crate::bounds::BoundReport) -> Result<f64> {
    let total = report.recompute()?;
    if total != report.total {
        return Err(Error::numerical("bound total differs from its terms"));
    }
    Ok(total)
}
