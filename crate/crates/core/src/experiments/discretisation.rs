//! Discretisation of a random geometric graph onto the centres of a regular
//! grid of cells.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::{draw, log_log_slope_or_nan, ExperimentTable, NullBandCache, Role};
use crate::bounds::{discretisation_bound, BoundReport};
use crate::error::{Error, Result};
use crate::gospa::GospaParams;
use crate::graph::{sample_rgg, Connection, EdgeModel, SpatialGraph};
use crate::point_process::{default_burn_in, horizon_for_jumps, GibbsModel, Interaction, PointPattern};
use crate::space::{Point, QuadratureSpec, RngStream, Window};
use crate::transport::{empirical_wasserstein, OtMethod};

/// Regular partition of a window into `per_axis^d` congruent boxes, each
/// represented by its centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretisationGrid {
    window: Window,
    per_axis: usize,
}

impl DiscretisationGrid {
    pub fn regular(window: Window, per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::validation("grid needs at least one cell per axis"));
        }
        Ok(DiscretisationGrid { window, per_axis })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn n_cells(&self) -> usize {
        self.per_axis.pow(self.window.dim() as u32)
    }

    fn cell_width(&self, k: usize) -> f64 {
        self.window.side(k) / self.per_axis as f64
    }

    fn axis_index(&self, x: f64, k: usize) -> usize {
        let rel = (x - self.window.lower()[k]) / self.cell_width(k);
        (rel.floor().max(0.0) as usize).min(self.per_axis - 1)
    }

    /// Index of the cell containing `x` (upper faces belong to the lower cell
    /// only on the window boundary).
    pub fn cell_index(&self, x: &Point) -> usize {
        let mut idx = 0;
        for k in (0..self.window.dim()).rev() {
            idx = idx * self.per_axis + self.axis_index(x[k], k);
        }
        idx
    }

    pub fn cell(&self, index: usize) -> Window {
        let d = self.window.dim();
        let mut rest = index;
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..d {
            let i = rest % self.per_axis;
            rest /= self.per_axis;
            let w = self.cell_width(k);
            lo[k] = self.window.lower()[k] + i as f64 * w;
            hi[k] = if i + 1 == self.per_axis {
                self.window.upper()[k]
            } else {
                self.window.lower()[k] + (i + 1) as f64 * w
            };
        }
        Window::new(&lo, &hi).expect("cell of a valid window")
    }

    pub fn centre(&self, index: usize) -> Point {
        self.cell(index).centre()
    }

    pub fn centres(&self) -> Vec<Point> {
        (0..self.n_cells()).map(|i| self.centre(i)).collect()
    }

    /// The map t sending a point to the centre of its cell.
    pub fn project(&self, x: &Point) -> Point {
        self.centre(self.cell_index(x))
    }

    /// Largest distance between a cell centre and a point of its cell.
    pub fn r_v(&self) -> f64 {
        let d = self.window.dim();
        0.5 * (0..d).map(|k| self.cell_width(k).powi(2)).sum::<f64>().sqrt()
    }

    /// Grid with twice as many cells along every axis.
    pub fn refined(&self) -> Self {
        DiscretisationGrid {
            window: self.window.clone(),
            per_axis: 2 * self.per_axis,
        }
    }
}

/// A pairwise Gibbs RGG together with its discretisation on a grid.
///
/// The lattice model lives on the cell centres with weights equal to the
/// cell volumes and conditional intensity `λ(y_i | η)` restricted to
/// centres; a cell holds at most one point. The lattice chain is run jointly
/// with the continuous birth-death chain: both share birth proposals,
/// acceptance uniforms, death clocks of paired points and edge uniforms, so
/// each chain keeps its own law while their outputs stay close.
#[derive(Clone, Debug)]
pub struct DiscretisedModel {
    model: GibbsModel,
    kappa: Connection,
    grid: DiscretisationGrid,
    beta: f64,
}

/// Builds the discretisation of `model` with connection `kappa` on `grid`.
pub fn discretise_model(model: &GibbsModel, kappa: &Connection, grid: &DiscretisationGrid) -> Result<DiscretisedModel> {
    let beta = model
        .activity()
        .as_constant()
        .ok_or_else(|| Error::validation("discretisation needs a constant activity"))?;
    if grid.window() != model.window() {
        return Err(Error::validation("grid window differs from model window"));
    }
    kappa.validate()?;
    Ok(DiscretisedModel {
        model: model.clone(),
        kappa: kappa.clone(),
        grid: grid.clone(),
        beta,
    })
}

#[derive(Clone, Debug)]
struct Slot {
    continuous: Option<Point>,
    lattice: Option<(usize, Point)>,
}

impl DiscretisedModel {
    pub fn grid(&self) -> &DiscretisationGrid {
        &self.grid
    }

    /// Lattice weight α_Λ(y_i), the volume of cell `i`.
    pub fn cell_weight(&self, i: usize) -> f64 {
        self.grid.cell(i).volume()
    }

    /// Continuous RGG and discretised RGG from the joint chain.
    pub fn sample_coupled<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(SpatialGraph, SpatialGraph)> {
        let slots = self.run_chains(rng)?;
        Ok(self.graphs(&slots, rng))
    }

    /// Discretised RGG: vertices on cell centres, edges with κ at the centres.
    pub fn sample_discrete<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpatialGraph> {
        Ok(self.sample_coupled(rng)?.1)
    }

    /// Intermediate RGG: each lattice point moved to a uniform position in its
    /// cell, edges with κ∘t.
    pub fn sample_intermediate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpatialGraph> {
        let discrete = self.sample_discrete(rng)?;
        let moved = discrete
            .points()
            .iter()
            .map(|y| self.grid.cell(self.grid.cell_index(y)).uniform_point(rng))
            .collect();
        Ok(SpatialGraph::from_parts_unchecked(
            PointPattern::from_vec_unchecked(moved),
            discrete.edges().clone(),
        ))
    }

    fn run_chains<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<Slot>> {
        let total = self.beta * self.model.window().volume();
        let horizon = horizon_for_jumps(&self.model, default_burn_in(&self.model)?)?;
        let mut occupied = vec![false; self.grid.n_cells()];
        let mut slots: Vec<Slot> = Vec::new();
        let mut t = 0.0;
        loop {
            let rate = total + slots.len() as f64;
            if rate == 0.0 {
                break;
            }
            t += Exp::new(rate).expect("positive rate").sample(rng);
            if t > horizon {
                break;
            }
            if rng.random::<f64>() * rate < total {
                let x = self.model.window().uniform_point(rng);
                let level = rng.random::<f64>() * self.beta;
                let continuous_pts: Vec<Point> = slots.iter().filter_map(|s| s.continuous).collect();
                let keep_continuous = level < self.model.intensity_given(&x, &continuous_pts);
                let cell = self.grid.cell_index(&x);
                let keep_lattice = !occupied[cell] && {
                    let centre = self.grid.centre(cell);
                    let lattice_pts: Vec<Point> =
                        slots.iter().filter_map(|s| s.lattice.as_ref().map(|l| l.1)).collect();
                    level < self.model.intensity_given(&centre, &lattice_pts)
                };
                if keep_continuous || keep_lattice {
                    if keep_lattice {
                        occupied[cell] = true;
                    }
                    slots.push(Slot {
                        continuous: keep_continuous.then_some(x),
                        lattice: keep_lattice.then(|| (cell, self.grid.centre(cell))),
                    });
                }
            } else {
                let slot = slots.swap_remove(rng.random_range(0..slots.len()));
                if let Some((cell, _)) = slot.lattice {
                    occupied[cell] = false;
                }
            }
        }
        Ok(slots)
    }

    fn graphs<R: Rng + ?Sized>(&self, slots: &[Slot], rng: &mut R) -> (SpatialGraph, SpatialGraph) {
        let index = |pick: &dyn Fn(&Slot) -> bool| {
            let mut next = 0;
            slots
                .iter()
                .map(|s| {
                    pick(s).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect::<Vec<Option<usize>>>()
        };
        let cont_index = index(&|s| s.continuous.is_some());
        let lat_index = index(&|s| s.lattice.is_some());
        let mut cont_edges = std::collections::BTreeSet::new();
        let mut lat_edges = std::collections::BTreeSet::new();
        for i in 0..slots.len() {
            for j in i + 1..slots.len() {
                let u = rng.random::<f64>();
                if let (Some(x), Some(y)) = (&slots[i].continuous, &slots[j].continuous) {
                    if u < self.kappa.prob(x, y) {
                        cont_edges.insert((cont_index[i].expect("indexed"), cont_index[j].expect("indexed")));
                    }
                }
                if let (Some((_, x)), Some((_, y))) = (&slots[i].lattice, &slots[j].lattice) {
                    if u < self.kappa.prob(x, y) {
                        lat_edges.insert((lat_index[i].expect("indexed"), lat_index[j].expect("indexed")));
                    }
                }
            }
        }
        let cont_pts = slots.iter().filter_map(|s| s.continuous).collect();
        let lat_pts = slots.iter().filter_map(|s| s.lattice.as_ref().map(|l| l.1)).collect();
        (
            SpatialGraph::from_parts_unchecked(PointPattern::from_vec_unchecked(cont_pts), cont_edges),
            SpatialGraph::from_parts_unchecked(PointPattern::from_vec_unchecked(lat_pts), lat_edges),
        )
    }
}

/// Discretisation sweep over grids with `per_axis` cells along each axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub model: GibbsModel,
    pub kappa: Connection,
    /// Strictly increasing cell counts per axis.
    pub per_axis: Vec<usize>,
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
    QuadratureSpec::monte_carlo(200_000, 0)
}

impl DiscretisationConfig {
    /// β = 8 on the unit square with a ramp interaction and a ramp connection,
    /// on grids of 8 to 128 cells per axis.
    pub fn example() -> Self {
        let model = GibbsModel::pairwise(
            Window::unit(2),
            crate::point_process::Activity::constant(8.0),
            Interaction::Ramp {
                inner: 0.05,
                outer: 0.15,
                gamma: 0.2,
            },
        )
        .expect("valid example model");
        DiscretisationConfig {
            model,
            kappa: Connection::Ramp {
                p_near: 0.8,
                inner: 0.1,
                outer: 0.4,
            },
            per_axis: vec![8, 16, 32, 64, 128],
            n_samples: default_samples(),
            null_reps: default_null_reps(),
            quadrature: default_quadrature(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.activity().as_constant().is_none() {
            return Err(Error::validation("discretisation needs a constant activity"));
        }
        self.kappa.validate()?;
        self.quadrature.validate()?;
        if self.per_axis.is_empty() || self.per_axis.contains(&0) {
            return Err(Error::validation("per_axis needs positive cell counts"));
        }
        if self.per_axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("per_axis must be strictly increasing"));
        }
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be positive"));
        }
        Ok(())
    }

    /// Lipschitz constants of φ and κ, when both are finite.
    pub fn lipschitz_constants(&self) -> Option<(f64, f64)> {
        Some((self.model.interaction().lipschitz()?, self.kappa.lipschitz()?))
    }
}

pub const DISCRETISATION_COLUMNS: [&str; 11] = [
    "per_axis",
    "r_v",
    "w_hat",
    "bound_general",
    "bound_lipschitz",
    "null_band",
    "within_general",
    "within_lipschitz",
    "slope_w_hat",
    "slope_bound_general",
    "slope_bound_lipschitz",
];

fn checked_total(report: &BoundReport) -> Result<f64> {
    let total = report.recompute()?;
    if total != report.total {
        return Err(Error::numerical("bound total differs from its terms"));
    }
    Ok(total)
}

/// For each grid: empirical Wasserstein distance between continuous and
/// discretised RGG samples, the general and Lipschitz bounds, and the null
/// band of the continuous RGG; slopes are regressions on `r_V`.
pub fn run_discretisation_experiment(
    cfg: &DiscretisationConfig,
    params: &GospaParams,
    seed: u64,
) -> Result<ExperimentTable> {
    run_discretisation_experiment_cached(cfg, params, seed, &mut NullBandCache::default())
}

pub fn run_discretisation_experiment_cached(
    cfg: &DiscretisationConfig,
    params: &GospaParams,
    seed: u64,
    cache: &mut NullBandCache,
) -> Result<ExperimentTable> {
    cfg.validate()?;
    let mut table = ExperimentTable::new("discretisation", &(cfg, params), seed, &DISCRETISATION_COLUMNS)?;
    let edge_model = EdgeModel::product(cfg.kappa.clone());
    let sampler = |rng: &mut RngStream| sample_rgg(&cfg.model, &edge_model, rng);
    let key = format!("discretisation-target model={:?} kappa={:?}", cfg.model, cfg.kappa);
    let null_band = cache.get_or_compute(&key, &sampler, cfg.n_samples, cfg.null_reps, params, seed)?;
    let mut rows = Vec::with_capacity(cfg.per_axis.len());
    for (point, &per_axis) in cfg.per_axis.iter().enumerate() {
        let grid = DiscretisationGrid::regular(cfg.model.window().clone(), per_axis)?;
        let discretised = discretise_model(&cfg.model, &cfg.kappa, &grid)?;
        let pairs = draw(seed, Role::SampleA, point as u64, cfg.n_samples, |rng| {
            discretised.sample_coupled(rng)
        })?;
        let (continuous, lattice): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let w_hat = empirical_wasserstein(&continuous, &lattice, params, &OtMethod::ExactOt)?.value;
        let bound = discretisation_bound(
            &cfg.model,
            &cfg.kappa,
            &grid,
            cfg.lipschitz_constants(),
            params,
            &cfg.quadrature,
        )?;
        let general = checked_total(&bound.general)?;
        let lipschitz = match &bound.lipschitz {
            Some(report) => checked_total(report)?,
            None => f64::NAN,
        };
        rows.push([per_axis as f64, grid.r_v(), w_hat, general, lipschitz]);
    }
    let r_v: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let column = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let slope_w = log_log_slope_or_nan(&r_v, &column(2));
    let slope_general = log_log_slope_or_nan(&r_v, &column(3));
    let slope_lipschitz = log_log_slope_or_nan(&r_v, &column(4));
    for [per_axis, r_v, w_hat, general, lipschitz] in rows {
        let within = |b: f64| f64::from(u8::from(w_hat <= b + null_band));
        table.push(vec![
            per_axis,
            r_v,
            w_hat,
            general,
            lipschitz,
            null_band,
            within(general),
            if lipschitz.is_nan() {
                f64::NAN
            } else {
                within(lipschitz)
            },
            slope_w,
            slope_general,
            slope_lipschitz,
        ]);
    }
    Ok(table)
}
