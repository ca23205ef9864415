//! Acceptance criteria. Each test prints one PASS/FAIL line with its
//! runtime; tests hold a shared lock so runtimes are not inflated by
//! concurrent criteria.

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use srg::bounds::{
    coupling_bound_bstar, glauber_expected_coupling_time, pip_bstar, simulate_glauber_coupling, stein_factor_edge,
    stein_factor_vertex, NStar,
};
use srg::experiments::{
    boolean::run_boolean_experiment_cached, run_discretisation_experiment, run_soft_rgg_experiment, BooleanConfig,
    DiscretisationConfig, ExperimentTable, NullBandCache, SoftRggConfig,
};
use srg::gbdp::{generator_apply, marginal_check, run_coupled_gbdp, run_gbdp, CouplingOptions, GbdpOptions};
use srg::gospa::{gospa, gospa_bruteforce, GospaParams, GospaVariant};
use srg::graph::{
    graph_gnz_residual, graph_gnz_test_suite, sample_rgg, Connection, EdgeModel, RadiusTransform, SpatialGraph,
};
use srg::point_process::{
    gnz_residual, gnz_test_suite, sample_poisson, Activity, GibbsModel, Interaction, PointPattern,
};
use srg::space::{BaseMetricParams, Point, QuadratureSpec, RngStream, Window};
use srg::stats::{ks_two_sample, mean_not_above, mean_se};

type GraphFunctional = dyn Fn(&SpatialGraph) -> f64 + Sync;

static SERIAL: Mutex<()> = Mutex::new(());

/// Runs `body`, prints the verdict line and fails the test unless the
/// criterion holds within `limit_secs`.
fn criterion(id: u32, title: &str, limit_secs: f64, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, detail) = body();
    let secs = start.elapsed().as_secs_f64();
    let pass = ok && secs < limit_secs;
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("{verdict} criterion {id:>2}: {title} | {detail} | {secs:.2} s (limit {limit_secs} s)");
    writeln!(std::io::stdout().lock(), "{line}").unwrap();
    assert!(pass, "{line}");
}

fn params(cv: f64, ce: f64, variant: GospaVariant) -> GospaParams {
    GospaParams::new(BaseMetricParams::new(cv, ce).unwrap(), variant)
}

fn random_graph(rng: &mut ChaCha8Rng, max_size: usize) -> SpatialGraph {
    let n = rng.random_range(0..=max_size);
    let pts: Vec<Point> = (0..n)
        .map(|_| Point::new(&[rng.random::<f64>() * 1.5, rng.random::<f64>() * 1.5]))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < 0.5 {
                edges.push((i, j));
            }
        }
    }
    SpatialGraph::new(PointPattern::new(pts).unwrap(), edges).unwrap()
}

/// Equality up to the rounding of a different summation order.
fn within_ulps(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

fn row_summary(table: &ExperimentTable, columns: &[&str]) -> String {
    table
        .rows
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|c| {
                    let k = table.columns.iter().position(|x| x == c).unwrap();
                    format!("{c}={:.4}", row[k])
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn criterion_01_stein_factors() {
    criterion(1, "Stein factor values and decay", 1.0, || {
        let p1 = params(1.0, 1.0, GospaVariant::One);
        let ce = stein_factor_edge(1.0, 1.0).unwrap();
        let cv = stein_factor_vertex(1.0, &p1).unwrap();
        let mut ok = ce == 0.25 && cv == 1.5;
        let lambdas = [10.0, 1e2, 1e3, 1e4, 1e5, 1e6];
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for &lam in &lambdas {
            let v = stein_factor_vertex(lam, &p1).unwrap();
            let e = stein_factor_edge(lam, 1.0).unwrap();
            ok &= v < prev.0 && e < prev.1;
            prev = (v, e);
        }
        ok &= prev.0 < 1e-4 && prev.1 < 1e-5;
        (
            ok,
            format!(
                "c_E(1)={ce} c_V(1)={cv} c_V(1e6)={:.3e} c_E(1e6)={:.3e}",
                prev.0, prev.1
            ),
        )
    });
}

/// Termwise Kahan-compensated evaluation of B* with the integral taken
/// term by term.
fn bstar_oracle(eps: f64, c: f64, n: u64) -> f64 {
    fn kahan(terms: impl Iterator<Item = f64>) -> f64 {
        let (mut s, mut comp) = (0.0f64, 0.0f64);
        for t in terms {
            let y = t - comp;
            let u = s + y;
            comp = (u - s) - y;
            s = u;
        }
        s
    }
    let coeffs: Vec<f64> = (0..600u64)
        .scan(1.0 / n as f64, |a, k| {
            let cur = *a;
            *a *= c / (n + k + 1) as f64;
            Some(cur)
        })
        .collect();
    let s = kahan(coeffs.iter().copied());
    let i = kahan(coeffs.iter().enumerate().map(|(k, a)| a * c / (n + k as u64) as f64));
    let head = kahan((1..n).map(|i| eps.powi(i as i32 - 1) / i as f64));
    eps.powi(n as i32 - 1) * (s + i) + (1.0 + eps) * head
}

#[test]
fn criterion_02_bstar_oracle() {
    criterion(2, "B* against compensated series oracle", 5.0, || {
        let mut worst = 0.0f64;
        for eps in [0.01, 0.2, 0.5, 0.8, 0.95] {
            for c in [0.1, 1.0, 3.0, 8.0, 15.0] {
                for n in [2u64, 7, 30] {
                    let got = coupling_bound_bstar(eps, c, NStar::Finite(n)).unwrap();
                    let want = bstar_oracle(eps, c, n);
                    worst = worst.max(((got - want) / want).abs());
                }
            }
        }
        let at_zero = coupling_bound_bstar(0.0, 3.0, NStar::Infinite).unwrap();
        let near_zero = coupling_bound_bstar(1e-12, 3.0, NStar::Infinite).unwrap();
        let remark = coupling_bound_bstar(0.5, 1.0, NStar::Infinite).unwrap();
        let remark_err = (remark - 3.0 * 2f64.ln()).abs();
        let ok = worst < 1e-10 && at_zero == 1.0 && (near_zero - 1.0).abs() < 1e-11 && remark_err < 1e-12;
        (
            ok,
            format!("max rel err {worst:.2e}, B*(0)={at_zero}, |B*(1/2,∞) − 3 log 2|={remark_err:.1e}"),
        )
    });
}

#[test]
fn criterion_03_gospa() {
    criterion(3, "GOSPA oracle, axioms, caps and penalties", 60.0, || {
        let settings = [
            params(1.0, 1.0, GospaVariant::One),
            params(1.0, 1.0, GospaVariant::Two),
            params(0.5, 2.0, GospaVariant::One),
            params(2.0, 0.5, GospaVariant::Two),
        ];
        let checks: Vec<(f64, bool, f64, bool)> = (0..10_000u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(k);
                let p = settings[(k % 4) as usize];
                let a = random_graph(&mut rng, 7);
                let b = random_graph(&mut rng, 7);
                let c = random_graph(&mut rng, 7);
                let ab = gospa(&a, &b, &p);
                let oracle_err = (ab - gospa_bruteforce(&a, &b, &p).unwrap()).abs();
                let symmetric = ab == gospa(&b, &a, &p);
                let (ac, cb) = (gospa(&a, &c, &p), gospa(&c, &b, &p));
                let triangle_excess = ab - (ac + cb);
                let capped = [ab, ac, cb].iter().all(|&v| v <= p.cap());
                (oracle_err, symmetric, triangle_excess, capped)
            })
            .collect();
        let oracle = checks.iter().map(|c| c.0).fold(0.0, f64::max);
        let symmetric = checks.iter().all(|c| c.1);
        let triangle = checks.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let capped = checks.iter().all(|c| c.3);

        let mut penalties_exact = true;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let n = rng.random_range(1..=6usize);
            let pts: Vec<Point> = (0..=n).map(|i| Point::new(&[3.0 * i as f64, 0.0])).collect();
            let mut shared = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<bool>() {
                        shared.push((i, j));
                    }
                }
            }
            let extra: Vec<(usize, usize)> = (0..n).filter(|_| rng.random::<bool>()).map(|i| (i, n)).collect();
            let a = SpatialGraph::new(PointPattern::new(pts[..n].to_vec()).unwrap(), shared.clone()).unwrap();
            let b =
                SpatialGraph::new(PointPattern::new(pts).unwrap(), shared.into_iter().chain(extra.clone())).unwrap();
            let m = (n + 1) as f64;
            let p1 = params(1.0, 1.0, GospaVariant::One);
            let p2 = params(1.0, 1.0, GospaVariant::Two);
            let deg = extra.len() as f64;
            penalties_exact &= within_ulps(gospa(&a, &b, &p1), p1.penalty() / m);
            penalties_exact &= within_ulps(gospa(&a, &b, &p2), (1.0 + 1.0 + deg / (m - 1.0)) / m);
        }
        let caps_formula = settings.iter().all(|p| {
            let i = f64::from(p.variant.index());
            p.cap() == p.cv() + 0.5 * i * p.ce() && p.penalty() == p.cv() + i * p.ce()
        });
        let ok = oracle <= 1e-12 && symmetric && triangle <= 1e-9 && capped && penalties_exact && caps_formula;
        (
            ok,
            format!(
                "oracle err {oracle:.1e}, symmetric {symmetric}, max triangle excess {triangle:.2e}, caps {capped}, penalties {penalties_exact}"
            ),
        )
    });
}

#[test]
fn criterion_04_gnz() {
    criterion(4, "GNZ residuals within 3 se", 90.0, || {
        let w = Window::unit(2);
        let models = [
            (
                "poisson",
                GibbsModel::poisson(w.clone(), Activity::constant(8.0)).unwrap(),
            ),
            (
                "hard-core",
                GibbsModel::pairwise(w.clone(), Activity::constant(20.0), Interaction::hard_core(0.08)).unwrap(),
            ),
        ];
        let spec = QuadratureSpec::monte_carlo(64, 0);
        let edges = EdgeModel::product(Connection::Ramp {
            p_near: 0.9,
            inner: 0.1,
            outer: 0.5,
        });
        let mut ok = true;
        let mut worst = 0.0f64;
        let mut n_checks = 0;
        for (k, (_, model)) in models.iter().enumerate() {
            for (j, (_, h)) in gnz_test_suite(&w).iter().enumerate() {
                let mut rng = RngStream::new(40 + k as u64, j as u64);
                let r = gnz_residual(model, h.as_ref(), 10_000, &spec, &mut rng).unwrap();
                worst = worst.max(r.z_score());
                ok &= r.z_score() <= 3.0;
                n_checks += 1;
            }
            for (j, (_, h)) in graph_gnz_test_suite(&w).iter().enumerate() {
                let mut rng = RngStream::new(50 + k as u64, j as u64);
                let r = graph_gnz_residual(model, &edges, h.as_ref(), 10_000, &spec, &mut rng).unwrap();
                worst = worst.max(r.z_score());
                ok &= r.z_score() <= 3.0;
                n_checks += 1;
            }
        }
        (ok, format!("{n_checks} residuals, max |lhs−rhs|/se = {worst:.2}"))
    });
}

#[test]
fn criterion_05_gbdp_stationarity() {
    criterion(5, "GBDP stationarity", 180.0, || {
        let w = Window::unit(2);
        let model = GibbsModel::poisson(w.clone(), Activity::constant(10.0)).unwrap();
        let edges = EdgeModel::product(Connection::constant(0.3));
        let empty = SpatialGraph::edgeless(PointPattern::empty());
        let long_run: Vec<f64> = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(5, i);
                let path = run_gbdp(&model, &edges, &empty, 12.0, &GbdpOptions::default(), &mut rng).unwrap();
                path.final_state.graph.n_vertices() as f64
            })
            .collect();
        let exact: Vec<f64> = (0..1000u64)
            .map(|i| sample_poisson(&model, &mut RngStream::new(6, i)).unwrap().len() as f64)
            .collect();
        let ks = ks_two_sample(&long_run, &exact);
        let mut ok = ks.statistic < ks.critical_5pct;

        let sub = Window::new(&[0.0, 0.0], &[0.5, 0.5]).unwrap();
        let functionals: Vec<(&str, Box<GraphFunctional>)> = vec![
            ("vertices", Box::new(|g: &SpatialGraph| g.n_vertices() as f64)),
            ("edges", Box::new(|g: &SpatialGraph| g.n_edges() as f64)),
            (
                "at_most_8_vertices",
                Box::new(|g: &SpatialGraph| f64::from(u8::from(g.n_vertices() <= 8))),
            ),
            (
                "subwindow_count",
                Box::new(move |g: &SpatialGraph| g.vertices().count_in(&sub) as f64),
            ),
            (
                "edge_decay",
                Box::new(|g: &SpatialGraph| (-(g.n_edges() as f64) / 10.0).exp()),
            ),
        ];
        let spec = QuadratureSpec::monte_carlo(16, 0);
        let mut worst = 0.0f64;
        for (j, (_, h)) in functionals.iter().enumerate() {
            let values: Vec<f64> = (0..4000u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = RngStream::new(70 + j as u64, i);
                    let g = sample_rgg(&model, &edges, &mut rng).unwrap();
                    generator_apply(&model, &edges, h.as_ref(), &g, &spec, 4, &mut rng).unwrap()
                })
                .collect();
            let (mean, se) = mean_se(&values);
            worst = worst.max(mean.abs() / se);
            ok &= mean.abs() <= 3.0 * se;
        }
        (
            ok,
            format!(
                "KS D={:.4} (5% critical {:.4}); max |E 𝒢h|/se = {worst:.2} over 5 functionals",
                ks.statistic, ks.critical_5pct
            ),
        )
    });
}

#[test]
fn criterion_06_coupling() {
    criterion(6, "coupling-time laws and marginals", 300.0, || {
        let w = Window::unit(2);
        let poisson = GibbsModel::poisson(w.clone(), Activity::constant(5.0)).unwrap();
        let edges = EdgeModel::product(Connection::constant(0.4));
        let opts = CouplingOptions::default();
        let horizon = 60.0;

        // pure edge difference between two vertices
        let pts = PointPattern::new(vec![Point::new(&[0.2, 0.2]), Point::new(&[0.7, 0.6])]).unwrap();
        let with_edge = SpatialGraph::new(pts.clone(), [(0, 1)]).unwrap();
        let without = SpatialGraph::edgeless(pts);
        let edge_times: Vec<f64> = (0..10_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(61, i);
                run_coupled_gbdp(&poisson, &edges, &with_edge, &without, horizon, &opts, &mut rng)
                    .unwrap()
                    .censored_coupling_time()
            })
            .collect();
        let (edge_mean, edge_se) = mean_se(&edge_times);
        let edge_ok = (edge_mean - 0.5).abs() <= 3.0 * edge_se;

        // one extra vertex
        let extra_times = |model: &GibbsModel, seed: u64| -> (Vec<f64>, usize) {
            let runs: Vec<(f64, bool)> = (0..5000u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = RngStream::new(seed, i);
                    let base = sample_rgg(model, &edges, &mut rng).unwrap();
                    let x = loop {
                        let x = w.uniform_point(&mut rng);
                        if model.intensity_given(&x, base.points()) > 0.0 {
                            break x;
                        }
                    };
                    let bigger = base.with_vertex(x, &[]).unwrap();
                    let path = run_coupled_gbdp(model, &edges, &base, &bigger, horizon, &opts, &mut rng).unwrap();
                    (path.censored_coupling_time(), path.coupling_time.is_some())
                })
                .collect();
            let uncoupled = runs.iter().filter(|r| !r.1).count();
            (runs.into_iter().map(|r| r.0).collect(), uncoupled)
        };
        let (poisson_times, poisson_open) = extra_times(&poisson, 62);
        let poisson_ok = poisson_open == 0 && mean_not_above(&poisson_times, 1.0, 0.01);

        let pip = GibbsModel::pairwise(w.clone(), Activity::constant(10.0), Interaction::hard_core(0.1)).unwrap();
        let bstar = pip_bstar(&pip, &QuadratureSpec::grid(16)).unwrap().total;
        let (pip_times, pip_open) = extra_times(&pip, 63);
        let pip_ok = pip_open == 0 && mean_not_above(&pip_times, bstar, 0.01);

        // marginals of the first component
        let start_a = sample_rgg(&poisson, &edges, &mut RngStream::new(64, 0)).unwrap();
        let start_b = sample_rgg(&poisson, &edges, &mut RngStream::new(64, 1)).unwrap();
        let times = vec![0.25, 0.5, 1.0, 2.0, 4.0];
        let coupled_opts = CouplingOptions {
            observe_at: times.clone(),
            stop_when_coupled: false,
            record_states: false,
        };
        let direct_opts = GbdpOptions {
            observe_at: times,
            record_jumps: false,
        };
        let coupled: Vec<_> = (0..2000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(65, i);
                run_coupled_gbdp(&poisson, &edges, &start_a, &start_b, 4.0, &coupled_opts, &mut rng).unwrap()
            })
            .collect();
        let direct: Vec<_> = (0..2000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(66, i);
                run_gbdp(&poisson, &edges, &start_a, 4.0, &direct_opts, &mut rng).unwrap()
            })
            .collect();
        let check = marginal_check(&coupled, &direct).unwrap();
        let marginal_ok = check.statistics.len() == 10 && check.min_p > 0.001;

        let (pm, _) = mean_se(&poisson_times);
        let (qm, _) = mean_se(&pip_times);
        (
            edge_ok && poisson_ok && pip_ok && marginal_ok,
            format!(
                "edge-only mean {edge_mean:.4}±{edge_se:.4}; extra vertex mean {pm:.3} (≤1); hard-core mean {qm:.3} (≤B*={bstar:.3}); marginal min p {:.3}",
                check.min_p
            ),
        )
    });
}

#[test]
fn criterion_07_glauber() {
    criterion(7, "Glauber coupling time n·H_m", 120.0, || {
        let mut ok = true;
        let mut worst = 0.0f64;
        for n in 4..=8usize {
            let kappa: Vec<f64> = (0..n).map(|i| 0.2 + 0.6 * i as f64 / n as f64).collect();
            for m in [1, n / 2, n] {
                let sim = simulate_glauber_coupling(&kappa, m, 100_000, 700 + (n * 10 + m) as u64).unwrap();
                let exact = glauber_expected_coupling_time(n as u64, m as u64).unwrap();
                let rel = (sim.mean - exact).abs() / exact;
                worst = worst.max(rel);
                ok &= rel < 0.02;
            }
        }
        (ok, format!("max relative deviation {:.3}%", 100.0 * worst))
    });
}

#[test]
fn criterion_08_soft_rgg() {
    criterion(8, "soft-RGG bounds on a 3×3 perturbation grid", 600.0, || {
        let cfg = SoftRggConfig::perturbation_grid();
        let table = run_soft_rgg_experiment(&cfg, &GospaParams::default(), 8).unwrap();
        let within_w = table.column("within_wasserstein").unwrap().iter().all(|&v| v == 1.0);
        let functionals = table.column("functionals_within").unwrap();
        let all_functionals = table.column("n_functionals").unwrap();
        let within_sup = functionals.iter().zip(&all_functionals).all(|(a, b)| a == b);
        (
            table.rows.len() == 9 && within_w && within_sup,
            row_summary(
                &table,
                &[
                    "lambda1",
                    "kappa1",
                    "w_hat",
                    "bound_wasserstein",
                    "null_band",
                    "max_gap_excess",
                ],
            ),
        )
    });
}

#[test]
fn criterion_09_boolean() {
    criterion(9, "Boolean percolation sweep", 600.0, || {
        let mut cache = NullBandCache::default();
        let mut ok = true;
        let mut details = Vec::new();
        for gamma in [0.3, 0.5, 0.7] {
            let cfg = BooleanConfig {
                dim: 2,
                r0: 1.0,
                tail_exponent: 2.0,
                contraction_exponent: 2.0,
                transform: RadiusTransform::Power { gamma, delta: 0.0 },
                r_list: (0..5).map(|k| 10f64.powf(4.0 + 0.25 * k as f64)).collect(),
                window: Window::cube(2, 4.0).unwrap(),
                centre_intensity: 0.4,
                n_samples: 300,
                null_reps: 50,
            };
            let table = run_boolean_experiment_cached(&cfg, &GospaParams::default(), 9, &mut cache).unwrap();
            let within = table.column("within_bound").unwrap().iter().all(|&v| v == 1.0);
            let slope_bound = table.column("slope_bound").unwrap()[0];
            let slope_w = table.column("slope_w_hat").unwrap()[0];
            ok &= within && (slope_bound + (1.0 - gamma)).abs() <= 0.05;
            let w = table.column("w_hat").unwrap();
            let b = table.column("bound").unwrap();
            details.push(format!(
                "γ={gamma}: within {within}, bound slope {slope_bound:.4}, W slope {slope_w:.3} (informational, target {:.2}), W {:.4}..{:.4}, bound {:.4}..{:.4}",
                -(1.0 - gamma),
                w[0],
                w[w.len() - 1],
                b[0],
                b[b.len() - 1]
            ));
        }
        (ok, details.join("; "))
    });
}

#[test]
fn criterion_10_discretisation() {
    criterion(10, "discretisation convergence", 600.0, || {
        let cfg = DiscretisationConfig::example();
        let table = run_discretisation_experiment(&cfg, &GospaParams::default(), 10).unwrap();
        let slope_lip = table.column("slope_bound_lipschitz").unwrap()[0];
        let slope_w = table.column("slope_w_hat").unwrap()[0];
        let within = table
            .column("within_general")
            .unwrap()
            .iter()
            .chain(&table.column("within_lipschitz").unwrap())
            .all(|&v| v == 1.0);
        let ok = table.rows.len() == 5 && (slope_lip - 1.0).abs() < 1e-9 && (slope_w - 1.0).abs() <= 0.2 && within;
        (
            ok,
            format!(
                "Lipschitz slope {slope_lip:.6}, W slope {slope_w:.3}; {}",
                row_summary(
                    &table,
                    &["per_axis", "w_hat", "bound_general", "bound_lipschitz", "null_band"]
                )
            ),
        )
    });
}

#[test]
fn criterion_11_reproducibility() {
    criterion(11, "byte-identical CSV across reruns and thread counts", 300.0, || {
        let gospa_params = GospaParams::default();
        let boolean = BooleanConfig {
            dim: 2,
            r0: 1.0,
            tail_exponent: 2.0,
            contraction_exponent: 2.0,
            transform: RadiusTransform::Power { gamma: 0.5, delta: 0.0 },
            r_list: vec![1e4, 1e5],
            window: Window::cube(2, 4.0).unwrap(),
            centre_intensity: 0.4,
            n_samples: 40,
            null_reps: 20,
        };
        boolean.validate().unwrap();
        let mut soft = SoftRggConfig::perturbation_grid();
        soft.alternatives.truncate(2);
        soft.n_samples = 40;
        soft.null_reps = 20;
        let mut disc = DiscretisationConfig::example();
        disc.per_axis = vec![8, 16];
        disc.n_samples = 40;
        disc.null_reps = 20;
        disc.quadrature = QuadratureSpec::monte_carlo(20_000, 3);
        let run_all = || -> Vec<String> {
            vec![
                run_boolean_experiment_cached(&boolean, &gospa_params, 7, &mut NullBandCache::default())
                    .unwrap()
                    .to_csv_string(),
                run_soft_rgg_experiment(&soft, &gospa_params, 7)
                    .unwrap()
                    .to_csv_string(),
                run_discretisation_experiment(&disc, &gospa_params, 7)
                    .unwrap()
                    .to_csv_string(),
            ]
        };
        let in_pool = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(run_all)
        };
        let one = in_pool(1);
        let four = in_pool(4);
        let again = in_pool(1);
        let ok = one == four && one == again;
        (
            ok,
            format!("{} tables compared at 1 and 4 threads and on rerun", one.len()),
        )
    });
}
