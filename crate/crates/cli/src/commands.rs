use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use srg::bounds::{
    boolean_bound, coupling_bound_bstar_with, discretisation_bound, pip_bstar, soft_rgg_bound, stein_factor_edge,
    stein_factor_vertex, InfiniteForm, NStar, SoftRggMode,
};
use srg::experiments::{
    run_boolean_experiment, run_discretisation_experiment, run_soft_rgg_experiment, DiscretisationGrid, ExperimentTable,
};
use srg::gbdp::{run_coupled_gbdp, run_gbdp, write_coupled_csv, write_trajectories_csv, CouplingOptions, GbdpOptions};
use srg::gospa::gospa;
use srg::graph::{sample_rgg, SpatialGraph};
use srg::point_process::PointPattern;
use srg::space::RngStream;
use srg::transport::{empirical_wasserstein, OtMethod};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::{BoundCommand, Command, ExperimentKind, InfiniteFormArg, OtMethodArg, RunArgs};

/// Version of the JSON sample document.
const SAMPLE_SCHEMA_VERSION: u32 = 1;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Sample { run, count } => sample(&run, count),
        Command::Gbdp { run, start } => gbdp(&run, start.as_deref()),
        Command::Couple { run, a, b, no_stop } => couple(&run, &a, &b, no_stop),
        Command::Gospa { a, b, metric } => {
            let params = metric.params()?;
            let value = gospa(&read_graph(&a)?, &read_graph(&b)?, &params);
            emit(&value.to_string())?;
            Ok(())
        }
        Command::Wasserstein {
            a,
            b,
            metric,
            method,
            regularisation,
        } => {
            let params = metric.params()?;
            let method = match method {
                OtMethodArg::Exact => OtMethod::ExactOt,
                OtMethodArg::Sinkhorn => OtMethod::sinkhorn(regularisation),
            };
            let estimate = empirical_wasserstein(&read_sample(&a)?, &read_sample(&b)?, &params, &method)?;
            emit(&serde_json::to_string_pretty(&estimate)?)?;
            Ok(())
        }
        Command::Bound(bound) => run_bound(bound),
        Command::Experiment { kind, run } => experiment(kind, &run),
    }
}

/// Configuration plus the seed and output resolved from flags and file.
struct Resolved {
    config: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Resolved {
    fn load(run: &RunArgs) -> Result<Self, CliError> {
        let config = parse_config(&run.config)?;
        let seed = run.seed.or(config.seed).unwrap_or(0);
        let out = run.out.clone().or_else(|| config.output.clone());
        Ok(Resolved { config, seed, out })
    }

    fn write(&self, body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
        match &self.out {
            Some(path) => {
                let file = File::create(path)
                    .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                body(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut w = stdout.lock();
                body(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    fn provenance(&self, out: &mut dyn Write, command: &str) -> Result<(), CliError> {
        writeln!(out, "# schema_version=1")?;
        writeln!(out, "# command={command}")?;
        writeln!(out, "# config_sha256={}", self.config.hash()?)?;
        writeln!(out, "# seed={}", self.seed)?;
        Ok(())
    }
}

fn sample(run: &RunArgs, count: usize) -> Result<(), CliError> {
    let r = Resolved::load(run)?;
    let vertex = RunConfig::require(&r.config.vertex, "vertex")?;
    let edge = RunConfig::require(&r.config.edge, "edge")?;
    let graphs = (0..count as u64)
        .map(|i| {
            let g = sample_rgg(vertex, edge, &mut RngStream::new(r.seed, i))?;
            Ok(serde_json::from_str::<Value>(&g.to_json())?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let doc = json!({
        "schema_version": SAMPLE_SCHEMA_VERSION,
        "config_sha256": r.config.hash()?,
        "seed": r.seed,
        "graphs": graphs,
    });
    r.write(|out| {
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out)?;
        Ok(())
    })
}

fn gbdp(run: &RunArgs, start: Option<&Path>) -> Result<(), CliError> {
    let r = Resolved::load(run)?;
    let vertex = RunConfig::require(&r.config.vertex, "vertex")?;
    let edge = RunConfig::require(&r.config.edge, "edge")?;
    let dynamics = RunConfig::require(&r.config.dynamics, "dynamics")?;
    let start = match start {
        Some(path) => read_graph(path)?,
        None => SpatialGraph::edgeless(PointPattern::empty()),
    };
    let options = GbdpOptions {
        observe_at: dynamics.observe_at.clone(),
        record_jumps: true,
    };
    let paths = (0..dynamics.paths as u64)
        .map(|i| {
            run_gbdp(
                vertex,
                edge,
                &start,
                dynamics.horizon,
                &options,
                &mut RngStream::new(r.seed, i),
            )
        })
        .collect::<srg::Result<Vec<_>>>()?;
    r.write(|out| {
        r.provenance(out, "gbdp")?;
        write_trajectories_csv(&paths, out)?;
        Ok(())
    })
}

fn couple(run: &RunArgs, a: &Path, b: &Path, no_stop: bool) -> Result<(), CliError> {
    let r = Resolved::load(run)?;
    let vertex = RunConfig::require(&r.config.vertex, "vertex")?;
    let edge = RunConfig::require(&r.config.edge, "edge")?;
    let dynamics = RunConfig::require(&r.config.dynamics, "dynamics")?;
    let options = CouplingOptions {
        observe_at: dynamics.observe_at.clone(),
        stop_when_coupled: !no_stop,
        record_states: false,
    };
    let path = run_coupled_gbdp(
        vertex,
        edge,
        &read_graph(a)?,
        &read_graph(b)?,
        dynamics.horizon,
        &options,
        &mut RngStream::new(r.seed, 0),
    )?;
    r.write(|out| {
        r.provenance(out, "couple")?;
        match path.coupling_time {
            Some(t) => writeln!(out, "# coupling_time={t}")?,
            None => writeln!(out, "# coupling_time=none")?,
        }
        write_coupled_csv(&path, out)?;
        Ok(())
    })
}

fn experiment(kind: ExperimentKind, run: &RunArgs) -> Result<(), CliError> {
    let r = Resolved::load(run)?;
    let params = &r.config.metric;
    let table: ExperimentTable = match kind {
        ExperimentKind::Boolean => {
            run_boolean_experiment(RunConfig::require(&r.config.boolean, "boolean")?, params, r.seed)?
        }
        ExperimentKind::Discretisation => run_discretisation_experiment(
            RunConfig::require(&r.config.discretisation, "discretisation")?,
            params,
            r.seed,
        )?,
        ExperimentKind::SoftRgg => {
            run_soft_rgg_experiment(RunConfig::require(&r.config.soft_rgg, "soft_rgg")?, params, r.seed)?
        }
    };
    r.write(|out| {
        table.write_csv(out)?;
        Ok(())
    })
}

fn run_bound(command: BoundCommand) -> Result<(), CliError> {
    match command {
        BoundCommand::SteinFactors { lambda, metric } => {
            let params = metric.params()?;
            emit(&format!("c_V={}", stein_factor_vertex(lambda, &params)?))?;
            emit(&format!("c_E={}", stein_factor_edge(lambda, params.ce())?))?;
        }
        BoundCommand::Bstar {
            epsilon,
            c,
            n_star,
            form,
        } => {
            let n_star = parse_n_star(&n_star)?;
            let form = match form {
                InfiniteFormArg::Log => InfiniteForm::LogForm,
                InfiniteFormArg::Exp => InfiniteForm::ExpForm,
            };
            emit(&format!("B*={}", coupling_bound_bstar_with(epsilon, c, n_star, form)?))?;
        }
        BoundCommand::Pip { config } => {
            let cfg = parse_config(&config)?;
            let model = RunConfig::require(&cfg.vertex, "vertex")?;
            let spec = cfg.quadrature_or_default(model.window().dim());
            emit(&pip_bstar(model, &spec)?.to_json())?;
        }
        BoundCommand::SoftRgg { config } => {
            let cfg = parse_config(&config)?;
            let s = RunConfig::require(&cfg.soft_rgg, "soft_rgg")?;
            let mut reports = Vec::with_capacity(s.alternatives.len());
            for (point, alt) in s.alternatives.iter().enumerate() {
                let bound = |mode| {
                    soft_rgg_bound(
                        &s.window,
                        &alt.intensity,
                        &s.target.intensity,
                        &alt.connection,
                        &s.target.connection,
                        &cfg.metric,
                        mode,
                        &s.quadrature,
                    )
                };
                reports.push(json!({
                    "point": point,
                    "wasserstein": bound(SoftRggMode::Wasserstein)?,
                    "sup_norm": bound(SoftRggMode::SupNorm)?,
                }));
            }
            emit(&serde_json::to_string_pretty(&reports)?)?;
        }
        BoundCommand::Boolean { config, r_star } => {
            let cfg = parse_config(&config)?;
            let b = RunConfig::require(&cfg.boolean, "boolean")?;
            emit(&boolean_bound(b, r_star, &cfg.metric)?.to_json())?;
        }
        BoundCommand::Discretisation { config, per_axis } => {
            let cfg = parse_config(&config)?;
            let d = RunConfig::require(&cfg.discretisation, "discretisation")?;
            let grid = DiscretisationGrid::regular(d.model.window().clone(), per_axis)?;
            let bound = discretisation_bound(
                &d.model,
                &d.kappa,
                &grid,
                d.lipschitz_constants(),
                &cfg.metric,
                &d.quadrature,
            )?;
            let doc = json!({ "general": bound.general, "lipschitz": bound.lipschitz });
            emit(&serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

/// Writes one line to stdout.
fn emit(line: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}")?;
    out.flush()?;
    Ok(())
}

fn parse_n_star(text: &str) -> Result<NStar, CliError> {
    if text.eq_ignore_ascii_case("inf") {
        return Ok(NStar::Infinite);
    }
    match text.parse::<u64>() {
        Ok(n) if n > 0 => Ok(NStar::Finite(n)),
        _ => Err(CliError::Validation(format!(
            "n-star must be a positive integer or inf, got {text:?}"
        ))),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<SpatialGraph, CliError> {
    Ok(SpatialGraph::from_json(&read_text(path)?)?)
}

/// Graphs of a sample document, or of a bare JSON array of graphs.
fn read_sample(path: &Path) -> Result<Vec<SpatialGraph>, CliError> {
    let doc: Value = serde_json::from_str(&read_text(path)?)?;
    let graphs = match &doc {
        Value::Array(items) => items,
        Value::Object(map) => {
            match map.get("schema_version").and_then(Value::as_u64) {
                Some(v) if v == u64::from(SAMPLE_SCHEMA_VERSION) => {}
                other => {
                    return Err(CliError::Validation(format!(
                        "{}: unsupported sample schema_version {other:?}",
                        path.display()
                    )))
                }
            }
            map.get("graphs")
                .and_then(Value::as_array)
                .ok_or_else(|| CliError::Validation(format!("{}: missing graphs array", path.display())))?
        }
        _ => {
            return Err(CliError::Validation(format!(
                "{}: expected a sample document",
                path.display()
            )))
        }
    };
    graphs
        .iter()
        .map(|g| Ok(SpatialGraph::from_json(&g.to_string())?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n_star_parsing() {
        assert_eq!(parse_n_star("inf").unwrap(), NStar::Infinite);
        assert_eq!(parse_n_star("12").unwrap(), NStar::Finite(12));
        assert!(parse_n_star("0").is_err());
        assert!(parse_n_star("x").is_err());
    }
}
