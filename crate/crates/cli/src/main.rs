//! `srg`: sampling, dynamics, distances, bounds and verification
//! experiments for spatial random graphs.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

const CONFIG_HELP: &str = "\
Configuration is a TOML document with optional sections:
  seed = <u64>                 default seed (flag --seed wins; fallback 0)
  output = <path>              default output path (flag --out wins; fallback stdout)
  [vertex]                     window, activity, interaction (default none)
  [edge]                       kind = \"product\" with kappa, or kind = \"boolean-latent\"
  [metric]                     base = { cv = 1, ce = 1 }, variant = 1, edge_metric = \"indicator\"
  [quadrature]                 mode, resolution, tolerance, seed = 0
                               (default: tensor grid, 64 per axis for d <= 2, 32 for d = 3, tolerance 1e-9)
  [dynamics]                   horizon, observe_at = [], paths = 1
  [boolean]                    dim, r0 = 1, tail_exponent, contraction_exponent, transform,
                               r_list, window, centre_intensity, n_samples = 300, null_reps = 50
  [discretisation]             model, kappa, per_axis, n_samples = 300, null_reps = 50,
                               quadrature = Monte Carlo with 200000 draws, seed 0
  [soft_rgg]                   window, target, alternatives, n_samples = 300, null_reps = 50,
                               quadrature = tensor grid with 16 per axis
Unknown keys and duplicate keys are rejected.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.";

#[derive(Parser)]
#[command(name = "srg", version, about, after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; overrides `output` in the configuration. Stdout if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricArgs {
    /// Vertex metric cap C_V.
    #[arg(long, default_value_t = 1.0)]
    cv: f64,
    /// Edge mismatch cost C_E.
    #[arg(long, default_value_t = 1.0)]
    ce: f64,
    /// GOSPA variant (1 or 2).
    #[arg(long, default_value_t = 1)]
    variant: u8,
    /// Ground metric between edge indicators.
    #[arg(long, value_enum, default_value_t = EdgeMetricArg::Indicator)]
    edge_metric: EdgeMetricArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EdgeMetricArg {
    Indicator,
    EndpointAware,
}

#[derive(Clone, Copy, ValueEnum)]
enum OtMethodArg {
    Exact,
    Sinkhorn,
}

#[derive(Clone, Copy, ValueEnum)]
enum InfiniteFormArg {
    Log,
    Exp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Boolean,
    Discretisation,
    SoftRgg,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs from [vertex] and [edge]; writes a JSON document.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        /// Number of independent graphs.
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Simulate graph birth-death paths from [vertex], [edge] and [dynamics]; writes CSV.
    Gbdp {
        #[command(flatten)]
        run: RunArgs,
        /// Initial graph as JSON; the empty graph if omitted.
        #[arg(long)]
        start: Option<PathBuf>,
    },
    /// Simulate one coupled pair of birth-death paths started from two graphs; writes CSV.
    Couple {
        #[command(flatten)]
        run: RunArgs,
        /// Initial graph of the first component (JSON).
        #[arg(long)]
        a: PathBuf,
        /// Initial graph of the second component (JSON).
        #[arg(long)]
        b: PathBuf,
        /// Keep simulating after the two paths meet.
        #[arg(long)]
        no_stop: bool,
    },
    /// GOSPA distance between two graphs stored as JSON.
    Gospa {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Empirical Wasserstein distance between two samples written by `sample`.
    Wasserstein {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_enum, default_value_t = OtMethodArg::Exact)]
        method: OtMethodArg,
        /// Entropic regularisation for the Sinkhorn method.
        #[arg(long, default_value_t = 0.05)]
        regularisation: f64,
    },
    /// Evaluate closed-form bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Run a verification experiment; writes a CSV table.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Vertex and edge Stein factors at total intensity `lambda`.
    SteinFactors {
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Coupling-time bound B*(epsilon, c, n*).
    Bstar {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        c: f64,
        /// Threshold n*; a positive integer or `inf`.
        #[arg(long, default_value = "inf")]
        n_star: String,
        /// Closed form used when n* is infinite.
        #[arg(long, value_enum, default_value_t = InfiniteFormArg::Log)]
        form: InfiniteFormArg,
    },
    /// Coupling-time bound of the pairwise-interaction model in [vertex].
    Pip {
        #[arg(long)]
        config: PathBuf,
    },
    /// Wasserstein and sup-norm bounds for every law in [soft_rgg].
    SoftRgg {
        #[arg(long)]
        config: PathBuf,
    },
    /// Boolean percolation bound of [boolean] at one cutoff.
    Boolean {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r_star: f64,
    },
    /// Discretisation bounds of [discretisation] on one grid.
    Discretisation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        per_axis: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) | Err(CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

impl MetricArgs {
    fn params(&self) -> Result<srg::gospa::GospaParams, CliError> {
        let base = srg::space::BaseMetricParams::new(self.cv, self.ce)?;
        let variant = srg::gospa::GospaVariant::try_from(self.variant)?;
        let edge_metric = match self.edge_metric {
            EdgeMetricArg::Indicator => srg::gospa::EdgeMetric::Indicator,
            EdgeMetricArg::EndpointAware => srg::gospa::EdgeMetric::EndpointAware,
        };
        Ok(srg::gospa::GospaParams::new(base, variant).with_edge_metric(edge_metric))
    }
}
