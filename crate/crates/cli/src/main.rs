//! `otgeo`: runs the verification suite and single computations from a TOML config.
//!
//! Exit codes: 0 when everything passes, 1 when a check or computation fails,
//! 2 for usage and configuration errors.

mod builtin;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "otgeo",
    version,
    about = "Geometry of optimal transport costs: verification and evaluation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Run config in TOML.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in config by name. `verify --builtin` without a name runs all of them.
    #[arg(long, global = true, value_name = "NAME", num_args = 0..=1, default_missing_value = "all")]
    pub builtin: Option<String>,
    /// Output directory for reports and CSV files.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the config seed and the sampling seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long = "tol-scale", global = true, value_name = "X", default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Worker threads for the check pool.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the verification suite and write report.txt and report.json.
    Verify,
    /// Print the geometry at one point as a JSON record.
    Eval {
        /// Primal point ξ, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        /// Dual point η. Evaluates on the product instead of the graph.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        dual: Option<Vec<f64>>,
    },
    /// Integrate a geodesic and write it as CSV.
    Geodesic {
        #[arg(long, value_enum, default_value_t = FlavorArg::Primal)]
        flavor: FlavorArg,
        /// Initial point: ξ for primal, η for dual, (ξ, η) for levi-civita.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x0: Vec<f64>,
        /// Initial velocity in the same coordinates as `x0`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        v0: Vec<f64>,
        /// Final time; integration runs on [0, T].
        #[arg(long = "t-span", value_name = "T", default_value_t = 1.0, allow_hyphen_values = true)]
        t_span: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Regularized cost, shrinkage image and divergence on the simplex.
    Sinkhorn {
        /// Row marginal p (all states, summing to one).
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Column marginal q′.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        /// Second primal point p′ for the divergence.
        #[arg(long = "p-prime", value_delimiter = ',')]
        p_prime: Option<Vec<f64>>,
        /// Sinkhorn iteration cap.
        #[arg(long = "max-iters")]
        max_iters: Option<usize>,
    },
    /// Canonical divergence between two primal points.
    Canonical {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        q: Vec<f64>,
        /// Coordinate radius of the neighbourhood for connecting geodesics.
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
        /// Also recover (g, Γ, Γ*) from the divergence at p.
        #[arg(long)]
        structure: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Primal,
    Dual,
    LeviCivita,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify => commands::verify(&cli.common),
        Command::Eval { point, dual } => commands::eval(&cli.common, &point, dual.as_deref()),
        Command::Geodesic {
            flavor,
            x0,
            v0,
            t_span,
            steps,
        } => commands::geodesic(&cli.common, flavor, &x0, &v0, t_span, steps),
        Command::Sinkhorn {
            p,
            q,
            p_prime,
            max_iters,
        } => commands::sinkhorn(&cli.common, &p, &q, p_prime.as_deref(), max_iters),
        Command::Canonical {
            p,
            q,
            radius,
            structure,
        } => commands::canonical(&cli.common, &p, &q, radius, structure),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
