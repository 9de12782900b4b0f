use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geoball::surface::Direction;
use geoball_cli::{run_job, CliError, CommandKind, GridSize, JobConfig};

#[derive(Parser)]
#[command(
    name = "geoball",
    version,
    about = "Mean exit time comparisons against rotationally symmetric model spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Profiles, moments, balance and first eigenvalue of a model ball.
    Model {
        /// Warping expression: euclidean, sphere(b), hyperbolic(b) or poly(c1,...).
        #[arg(long, alias = "model")]
        warping: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = geoball_cli::config::DEFAULT_MODEL_K_MAX)]
        kmax: usize,
        /// Exit with failure when the model is not balanced on (0, R].
        #[arg(long)]
        require_balanced: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Curvature tables and radial volumes of a polar metric.
    Surface {
        /// Metric expression: example1, radial(warping) or perturbed(eps, mode).
        #[arg(long)]
        metric: String,
        /// Optional model for the mean curvature comparison.
        #[arg(long)]
        model: Option<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Checks every comparison inequality and writes report.json.
    Verify {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = geoball_cli::config::DEFAULT_VERIFY_K_MAX)]
        kmax: usize,
        /// Assert this direction (model<=M, model>=M or equal) instead of the observed one.
        #[arg(long, value_parser = parse_direction)]
        force_direction: Option<Direction>,
        #[arg(long)]
        tol_inequality: Option<f64>,
        #[arg(long)]
        tol_equality: Option<f64>,
        #[arg(long)]
        tol_quadrature: Option<f64>,
        #[arg(long)]
        tol_symmetrization: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Symmetrizes the grid mean exit time into the model.
    Symmetrize {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        tol_symmetrization: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a TOML job file.
    Run {
        job: PathBuf,
        /// Output directory, overriding the job's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the canonical form of the job and exit.
        #[arg(long)]
        print_canonical: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    radius: f64,
    /// Radial samples of the profile outputs.
    #[arg(long, default_value_t = geoball_cli::config::DEFAULT_INTERVALS)]
    intervals: usize,
    /// Output directory; defaults to $GEOBALL_OUT_DIR, then the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = geoball_cli::config::DEFAULT_GRID)]
    nr: usize,
    #[arg(long, default_value_t = geoball_cli::config::DEFAULT_GRID)]
    ntheta: usize,
    #[arg(long, default_value_t = geoball::surface::DEFAULT_HYPOTHESIS_GRID)]
    hyp_nr: usize,
    #[arg(long, default_value_t = geoball::surface::DEFAULT_HYPOTHESIS_GRID)]
    hyp_ntheta: usize,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "model<=M" => Ok(Direction::ModelLeM),
        "model>=M" => Ok(Direction::ModelGeM),
        "equal" => Ok(Direction::Equal),
        _ => Err(format!("expected model<=M, model>=M or equal, got '{s}'")),
    }
}

fn job_with(kind: CommandKind, common: &Common, grid: Option<&GridArgs>) -> JobConfig {
    let mut job = JobConfig::new(kind, common.radius);
    job.intervals = common.intervals;
    job.out_dir = common.out.clone();
    if let Some(g) = grid {
        job.grid = GridSize {
            n_r: g.nr,
            n_theta: g.ntheta,
        };
        job.hypothesis_grid = GridSize {
            n_r: g.hyp_nr,
            n_theta: g.hyp_ntheta,
        };
    }
    job
}

fn build(command: Command) -> Result<Option<JobConfig>, CliError> {
    let job = match command {
        Command::Model {
            warping,
            dim,
            kmax,
            require_balanced,
            common,
        } => {
            let mut job = job_with(CommandKind::Model, &common, None);
            job.model = Some(warping);
            job.dim = dim;
            job.k_max = kmax;
            job.require_balanced = require_balanced;
            job
        }
        Command::Surface {
            metric,
            model,
            grid,
            common,
        } => {
            let mut job = job_with(CommandKind::Surface, &common, Some(&grid));
            job.metric = Some(metric);
            job.model = model;
            job
        }
        Command::Verify {
            metric,
            model,
            kmax,
            force_direction,
            tol_inequality,
            tol_equality,
            tol_quadrature,
            tol_symmetrization,
            grid,
            common,
        } => {
            let mut job = job_with(CommandKind::Verify, &common, Some(&grid));
            job.metric = Some(metric);
            job.model = Some(model);
            job.k_max = kmax;
            job.force_direction = force_direction;
            let t = &mut job.tolerances;
            t.inequality = tol_inequality.unwrap_or(t.inequality);
            t.equality = tol_equality.unwrap_or(t.equality);
            t.quadrature_equality = tol_quadrature.unwrap_or(t.quadrature_equality);
            t.symmetrization = tol_symmetrization.unwrap_or(t.symmetrization);
            job
        }
        Command::Symmetrize {
            metric,
            model,
            tol_symmetrization,
            grid,
            common,
        } => {
            let mut job = job_with(CommandKind::Symmetrize, &common, Some(&grid));
            job.metric = Some(metric);
            job.model = Some(model);
            if let Some(t) = tol_symmetrization {
                job.tolerances.symmetrization = t;
            }
            job
        }
        Command::Run {
            job,
            out,
            print_canonical,
        } => {
            let text = std::fs::read_to_string(&job).map_err(|source| CliError::Io {
                path: job.clone(),
                source,
            })?;
            let mut config = JobConfig::from_toml(&text, &job.display().to_string())?;
            if print_canonical {
                print!("{}", config.to_canonical());
                return Ok(None);
            }
            if out.is_some() {
                config.out_dir = out;
            }
            config
        }
    };
    Ok(Some(job))
}

fn execute(command: Command) -> Result<bool, CliError> {
    let Some(job) = build(command)? else {
        return Ok(true);
    };
    let dir = job.output_dir();
    let outcome = run_job(&job, &dir)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", display_path(file));
    }
    if let Some(failure) = &outcome.failure {
        eprintln!("first failing check: {failure}");
    }
    Ok(outcome.passed())
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
