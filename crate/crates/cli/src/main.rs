use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ratnet_cli::experiment::{default_comparison, run, DataSource, ExperimentSpec, Method};
use ratnet_cli::report::{render_markdown, OutputDir, ResultRow};
use ratnet_cli::{Result, RunError, EXIT_USAGE};
use ratnet_core::aaa::DEFAULT_REL_TOL;
use ratnet_core::basis::Scheme;
use ratnet_core::data::TargetFunction;
use ratnet_core::nn::{ActivationKind, LossKind, TrainMode};

/// Rational approximation and rational-activation network experiments.
#[derive(Parser)]
#[command(name = "ratnet", version)]
struct Cli {
    /// Output directory; RATNET_OUT takes precedence.
    #[arg(long, global = true, default_value = "ratnet-out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Points per axis for builtin targets.
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Builtin target: sqrt_abs_shift, relu or kdv_like.
    #[arg(long, default_value = "sqrt_abs_shift")]
    target: TargetFunction,
    /// Grid file to fit instead of a builtin target.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Keep every k-th point along each axis.
    #[arg(long, default_value_t = 1)]
    every_k: usize,
}

#[derive(Args)]
struct DegreeArgs {
    /// Numerator and denominator degree.
    #[arg(long, num_args = 2, value_names = ["N", "M"], required = true)]
    degrees: Vec<u32>,
    /// Multivariate index set: total or tensor.
    #[arg(long, default_value = "total")]
    scheme: Scheme,
}

#[derive(Subcommand)]
enum Command {
    /// Differential correction.
    FitDc {
        #[command(flatten)]
        degrees: DegreeArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Bisection on the uniform error level.
    FitBisect {
        #[command(flatten)]
        degrees: DegreeArgs,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 1e-6)]
        z_tol: f64,
        #[arg(long, default_value_t = 1e-2)]
        den_lower: f64,
        /// Upper bound on the denominator at every sample.
        #[arg(long)]
        den_upper: Option<f64>,
    },
    /// Greedy barycentric fitting.
    FitAaa {
        /// Maximum number of support points.
        #[arg(long = "m-max", alias = "m", default_value_t = 21)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Train a one-hidden-layer network.
    TrainNn {
        /// relu, rat-fixed or rat-learn.
        #[arg(long, default_value = "rat-learn")]
        activation: ActivationKind,
        #[arg(long, default_value_t = 10)]
        hidden: usize,
        /// uniform or mse.
        #[arg(long, default_value = "uniform")]
        loss: LossKind,
        /// standard or split.
        #[arg(long, default_value = "standard")]
        mode: TrainMode,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-2)]
        lr: f64,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Run a list of experiments and rank them by error.
    Compare {
        /// JSON file holding one spec or an array of specs; defaults to the six-way comparison.
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// Best rational approximation of ReLU on [-1, 1].
    ReluRat {
        #[arg(long, num_args = 2, value_names = ["N", "M"], default_values_t = [3, 2])]
        degrees: Vec<u32>,
    },
}

impl SourceArgs {
    fn into_source(self, grid_points: Option<usize>) -> DataSource {
        DataSource {
            target: self.target,
            data: self.data,
            every_k: self.every_k,
            grid_points,
        }
    }
}

fn pair(v: &[u32]) -> [u32; 2] {
    [v[0], v[1]]
}

fn specs_for(cli: Cli) -> Result<(OutputDir, Vec<ExperimentSpec>, bool)> {
    let out = std::env::var_os("RATNET_OUT").map(PathBuf::from).unwrap_or(cli.out);
    let (seed, gp) = (cli.seed, cli.grid_points);
    let single = |method, source: SourceArgs| ExperimentSpec {
        method,
        source: source.into_source(gp),
        seed,
    };
    let (specs, compare) = match cli.command {
        Command::FitDc { degrees, source } => (
            vec![single(
                Method::Diffcorr {
                    degrees: pair(&degrees.degrees),
                    scheme: degrees.scheme,
                },
                source,
            )],
            false,
        ),
        Command::FitBisect {
            degrees,
            source,
            z_tol,
            den_lower,
            den_upper,
        } => (
            vec![single(
                Method::Bisect {
                    degrees: pair(&degrees.degrees),
                    scheme: degrees.scheme,
                    z_tol,
                    den_lower,
                    den_upper,
                },
                source,
            )],
            false,
        ),
        Command::FitAaa { m, rel_tol, source } => (vec![single(Method::Aaa { m, rel_tol }, source)], false),
        Command::TrainNn {
            activation,
            hidden,
            loss,
            mode,
            epochs,
            lr,
            source,
        } => (
            vec![single(
                Method::Nn {
                    activation,
                    hidden,
                    loss,
                    mode,
                    epochs,
                    lr,
                },
                source,
            )],
            false,
        ),
        Command::ReluRat { degrees } => (
            vec![ExperimentSpec {
                method: Method::Diffcorr {
                    degrees: pair(&degrees),
                    scheme: Scheme::TotalDegree,
                },
                source: DataSource {
                    grid_points: gp,
                    ..DataSource::builtin(TargetFunction::Relu)
                },
                seed,
            }],
            false,
        ),
        Command::Compare { specs: None } => (default_comparison(seed, gp), true),
        Command::Compare { specs: Some(path) } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| RunError::Invalid(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| RunError::Invalid(format!("{}: {e}", path.display())))?;
            let list = match value {
                serde_json::Value::Array(items) => items,
                one => vec![one],
            };
            let specs = list
                .into_iter()
                .map(serde_json::from_value)
                .collect::<std::result::Result<Vec<ExperimentSpec>, _>>()
                .map_err(|e| RunError::Invalid(format!("{}: {e}", path.display())))?;
            (specs, true)
        }
    };
    if !compare {
        // options are checked up front, before any output is created
        specs[0].validate()?;
    }
    Ok((OutputDir::create(out)?, specs, compare))
}

fn run_one(dir: &OutputDir, spec: &ExperimentSpec, id: &str) -> Result<ResultRow> {
    dir.write_spec(id, spec)?;
    let outcome = run(spec)?;
    dir.write_artifacts(id, &outcome.artifacts)?;
    dir.append_row(&outcome.row)?;
    Ok(outcome.row)
}

fn execute(cli: Cli) -> Result<()> {
    let (dir, specs, compare) = specs_for(cli)?;
    if !compare {
        let spec = &specs[0];
        let row = run_one(&dir, spec, &spec.run_id())?;
        println!("{}", serde_json::to_string(&row)?);
        return Ok(());
    }
    let mut rows = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let id = format!("{:02}_{}", i + 1, spec.run_id());
        match run_one(&dir, spec, &id) {
            Ok(row) => rows.push(row),
            Err(e @ RunError::Output { .. }) => return Err(e),
            Err(e) => {
                eprintln!("{}", e.to_json());
                let row = ResultRow::failed(spec, &e);
                dir.append_row(&row)?;
                rows.push(row);
            }
        }
    }
    let table = render_markdown(&rows);
    dir.write_summary(&table)?;
    print!("{table}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
