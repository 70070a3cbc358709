use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use ratnet_core::aaa::{aaa_fit_full, DEFAULT_REL_TOL};
use ratnet_core::basis::{DegreeSpec, RationalApprox, Scheme};
use ratnet_core::bisection::{bisect_fit_traced, BisectOptions, BracketStep};
use ratnet_core::data::{load_grid, GridDataset, SampleSet, TargetFunction, KDV_SHAPE};
use ratnet_core::diffcorr::{fit, DiffCorrOptions, ILL_CONDITIONED};
use ratnet_core::nn::{forward, train, ActivationKind, ActivationSpec, LossKind, MlpParams, TrainConfig, TrainMode};

use crate::report::ResultRow;
use crate::{Result, RunError};

pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Samples used to fit the rational stand-in for ReLU.
pub const RELU_FIT_POINTS: usize = 2001;
/// Plot grids are this many times denser than the training grid along each axis.
pub const DENSE_FACTOR: usize = 4;

/// Where training samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub target: TargetFunction,
    /// A grid file; overrides `target`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default = "one")]
    pub every_k: usize,
    /// Points per axis for builtin targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

fn one() -> usize {
    1
}

impl DataSource {
    pub fn builtin(target: TargetFunction) -> Self {
        Self {
            target,
            data: None,
            every_k: 1,
            grid_points: None,
        }
    }

    fn dim(&self) -> Option<usize> {
        self.data.is_none().then(|| self.target.dim())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Diffcorr {
        degrees: [u32; 2],
        #[serde(default)]
        scheme: Scheme,
    },
    Bisect {
        degrees: [u32; 2],
        #[serde(default)]
        scheme: Scheme,
        z_tol: f64,
        den_lower: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        den_upper: Option<f64>,
    },
    Aaa {
        m: usize,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    Nn {
        activation: ActivationKind,
        hidden: usize,
        loss: LossKind,
        mode: TrainMode,
        epochs: usize,
        lr: f64,
    },
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

/// One fully specified run; its JSON echo reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub method: Method,
    pub source: DataSource,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RunError::Invalid(m));
        let src = &self.source;
        if src.every_k == 0 {
            return bad("every_k must be at least 1".into());
        }
        if matches!(src.grid_points, Some(n) if n < 2) {
            return bad("grid_points must be at least 2".into());
        }
        let univariate_only = matches!(self.method, Method::Aaa { .. } | Method::Nn { .. });
        if univariate_only && src.dim().is_some_and(|d| d != 1) {
            return bad(format!("{} needs a univariate target", self.method_id()));
        }
        match &self.method {
            Method::Diffcorr { .. } => {}
            Method::Bisect {
                z_tol,
                den_lower,
                den_upper,
                ..
            } => {
                if !(*z_tol > 0.0) || !(*den_lower > 0.0) {
                    return bad("z_tol and den_lower must be positive".into());
                }
                if let Some(u) = den_upper {
                    if !(u > den_lower) {
                        return bad(format!("den_upper {u} must exceed den_lower {den_lower}"));
                    }
                }
            }
            Method::Aaa { m, rel_tol } => {
                if *m == 0 || !(*rel_tol >= 0.0) {
                    return bad("aaa needs m ≥ 1 and rel_tol ≥ 0".into());
                }
            }
            Method::Nn {
                activation,
                hidden,
                mode,
                lr,
                ..
            } => {
                if *hidden == 0 {
                    return bad("hidden must be at least 1".into());
                }
                if !(*lr >= 0.0) {
                    return bad("lr must be nonnegative".into());
                }
                if *mode == TrainMode::Split && *activation != ActivationKind::LearnableRational {
                    return bad("split training needs --activation rat-learn".into());
                }
            }
        }
        Ok(())
    }

    pub fn method_id(&self) -> String {
        match &self.method {
            Method::Diffcorr { .. } if self.source.data.is_none() && self.source.target == TargetFunction::Relu => {
                "relu-rat".into()
            }
            Method::Diffcorr { .. } => "diffcorr".into(),
            Method::Bisect { .. } => "bisect".into(),
            Method::Aaa { .. } => "aaa".into(),
            Method::Nn { activation, mode, .. } => match mode {
                TrainMode::Standard => format!("nn-{}", activation.name()),
                TrainMode::Split => format!("nn-{}-split", activation.name()),
            },
        }
    }

    pub fn shape(&self) -> String {
        match &self.method {
            Method::Diffcorr { degrees, .. } | Method::Bisect { degrees, .. } => {
                format!("({},{})", degrees[0], degrees[1])
            }
            Method::Aaa { m, .. } => format!("m={m}"),
            Method::Nn { hidden, .. } => format!("H={hidden}"),
        }
    }

    /// File-name stem for this run's artifacts.
    pub fn run_id(&self) -> String {
        let shape: String = self
            .shape()
            .chars()
            .filter_map(|c| match c {
                '(' | ')' => None,
                ',' => Some('-'),
                '=' => None,
                c => Some(c.to_ascii_lowercase()),
            })
            .collect();
        match self.method {
            Method::Nn { .. } => format!("{}_{shape}_seed{}", self.method_id(), self.seed),
            _ => format!("{}_{shape}", self.method_id()),
        }
    }
}

/// Samples to train on plus a denser grid with known target values for plotting.
pub struct Loaded {
    pub training: SampleSet,
    pub plot_points: Vec<Vec<f64>>,
    pub plot_values: Vec<f64>,
}

impl Loaded {
    pub fn dim(&self) -> usize {
        self.training.dim()
    }
}

pub fn load(src: &DataSource) -> Result<Loaded> {
    if let Some(path) = &src.data {
        // Off-grid values are unknown, so the whole file grid doubles as the plot grid.
        let whole = load_grid(path)?;
        let training = whole.subsample_every_k(src.every_k)?.to_sample_set()?;
        let all = whole.to_sample_set()?;
        return Ok(Loaded {
            training,
            plot_points: all.points().map(<[f64]>::to_vec).collect(),
            plot_values: all.values().to_vec(),
        });
    }
    let target = src.target;
    let domain = target.default_domain();
    let shape: Vec<usize> = match (src.grid_points, target.dim()) {
        (Some(n), d) => vec![n; d],
        (None, 2) => KDV_SHAPE.to_vec(),
        (None, d) => vec![DEFAULT_GRID_POINTS; d],
    };
    let training_grid = GridDataset::from_function(target, &domain, &shape)?.subsample_every_k(src.every_k)?;
    let dense_shape: Vec<usize> = training_grid
        .shape()
        .iter()
        .map(|&n| DENSE_FACTOR * (n - 1) + 1)
        .collect();
    let dense = GridDataset::from_function(target, &domain, &dense_shape)?.to_sample_set()?;
    Ok(Loaded {
        training: training_grid.to_sample_set()?,
        plot_points: dense.points().map(<[f64]>::to_vec).collect(),
        plot_values: dense.values().to_vec(),
    })
}

/// Artifacts produced by a single run besides its result row.
pub struct RunArtifacts {
    pub approximant_json: String,
    pub trace: Option<Vec<BracketStep>>,
    /// Per-iteration error or per-epoch loss, with the name of its index column.
    pub history: Option<(&'static str, Vec<f64>)>,
    /// `(point, f, approx)` on the plot grid; `approx` is NaN at poles.
    pub plot: Vec<(Vec<f64>, f64, f64)>,
}

pub struct RunOutcome {
    pub row: ResultRow,
    pub artifacts: RunArtifacts,
}

fn plot_with(data: &Loaded, eval: impl Fn(&[f64]) -> Option<f64>) -> Vec<(Vec<f64>, f64, f64)> {
    data.plot_points
        .iter()
        .zip(&data.plot_values)
        .map(|(p, &f)| (p.clone(), f, eval(p).unwrap_or(f64::NAN)))
        .collect()
}

fn degree_spec(dim: usize, degrees: [u32; 2], scheme: Scheme) -> DegreeSpec {
    DegreeSpec::uniform(dim, degrees[0], degrees[1], scheme)
}

fn rational_status(condition: Option<f64>, collapsed: bool) -> String {
    if collapsed {
        "denominator_collapsed".into()
    } else if condition.is_some_and(|c| c > ILL_CONDITIONED) {
        "ill_conditioned".into()
    } else {
        "ok".into()
    }
}

fn rational_plot(data: &Loaded, r: &RationalApprox) -> Vec<(Vec<f64>, f64, f64)> {
    plot_with(data, |p| r.eval(p).ok())
}

pub fn run(spec: &ExperimentSpec) -> Result<RunOutcome> {
    spec.validate()?;
    let data = load(&spec.source)?;
    let s = &data.training;
    let start = Instant::now();
    let mut row = ResultRow::new(spec.method_id(), spec.shape(), "uniform");
    let artifacts = match &spec.method {
        Method::Diffcorr { degrees, scheme } => {
            let (r, rep) = fit(
                s,
                &degree_spec(data.dim(), *degrees, *scheme),
                &DiffCorrOptions::default(),
            )?;
            row.error = Some(rep.error);
            row.condition = rep.condition;
            row.status = rational_status(rep.condition, rep.denominator_collapsed);
            RunArtifacts {
                approximant_json: r.to_json(),
                trace: None,
                history: Some(("iteration", rep.history)),
                plot: rational_plot(&data, &r),
            }
        }
        Method::Bisect {
            degrees,
            scheme,
            z_tol,
            den_lower,
            den_upper,
        } => {
            let opts = BisectOptions {
                z_tol: *z_tol,
                den_lower: *den_lower,
                den_upper: *den_upper,
                ..BisectOptions::default()
            };
            let out = bisect_fit_traced(s, &degree_spec(data.dim(), *degrees, *scheme), &opts)?;
            row.error = Some(out.report.error);
            row.condition = out.report.condition;
            row.den_bounded = den_upper.is_some();
            row.status = if out.report.converged {
                rational_status(out.report.condition, false)
            } else {
                "not_converged".into()
            };
            RunArtifacts {
                approximant_json: out.approx.to_json(),
                trace: Some(out.trace),
                history: None,
                plot: rational_plot(&data, &out.approx),
            }
        }
        Method::Aaa { m, rel_tol } => {
            let fit = aaa_fit_full(s, *m, *rel_tol)?;
            row.error = Some(fit.report.error);
            row.status = if fit.unstable(s) {
                "unstable".into()
            } else {
                "ok".into()
            };
            let r = &fit.approx;
            RunArtifacts {
                approximant_json: r.to_json(),
                trace: None,
                history: Some(("iteration", fit.report.history.clone())),
                plot: plot_with(&data, |p| r.eval(p[0]).ok()),
            }
        }
        Method::Nn {
            activation,
            hidden,
            loss,
            mode,
            epochs,
            lr,
        } => {
            let act = ActivationSpec::for_kind(*activation, RELU_FIT_POINTS)?;
            let mut params = MlpParams::init(*hidden, act, spec.seed)?;
            let mut cfg = TrainConfig::new(*loss, *epochs, spec.seed);
            cfg.learning_rate = *lr;
            cfg.mode = *mode;
            let rep = train(&mut params, s, &cfg)?;
            row.error_kind = loss.name().into();
            row.error = Some(rep.final_loss);
            row.min_loss_epoch = Some(rep.min_loss_epoch);
            row.status = match rep.aborted_at {
                Some(epoch) => format!("aborted_at_epoch_{epoch}"),
                None => "ok".into(),
            };
            RunArtifacts {
                approximant_json: serde_json::to_string_pretty(&params)?,
                trace: None,
                history: Some(("epoch", rep.per_epoch_loss)),
                plot: plot_with(&data, |p| forward(&params, p[0]).ok()),
            }
        }
    };
    row.wall_time_s = start.elapsed().as_secs_f64().max(1e-9);
    Ok(RunOutcome { row, artifacts })
}

/// The comparison of the six approaches on the univariate target at equal budgets.
pub fn default_comparison(seed: u64, grid_points: Option<usize>) -> Vec<ExperimentSpec> {
    let source = DataSource {
        grid_points,
        ..DataSource::builtin(TargetFunction::SqrtAbsShift)
    };
    let nn = |activation, mode| Method::Nn {
        activation,
        hidden: 10,
        loss: LossKind::Uniform,
        mode,
        epochs: 200,
        lr: 1e-2,
    };
    [
        nn(ActivationKind::Relu, TrainMode::Standard),
        nn(ActivationKind::FixedRational, TrainMode::Standard),
        nn(ActivationKind::LearnableRational, TrainMode::Standard),
        nn(ActivationKind::LearnableRational, TrainMode::Split),
        Method::Diffcorr {
            degrees: [21, 20],
            scheme: Scheme::TotalDegree,
        },
        Method::Aaa {
            m: 22,
            rel_tol: DEFAULT_REL_TOL,
        },
    ]
    .into_iter()
    .map(|method| ExperimentSpec {
        method,
        source: source.clone(),
        seed,
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratnet_core::basis::BoxDomain;

    fn dc(degrees: [u32; 2]) -> ExperimentSpec {
        ExperimentSpec {
            method: Method::Diffcorr {
                degrees,
                scheme: Scheme::TotalDegree,
            },
            source: DataSource {
                grid_points: Some(101),
                ..DataSource::builtin(TargetFunction::SqrtAbsShift)
            },
            seed: 0,
        }
    }

    #[test]
    fn spec_echo_round_trips() {
        let spec = dc([4, 3]);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"method\":\"diffcorr\""));
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn ids_and_shapes() {
        let spec = dc([4, 3]);
        assert_eq!(spec.shape(), "(4,3)");
        assert_eq!(spec.run_id(), "diffcorr_4-3");
        let mut relu = spec.clone();
        relu.source.target = TargetFunction::Relu;
        assert_eq!(relu.method_id(), "relu-rat");
    }

    #[test]
    fn validation_rejects_before_compute() {
        let mut spec = dc([2, 2]);
        spec.source.every_k = 0;
        assert!(matches!(spec.validate(), Err(RunError::Invalid(_))));
        let nn = ExperimentSpec {
            method: Method::Nn {
                activation: ActivationKind::Relu,
                hidden: 10,
                loss: LossKind::Uniform,
                mode: TrainMode::Split,
                epochs: 1,
                lr: 1e-2,
            },
            source: DataSource::builtin(TargetFunction::SqrtAbsShift),
            seed: 1,
        };
        assert!(nn.validate().is_err());
        let aaa_2d = ExperimentSpec {
            method: Method::Aaa { m: 5, rel_tol: 0.0 },
            source: DataSource::builtin(TargetFunction::KdvLike),
            seed: 0,
        };
        assert!(aaa_2d.validate().is_err());
    }

    #[test]
    fn dense_grid_is_four_times_finer() {
        let data = load(&DataSource {
            grid_points: Some(11),
            ..DataSource::builtin(TargetFunction::SqrtAbsShift)
        })
        .unwrap();
        assert_eq!(data.training.len(), 11);
        assert_eq!(data.plot_points.len(), 41);
        assert_eq!(data.plot_points[0], vec![-1.0]);
        assert_eq!(data.plot_points[40], vec![1.0]);
    }

    #[test]
    fn every_k_thins_builtin_grids() {
        let data = load(&DataSource {
            every_k: 20,
            ..DataSource::builtin(TargetFunction::KdvLike)
        })
        .unwrap();
        assert_eq!(data.training.len(), 26 * 11);
        assert_eq!(data.plot_points.len(), 101 * 41);
    }

    #[test]
    fn low_degree_run_fills_the_row() {
        let out = run(&dc([2, 2])).unwrap();
        assert_eq!(out.row.method, "diffcorr");
        assert!(out.row.error.unwrap() > 0.0);
        assert!(out.row.wall_time_s > 0.0);
        assert_eq!(out.artifacts.plot.len(), 401);
        assert!(RationalApprox::from_json(&out.artifacts.approximant_json).is_ok());
    }

    #[test]
    fn box_of_default_target_is_unit() {
        assert_eq!(TargetFunction::SqrtAbsShift.default_domain(), BoxDomain::unit(1));
    }
}
