//! Bisection on the error level for the quasiconvex best-approximation problem.
//!
//! At a trial level `z` the feasibility LP over `(a, b, t)` is
//!
//! ```text
//! maximize t  subject to  −z q(x_i) ≤ f_i q(x_i) − p(x_i) ≤ z q(x_i),
//!                         q(x_i) ≥ δ + t,   q(x_i) ≤ U (optional),   t ≤ 1
//! ```
//!
//! `z` is feasible when the optimal `t` is positive and the witness, evaluated
//! directly, is within `z_tol / 2` of level `z`. `p = q = 0, t = −δ` is
//! always a feasible point, so the LP itself never reports infeasibility.
//!
//! Without `U` the inequalities are homogeneous in `(p, q)` and `δ` only fixes
//! the scale. That case is solved as `maximize t` subject to `q(x_i) ≥ t` and
//! `‖(a, b)‖_∞ ≤ 1`, and the witness is rescaled so that `min_i q(x_i) = δ`.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{DegreeSpec, RationalApprox};
use crate::data::SampleSet;
use crate::design::{orthonormalize, Design};
use crate::diffcorr::{uniform_error, FitReport};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};

/// Optimal slack above which a level counts as feasible.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BisectOptions {
    pub z_lo: f64,
    /// Defaults to the range of the sample values.
    pub z_hi: Option<f64>,
    pub z_tol: f64,
    pub den_lower: f64,
    pub den_upper: Option<f64>,
    pub max_outer: usize,
    /// Test three levels per round on worker threads.
    pub parallel: bool,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            z_lo: 0.0,
            z_hi: None,
            z_tol: 1e-6,
            den_lower: 1e-2,
            den_upper: None,
            max_outer: 60,
            parallel: false,
        }
    }
}

impl BisectOptions {
    pub fn with_den_upper(mut self, upper: f64) -> Self {
        self.den_upper = Some(upper);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.z_lo >= 0.0) {
            return Err(Error::InvalidArgument(format!("z_lo must be ≥ 0, got {}", self.z_lo)));
        }
        if let Some(hi) = self.z_hi {
            if !(hi > self.z_lo) {
                return Err(Error::Bracket(format!("z_hi {hi} must exceed z_lo {}", self.z_lo)));
            }
        }
        if !(self.z_tol > 0.0) {
            return Err(Error::InvalidArgument("z_tol must be positive".into()));
        }
        if !(self.den_lower > 0.0) {
            return Err(Error::InvalidArgument("den_lower must be positive".into()));
        }
        if let Some(u) = self.den_upper {
            if !(u > self.den_lower) {
                return Err(Error::InvalidArgument(format!(
                    "den_upper {u} must exceed den_lower {}",
                    self.den_lower
                )));
            }
        }
        Ok(())
    }
}

/// One feasibility test of the outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketStep {
    pub iteration: usize,
    pub z: f64,
    pub feasible: bool,
    pub lp_iterations: usize,
    /// Bracket after this test.
    pub z_lo: f64,
    pub z_hi: f64,
}

/// Witness of a feasible level.
#[derive(Debug, Clone)]
pub struct Witness {
    pub approx: RationalApprox,
    /// Optimal denominator slack `t`.
    pub slack: f64,
    /// Denominator values at the samples, on the LP's scale.
    pub denominators: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BisectOutcome {
    pub approx: RationalApprox,
    pub report: FitReport,
    pub trace: Vec<BracketStep>,
    pub witness: Witness,
    pub z_lo: f64,
    pub z_hi: f64,
}

pub fn feasible(samples: &SampleSet, spec: &DegreeSpec, z: f64, opts: &BisectOptions) -> Result<Option<Witness>> {
    let design = Design::new(samples, spec)?;
    let spread = BasisSpread::new(&design);
    let ones = vec![1.0; samples.len()];
    Ok(test_level(&design, &spread, &ones, samples, spec, z, opts)?.0)
}

/// Smallest singular values of the numerator and denominator basis matrices.
///
/// With `q(x_i) ≤ U` on every sample, `‖b‖₂ ≤ U √N / σ_min(Ψ)`, and since
/// `|p(x_i)| ≤ (|f_i| + z) q(x_i)`, `‖a‖₂ ≤ (max|f| + z) U √N / σ_min(Φ)`.
/// These implied boxes leave the bounded LP unchanged and give the solver a
/// starting basis.
struct BasisSpread {
    num: f64,
    den: f64,
}

impl BasisSpread {
    fn new(design: &Design) -> Self {
        let ones = vec![1.0; design.n_samples];
        Self {
            num: design.num_matrix_scaled(&ones).singular_values().min(),
            den: design.den_matrix_scaled(&ones).singular_values().min(),
        }
    }

    fn radii(&self, n: usize, f_max: f64, z: f64, upper: f64) -> Option<(f64, f64)> {
        if !(self.num > 0.0 && self.den > 0.0) {
            return None;
        }
        let root = (n as f64).sqrt() * upper * (1.0 + 1e-6);
        Some(((f_max + z) * root / self.num, root / self.den))
    }
}

/// Tests level `z`. In the unbounded mode the LP is posed in orthonormal
/// coordinates for `p / w` and `q / w` over the samples, with `w` the
/// denominator of the latest witness, which keeps it well conditioned when
/// `q` spans many orders of magnitude.
fn test_level(
    design: &Design,
    spread: &BasisSpread,
    weights: &[f64],
    samples: &SampleSet,
    spec: &DegreeSpec,
    z: f64,
    opts: &BisectOptions,
) -> Result<(Option<Witness>, usize)> {
    if !(z >= 0.0) {
        return Err(Error::InvalidArgument(format!("level z must be ≥ 0, got {z}")));
    }
    let f = samples.values();
    let f_max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (na, nb) = (design.n_num, design.n_den);
    let ones;
    let (program, factors) = match opts.den_upper {
        Some(u) => {
            ones = vec![1.0; design.n_samples];
            let radii = spread.radii(design.n_samples, f_max, z, u);
            let m = constraint_matrix(
                &design.num_matrix_scaled(&ones),
                &design.den_matrix_scaled(&ones),
                f,
                z,
                true,
            );
            (bounded_lp(m, na, opts, u, radii), None)
        }
        None => {
            let (num_q, num_r) = orthonormalize(design.num_matrix_scaled(weights))?;
            let (den_q, den_r) = orthonormalize(design.den_matrix_scaled(weights))?;
            let m = constraint_matrix(&num_q, &den_q, f, z, false);
            (unbounded_lp(m), Some((num_r, den_r)))
        }
    };
    let sol = lp::solve(&program).map_err(|e| match e {
        Error::SolverStalled { iterations } => Error::FeasibilityStalled { z, iterations },
        other => other,
    })?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Invariant(format!(
            "feasibility LP at z = {z} returned {:?}",
            sol.status
        )));
    }
    let y = sol.y.expect("optimal solution carries y");
    let slack = y[na + nb];
    let iterations = sol.iterations;
    if !(slack > SLACK_TOL) {
        return Ok((None, iterations));
    }
    let (mut a, mut b) = (y[..na].to_vec(), y[na..na + nb].to_vec());
    if let Some((num_r, den_r)) = factors {
        let solve = |r: &DMatrix<f64>, v: &[f64]| {
            r.solve_upper_triangular(&DMatrix::from_column_slice(v.len(), 1, v))
                .map(|m| m.as_slice().to_vec())
        };
        match (solve(&num_r, &a), solve(&den_r, &b)) {
            (Some(x), Some(w)) if x.iter().chain(&w).all(|v| v.is_finite()) => {
                a = x;
                b = w;
            }
            _ => return Ok((None, iterations)),
        }
        let (_, q) = design.eval(&a, &b);
        let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(q_min > 0.0) {
            return Ok((None, iterations));
        }
        let lift = opts.den_lower / q_min;
        a.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= lift);
    }
    let (_, denominators) = design.eval(&a, &b);
    let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
    let approx = RationalApprox::new(
        spec.clone(),
        samples.domain().clone(),
        a.iter().map(|v| v / scale).collect(),
        b.iter().map(|v| v / scale).collect(),
    )?;
    // LP tolerances act on the scaled rows; with a small denominator they can
    // hide a real violation, so the witness is checked directly.
    match uniform_error(&approx, samples) {
        Ok(err) if err <= z + 0.5 * opts.z_tol => Ok((
            Some(Witness {
                approx,
                slack,
                denominators,
            }),
            iterations,
        )),
        Ok(_) | Err(Error::Pole { .. }) => Ok((None, iterations)),
        Err(e) => Err(e),
    }
}

/// Rows per sample: the two error inequalities, the denominator lower
/// bound with the slack column, and optionally the upper bound.
fn constraint_matrix(num: &DMatrix<f64>, den: &DMatrix<f64>, f: &[f64], z: f64, den_upper: bool) -> DMatrix<f64> {
    let (n, na, nb) = (num.nrows(), num.ncols(), den.ncols());
    let nvars = na + nb + 1;
    let per = if den_upper { 4 } else { 3 };
    let mut m = DMatrix::zeros(per * n, nvars);
    for i in 0..n {
        let r = per * i;
        for j in 0..na {
            let v = num[(i, j)];
            m[(r, j)] = -v;
            m[(r + 1, j)] = v;
        }
        for j in 0..nb {
            let v = den[(i, j)];
            m[(r, na + j)] = (f[i] - z) * v;
            m[(r + 1, na + j)] = -(f[i] + z) * v;
            m[(r + 2, na + j)] = -v;
            if den_upper {
                m[(r + 3, na + j)] = v;
            }
        }
        m[(r + 2, nvars - 1)] = 1.0;
    }
    m
}

/// `max t` with `δ + t ≤ q(x_i) ≤ U`.
fn bounded_lp(
    m: DMatrix<f64>,
    na: usize,
    opts: &BisectOptions,
    upper: f64,
    radii: Option<(f64, f64)>,
) -> LinearProgram {
    let nvars = m.ncols();
    let mut rhs = vec![0.0; m.nrows()];
    for i in 0..m.nrows() / 4 {
        rhs[4 * i + 2] = -opts.den_lower;
        rhs[4 * i + 3] = upper;
    }
    let (ra, rb) = radii.unwrap_or((f64::INFINITY, f64::INFINITY));
    let mut bounds: Vec<(f64, f64)> = (0..nvars).map(|j| if j < na { (-ra, ra) } else { (-rb, rb) }).collect();
    bounds[nvars - 1] = (f64::NEG_INFINITY, 1.0);
    let mut c = vec![0.0; nvars];
    c[nvars - 1] = -1.0;
    LinearProgram::new(c, m, rhs).with_bounds(bounds)
}

/// `max t` with `q(x_i) ≥ t` and all coefficients in `[−1, 1]`.
fn unbounded_lp(m: DMatrix<f64>) -> LinearProgram {
    let nvars = m.ncols();
    let mut bounds = vec![(-1.0, 1.0); nvars];
    bounds[nvars - 1] = (f64::NEG_INFINITY, 1.0);
    let mut c = vec![0.0; nvars];
    c[nvars - 1] = -1.0;
    let rows = m.nrows();
    LinearProgram::new(c, m, vec![0.0; rows]).with_bounds(bounds)
}

/// Spectral condition number of the feasibility constraint matrix at level
/// `z` after scaling every column to unit norm. The denominator upper bound
/// only adds rows, so it is left out.
pub fn condition_estimate(samples: &SampleSet, spec: &DegreeSpec, z: f64) -> Result<f64> {
    let design = Design::new(samples, spec)?;
    Ok(raw_condition(&design, samples.values(), z))
}

fn raw_condition(design: &Design, f: &[f64], z: f64) -> f64 {
    let ones = vec![1.0; design.n_samples];
    let m = constraint_matrix(
        &design.num_matrix_scaled(&ones),
        &design.den_matrix_scaled(&ones),
        f,
        z,
        false,
    );
    scaled_condition(m)
}

fn scaled_condition(mut m: DMatrix<f64>) -> f64 {
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    let sv = m.singular_values();
    let lo = sv.min();
    if lo > 0.0 {
        sv.max() / lo
    } else {
        f64::INFINITY
    }
}

pub fn bisect_fit(samples: &SampleSet, spec: &DegreeSpec, opts: &BisectOptions) -> Result<(RationalApprox, FitReport)> {
    let out = bisect_fit_traced(samples, spec, opts)?;
    Ok((out.approx, out.report))
}

pub fn bisect_fit_traced(samples: &SampleSet, spec: &DegreeSpec, opts: &BisectOptions) -> Result<BisectOutcome> {
    let start = Instant::now();
    opts.validate()?;
    let design = Design::new(samples, spec)?;
    if samples.len() < spec.num_unknowns() {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot determine {} coefficients",
            samples.len(),
            spec.num_unknowns()
        )));
    }
    let mut lo = opts.z_lo;
    let mut hi = opts.z_hi.unwrap_or_else(|| samples.range());
    if !(hi > lo) {
        // A constant target: any level above zero is feasible.
        hi = lo + opts.z_tol;
    }
    let spread = BasisSpread::new(&design);
    let mut weights = vec![1.0; samples.len()];
    let test = |z: f64, w: &[f64]| test_level(&design, &spread, w, samples, spec, z, opts);
    let mut witness = test(hi, &weights)?
        .0
        .ok_or_else(|| Error::Bracket(format!("upper level {hi} is infeasible")))?;
    weights = witness_weights(&witness);
    let mut trace = Vec::new();
    let mut history = vec![hi];
    let mut rounds = 0;
    while hi - lo >= opts.z_tol && rounds < opts.max_outer {
        rounds += 1;
        if opts.parallel {
            let w = hi - lo;
            let levels = [lo + 0.25 * w, lo + 0.5 * w, lo + 0.75 * w];
            let w = &weights;
            let results: Vec<Result<(Option<Witness>, usize)>> = std::thread::scope(|s| {
                let handles: Vec<_> = levels.iter().map(|&z| s.spawn(move || test(z, w))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("level test panicked"))
                    .collect()
            });
            let mut outcomes = Vec::with_capacity(3);
            let mut lp_counts = Vec::with_capacity(3);
            for r in results {
                let (o, its) = r?;
                outcomes.push(o);
                lp_counts.push(its);
            }
            // The lowest feasible level becomes the upper end; the highest
            // infeasible level below it becomes the lower end.
            let first_ok = outcomes.iter().position(Option::is_some);
            let new_hi = first_ok.map_or(hi, |k| levels[k]);
            let new_lo = levels[..first_ok.unwrap_or(3)]
                .iter()
                .zip(&outcomes)
                .filter(|(_, o)| o.is_none())
                .map(|(&z, _)| z)
                .fold(lo, f64::max);
            for ((&z, o), &lp_iterations) in levels.iter().zip(&outcomes).zip(&lp_counts) {
                trace.push(BracketStep {
                    iteration: rounds,
                    z,
                    feasible: o.is_some(),
                    lp_iterations,
                    z_lo: new_lo,
                    z_hi: new_hi,
                });
            }
            if let Some(k) = first_ok {
                witness = outcomes.swap_remove(k).expect("feasible level has a witness");
                weights = witness_weights(&witness);
                history.push(new_hi);
            }
            lo = new_lo;
            hi = new_hi;
        } else {
            let z = 0.5 * (lo + hi);
            let (outcome, lp_iterations) = test(z, &weights)?;
            let feasible = match outcome {
                Some(wit) => {
                    witness = wit;
                    weights = witness_weights(&witness);
                    hi = z;
                    history.push(hi);
                    true
                }
                None => {
                    lo = z;
                    false
                }
            };
            trace.push(BracketStep {
                iteration: rounds,
                z,
                feasible,
                lp_iterations,
                z_lo: lo,
                z_hi: hi,
            });
        }
    }
    let converged = hi - lo < opts.z_tol;
    let error = uniform_error(&witness.approx, samples)?;
    let condition = Some(raw_condition(&design, samples.values(), hi));
    let report = FitReport {
        error,
        iterations: trace.len(),
        wall_time: start.elapsed().as_secs_f64(),
        history,
        condition,
        converged,
        denominator_collapsed: false,
    };
    Ok(BisectOutcome {
        approx: witness.approx.clone(),
        report,
        trace,
        witness,
        z_lo: lo,
        z_hi: hi,
    })
}

/// Row weights for the next test: the witness denominator scaled to peak 1.
fn witness_weights(w: &Witness) -> Vec<f64> {
    let peak = w.denominators.iter().cloned().fold(0.0f64, f64::max);
    w.denominators.iter().map(|q| q / peak).collect()
}
