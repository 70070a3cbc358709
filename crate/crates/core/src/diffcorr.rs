//! Differential correction for best uniform rational approximation on a
//! discrete sample set.
//!
//! Given the current iterate `(p_k, q_k)` with uniform error `δ_k`, the next
//! iterate solves
//!
//! ```text
//! minimize u  subject to  |f_i q(x_i) − p(x_i)| − δ_k q(x_i) ≤ u · q_k(x_i)   for all i,
//!                         ‖(a, b)‖_∞ ≤ 1
//! ```
//!
//! The previous iterate is feasible with `u ≤ 0`, so a strictly negative
//! optimum forces `q > 0` on every sample and strictly lowers the error.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{BoxDomain, DegreeSpec, RationalApprox, POLE_THRESHOLD};
use crate::data::{linspace, SampleSet, TargetFunction};
use crate::design::{orthonormalize, Design};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, SolverOptions};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Uniform error on the training samples, recomputed from the returned approximant.
    pub error: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub history: Vec<f64>,
    /// Condition number of the weighted basis matrices at the returned iterate.
    pub condition: Option<f64>,
    pub converged: bool,
    /// The iteration stopped because the next iterate drove the denominator
    /// below the pole threshold on a sample; the last valid iterate is returned.
    pub denominator_collapsed: bool,
}

#[derive(Debug, Clone)]
pub struct DiffCorrOptions {
    pub max_iters: usize,
    /// Stop once an iteration lowers the error by less than this.
    pub tol: f64,
    pub report_condition: bool,
}

impl Default for DiffCorrOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-10,
            report_condition: true,
        }
    }
}

/// Condition numbers above this mark a fit as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e12;

pub fn fit(samples: &SampleSet, spec: &DegreeSpec, opts: &DiffCorrOptions) -> Result<(RationalApprox, FitReport)> {
    let start = Instant::now();
    if opts.max_iters == 0 {
        return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
    }
    let design = Design::new(samples, spec)?;
    let unknowns = design.n_num + design.n_den;
    if samples.len() < unknowns {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot determine {unknowns} coefficients",
            samples.len()
        )));
    }
    let f = samples.values();
    let domain = samples.domain().clone();

    if samples.range() == 0.0 {
        let r = RationalApprox::constant(spec.clone(), domain, f[0])?;
        let report = FitReport {
            error: 0.0,
            iterations: 0,
            wall_time: start.elapsed().as_secs_f64(),
            history: vec![0.0],
            condition: None,
            converged: true,
            denominator_collapsed: false,
        };
        return Ok((r, report));
    }

    let (na, nb) = (design.n_num, design.n_den);
    let mut a = vec![0.0; na];
    let mut b = vec![0.0; nb];
    b[0] = 1.0;
    let mut q_prev = vec![1.0; design.n_samples];
    let mut delta = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut history = Vec::new();
    let mut converged = false;
    let mut denominator_collapsed = false;
    let mut iterations = 0;

    let lp_opts = SolverOptions::default();

    while iterations < opts.max_iters {
        iterations += 1;
        let step = WeightedStep::new(&design, &q_prev, &a, &b, f, delta)?;
        let sol = lp::solve_with(&step.program, &lp_opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Invariant(format!(
                "differential correction LP returned {:?} at iteration {iterations}",
                sol.status
            )));
        }
        let y = sol.y.expect("optimal solution carries y");
        if y[na + nb] >= 0.0 {
            converged = true;
            break;
        }
        let Some((new_a, new_b)) = step.coefficients(&y) else {
            break;
        };
        let (p, q) = design.eval(&new_a, &new_b);
        let scale = new_a.iter().chain(&new_b).fold(0.0f64, |m, v| m.max(v.abs()));
        // The evaluator treats |q| below the pole threshold as a pole, so an
        // iterate that collapses q on a sample cannot be reported.
        if q.iter().any(|&v| !(v / scale >= POLE_THRESHOLD)) {
            denominator_collapsed = true;
            break;
        }
        let new_delta = f
            .iter()
            .zip(p.iter().zip(&q))
            .map(|(fi, (pi, qi))| (fi - pi / qi).abs())
            .fold(0.0f64, f64::max);
        if !(new_delta < delta) {
            converged = true;
            break;
        }
        let improvement = delta - new_delta;
        a = new_a.iter().map(|v| v / scale).collect();
        b = new_b.iter().map(|v| v / scale).collect();
        q_prev = q.iter().map(|v| v / scale).collect();
        delta = new_delta;
        history.push(delta);
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }

    let r = RationalApprox::new(spec.clone(), domain, a, b)?;
    if let Some(i) = (0..samples.len()).find(|&i| !(q_prev[i] > 0.0)) {
        return Err(Error::DegenerateFit(format!(
            "denominator is {} at sample {i}",
            q_prev[i]
        )));
    }
    let error = uniform_error(&r, samples)?;
    let condition = opts.report_condition.then(|| weighted_condition(&design, &q_prev));
    Ok((
        r,
        FitReport {
            error,
            iterations,
            wall_time: start.elapsed().as_secs_f64(),
            history,
            condition,
            converged,
            denominator_collapsed,
        },
    ))
}

/// One correction LP, posed in orthonormal coordinates for `p / q_k` and
/// `q / q_k` over the samples.
///
/// The change of variables is linear, so the LP is the same problem; it only
/// keeps the constraint matrix well conditioned when `q_k` spans many orders
/// of magnitude. The coefficient box is sized to contain the current iterate.
struct WeightedStep {
    program: LinearProgram,
    num_r: DMatrix<f64>,
    den_r: DMatrix<f64>,
}

impl WeightedStep {
    fn new(design: &Design, q_prev: &[f64], a: &[f64], b: &[f64], f: &[f64], delta: f64) -> Result<Self> {
        let (na, nb, n) = (design.n_num, design.n_den, design.n_samples);
        let (num_q, num_r) = orthonormalize(design.num_matrix_scaled(q_prev))?;
        let (den_q, den_r) = orthonormalize(design.den_matrix_scaled(q_prev))?;

        let a_now = &num_r * DMatrix::from_column_slice(na, 1, a);
        let b_now = &den_r * DMatrix::from_column_slice(nb, 1, b);
        let radius = a_now.iter().chain(b_now.iter()).fold(0.0f64, |m, v| m.max(v.abs()));

        let nvars = na + nb + 1;
        let mut m = DMatrix::zeros(2 * n, nvars);
        for i in 0..n {
            for j in 0..na {
                m[(2 * i, j)] = -num_q[(i, j)];
                m[(2 * i + 1, j)] = num_q[(i, j)];
            }
            for j in 0..nb {
                m[(2 * i, na + j)] = (f[i] - delta) * den_q[(i, j)];
                m[(2 * i + 1, na + j)] = (-f[i] - delta) * den_q[(i, j)];
            }
            m[(2 * i, nvars - 1)] = -1.0;
            m[(2 * i + 1, nvars - 1)] = -1.0;
        }
        let mut c = vec![0.0; nvars];
        c[nvars - 1] = 1.0;
        let mut bounds = vec![(-radius, radius); nvars];
        bounds[nvars - 1] = (f64::NEG_INFINITY, f64::INFINITY);
        let program = LinearProgram::new(c, m, vec![0.0; 2 * n]).with_bounds(bounds);
        Ok(Self { program, num_r, den_r })
    }

    /// Chebyshev coefficients of the LP solution, or `None` if the triangular
    /// solve breaks down.
    fn coefficients(&self, y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let na = self.num_r.nrows();
        let nb = self.den_r.nrows();
        let a = self
            .num_r
            .solve_upper_triangular(&DMatrix::from_column_slice(na, 1, &y[..na]))?;
        let b = self
            .den_r
            .solve_upper_triangular(&DMatrix::from_column_slice(nb, 1, &y[na..na + nb]))?;
        let finite = a.iter().chain(b.iter()).all(|v| v.is_finite());
        finite.then(|| (a.as_slice().to_vec(), b.as_slice().to_vec()))
    }
}

/// Larger of the 2-norm condition numbers of the numerator and denominator
/// basis matrices with rows divided by `q`. This is the conditioning of the
/// correction LP in Chebyshev coefficients at the given iterate.
fn weighted_condition(design: &Design, q: &[f64]) -> f64 {
    condition_number(design.num_matrix_scaled(q)).max(condition_number(design.den_matrix_scaled(q)))
}

fn condition_number(m: DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `max_i |f_i − r(x_i)|`.
pub fn uniform_error(r: &RationalApprox, samples: &SampleSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, &v) in samples.points().zip(samples.values()) {
        worst = worst.max((v - r.eval(x)?).abs());
    }
    Ok(worst)
}

/// Best uniform rational approximation of `max(0, x)` on `n_points` uniform samples.
pub fn fit_relu_rational(
    spec: &DegreeSpec,
    interval: &BoxDomain,
    n_points: usize,
) -> Result<(RationalApprox, FitReport)> {
    if interval.dim() != 1 || spec.dim() != 1 {
        return Err(Error::Dimension("ReLU fit is univariate".into()));
    }
    let xs = linspace(interval.lower()[0], interval.upper()[0], n_points);
    let values = xs.iter().map(|&x| TargetFunction::Relu.eval(&[x])).collect();
    let samples = SampleSet::from_flat(xs, values, interval.clone())?;
    fit(&samples, spec, &DiffCorrOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_function;

    fn grid(f: impl Fn(f64) -> f64, n: usize) -> SampleSet {
        let xs = linspace(-1.0, 1.0, n);
        let vals = xs.iter().map(|&x| f(x)).collect();
        SampleSet::from_flat(xs, vals, BoxDomain::unit(1)).unwrap()
    }

    #[test]
    fn constant_degree_gives_midrange() {
        let s = grid(|x| x.exp(), 201);
        let (r, rep) = fit(&s, &DegreeSpec::univariate(0, 0), &Default::default()).unwrap();
        let (lo, hi) = (s.min_value(), s.max_value());
        assert!((r.eval(&[0.3]).unwrap() - 0.5 * (hi + lo)).abs() < 1e-9);
        assert!((rep.error - 0.5 * (hi - lo)).abs() < 1e-9);
    }

    #[test]
    fn exact_rational_is_recovered() {
        let s = grid(|x| (1.0 + 0.5 * x - x * x) / (2.0 + x * x + 0.3 * x), 301);
        let (_, rep) = fit(&s, &DegreeSpec::univariate(2, 2), &Default::default()).unwrap();
        assert!(rep.error <= 1e-9, "error {}", rep.error);
    }

    #[test]
    fn constant_target_short_circuits() {
        let s = grid(|_| 0.7, 50);
        let (r, rep) = fit(&s, &DegreeSpec::univariate(3, 3), &Default::default()).unwrap();
        assert_eq!(rep.error, 0.0);
        assert_eq!(r.num_coeffs()[0], 0.7);
        assert!(r.num_coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn history_strictly_decreases_and_report_matches() {
        let s = sample_function(TargetFunction::SqrtAbsShift, &BoxDomain::unit(1), &[401]).unwrap();
        let (r, rep) = fit(&s, &DegreeSpec::univariate(3, 3), &Default::default()).unwrap();
        assert!(rep.history.windows(2).all(|w| w[1] < w[0]));
        assert!((rep.history.last().unwrap() - rep.error).abs() < 1e-10);
        assert!((uniform_error(&r, &s).unwrap() - rep.error).abs() < 1e-10);
        assert!(rep.converged);
    }

    #[test]
    fn relu_is_linear_on_positive_half() {
        let (r, rep) = fit_relu_rational(
            &DegreeSpec::univariate(1, 0),
            &BoxDomain::interval(0.0, 1.0).unwrap(),
            101,
        )
        .unwrap();
        assert!(rep.error <= 1e-9);
        assert!((r.eval(&[0.4]).unwrap() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn rejects_too_few_samples() {
        let s = grid(|x| x, 5);
        assert!(fit(&s, &DegreeSpec::univariate(3, 3), &Default::default()).is_err());
        let opts = DiffCorrOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(fit(&grid(|x| x, 50), &DegreeSpec::univariate(1, 1), &opts).is_err());
    }
}
