//! Greedy barycentric rational fitting (AAA) for univariate samples.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::POLE_THRESHOLD;
use crate::data::SampleSet;
use crate::diffcorr::FitReport;
use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-13;

/// Distance below which an evaluation point is treated as a support point.
const SUPPORT_SNAP: f64 = 1e-14;

/// `r(x) = Σ w_j f_j / (x − z_j) / Σ w_j / (x − z_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycentricRational {
    support: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl BarycentricRational {
    pub fn new(support: Vec<f64>, values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != values.len() || support.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "support {}, values {}, weights {} must be equal and nonzero",
                support.len(),
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidArgument("all barycentric weights are zero".into()));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("support points must be distinct".into()));
        }
        Ok(Self {
            support,
            values,
            weights,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `(m − 1, m − 1)` for `m` support points.
    pub fn degree(&self) -> (usize, usize) {
        (self.len() - 1, self.len() - 1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&z, &f), &w) in self.support.iter().zip(&self.values).zip(&self.weights) {
            let d = x - z;
            if d.abs() <= SUPPORT_SNAP {
                return Ok(f);
            }
            num += w * f / d;
            den += w / d;
        }
        if den.abs() < POLE_THRESHOLD {
            return Err(Error::Pole {
                point: vec![x],
                denominator: den,
            });
        }
        Ok(num / den)
    }

    /// Whether a real pole lies in `[lo, hi]`.
    ///
    /// Between two adjacent support points with nonzero weights of equal sign
    /// the barycentric denominator changes sign, so it has a root there. Beyond
    /// the outermost supports the denominator is checked at the interval ends
    /// and at the given probe points.
    pub fn has_pole_in(&self, lo: f64, hi: f64, probes: &[f64]) -> bool {
        let mut order: Vec<usize> = (0..self.len()).filter(|&j| self.weights[j] != 0.0).collect();
        order.sort_by(|&a, &b| self.support[a].total_cmp(&self.support[b]));
        let inside: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&j| self.support[j] >= lo && self.support[j] <= hi)
            .collect();
        if inside
            .windows(2)
            .any(|p| self.weights[p[0]].signum() == self.weights[p[1]].signum())
        {
            return true;
        }
        let (first, last) = match (inside.first(), inside.last()) {
            (Some(&a), Some(&b)) => (self.support[a], self.support[b]),
            _ => (hi, lo),
        };
        let mut outer: Vec<f64> = probes
            .iter()
            .copied()
            .chain([lo, hi])
            .filter(|&x| x >= lo && x <= hi && (x < first || x > last))
            .collect();
        outer.sort_by(f64::total_cmp);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for x in outer {
            let d = self.denominator(x);
            if !d.is_finite() || d.abs() < POLE_THRESHOLD {
                return true;
            }
            if x < first {
                left.push(d.signum());
            } else {
                right.push(d.signum());
            }
        }
        // Approaching the nearest support from outside, the sign is fixed by
        // its weight; a mismatch within the outer stretch means a root.
        if let Some(&j) = inside.first() {
            if left.iter().any(|&s| s != -self.weights[j].signum()) {
                return true;
            }
        }
        if let Some(&j) = inside.last() {
            if right.iter().any(|&s| s != self.weights[j].signum()) {
                return true;
            }
        }
        left.windows(2).any(|w| w[0] != w[1]) || right.windows(2).any(|w| w[0] != w[1])
    }

    fn denominator(&self, x: f64) -> f64 {
        self.support.iter().zip(&self.weights).map(|(&z, &w)| w / (x - z)).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("barycentric rational serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Self = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::new(raw.support, raw.values, raw.weights)
    }
}

pub fn bary_eval(r: &BarycentricRational, x: f64) -> Result<f64> {
    r.eval(x)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AaaFit {
    pub approx: BarycentricRational,
    pub report: FitReport,
    pub mse: f64,
    /// A real pole was detected inside the sample interval.
    pub pole_in_interval: bool,
}

impl AaaFit {
    /// Error far beyond the data range or a pole on the interval.
    pub fn unstable(&self, samples: &SampleSet) -> bool {
        self.pole_in_interval || self.report.error > 10.0 * samples.range()
    }
}

pub fn aaa_fit(samples: &SampleSet, m_max: usize, rel_tol: f64) -> Result<(BarycentricRational, FitReport)> {
    let fit = aaa_fit_full(samples, m_max, rel_tol)?;
    Ok((fit.approx, fit.report))
}

pub fn aaa_fit_full(samples: &SampleSet, m_max: usize, rel_tol: f64) -> Result<AaaFit> {
    let start = Instant::now();
    if samples.dim() != 1 {
        return Err(Error::Dimension("AAA is univariate".into()));
    }
    if m_max == 0 || 2 * m_max > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "m_max = {m_max} must be ≥ 1 and at most half of {} samples",
            samples.len()
        )));
    }
    let xs = samples.xs();
    let f = samples.values();
    let n = xs.len();
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = f.iter().sum::<f64>() / n as f64;
    let mut approx_vals = vec![mean; n];
    let mut is_support = vec![false; n];
    let mut chosen: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;

    while chosen.len() < m_max {
        let (next, worst) = argmax_residual(f, &approx_vals, &is_support);
        if worst == 0.0 {
            converged = true;
            break;
        }
        is_support[next] = true;
        chosen.push(next);

        let rest: Vec<usize> = (0..n).filter(|&i| !is_support[i]).collect();
        let m = chosen.len();
        let loewner = DMatrix::from_fn(rest.len(), m, |r, c| {
            let (i, j) = (rest[r], chosen[c]);
            (f[i] - f[j]) / (xs[i] - xs[j])
        });
        weights = minimal_right_singular_vector(loewner)?;

        for &i in &rest {
            let mut num = 0.0;
            let mut den = 0.0;
            for (&j, &w) in chosen.iter().zip(&weights) {
                let c = w / (xs[i] - xs[j]);
                num += c * f[j];
                den += c;
            }
            approx_vals[i] = num / den;
        }
        for &j in &chosen {
            approx_vals[j] = f[j];
        }
        let err = f
            .iter()
            .zip(&approx_vals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) });
        history.push(err);
        if err <= rel_tol * scale {
            converged = true;
            break;
        }
    }
    if chosen.is_empty() {
        // A constant target: one support point reproduces it.
        chosen.push(0);
        weights = vec![1.0];
        history.push(0.0);
    }

    let approx = BarycentricRational::new(
        chosen.iter().map(|&j| xs[j]).collect(),
        chosen.iter().map(|&j| f[j]).collect(),
        weights,
    )?;
    let error = uniform_error(&approx, samples)?;
    let mse = mse(&approx, samples)?;
    let lo = samples.domain().lower()[0];
    let hi = samples.domain().upper()[0];
    let pole_in_interval = approx.has_pole_in(lo, hi, xs);
    let report = FitReport {
        error,
        iterations: approx.len(),
        wall_time: start.elapsed().as_secs_f64(),
        history,
        condition: None,
        converged: converged || approx.len() == m_max,
        denominator_collapsed: false,
    };
    Ok(AaaFit {
        approx,
        report,
        mse,
        pole_in_interval,
    })
}

fn argmax_residual(f: &[f64], approx: &[f64], is_support: &[bool]) -> (usize, f64) {
    let mut best = (0, -1.0);
    for i in 0..f.len() {
        if is_support[i] {
            continue;
        }
        let r = (f[i] - approx[i]).abs();
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > best.1 {
            best = (i, r);
        }
    }
    best
}

fn minimal_right_singular_vector(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let cols = m.ncols();
    if cols == 1 {
        return Ok(vec![1.0]);
    }
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("Loewner SVD did not produce right singular vectors".into()))?;
    let (k, _) =
        svd.singular_values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |best, (k, &s)| if s < best.1 { (k, s) } else { best },
        );
    // A tall Loewner matrix has `cols` singular values; a wide one has fewer
    // and the null direction is missing from `v_t`.
    if v_t.nrows() < cols {
        return Err(Error::Numerical(format!(
            "Loewner matrix {}×{cols} has too few rows for a null vector",
            svd.singular_values.len()
        )));
    }
    let w: Vec<f64> = v_t.row(k).iter().copied().collect();
    if w.iter().any(|v| !v.is_finite()) {
        let s = &svd.singular_values;
        return Err(Error::Numerical(format!(
            "Loewner singular vector is not finite (σ_max / σ_min = {:e})",
            s.max() / s.min()
        )));
    }
    Ok(w)
}

pub fn uniform_error(r: &BarycentricRational, samples: &SampleSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for (&x, &v) in samples.xs().iter().zip(samples.values()) {
        worst = worst.max((v - r.eval(x)?).abs());
    }
    Ok(worst)
}

pub fn mse(r: &BarycentricRational, samples: &SampleSet) -> Result<f64> {
    let mut total = 0.0;
    for (&x, &v) in samples.xs().iter().zip(samples.values()) {
        total += (v - r.eval(x)?).powi(2);
    }
    Ok(total / samples.len() as f64)
}
