//! Basis values of the numerator and denominator terms at every sample.

use nalgebra::DMatrix;

use crate::basis::{basis_matrix, BasisIndexSet, DegreeSpec};
use crate::data::SampleSet;
use crate::error::{Error, Result};

pub(crate) struct Design {
    pub n_samples: usize,
    pub n_num: usize,
    pub n_den: usize,
    /// Row-major `n_samples × n_num`.
    pub num: Vec<f64>,
    /// Row-major `n_samples × n_den`.
    pub den: Vec<f64>,
}

impl Design {
    pub fn new(samples: &SampleSet, spec: &DegreeSpec) -> Result<Self> {
        if spec.dim() != samples.dim() {
            return Err(Error::Dimension(format!(
                "degree spec is {}-dimensional, samples are {}-dimensional",
                spec.dim(),
                samples.dim()
            )));
        }
        let pts = samples.normalized_points();
        Ok(Self {
            n_samples: samples.len(),
            n_num: spec.num_index_set().len(),
            n_den: spec.den_index_set().len(),
            num: row_major(&pts, &spec.num_index_set())?,
            den: row_major(&pts, &spec.den_index_set())?,
        })
    }

    pub fn num_row(&self, i: usize) -> &[f64] {
        &self.num[i * self.n_num..(i + 1) * self.n_num]
    }

    pub fn den_row(&self, i: usize) -> &[f64] {
        &self.den[i * self.n_den..(i + 1) * self.n_den]
    }

    /// Numerator basis matrix with row `i` divided by `w[i]`.
    pub fn num_matrix_scaled(&self, w: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_samples, self.n_num, |i, j| self.num_row(i)[j] / w[i])
    }

    /// Denominator basis matrix with row `i` divided by `w[i]`.
    pub fn den_matrix_scaled(&self, w: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_samples, self.n_den, |i, j| self.den_row(i)[j] / w[i])
    }

    /// `p(x_i)` and `q(x_i)` for every sample.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = (0..self.n_samples).map(|i| dot(self.num_row(i), a)).collect();
        let q = (0..self.n_samples).map(|i| dot(self.den_row(i), b)).collect();
        (p, q)
    }
}

fn row_major(pts: &[Vec<f64>], idx: &BasisIndexSet) -> Result<Vec<f64>> {
    let m = basis_matrix(pts, idx)?;
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    Ok(out)
}

/// Thin QR factors of a tall matrix.
pub(crate) fn orthonormalize(m: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let qr = m.qr();
    let r = qr.r();
    if r.diagonal().iter().any(|d| *d == 0.0 || !d.is_finite()) {
        return Err(Error::Numerical("weighted basis matrix is rank deficient".into()));
    }
    Ok((qr.q(), r))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
