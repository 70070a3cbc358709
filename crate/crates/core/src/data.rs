//! Target functions, sample sets, and tensor grids.
//!
//! Grid files are plain text:
//!
//! ```text
//! d
//! <axis 1 coordinates, whitespace separated>
//! ...
//! <axis d coordinates>
//! <values, row-major (last axis fastest), any whitespace/line layout>
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::BoxDomain;
use crate::error::{Error, Result};

/// Finite list of `(point, value)` pairs inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    coords: Vec<f64>,
    values: Vec<f64>,
    domain: BoxDomain,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, domain: BoxDomain) -> Result<Self> {
        let dim = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::Dimension(format!(
                    "sample point has {} coordinates, box has {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, values, domain)
    }

    /// Points stored back to back, `dim` coordinates each.
    pub fn from_flat(coords: Vec<f64>, values: Vec<f64>, domain: BoxDomain) -> Result<Self> {
        let dim = domain.dim();
        if coords.len() != values.len() * dim {
            return Err(Error::Dimension(format!(
                "{} coordinates for {} values in dimension {dim}",
                coords.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample value {i} is not finite")));
        }
        let set = Self {
            dim,
            coords,
            values,
            domain,
        };
        for i in 0..set.len() {
            set.domain.normalize(set.point(i))?;
        }
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.sort_by(|&a, &b| {
            set.point(a)
                .iter()
                .zip(set.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some(w) = order.windows(2).find(|w| set.point(w[0]) == set.point(w[1])) {
            return Err(Error::InvalidArgument(format!(
                "duplicate sample point {:?}",
                set.point(w[0])
            )));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn normalized_points(&self) -> Vec<Vec<f64>> {
        self.points()
            .map(|p| self.domain.normalize(p).expect("checked at construction"))
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max f − min f`.
    pub fn range(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    /// Univariate abscissae; panics if `dim != 1`.
    pub fn xs(&self) -> &[f64] {
        assert_eq!(self.dim, 1, "xs() needs univariate samples");
        &self.coords
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetFunction {
    /// `√|x − 0.25|`
    SqrtAbsShift,
    /// `max(0, x)`
    Relu,
    /// Soliton-shaped bivariate surface `−sin(πx/20)·sech²((x − 20 − t)/4)`.
    KdvLike,
}

impl TargetFunction {
    pub fn name(self) -> &'static str {
        match self {
            TargetFunction::SqrtAbsShift => "sqrt_abs_shift",
            TargetFunction::Relu => "relu",
            TargetFunction::KdvLike => "kdv_like",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            TargetFunction::KdvLike => 2,
            _ => 1,
        }
    }

    /// The box each builtin target is sampled on by default.
    pub fn default_domain(self) -> BoxDomain {
        match self {
            TargetFunction::KdvLike => BoxDomain::new(vec![0.0, -20.0], vec![40.0, 19.84375]).expect("valid box"),
            _ => BoxDomain::unit(1),
        }
    }

    pub fn eval(self, point: &[f64]) -> f64 {
        match self {
            TargetFunction::SqrtAbsShift => (point[0] - 0.25).abs().sqrt(),
            TargetFunction::Relu => point[0].max(0.0),
            TargetFunction::KdvLike => {
                let (x, t) = (point[0], point[1]);
                let s = 1.0 / ((x - 20.0 - t) / 4.0).cosh();
                -(std::f64::consts::PI * x / 20.0).sin() * s * s
            }
        }
    }

    /// Evaluates at a point that must lie in `domain`.
    pub fn eval_in(self, domain: &BoxDomain, point: &[f64]) -> Result<f64> {
        if domain.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} is {}-dimensional, box is {}-dimensional",
                self.name(),
                self.dim(),
                domain.dim()
            )));
        }
        domain.normalize(point)?;
        Ok(self.eval(point))
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt_abs_shift" => Ok(TargetFunction::SqrtAbsShift),
            "relu" => Ok(TargetFunction::Relu),
            "kdv_like" => Ok(TargetFunction::KdvLike),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }
}

/// `n` equispaced points from `a` to `b` inclusive (endpoints exact).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
        }
    }
}

/// Samples `target` on a uniform tensor grid over `domain`.
pub fn sample_function(target: TargetFunction, domain: &BoxDomain, n_per_dim: &[usize]) -> Result<SampleSet> {
    let grid = GridDataset::from_function(target, domain, n_per_dim)?;
    grid.to_sample_set()
}

/// Values on a tensor grid, stored row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDataset {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
    domain: BoxDomain,
}

impl GridDataset {
    pub fn new(axes: Vec<Vec<f64>>, values: Vec<f64>, domain: BoxDomain) -> Result<Self> {
        if axes.len() != domain.dim() {
            return Err(Error::Dimension(format!(
                "{} axes for a {}-dimensional box",
                axes.len(),
                domain.dim()
            )));
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "grid of shape {:?} needs {expected} values, got {}",
                axes.iter().map(Vec::len).collect::<Vec<_>>(),
                values.len()
            )));
        }
        for (i, axis) in axes.iter().enumerate() {
            if axis.is_empty() || axis.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidArgument(format!("axis {i} is not strictly increasing")));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid contains non-finite values".into()));
        }
        Ok(Self { axes, values, domain })
    }

    /// Grid with its box taken from the axis extents.
    pub fn from_axes(axes: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let lower = axes.iter().map(|a| a.first().copied().unwrap_or(0.0)).collect();
        let upper = axes.iter().map(|a| a.last().copied().unwrap_or(0.0)).collect();
        let domain = BoxDomain::new(lower, upper)?;
        Self::new(axes, values, domain)
    }

    pub fn from_function(target: TargetFunction, domain: &BoxDomain, n_per_dim: &[usize]) -> Result<Self> {
        if n_per_dim.len() != domain.dim() {
            return Err(Error::Dimension(format!(
                "{} grid sizes for a {}-dimensional box",
                n_per_dim.len(),
                domain.dim()
            )));
        }
        let axes: Vec<Vec<f64>> = n_per_dim
            .iter()
            .enumerate()
            .map(|(i, &n)| linspace(domain.lower()[i], domain.upper()[i], n))
            .collect();
        let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut point = vec![0.0; axes.len()];
        for flat in 0..total {
            Self::fill_point(&axes, &shape, flat, &mut point);
            values.push(target.eval_in(domain, &point)?);
        }
        Self::new(axes, values, domain.clone())
    }

    fn fill_point(axes: &[Vec<f64>], shape: &[usize], mut flat: usize, out: &mut [f64]) {
        for d in (0..shape.len()).rev() {
            out[d] = axes[d][flat % shape[d]];
            flat /= shape[d];
        }
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps indices `0, k, 2k, …` along every axis. The box is unchanged.
    pub fn subsample_every_k(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("subsampling step must be ≥ 1".into()));
        }
        let shape = self.shape();
        let new_axes: Vec<Vec<f64>> = self
            .axes
            .iter()
            .map(|a| a.iter().step_by(k).copied().collect())
            .collect();
        if let Some((i, a)) = new_axes.iter().enumerate().find(|(_, a)| a.len() < 2) {
            return Err(Error::InvalidArgument(format!(
                "every-{k} subsampling leaves {} point(s) on axis {i}",
                a.len()
            )));
        }
        let new_shape: Vec<usize> = new_axes.iter().map(Vec::len).collect();
        let total: usize = new_shape.iter().product();
        let mut values = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut src = 0;
            let mut stride = 1;
            for d in (0..shape.len()).rev() {
                let idx = rem % new_shape[d];
                rem /= new_shape[d];
                src += idx * k * stride;
                stride *= shape[d];
            }
            values.push(self.values[src]);
        }
        Self::new(new_axes, values, self.domain.clone())
    }

    /// Flattens to samples in row-major order.
    pub fn to_sample_set(&self) -> Result<SampleSet> {
        let shape = self.shape();
        let d = shape.len();
        let mut coords = Vec::with_capacity(self.len() * d);
        let mut point = vec![0.0; d];
        for flat in 0..self.len() {
            Self::fill_point(&self.axes, &shape, flat, &mut point);
            coords.extend_from_slice(&point);
        }
        SampleSet::from_flat(coords, self.values.clone(), self.domain.clone())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.axes.len());
        for axis in &self.axes {
            let line: Vec<String> = axis.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let last = *self.shape().last().unwrap_or(&1);
        for row in self.values.chunks(last.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse {
            line: line + 1,
            message,
        };

        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty grid file".into()))?;
        let d: usize = header
            .trim()
            .parse()
            .map_err(|_| parse_err(ln, format!("expected dimension, found `{}`", header.trim())))?;
        if d == 0 {
            return Err(parse_err(ln, "dimension must be ≥ 1".into()));
        }
        let parse_row = |ln: usize, line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| parse_err(ln, format!("`{tok}` is not a number")))
                })
                .collect()
        };
        let mut axes = Vec::with_capacity(d);
        for i in 0..d {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse_err(ln, format!("missing coordinate line for axis {i}")))?;
            axes.push(parse_row(ln, line)?);
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        let mut values = Vec::with_capacity(expected);
        let mut last_line = ln;
        for (ln, line) in lines {
            last_line = ln;
            values.extend(parse_row(ln, line)?);
            if values.len() > expected {
                return Err(parse_err(
                    ln,
                    format!("more than the {expected} values declared by the axes"),
                ));
            }
        }
        if values.len() != expected {
            return Err(parse_err(
                last_line,
                format!("axes declare {expected} values, file has {}", values.len()),
            ));
        }
        Self::from_axes(axes, values).map_err(|e| parse_err(last_line, e.to_string()))
    }
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridDataset> {
    GridDataset::from_text(&std::fs::read_to_string(path)?)
}

pub fn save_grid(grid: &GridDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, grid.to_text())?;
    Ok(())
}

pub fn subsample_every_k(grid: &GridDataset, k: usize) -> Result<GridDataset> {
    grid.subsample_every_k(k)
}

pub fn to_sample_set(grid: &GridDataset) -> Result<SampleSet> {
    grid.to_sample_set()
}

/// Grid shape used for the bivariate stand-in: 512 points in `x`, 201 in `t`.
pub const KDV_SHAPE: [usize; 2] = [512, 201];

/// The synthetic bivariate dataset on its default box.
pub fn kdv_like_grid() -> GridDataset {
    let target = TargetFunction::KdvLike;
    GridDataset::from_function(target, &target.default_domain(), &KDV_SHAPE).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_values() {
        let f = TargetFunction::SqrtAbsShift;
        assert_eq!(f.eval(&[0.25]), 0.0);
        let unit = BoxDomain::unit(1);
        assert!(matches!(f.eval_in(&unit, &[1.25]), Err(Error::Domain { .. })));
        let kdv = TargetFunction::KdvLike;
        // −sin(π)·sech²(0) is zero up to the rounding of sin(π)
        assert!(kdv.eval(&[20.0, 0.0]).abs() < 1e-15);
        assert_eq!(TargetFunction::Relu.eval(&[-0.5]), 0.0);
        assert!("nope".parse::<TargetFunction>().is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-1.0, 1.0, 2001);
        assert_eq!(v.len(), 2001);
        assert_eq!((v[0], v[1000], v[2000]), (-1.0, 0.0, 1.0));
    }

    #[test]
    fn toy_grid_file() {
        let text = "2\n0 1 2\n10 20\n1 2\n3 4\n5 6\n";
        let g = GridDataset::from_text(text).unwrap();
        assert_eq!(g.shape(), vec![3, 2]);
        assert_eq!(g.len(), 6);

        let short = "2\n0 1 2\n10 20\n1 2\n3 4\n5\n";
        match GridDataset::from_text(short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            GridDataset::from_text("x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            GridDataset::from_text("1\n0 1\n1 2 3\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn save_load_is_bit_exact() {
        let g = GridDataset::from_function(
            TargetFunction::KdvLike,
            &TargetFunction::KdvLike.default_domain(),
            &[13, 7],
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("ratnet-grid-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.txt");
        save_grid(&g, &path).unwrap();
        let back = load_grid(&path).unwrap();
        assert_eq!(back.axes(), g.axes());
        assert!(back
            .values()
            .iter()
            .zip(g.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn subsampling_sizes() {
        let g = GridDataset::from_axes(
            vec![linspace(0.0, 1.0, 512), linspace(0.0, 1.0, 201)],
            vec![0.0; 512 * 201],
        )
        .unwrap();
        assert_eq!(g.subsample_every_k(1).unwrap(), g);
        assert_eq!(g.subsample_every_k(10).unwrap().shape(), vec![52, 21]);
        assert_eq!(g.subsample_every_k(20).unwrap().shape(), vec![26, 11]);
        assert!(g.subsample_every_k(300).is_err());
        assert!(g.subsample_every_k(0).is_err());
    }

    #[test]
    fn subsampling_picks_matching_values() {
        let g = GridDataset::from_function(
            TargetFunction::KdvLike,
            &TargetFunction::KdvLike.default_domain(),
            &[41, 33],
        )
        .unwrap();
        let s = g.subsample_every_k(4).unwrap();
        let samples = s.to_sample_set().unwrap();
        for (p, &v) in samples.points().zip(samples.values()) {
            assert_eq!(v, TargetFunction::KdvLike.eval(p));
        }
        // composition where divisibility holds
        assert_eq!(g.subsample_every_k(8).unwrap(), s.subsample_every_k(2).unwrap());
        assert_eq!(s.domain(), g.domain());
    }

    #[test]
    fn sample_set_order_is_row_major() {
        let g = GridDataset::from_axes(vec![vec![0.0, 1.0], vec![5.0, 6.0]], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = g.to_sample_set().unwrap();
        assert_eq!(s.len(), 4);
        let pts: Vec<&[f64]> = s.points().collect();
        assert_eq!(pts, vec![&[0.0, 5.0][..], &[0.0, 6.0], &[1.0, 5.0], &[1.0, 6.0]]);
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn sample_set_rejects_duplicates_and_outside_points() {
        let b = BoxDomain::unit(1);
        assert!(SampleSet::new(vec![vec![0.1], vec![0.1]], vec![1.0, 2.0], b.clone()).is_err());
        assert!(SampleSet::new(vec![vec![2.0]], vec![1.0], b.clone()).is_err());
        assert!(SampleSet::new(vec![vec![0.0]], vec![f64::NAN], b).is_err());
    }

    #[test]
    fn kdv_grid_shape() {
        let g = kdv_like_grid();
        assert_eq!(g.shape(), vec![512, 201]);
        assert_eq!(g.axes()[1][200], 19.84375);
    }
}
