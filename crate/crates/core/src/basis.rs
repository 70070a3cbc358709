//! Chebyshev (first kind) bases on boxes and rational functions built on them.
//!
//! Multivariate terms are products `T_{α_1}(x_1) ⋯ T_{α_d}(x_d)` indexed by
//! multi-indices `α`. Index sets are kept in graded lexicographic order:
//! first by total degree `|α|`, then lexicographically on `α`, so that
//! `(0,0) < (0,1) < (1,0) < (0,2) < (1,1) < (2,0) < …`. Coefficient vectors
//! are always stored in this order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points this far outside a box are still accepted (and clamped).
pub const BOX_SLACK: f64 = 1e-12;
/// Normalized coordinates this far outside `[-1, 1]` are still accepted.
pub const UNIT_SLACK: f64 = 1e-9;
/// Denominators smaller than this in magnitude are reported as poles.
pub const POLE_THRESHOLD: f64 = 1e-12;

/// An axis-aligned box `[lower_1, upper_1] × ⋯ × [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxRepr> for BoxDomain {
    type Error = Error;

    fn try_from(r: BoxRepr) -> Result<Self> {
        BoxDomain::new(r.lower, r.upper)
    }
}

impl From<BoxDomain> for BoxRepr {
    fn from(b: BoxDomain) -> Self {
        BoxRepr {
            lower: b.lower,
            upper: b.upper,
        }
    }
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "box side {i} is [{lo}, {hi}]; need finite lower < upper"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    /// The box `[-1, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![-1.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.check(point).is_ok()
    }

    fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, box has {}",
                point.len(),
                self.dim()
            )));
        }
        for (i, &x) in point.iter().enumerate() {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            let slack = BOX_SLACK * (1.0 + lo.abs().max(hi.abs()));
            if !(x >= lo - slack && x <= hi + slack) {
                return Err(Error::Domain {
                    coord: i,
                    value: x,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(())
    }

    /// Affine image of `point` in `[-1, 1]^d`.
    pub fn normalize(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check(point)?;
        Ok(point
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
            })
            .collect())
    }

    /// Inverse of [`BoxDomain::normalize`].
    pub fn denormalize(&self, unit_point: &[f64]) -> Vec<f64> {
        unit_point
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                lo + 0.5 * (u + 1.0) * (hi - lo)
            })
            .collect()
    }
}

/// Maps every point of `points` from `domain` onto `[-1, 1]^d`.
pub fn normalize_to_unit_box(points: &[Vec<f64>], domain: &BoxDomain) -> Result<Vec<Vec<f64>>> {
    points.iter().map(|p| domain.normalize(p)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// All `α` with `α_i ≤ n_i` for every dimension.
    TensorProduct,
    /// All `α` with `Σ α_i ≤ max_i n_i`.
    #[default]
    TotalDegree,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" | "tensor_product" | "tensor-product" => Ok(Scheme::TensorProduct),
            "total" | "total_degree" | "total-degree" => Ok(Scheme::TotalDegree),
            other => Err(Error::InvalidArgument(format!("unknown basis scheme `{other}`"))),
        }
    }
}

/// Numerator and denominator degrees of a rational approximation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSpec {
    pub num_degree: Vec<u32>,
    pub den_degree: Vec<u32>,
    pub scheme: Scheme,
}

impl DegreeSpec {
    pub fn new(num_degree: Vec<u32>, den_degree: Vec<u32>, scheme: Scheme) -> Result<Self> {
        if num_degree.is_empty() || num_degree.len() != den_degree.len() {
            return Err(Error::Dimension(format!(
                "numerator degree has {} entries, denominator degree has {}",
                num_degree.len(),
                den_degree.len()
            )));
        }
        Ok(Self {
            num_degree,
            den_degree,
            scheme,
        })
    }

    /// Univariate degree `(n, m)`.
    pub fn univariate(n: u32, m: u32) -> Self {
        Self {
            num_degree: vec![n],
            den_degree: vec![m],
            scheme: Scheme::TotalDegree,
        }
    }

    /// Degree `(n, m)` in every one of `dim` coordinates.
    pub fn uniform(dim: usize, n: u32, m: u32, scheme: Scheme) -> Self {
        Self {
            num_degree: vec![n; dim],
            den_degree: vec![m; dim],
            scheme,
        }
    }

    pub fn dim(&self) -> usize {
        self.num_degree.len()
    }

    pub fn num_index_set(&self) -> BasisIndexSet {
        index_set(&self.num_degree, self.scheme)
    }

    pub fn den_index_set(&self) -> BasisIndexSet {
        index_set(&self.den_degree, self.scheme)
    }

    /// Number of free coefficients `|num terms| + |den terms|`.
    pub fn num_unknowns(&self) -> usize {
        self.num_index_set().len() + self.den_index_set().len()
    }

    /// Short human label, e.g. `(5,4)` or `(2,2)x(2,2)`.
    pub fn label(&self) -> String {
        if self.num_degree.iter().all(|&n| n == self.num_degree[0])
            && self.den_degree.iter().all(|&m| m == self.den_degree[0])
        {
            format!("({},{})", self.num_degree[0], self.den_degree[0])
        } else {
            format!("({:?},{:?})", self.num_degree, self.den_degree)
        }
    }
}

/// An ordered set of distinct multi-indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisIndexSet {
    dim: usize,
    indices: Vec<Vec<u32>>,
}

impl BasisIndexSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn max_degree(&self) -> u32 {
        self.indices.iter().flat_map(|a| a.iter().copied()).max().unwrap_or(0)
    }

    /// Position of the constant term, which every index set contains.
    pub fn constant_position(&self) -> usize {
        0
    }
}

/// Builds the index set for per-dimension `degree` under `scheme`.
pub fn index_set(degree: &[u32], scheme: Scheme) -> BasisIndexSet {
    let dim = degree.len();
    let total_cap = degree.iter().copied().max().unwrap_or(0);
    let caps: Vec<u32> = match scheme {
        Scheme::TensorProduct => degree.to_vec(),
        Scheme::TotalDegree => vec![total_cap; dim],
    };

    let mut indices = Vec::new();
    let mut alpha = vec![0u32; dim];
    'outer: loop {
        let keep = match scheme {
            Scheme::TensorProduct => true,
            Scheme::TotalDegree => alpha.iter().sum::<u32>() <= total_cap,
        };
        if keep {
            indices.push(alpha.clone());
        }
        // odometer over the box of caps, last coordinate fastest
        for i in (0..dim).rev() {
            if alpha[i] < caps[i] {
                alpha[i] += 1;
                continue 'outer;
            }
            alpha[i] = 0;
        }
        break;
    }
    indices.sort_by(|a, b| {
        let (sa, sb) = (a.iter().sum::<u32>(), b.iter().sum::<u32>());
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });
    BasisIndexSet { dim, indices }
}

/// `T_0(x), …, T_degree(x)` by the three-term recurrence. Valid for any real `x`.
pub fn chebyshev_values(x: f64, degree: u32, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if degree == 0 {
        return;
    }
    out.push(x);
    for k in 2..=degree as usize {
        let next = 2.0 * x * out[k - 1] - out[k - 2];
        out.push(next);
    }
}

fn check_unit(point: &[f64], dim: usize) -> Result<()> {
    if point.len() != dim {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, basis has {dim}",
            point.len()
        )));
    }
    for (i, &x) in point.iter().enumerate() {
        if !(x.abs() <= 1.0 + UNIT_SLACK) {
            return Err(Error::Domain {
                coord: i,
                value: x,
                lower: -1.0,
                upper: 1.0,
            });
        }
    }
    Ok(())
}

/// Per-dimension Chebyshev tables reused across index sets evaluated at one point.
struct ChebTable {
    rows: Vec<Vec<f64>>,
}

impl ChebTable {
    fn new(point: &[f64], degree: u32) -> Self {
        let rows = point
            .iter()
            .map(|&x| {
                let mut v = Vec::with_capacity(degree as usize + 1);
                chebyshev_values(x, degree, &mut v);
                v
            })
            .collect();
        Self { rows }
    }

    fn term(&self, alpha: &[u32]) -> f64 {
        alpha.iter().zip(&self.rows).map(|(&k, row)| row[k as usize]).product()
    }

    fn fill(&self, idx: &BasisIndexSet, out: &mut [f64]) {
        for (o, alpha) in out.iter_mut().zip(&idx.indices) {
            *o = self.term(alpha);
        }
    }
}

/// Values of every basis term of `idx` at a normalized point.
pub fn eval_basis(point: &[f64], idx: &BasisIndexSet) -> Result<Vec<f64>> {
    check_unit(point, idx.dim)?;
    let table = ChebTable::new(point, idx.max_degree());
    let mut out = vec![0.0; idx.len()];
    table.fill(idx, &mut out);
    Ok(out)
}

/// Matrix whose row `i` is `eval_basis(points[i], idx)`.
pub fn basis_matrix<P: AsRef<[f64]>>(points: &[P], idx: &BasisIndexSet) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(points.len(), idx.len());
    let mut row = vec![0.0; idx.len()];
    for (i, p) in points.iter().enumerate() {
        let p = p.as_ref();
        check_unit(p, idx.dim)?;
        ChebTable::new(p, idx.max_degree()).fill(idx, &mut row);
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

/// `p(x̂) / q(x̂)` with `p`, `q` expanded in Chebyshev bases over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalApprox {
    num_coeffs: Vec<f64>,
    den_coeffs: Vec<f64>,
    spec: DegreeSpec,
    domain: BoxDomain,
    idx_num: BasisIndexSet,
    idx_den: BasisIndexSet,
}

impl RationalApprox {
    pub fn new(spec: DegreeSpec, domain: BoxDomain, num_coeffs: Vec<f64>, den_coeffs: Vec<f64>) -> Result<Self> {
        if spec.dim() != domain.dim() {
            return Err(Error::Dimension(format!(
                "degree spec is {}-dimensional, box is {}-dimensional",
                spec.dim(),
                domain.dim()
            )));
        }
        let idx_num = spec.num_index_set();
        let idx_den = spec.den_index_set();
        if num_coeffs.len() != idx_num.len() || den_coeffs.len() != idx_den.len() {
            return Err(Error::Dimension(format!(
                "expected {} numerator and {} denominator coefficients, got {} and {}",
                idx_num.len(),
                idx_den.len(),
                num_coeffs.len(),
                den_coeffs.len()
            )));
        }
        Ok(Self {
            num_coeffs,
            den_coeffs,
            spec,
            domain,
            idx_num,
            idx_den,
        })
    }

    /// The constant function `value`, expressed at degrees `spec`.
    pub fn constant(spec: DegreeSpec, domain: BoxDomain, value: f64) -> Result<Self> {
        let mut num = vec![0.0; spec.num_index_set().len()];
        let mut den = vec![0.0; spec.den_index_set().len()];
        num[0] = value;
        den[0] = 1.0;
        Self::new(spec, domain, num, den)
    }

    pub fn num_coeffs(&self) -> &[f64] {
        &self.num_coeffs
    }

    pub fn den_coeffs(&self) -> &[f64] {
        &self.den_coeffs
    }

    pub fn spec(&self) -> &DegreeSpec {
        &self.spec
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn num_index_set(&self) -> &BasisIndexSet {
        &self.idx_num
    }

    pub fn den_index_set(&self) -> &BasisIndexSet {
        &self.idx_den
    }

    /// `(p(x̂), q(x̂))` at a point already mapped into `[-1, 1]^d`.
    ///
    /// Coordinates are not range-checked, so this also extrapolates.
    pub fn parts_normalized(&self, unit_point: &[f64]) -> (f64, f64) {
        let degree = self.idx_num.max_degree().max(self.idx_den.max_degree());
        let table = ChebTable::new(unit_point, degree);
        let p = self
            .idx_num
            .indices
            .iter()
            .zip(&self.num_coeffs)
            .map(|(a, c)| c * table.term(a))
            .sum();
        let q = self
            .idx_den
            .indices
            .iter()
            .zip(&self.den_coeffs)
            .map(|(a, c)| c * table.term(a))
            .sum();
        (p, q)
    }

    /// `(p, q)` at a raw-domain point.
    pub fn parts(&self, point: &[f64]) -> Result<(f64, f64)> {
        let u = self.domain.normalize(point)?;
        Ok(self.parts_normalized(&u))
    }

    /// Denominator value at a raw-domain point.
    pub fn denominator(&self, point: &[f64]) -> Result<f64> {
        Ok(self.parts(point)?.1)
    }

    /// `p(x̂)/q(x̂)` at a raw-domain point.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let (p, q) = self.parts(point)?;
        if q.abs() < POLE_THRESHOLD {
            return Err(Error::Pole {
                point: point.to_vec(),
                denominator: q,
            });
        }
        Ok(p / q)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RationalDoc::from(self)).expect("rational serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: RationalDoc = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        doc.try_into()
    }
}

/// Free-function form of [`RationalApprox::eval`].
pub fn eval_rational(r: &RationalApprox, point: &[f64]) -> Result<f64> {
    r.eval(point)
}

/// On-disk layout of a [`RationalApprox`].
#[derive(Debug, Serialize, Deserialize)]
pub struct RationalDoc {
    #[serde(rename = "box")]
    pub domain: BoxDomain,
    pub scheme: Scheme,
    pub num_degree: Vec<u32>,
    pub den_degree: Vec<u32>,
    pub num_coeffs: Vec<f64>,
    pub den_coeffs: Vec<f64>,
}

impl From<&RationalApprox> for RationalDoc {
    fn from(r: &RationalApprox) -> Self {
        Self {
            domain: r.domain.clone(),
            scheme: r.spec.scheme,
            num_degree: r.spec.num_degree.clone(),
            den_degree: r.spec.den_degree.clone(),
            num_coeffs: r.num_coeffs.clone(),
            den_coeffs: r.den_coeffs.clone(),
        }
    }
}

impl TryFrom<RationalDoc> for RationalApprox {
    type Error = Error;

    fn try_from(d: RationalDoc) -> Result<Self> {
        let spec = DegreeSpec::new(d.num_degree, d.den_degree, d.scheme)?;
        RationalApprox::new(spec, d.domain, d.num_coeffs, d.den_coeffs)
    }
}

impl Serialize for RationalApprox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalApprox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = RationalDoc::deserialize(d)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn normalization_examples() {
        let unit = BoxDomain::interval(-1.0, 1.0).unwrap();
        assert_eq!(unit.normalize(&[0.25]).unwrap(), vec![0.25]);
        let b = BoxDomain::interval(0.0, 40.0).unwrap();
        assert_eq!(b.normalize(&[20.0]).unwrap(), vec![0.0]);
        let b2 = BoxDomain::new(vec![0.0, -20.0], vec![40.0, 19.84375]).unwrap();
        assert_eq!(b2.normalize(&[40.0, 19.84375]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn normalization_rejects_outside_points() {
        let b = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        match b.normalize(&[0.5, 1.5]) {
            Err(Error::Domain { coord, .. }) => assert_eq!(coord, 1),
            other => panic!("expected domain error, got {other:?}"),
        }
        // within slack is fine
        assert_eq!(b.normalize(&[1.0 + 1e-13, 0.0]).unwrap()[0], 1.0);
    }

    #[test]
    fn bad_boxes_rejected() {
        assert!(BoxDomain::interval(1.0, 1.0).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn index_set_counts() {
        assert_eq!(index_set(&[2, 2], Scheme::TensorProduct).len(), 9);
        assert_eq!(index_set(&[20, 20], Scheme::TensorProduct).len(), 441);

        // enumeration oracle for the total-degree count
        let mut count = 0;
        for a in 0..=20u32 {
            for b in 0..=20u32 {
                if a + b <= 20 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 231);
        assert_eq!(index_set(&[20, 20], Scheme::TotalDegree).len(), count);
        assert_eq!(binomial(22, 2), 231);
        assert_eq!(index_set(&[4, 4, 4], Scheme::TotalDegree).len() as u64, binomial(7, 3));

        for scheme in [Scheme::TensorProduct, Scheme::TotalDegree] {
            let idx = index_set(&[3], scheme);
            assert_eq!(idx.indices(), &[vec![0], vec![1], vec![2], vec![3]]);
        }
    }

    #[test]
    fn index_set_is_graded_lex() {
        let idx = index_set(&[2, 2], Scheme::TotalDegree);
        let expected: Vec<Vec<u32>> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]];
        assert_eq!(idx.indices(), expected.as_slice());
        assert_eq!(idx, index_set(&[2, 2], Scheme::TotalDegree));
    }

    #[test]
    fn eval_basis_examples() {
        let idx = index_set(&[4, 4], Scheme::TensorProduct);
        assert!(eval_basis(&[1.0, 1.0], &idx).unwrap().iter().all(|&v| v == 1.0));

        let idx = index_set(&[2], Scheme::TotalDegree);
        assert_eq!(eval_basis(&[0.5], &idx).unwrap(), vec![1.0, 0.5, -0.5]);

        let idx = BasisIndexSet {
            dim: 2,
            indices: vec![vec![1, 1]],
        };
        assert_eq!(eval_basis(&[0.0, 0.0], &idx).unwrap(), vec![0.0]);
    }

    #[test]
    fn eval_basis_rejects_out_of_range() {
        let idx = index_set(&[2], Scheme::TotalDegree);
        assert!(matches!(eval_basis(&[1.1], &idx), Err(Error::Domain { .. })));
        assert!(eval_basis(&[1.0 + 1e-10], &idx).is_ok());
    }

    #[test]
    fn basis_matrix_examples() {
        let idx = index_set(&[3], Scheme::TotalDegree);
        let pts = [[0.1], [0.2], [0.3]];
        let m = basis_matrix(&pts, &idx).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 4));

        let idx = index_set(&[1], Scheme::TotalDegree);
        let m = basis_matrix(&[[-1.0], [0.0], [1.0]], &idx).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 1.0, 0.0, 1.0, 1.0]));
    }

    #[test]
    fn basis_matrix_matches_naive_products() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
            .collect();
        let idx = index_set(&[2, 2], Scheme::TensorProduct);
        let m = basis_matrix(&pts, &idx).unwrap();
        // explicit power-form T_0, T_1, T_2
        let t = |k: u32, x: f64| match k {
            0 => 1.0,
            1 => x,
            2 => 2.0 * x * x - 1.0,
            _ => unreachable!(),
        };
        for (i, p) in pts.iter().enumerate() {
            for (j, a) in idx.indices().iter().enumerate() {
                let naive = t(a[0], p[0]) * t(a[1], p[1]);
                assert!((m[(i, j)] - naive).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn recurrence_matches_trigonometric_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut vals = Vec::new();
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            chebyshev_values(x, 25, &mut vals);
            for (k, v) in vals.iter().enumerate() {
                let naive = (k as f64 * x.acos()).cos();
                assert!((v - naive).abs() < 1e-12, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn eval_rational_examples() {
        let spec = DegreeSpec::univariate(0, 0);
        let dom = BoxDomain::interval(-1.0, 1.0).unwrap();
        let r = RationalApprox::new(spec, dom.clone(), vec![2.0], vec![1.0]).unwrap();
        assert_eq!(r.eval(&[0.7]).unwrap(), 2.0);

        let r = RationalApprox::new(DegreeSpec::univariate(1, 0), dom.clone(), vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!((r.eval(&[0.3]).unwrap() - 0.3).abs() < 1e-15);

        // q(x) = x has a pole at 0
        let r = RationalApprox::new(DegreeSpec::univariate(0, 1), dom, vec![1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(r.eval(&[0.0]), Err(Error::Pole { .. })));
    }

    #[test]
    fn rational_on_shifted_box() {
        // f(x) = x on [0, 40] is 20 + 20 x̂
        let dom = BoxDomain::interval(0.0, 40.0).unwrap();
        let r = RationalApprox::new(DegreeSpec::univariate(1, 0), dom, vec![20.0, 20.0], vec![1.0]).unwrap();
        assert!((r.eval(&[13.0]).unwrap() - 13.0).abs() < 1e-13);
        assert!(r.eval(&[41.0]).is_err());
    }

    #[test]
    fn json_layout_and_round_trip() {
        let dom = BoxDomain::new(vec![0.0, -20.0], vec![40.0, 19.84375]).unwrap();
        let spec = DegreeSpec::uniform(2, 1, 1, Scheme::TotalDegree);
        let r = RationalApprox::new(
            spec,
            dom,
            vec![0.1, 1.0 / 3.0, -2.5e-17],
            vec![1.0, 0.0, std::f64::consts::PI],
        )
        .unwrap();
        let s = r.to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["box", "scheme", "num_degree", "den_degree", "num_coeffs", "den_coeffs"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["scheme"], "total_degree");
        let back = RationalApprox::from_json(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn json_rejects_wrong_coefficient_count() {
        let s = r#"{"box":{"lower":[-1],"upper":[1]},"scheme":"total_degree",
            "num_degree":[1],"den_degree":[0],"num_coeffs":[1.0],"den_coeffs":[1.0]}"#;
        assert!(RationalApprox::from_json(s).is_err());
    }
}
