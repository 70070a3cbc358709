//! Dense linear programming.
//!
//! Problems are given in inequality form
//!
//! ```text
//! minimize    cᵀy
//! subject to  A y ≤ b,   l ≤ y ≤ u   (infinite bounds allowed)
//! ```
//!
//! The approximation LPs have a few hundred variables and thousands of
//! constraints, so the solver runs a revised simplex on the dual
//!
//! ```text
//! minimize    hᵀλ   subject to   Gᵀλ = −c,  λ ≥ 0
//! ```
//!
//! where `G y ≤ h` stacks `A y ≤ b` with the finite bound rows. The basis is
//! then only `n × n`, and the primal solution is read off as the simplex
//! multipliers of the optimal dual basis.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Reduced-cost tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Primal feasibility tolerance (relative to the right-hand-side scale).
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Phase-1 objective above which the dual is declared infeasible.
pub const PHASE1_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
/// Pivots smaller than this fraction of the largest entry of `B⁻¹ g_q` are
/// refused and the entering column is set aside until the basis changes.
const REL_PIVOT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: DMatrix<f64>,
    rhs: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// `minimize cᵀy s.t. A y ≤ b` with every variable free.
    pub fn new(objective: Vec<f64>, constraints: DMatrix<f64>, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints,
            rhs,
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::Dimension("LP has no variables".into()));
        }
        if self.constraints.ncols() != n || self.bounds.len() != n {
            return Err(Error::Dimension(format!(
                "LP has {n} costs, {} constraint columns, {} bounds",
                self.constraints.ncols(),
                self.bounds.len()
            )));
        }
        if self.constraints.nrows() != self.rhs.len() {
            return Err(Error::Dimension(format!(
                "LP has {} constraint rows but {} right-hand sides",
                self.constraints.nrows(),
                self.rhs.len()
            )));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.constraints.iter().all(|v| v.is_finite())
            && self.rhs.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("LP data contains non-finite entries".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Fixed-format plain-text listing, one item per line.
    pub fn listing(&self) -> String {
        let mut s = String::new();
        let (m, n) = (self.num_constraints(), self.num_vars());
        let _ = writeln!(s, "LP {m} {n}");
        let _ = writeln!(s, "OBJ");
        for (j, c) in self.objective.iter().enumerate() {
            let _ = writeln!(s, "{j:>8} {c:>24.17e}");
        }
        let _ = writeln!(s, "ROWS");
        for i in 0..m {
            let _ = write!(s, "{i:>8}");
            for j in 0..n {
                let _ = write!(s, " {:>24.17e}", self.constraints[(i, j)]);
            }
            let _ = writeln!(s, " <= {:>24.17e}", self.rhs[i]);
        }
        let _ = writeln!(s, "BOUNDS");
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            let _ = writeln!(s, "{j:>8} {lo:>24.17e} {hi:>24.17e}");
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub y: Option<Vec<f64>>,
    pub objective_value: f64,
    pub iterations: usize,
    /// 2-norm condition number of the optimal basis, when requested.
    pub basis_condition: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    /// Defaults to `50 · (rows + cols)`.
    pub max_iterations: Option<usize>,
    /// Compute [`LpSolution::basis_condition`] (one SVD of the final basis).
    pub report_condition: bool,
    /// Write [`LinearProgram::listing`] here before solving.
    pub dump_path: Option<std::path::PathBuf>,
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    if let Some(path) = &opts.dump_path {
        std::fs::write(path, lp.listing())?;
    }
    let max_iter = opts
        .max_iterations
        .unwrap_or(50 * (lp.num_constraints() + lp.num_vars()));

    let rows = StackedRows::new(lp);
    let target: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
    let mut dual = DualSimplex::new(&rows, &target, max_iter);

    match dual.run()? {
        Outcome::Optimal => {
            let y = dual.multipliers(&rows.costs);
            let objective_value = lp.objective.iter().zip(&y).map(|(c, v)| c * v).sum();
            let basis_condition = opts.report_condition.then(|| dual.basis_condition());
            Ok(LpSolution {
                status: LpStatus::Optimal,
                y: Some(y),
                objective_value,
                iterations: dual.iterations,
                basis_condition,
            })
        }
        Outcome::Unbounded => Ok(infeasible(dual.iterations)),
        Outcome::Infeasible => {
            // The dual is infeasible, so the primal is unbounded or infeasible.
            // The primal is feasible iff `min hᵀλ s.t. Gᵀλ = 0, λ ≥ 0` is bounded.
            let zero = vec![0.0; lp.num_vars()];
            let mut probe = DualSimplex::new(&rows, &zero, max_iter);
            probe.iterations = dual.iterations;
            match probe.run()? {
                Outcome::Unbounded => Ok(infeasible(probe.iterations)),
                _ => Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    y: None,
                    objective_value: f64::NEG_INFINITY,
                    iterations: probe.iterations,
                    basis_condition: None,
                }),
            }
        }
    }
}

fn infeasible(iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        y: None,
        objective_value: f64::INFINITY,
        iterations,
        basis_condition: None,
    }
}

/// `G` and `h`: the rows of `A y ≤ b` followed by one row per finite bound.
struct StackedRows {
    n: usize,
    data: Vec<f64>,
    costs: Vec<f64>,
    /// For each variable, the index of its `y_j ≤ u_j` and `-y_j ≤ -l_j` rows.
    upper_row: Vec<Option<usize>>,
    lower_row: Vec<Option<usize>>,
}

impl StackedRows {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_constraints();
        let mut data = Vec::with_capacity((m + 2 * n) * n);
        let mut costs = Vec::with_capacity(m + 2 * n);
        // rows are equilibrated to unit 2-norm so tolerances act uniformly
        for i in 0..m {
            let row = lp.constraints.row(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = if norm > 0.0 { 1.0 / norm } else { 1.0 };
            data.extend(row.iter().map(|v| v * w));
            costs.push(lp.rhs[i] * w);
        }
        let mut upper_row = vec![None; n];
        let mut lower_row = vec![None; n];
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            if hi.is_finite() {
                upper_row[j] = Some(costs.len());
                data.extend((0..n).map(|k| if k == j { 1.0 } else { 0.0 }));
                costs.push(hi);
            }
            if lo.is_finite() {
                lower_row[j] = Some(costs.len());
                data.extend((0..n).map(|k| if k == j { -1.0 } else { 0.0 }));
                costs.push(-lo);
            }
        }
        Self {
            n,
            data,
            costs,
            upper_row,
            lower_row,
        }
    }

    fn len(&self) -> usize {
        self.costs.len()
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Column {
    Structural(usize),
    /// Artificial for equality row `i`, with sign `+1`/`-1` so its value is nonnegative.
    Artificial(usize, bool),
}

/// Revised simplex for `min hᵀλ s.t. Gᵀλ = r, λ ≥ 0` with an explicit dense `B⁻¹`.
struct DualSimplex<'a> {
    rows: &'a StackedRows,
    rhs: Vec<f64>,
    basis: Vec<Column>,
    in_basis: Vec<bool>,
    /// `B⁻¹`, row-major `n × n`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    scale: f64,
    /// Unshifted right-hand side while a degeneracy perturbation is active.
    unshifted: Option<Vec<f64>>,
    /// Pricing threshold, scaled with the multipliers since the rounding
    /// error in `c_k − πᵀ g_k` grows with `‖π‖`.
    pricing_tol: f64,
}

/// Size of the basic-value shift applied when phase 2 stalls on degenerate
/// pivots, relative to the right-hand-side scale.
const SHIFT: f64 = 1e-8;

impl<'a> DualSimplex<'a> {
    fn new(rows: &'a StackedRows, rhs: &[f64], max_iterations: usize) -> Self {
        let n = rows.n;
        let mut basis = Vec::with_capacity(n);
        let mut in_basis = vec![false; rows.len()];
        let mut binv = vec![0.0; n * n];
        let mut xb = vec![0.0; n];
        // Crash: a bound row ±e_j whose sign matches r_j is a feasible basic column.
        for j in 0..n {
            let r = rhs[j];
            let pick = if r >= 0.0 {
                rows.upper_row[j]
                    .map(|k| (k, 1.0))
                    .or_else(|| (r == 0.0).then_some(rows.lower_row[j].map(|k| (k, -1.0))).flatten())
            } else {
                rows.lower_row[j].map(|k| (k, -1.0))
            };
            match pick {
                Some((k, sign)) => {
                    basis.push(Column::Structural(k));
                    in_basis[k] = true;
                    binv[j * n + j] = sign;
                }
                None => {
                    let positive = r >= 0.0;
                    basis.push(Column::Artificial(j, positive));
                    binv[j * n + j] = if positive { 1.0 } else { -1.0 };
                }
            }
            xb[j] = r.abs();
        }
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        Self {
            rows,
            rhs: rhs.to_vec(),
            basis,
            in_basis,
            binv,
            xb,
            iterations: 0,
            max_iterations,
            scale,
            unshifted: None,
            pricing_tol: OPTIMALITY_TOL,
        }
    }

    fn n(&self) -> usize {
        self.rows.n
    }

    fn column(&self, col: Column) -> Vec<f64> {
        match col {
            Column::Structural(k) => self.rows.row(k).to_vec(),
            Column::Artificial(i, positive) => {
                let mut v = vec![0.0; self.n()];
                v[i] = if positive { 1.0 } else { -1.0 };
                v
            }
        }
    }

    fn run(&mut self) -> Result<Outcome> {
        let has_artificial = self.basis.iter().any(|c| matches!(c, Column::Artificial(..)));
        if has_artificial {
            let phase1_costs = |c: Column| match c {
                Column::Artificial(..) => 1.0,
                Column::Structural(_) => 0.0,
            };
            let outcome = self.iterate(&phase1_costs, true)?;
            debug_assert!(!matches!(outcome, Outcome::Unbounded));
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(c, _)| matches!(c, Column::Artificial(..)))
                .map(|(_, v)| v.max(0.0))
                .sum();
            if infeasibility > PHASE1_TOL * self.scale.max(1.0) {
                return Ok(Outcome::Infeasible);
            }
            self.drive_out_artificials();
        }
        let costs = &self.rows.costs;
        let phase2_costs = |c: Column| match c {
            Column::Structural(k) => costs[k],
            Column::Artificial(..) => 0.0,
        };
        let outcome = self.iterate(&phase2_costs, false)?;
        if let Some(rhs) = self.unshifted.take() {
            // The multipliers depend on the basis alone, so only the basic
            // values need recomputing.
            self.rhs = rhs;
            self.refactor()?;
        }
        Ok(outcome)
    }

    /// Reduced costs `d_k = c_k − πᵀ g_k` of every structural column.
    fn reduced_costs(&mut self, cost: &dyn Fn(Column) -> f64, d: &mut [f64]) {
        let n = self.n();
        let mut pi = vec![0.0; n];
        for (r, &col) in self.basis.iter().enumerate() {
            let cb = cost(col);
            if cb != 0.0 {
                for (p, b) in pi.iter_mut().zip(&self.binv[r * n..(r + 1) * n]) {
                    *p += cb * b;
                }
            }
        }
        let pi_norm = pi.iter().map(|p| p * p).sum::<f64>().sqrt();
        self.pricing_tol = OPTIMALITY_TOL * pi_norm.max(1.0);
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = if self.in_basis[k] {
                0.0
            } else {
                cost(Column::Structural(k)) - dot(&pi, self.rows.row(k))
            };
        }
    }

    /// Steepest-edge reference weights `1 + ‖B⁻¹ g_k‖²`.
    fn edge_weights(&self) -> Vec<f64> {
        let n = self.n();
        let mut alpha = vec![0.0; n];
        (0..self.rows.len())
            .map(|k| {
                let g = self.rows.row(k);
                for (r, a) in alpha.iter_mut().enumerate() {
                    *a = dot(&self.binv[r * n..(r + 1) * n], g);
                }
                1.0 + alpha.iter().map(|a| a * a).sum::<f64>()
            })
            .collect()
    }

    fn iterate(&mut self, cost: &dyn Fn(Column) -> f64, phase1: bool) -> Result<Outcome> {
        let n = self.n();
        let num_cols = self.rows.len();
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut since_refactor = 0usize;
        let mut alpha = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; num_cols];
        let mut gamma = self.edge_weights();
        let mut rejected = vec![false; num_cols];
        self.reduced_costs(cost, &mut d);

        loop {
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                if !phase1 {
                    self.lift_negative_values();
                }
                self.reduced_costs(cost, &mut d);
                since_refactor = 0;
            }

            let mut entering = self.price(&d, &gamma, &rejected, bland);
            // a set-aside column is still taken when nothing else improves
            let forced = entering.is_none() && rejected.contains(&true);
            if forced {
                entering = self.price(&d, &gamma, &[], bland);
            }
            if entering.is_none() && since_refactor > 0 {
                // confirm optimality on freshly computed reduced costs
                self.refactor()?;
                if !phase1 {
                    self.lift_negative_values();
                }
                self.reduced_costs(cost, &mut d);
                since_refactor = 0;
                entering = self.price(&d, &gamma, &[], bland);
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };

            if self.iterations >= self.max_iterations {
                return Err(Error::SolverStalled {
                    iterations: self.iterations,
                });
            }
            self.iterations += 1;

            // α = B⁻¹ g_q
            let g = self.rows.row(q);
            for (r, a) in alpha.iter_mut().enumerate() {
                *a = dot(&self.binv[r * n..(r + 1) * n], g);
            }

            let Some(leave) = self.ratio_test(&alpha, bland) else {
                if since_refactor > 0 {
                    // the updated reduced cost may be stale; retry on fresh ones
                    self.refactor()?;
                    if !phase1 {
                        self.lift_negative_values();
                    }
                    self.reduced_costs(cost, &mut d);
                    since_refactor = 0;
                    continue;
                }
                if phase1 {
                    return Err(Error::Invariant("phase-1 simplex reported unbounded".into()));
                }
                return Ok(Outcome::Unbounded);
            };

            let largest = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if !forced && alpha[leave] < REL_PIVOT_TOL * largest {
                rejected[q] = true;
                continue;
            }
            rejected.iter_mut().for_each(|r| *r = false);
            let theta = (self.xb[leave] / alpha[leave]).max(0.0);
            if theta <= 1e-12 * self.scale {
                degenerate_run += 1;
                if !phase1 && self.unshifted.is_none() && degenerate_run > n {
                    self.shift_basic_values();
                    degenerate_run = 0;
                } else if degenerate_run > 10 * n {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            for (x, a) in self.xb.iter_mut().zip(&alpha) {
                *x -= theta * a;
            }
            self.xb[leave] = theta;
            for x in self.xb.iter_mut() {
                if *x < 0.0 && *x > -FEASIBILITY_TOL * self.scale {
                    *x = 0.0;
                }
            }

            // Pivot row ρ = e_rᵀ B⁻¹ and v = B⁻ᵀ α drive the reduced-cost and
            // edge-weight updates.
            let pivot = alpha[leave];
            let rho: Vec<f64> = self.binv[leave * n..(leave + 1) * n].to_vec();
            v.iter_mut().for_each(|x| *x = 0.0);
            for (r, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    for (x, b) in v.iter_mut().zip(&self.binv[r * n..(r + 1) * n]) {
                        *x += a * b;
                    }
                }
            }
            let gamma_q = 1.0 + alpha.iter().map(|a| a * a).sum::<f64>();
            let step = d[q] / pivot;
            for k in 0..num_cols {
                if self.in_basis[k] || k == q {
                    continue;
                }
                let gk = self.rows.row(k);
                let a_rk = dot(&rho, gk);
                if a_rk == 0.0 {
                    continue;
                }
                d[k] -= step * a_rk;
                let beta = a_rk / pivot;
                let updated = gamma[k] - 2.0 * beta * dot(gk, &v) + beta * beta * gamma_q;
                gamma[k] = updated.max(1.0 + beta * beta);
            }

            self.pivot(leave, &alpha);
            if let Column::Structural(old) = self.basis[leave] {
                self.in_basis[old] = false;
                d[old] = -step;
                gamma[old] = (gamma_q / (pivot * pivot)).max(1.0);
            }
            self.basis[leave] = Column::Structural(q);
            self.in_basis[q] = true;
            d[q] = 0.0;
            since_refactor += 1;
        }
    }

    /// Steepest-edge choice among columns with `d_k < −tol`; Bland mode takes
    /// the lowest index.
    fn price(&self, d: &[f64], gamma: &[f64], rejected: &[bool], bland: bool) -> Option<usize> {
        let mut entering = None;
        let mut best = 0.0;
        for (k, &dk) in d.iter().enumerate() {
            if self.in_basis[k] || rejected.get(k) == Some(&true) || dk >= -self.pricing_tol {
                continue;
            }
            if bland {
                return Some(k);
            }
            let score = dk * dk / gamma[k];
            if score > best {
                best = score;
                entering = Some(k);
            }
        }
        entering
    }

    /// Raises every basic value by a distinct small amount by shifting the
    /// right-hand side along the basis columns.
    fn shift_basic_values(&mut self) {
        let n = self.n();
        self.unshifted = Some(self.rhs.clone());
        for r in 0..n {
            let golden = ((r + 1) as f64 * 0.618_033_988_749_895).fract();
            let eps = SHIFT * self.scale.max(1.0) * (1.0 + golden);
            let col = self.column(self.basis[r]);
            for (h, c) in self.rhs.iter_mut().zip(&col) {
                *h += eps * c;
            }
            self.xb[r] += eps;
        }
    }

    /// Basic values driven negative by rounding are lifted back to a small
    /// positive level by shifting the right-hand side, the same device used
    /// against degeneracy. The true right-hand side is restored at the end.
    fn lift_negative_values(&mut self) {
        let tol = FEASIBILITY_TOL * self.scale;
        if self.xb.iter().all(|&x| x >= -tol) {
            return;
        }
        if self.unshifted.is_none() {
            self.unshifted = Some(self.rhs.clone());
        }
        let n = self.n();
        for r in 0..n {
            if self.xb[r] >= -tol {
                continue;
            }
            let golden = ((r + 1) as f64 * 0.618_033_988_749_895).fract();
            let lift = -self.xb[r] + SHIFT * self.scale.max(1.0) * (1.0 + golden);
            let col = self.column(self.basis[r]);
            for (h, c) in self.rhs.iter_mut().zip(&col) {
                *h += lift * c;
            }
            self.xb[r] += lift;
        }
    }

    /// Harris two-pass ratio test; Bland mode takes the lowest-index tie.
    fn ratio_test(&self, alpha: &[f64], bland: bool) -> Option<usize> {
        let tol = FEASIBILITY_TOL * self.scale;
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for (r, &a) in alpha.iter().enumerate() {
                if a > PIVOT_TOL {
                    let ratio = self.xb[r].max(0.0) / a;
                    let better = match best {
                        None => true,
                        Some((br, bv)) => {
                            ratio < bv - 1e-12 * self.scale
                                || (ratio <= bv + 1e-12 * self.scale && self.col_order(r) < self.col_order(br))
                        }
                    };
                    if better {
                        best = Some((r, ratio));
                    }
                }
            }
            return best.map(|(r, _)| r);
        }
        let mut bound = f64::INFINITY;
        for (r, &a) in alpha.iter().enumerate() {
            if a > PIVOT_TOL {
                bound = bound.min((self.xb[r].max(0.0) + tol) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut pick = None;
        let mut largest = 0.0;
        for (r, &a) in alpha.iter().enumerate() {
            if a > PIVOT_TOL && self.xb[r].max(0.0) / a <= bound && a > largest {
                largest = a;
                pick = Some(r);
            }
        }
        pick
    }

    fn col_order(&self, r: usize) -> usize {
        match self.basis[r] {
            Column::Structural(k) => k,
            Column::Artificial(i, _) => self.rows.len() + i,
        }
    }

    fn pivot(&mut self, leave: usize, alpha: &[f64]) {
        let n = self.n();
        let inv_pivot = 1.0 / alpha[leave];
        let (head, rest) = self.binv.split_at_mut(leave * n);
        let (pivot_row, tail) = rest.split_at_mut(n);
        pivot_row.iter_mut().for_each(|v| *v *= inv_pivot);
        for (r, row) in head.chunks_exact_mut(n).chain(tail.chunks_exact_mut(n)).enumerate() {
            let r = if r >= leave { r + 1 } else { r };
            let a = alpha[r];
            if a != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= a * p;
                }
            }
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut b = DMatrix::zeros(n, n);
        for (c, &col) in self.basis.iter().enumerate() {
            for (r, v) in self.column(col).into_iter().enumerate() {
                b[(r, c)] = v;
            }
        }
        b
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.n();
        let inv = self
            .basis_matrix()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("simplex basis became singular".into()))?;
        for r in 0..n {
            for c in 0..n {
                self.binv[r * n + c] = inv[(r, c)];
            }
        }
        for r in 0..n {
            let x = dot(&self.binv[r * n..(r + 1) * n], &self.rhs);
            self.xb[r] = if x < 0.0 && x > -FEASIBILITY_TOL * self.scale {
                0.0
            } else {
                x
            };
        }
        Ok(())
    }

    /// Replaces zero-level artificials with structural columns where possible.
    /// Artificials left behind sit on redundant rows and stay at zero.
    fn drive_out_artificials(&mut self) {
        let n = self.n();
        for r in 0..n {
            if !matches!(self.basis[r], Column::Artificial(..)) {
                continue;
            }
            let row: Vec<f64> = self.binv[r * n..(r + 1) * n].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for k in 0..self.rows.len() {
                if self.in_basis[k] {
                    continue;
                }
                let a = dot(&row, self.rows.row(k)).abs();
                if a > 1e-7 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((k, a));
                }
            }
            if let Some((k, _)) = best {
                let g = self.rows.row(k);
                let alpha: Vec<f64> = (0..n).map(|i| dot(&self.binv[i * n..(i + 1) * n], g)).collect();
                let theta = self.xb[r] / alpha[r];
                for (x, a) in self.xb.iter_mut().zip(&alpha) {
                    *x -= theta * a;
                }
                self.xb[r] = theta;
                self.pivot(r, &alpha);
                self.basis[r] = Column::Structural(k);
                self.in_basis[k] = true;
            }
        }
    }

    /// Multipliers `π = c_Bᵀ B⁻¹` for the given structural costs, after a fresh refactor.
    fn multipliers(&mut self, costs: &[f64]) -> Vec<f64> {
        let n = self.n();
        // refactor failure leaves the updated inverse in place, which is still usable
        let _ = self.refactor();
        let mut pi = vec![0.0; n];
        for (r, &col) in self.basis.iter().enumerate() {
            if let Column::Structural(k) = col {
                let cb = costs[k];
                for (p, b) in pi.iter_mut().zip(&self.binv[r * n..(r + 1) * n]) {
                    *p += cb * b;
                }
            }
        }
        pi
    }

    fn basis_condition(&self) -> f64 {
        let sv = self.basis_matrix().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent partial sums let the loop vectorize.
    let n = a.len().min(b.len());
    let (a4, a_tail) = a[..n].split_at(n - n % 4);
    let (b4, b_tail) = b[..n].split_at(n - n % 4);
    let mut acc = [0.0f64; 4];
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = a_tail.iter().zip(b_tail).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
