use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratnet_core::lp::{solve, LinearProgram, LpStatus};

/// Random LP `min cᵀy, Ay ≤ b, -2 ≤ y ≤ 2` with a strictly feasible interior point.
fn random_lp(rows: usize, cols: usize, seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y0: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    let b: Vec<f64> = (0..rows)
        .map(|i| (0..cols).map(|j| a[(i, j)] * y0[j]).sum::<f64>() + rng.gen_range(0.1..1.0))
        .collect();
    let c: Vec<f64> = (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LinearProgram::new(c, a, b).with_bounds(vec![(-2.0, 2.0); cols])
}

/// Gaussian elimination with partial pivoting; `None` when (nearly) singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Minimum objective over all basic feasible points (all bounds finite).
fn vertex_enumeration(lp: &LinearProgram) -> f64 {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = (0..lp.num_constraints())
        .map(|i| (lp.constraints().row(i).iter().copied().collect(), lp.rhs()[i]))
        .collect();
    for (j, &(lo, hi)) in lp.bounds().iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), hi));
        e[j] = -1.0;
        rows.push((e, -lo));
    }
    let mut best = f64::INFINITY;
    combinations(rows.len(), n, &mut |subset| {
        let m: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let r: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        if let Some(y) = solve_square(m, r) {
            let feasible = rows
                .iter()
                .all(|(g, h)| g.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() <= h + 1e-9);
            if feasible {
                let obj: f64 = lp.objective().iter().zip(&y).map(|(a, b)| a * b).sum();
                best = best.min(obj);
            }
        }
    });
    best
}

fn check_feasible(lp: &LinearProgram, y: &[f64]) {
    for i in 0..lp.num_constraints() {
        let lhs: f64 = lp.constraints().row(i).iter().zip(y).map(|(a, b)| a * b).sum();
        assert!(lhs <= lp.rhs()[i] + 1e-7, "row {i}: {lhs} > {}", lp.rhs()[i]);
    }
    for (j, &(lo, hi)) in lp.bounds().iter().enumerate() {
        assert!(y[j] >= lo - 1e-9 && y[j] <= hi + 1e-9, "bound {j}: {}", y[j]);
    }
}

#[test]
fn matches_vertex_enumeration_on_small_instances() {
    for seed in 0..12 {
        let lp = random_lp(5, 8, seed);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        check_feasible(&lp, s.y.as_ref().unwrap());
        let oracle = vertex_enumeration(&lp);
        assert!(
            (s.objective_value - oracle).abs() < 1e-8,
            "seed {seed}: simplex {} vs enumeration {oracle}",
            s.objective_value
        );
    }
}

#[test]
fn larger_instance_is_feasible_and_locally_optimal() {
    let lp = random_lp(20, 40, 99);
    let s = solve(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    let y = s.y.unwrap();
    check_feasible(&lp, &y);
    assert_no_improving_perturbation(&lp, &y);
}

/// No feasibility-preserving coordinate move of size 1e-6 along −c improves by > 1e-5.
fn assert_no_improving_perturbation(lp: &LinearProgram, y: &[f64]) {
    let base: f64 = lp.objective().iter().zip(y).map(|(a, b)| a * b).sum();
    for j in 0..lp.num_vars() {
        let mut z = y.to_vec();
        z[j] -= 1e-6 * lp.objective()[j].signum();
        let feasible = (0..lp.num_constraints())
            .all(|i| lp.constraints().row(i).iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() <= lp.rhs()[i] + 1e-7)
            && lp
                .bounds()
                .iter()
                .zip(&z)
                .all(|(&(lo, hi), v)| *v >= lo - 1e-9 && *v <= hi + 1e-9);
        if feasible {
            let obj: f64 = lp.objective().iter().zip(&z).map(|(a, b)| a * b).sum();
            assert!(base - obj <= 1e-5, "coordinate {j} improves by {}", base - obj);
        }
    }
}

#[test]
fn solving_twice_is_bit_identical() {
    let lp = random_lp(20, 40, 5);
    let a = solve(&lp).unwrap();
    let b = solve(&lp).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn positive_cost_scaling_keeps_argmin(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let lp = random_lp(12, 10, seed);
        let scaled = LinearProgram::new(
            lp.objective().iter().map(|c| c * scale).collect(),
            lp.constraints().clone(),
            lp.rhs().to_vec(),
        )
        .with_bounds(lp.bounds().to_vec());
        let a = solve(&lp).unwrap().y.unwrap();
        let b = solve(&scaled).unwrap().y.unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn optimal_points_are_feasible(seed in 0u64..1000, rows in 3usize..30, cols in 2usize..12) {
        let lp = random_lp(rows, cols, seed);
        let s = solve(&lp).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        let y = s.y.unwrap();
        check_feasible(&lp, &y);
        assert_no_improving_perturbation(&lp, &y);
    }
}
