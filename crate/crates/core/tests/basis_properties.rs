use proptest::prelude::*;
use ratnet_core::basis::{basis_matrix, eval_basis, index_set, BoxDomain, DegreeSpec, RationalApprox, Scheme};

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

proptest! {
    #[test]
    fn recurrence_matches_trigonometric_form(x in -1.0f64..=1.0, degree in 0u32..=25) {
        let idx = index_set(&[degree], Scheme::TensorProduct);
        let vals = eval_basis(&[x], &idx).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let naive = (k as f64 * x.acos()).cos();
            prop_assert!((v - naive).abs() < 1e-12, "T_{}({}) = {} vs {}", k, x, v, naive);
        }
    }

    #[test]
    fn basis_entries_are_bounded_by_one(
        points in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 2), 1..20),
        degree in 0u32..12,
        tensor in any::<bool>(),
    ) {
        let scheme = if tensor { Scheme::TensorProduct } else { Scheme::TotalDegree };
        let m = basis_matrix(&points, &index_set(&[degree, degree], scheme)).unwrap();
        prop_assert!(m.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn index_sets_are_stable_and_counted(d0 in 0u32..8, d1 in 0u32..8, d2 in 0u32..5) {
        for scheme in [Scheme::TensorProduct, Scheme::TotalDegree] {
            let a = index_set(&[d0, d1, d2], scheme);
            let b = index_set(&[d0, d1, d2], scheme);
            prop_assert_eq!(a.indices(), b.indices());
            let mut seen = a.indices().to_vec();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), a.len());
            let expected = match scheme {
                Scheme::TensorProduct => ((d0 + 1) * (d1 + 1) * (d2 + 1)) as u64,
                Scheme::TotalDegree => binomial(d0.max(d1).max(d2) as u64 + 3, 3),
            };
            prop_assert_eq!(a.len() as u64, expected);
            // graded order: total degree never decreases along the list
            let grades: Vec<u32> = a.indices().iter().map(|i| i.iter().sum()).collect();
            prop_assert!(grades.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rational_json_round_trip(coeffs in prop::collection::vec(-10.0f64..10.0, 5), lo in -5.0f64..0.0, width in 0.1f64..10.0) {
        let spec = DegreeSpec::univariate(2, 1);
        let domain = BoxDomain::interval(lo, lo + width).unwrap();
        let mut den = coeffs[3..].to_vec();
        den[0] = den[0].abs() + den[1].abs() + 1.0;
        let r = RationalApprox::new(spec, domain, coeffs[..3].to_vec(), den).unwrap();
        let back = RationalApprox::from_json(&r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn total_degree_twenty_in_two_dimensions_has_231_terms() {
    let idx = index_set(&[20, 20], Scheme::TotalDegree);
    let mut count = 0;
    for i in 0..=20u32 {
        for j in 0..=20u32 {
            if i + j <= 20 {
                count += 1;
            }
        }
    }
    assert_eq!(idx.len(), count);
    assert_eq!(count, 231);
}
