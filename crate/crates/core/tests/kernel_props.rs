mod common;

use kernel_duality::cut::cut_norm_exact;
use kernel_duality::kernel::common_refinement;
use kernel_duality::{BlockMatrix, StepKernel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense_norm(k: &StepKernel) -> f64 {
    let r = k.classes();
    let w = k.weights();
    let m = DMatrix::from_fn(r, r, |i, j| w[i].sqrt() * k.value(i, j) * w[j].sqrt());
    m.singular_values().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marginal_is_linear((a, b) in common::signed_pair(6, 3.0), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
        let (ma, mb, mc) = (a.marginal(), b.marginal(), combo.marginal());
        for i in 0..mc.len() {
            prop_assert!((mc[i] - (alpha * ma[i] + beta * mb[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_matches_dense_svd(k in common::kernel(6, 5.0)) {
        let power = k.operator_norm(1e-14).unwrap();
        let dense = dense_norm(&k);
        prop_assert!((power - dense).abs() < 1e-8 * dense.max(1.0), "{power} vs {dense}");
    }

    #[test]
    fn irreducibility_ignores_relabeling(k in common::kernel(6, 2.0), seed in any::<u64>()) {
        let r = k.classes();
        let mut perm: Vec<usize> = (0..r).collect();
        // Fisher-Yates from the seed
        let mut s = seed;
        for i in (1..r).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        // sparsify so reducible cases occur
        let sparse: Vec<f64> = k.values().iter().map(|v| if *v < 1.0 { 0.0 } else { *v }).collect();
        let k = StepKernel::from_flat(sparse, k.measure().clone()).unwrap();
        prop_assert_eq!(k.is_irreducible(), k.permuted(&perm).unwrap().is_irreducible());
    }

    #[test]
    fn tail_marginal_is_monotone_and_concave(k in common::kernel(6, 5.0)) {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let m: Vec<f64> = grid.iter().map(|d| k.tail_marginal(*d).unwrap()).collect();
        for i in 1..m.len() {
            prop_assert!(m[i] >= m[i - 1] - 1e-12);
        }
        for i in 1..m.len() - 1 {
            prop_assert!(m[i] >= 0.5 * (m[i - 1] + m[i + 1]) - 1e-12);
        }
        prop_assert!((m[40] - k.integral()).abs() < 1e-12);
    }

    #[test]
    fn unit_reweight_changes_nothing(k in common::kernel(6, 5.0)) {
        let same = k.reweight(&vec![1.0; k.classes()]).unwrap();
        prop_assert_eq!(same.marginal(), k.marginal());
        prop_assert_eq!(same.operator_norm(1e-12).unwrap(), k.operator_norm(1e-12).unwrap());
        prop_assert_eq!(cut_norm_exact(&same).unwrap(), cut_norm_exact(&k).unwrap());
    }

    #[test]
    fn damped_marginals_are_bounded(k in common::kernel(5, 8.0), a in 0.05f64..3.0, b in 0.0f64..3.0) {
        let d = k.exponent_damped(a, b).unwrap();
        let bound = 1.0 / (a * std::f64::consts::E);
        for m in d.row_marginal() {
            prop_assert!(m <= bound + 1e-12);
        }
    }

    #[test]
    fn refinement_preserves_the_functions(a in common::kernel(4, 3.0), b in common::kernel(4, 3.0)) {
        let refined = common_refinement(&a, &b).unwrap();
        prop_assert!((refined.first.integral() - a.integral()).abs() < 1e-12);
        prop_assert!((refined.second.integral() - b.integral()).abs() < 1e-12);
        let r = refined.first.classes();
        for p in 0..r {
            for q in 0..r {
                prop_assert_eq!(refined.first.value(p, q), a.value(refined.left[p], refined.left[q]));
                prop_assert_eq!(refined.second.value(p, q), b.value(refined.right[p], refined.right[q]));
            }
        }
        let na = a.operator_norm(1e-13).unwrap();
        prop_assert!((refined.first.operator_norm(1e-13).unwrap() - na).abs() < 1e-8 * na.max(1.0));
    }
}
