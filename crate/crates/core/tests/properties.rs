use proptest::prelude::*;

use roid_core::admm::penalty_update;
use roid_core::datagen::{gen_tucker, sample_offsets};
use roid_core::io::{parse_coo, parse_dense, write_coo_to, write_dense_to};
use roid_core::linalg::{kronecker, ort, svt, Matrix};
use roid_core::metrics::{auc, rse, ScoredLabels};
use roid_core::tensor::{inner, mode_product, project, refold, unfold};
use roid_core::{DenseTensor3, ObservationSet};

fn dims() -> impl Strategy<Value = [usize; 3]> {
    (1usize..6, 1usize..6, 1usize..6).prop_map(|(a, b, c)| [a, b, c])
}

fn tensor() -> impl Strategy<Value = DenseTensor3> {
    dims().prop_flat_map(|d| {
        proptest::collection::vec(-10.0f64..10.0, d.iter().product::<usize>())
            .prop_map(move |v| DenseTensor3::from_vec(d, v).unwrap())
    })
}

fn tensor_pair() -> impl Strategy<Value = (DenseTensor3, DenseTensor3)> {
    dims().prop_flat_map(|d| {
        let n = d.iter().product::<usize>();
        (
            proptest::collection::vec(-10.0f64..10.0, n),
            proptest::collection::vec(-10.0f64..10.0, n),
        )
            .prop_map(move |(a, b)| {
                (
                    DenseTensor3::from_vec(d, a).unwrap(),
                    DenseTensor3::from_vec(d, b).unwrap(),
                )
            })
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-5.0f64..5.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refold_inverts_unfold(t in tensor(), n in 1usize..=3) {
        prop_assert_eq!(refold(&unfold(&t, n).unwrap(), n, t.dims()).unwrap(), t);
    }

    #[test]
    fn unfolding_preserves_inner_product((a, b) in tensor_pair(), n in 1usize..=3) {
        let lhs = inner(&a, &b).unwrap();
        let rhs = unfold(&a, n).unwrap().dot(&unfold(&b, n).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projection_is_linear_and_complementary((a, b) in tensor_pair(), ratio in 0.05f64..1.0, seed in any::<u64>(), c in -3.0f64..3.0) {
        let offsets = sample_offsets(a.dims(), ratio, seed).unwrap();
        let omega = ObservationSet::from_offsets(&a, &offsets).unwrap();
        let mut combo = a.scale(c);
        combo.add_scaled_mut(1.0, &b).unwrap();
        let lhs = project(&combo, &omega, false).unwrap();
        let mut rhs = project(&a, &omega, false).unwrap().scale(c);
        rhs.add_scaled_mut(1.0, &project(&b, &omega, false).unwrap()).unwrap();
        for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        let whole = project(&a, &omega, false).unwrap().add(&project(&a, &omega, true).unwrap()).unwrap();
        prop_assert_eq!(whole, a);
    }

    #[test]
    fn mode_product_matches_unfolding(t in tensor(), n in 1usize..=3, rows in 1usize..5, seed in any::<u64>()) {
        let i = t.dims()[n - 1];
        let m = Matrix::from_fn(rows, i, |r, c| ((seed.wrapping_add((r * 31 + c) as u64) % 17) as f64) - 8.0);
        let y = mode_product(&t, &m, n).unwrap();
        let expected = &m * unfold(&t, n).unwrap();
        prop_assert!((unfold(&y, n).unwrap() - expected).norm() <= 1e-9 * (1.0 + y.as_slice().iter().map(|v| v.abs()).sum::<f64>()));
    }

    #[test]
    fn penalty_stays_in_bounds(steps in proptest::collection::vec((0.0f64..1e3, 0.0f64..1e3), 1..60)) {
        let mut rho = 1e-2;
        for (r, s) in steps {
            rho = penalty_update(rho, r, s, 2.0, 1e-6, 1e6);
            prop_assert!((1e-6..=1e6).contains(&rho));
        }
    }

    #[test]
    fn svt_never_increases_singular_values(m in matrix(4, 6), mu in 0.0f64..3.0) {
        let out = svt(&m, mu).unwrap();
        prop_assert!(out.norm() <= m.norm() + 1e-12);
    }

    #[test]
    fn ort_is_orthonormal(m in matrix(6, 3)) {
        let q = ort(&m).unwrap();
        prop_assert!((q.transpose() * &q - Matrix::identity(3, 3)).norm() <= 1e-10);
    }

    #[test]
    fn kronecker_shape(a in matrix(2, 3), b in matrix(3, 2)) {
        let k = kronecker(&a, &b);
        prop_assert_eq!(k.shape(), (6, 6));
        prop_assert_eq!(k[(4, 5)], a[(1, 2)] * b[(1, 1)]);
    }

    #[test]
    fn dense_round_trip(t in tensor()) {
        let mut buf = Vec::new();
        write_dense_to(&t, &mut buf).unwrap();
        prop_assert_eq!(parse_dense(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn coo_round_trip(t in tensor(), ratio in 0.05f64..1.0, seed in any::<u64>()) {
        let omega = ObservationSet::from_offsets(&t, &sample_offsets(t.dims(), ratio, seed).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_coo_to(&omega, &mut buf).unwrap();
        prop_assert_eq!(parse_coo(buf.as_slice()).unwrap(), omega);
    }

    #[test]
    fn rse_is_scale_consistent((x, t) in tensor_pair(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        prop_assume!(t.as_slice().iter().any(|v| *v != 0.0));
        let a = rse(&x, &t).unwrap();
        let b = rse(&x.scale(c), &t.scale(c)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn auc_monotone_invariance(scores in proptest::collection::vec(-3.0f64..3.0, 4..40), seed in any::<u64>()) {
        let n = scores.len();
        let mut labels: Vec<bool> = (0..n).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        labels[0] = true;
        labels[1] = false;
        let d = ScoredLabels::new(scores.clone(), labels.clone()).unwrap();
        let e = ScoredLabels::new(scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect(), labels).unwrap();
        prop_assert!((auc(&d).unwrap() - auc(&e).unwrap()).abs() <= 1e-12);
        prop_assert!((auc(&d.flipped()).unwrap() - (1.0 - auc(&d).unwrap())).abs() <= 1e-12);
    }
}

#[test]
fn generators_are_pure() {
    assert_eq!(
        gen_tucker([6, 5, 4], [2, 2, 2], 77).unwrap(),
        gen_tucker([6, 5, 4], [2, 2, 2], 77).unwrap()
    );
    assert_ne!(
        gen_tucker([6, 5, 4], [2, 2, 2], 77).unwrap(),
        gen_tucker([6, 5, 4], [2, 2, 2], 78).unwrap()
    );
}
