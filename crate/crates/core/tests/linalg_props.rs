use kaczmarz::bounds::weyl_slack;
use kaczmarz::linalg::{self, DenseMatrix};
use kaczmarz::rng::{gaussian_matrix, stream_rng, Stream};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// Gaussian `m × n` matrix of rank at most `k`, built as a product.
fn low_rank(seed: u64, m: usize, n: usize, k: usize) -> DenseMatrix {
    let mut rng = stream_rng(seed, Stream::LeftFactor);
    let l = gaussian_matrix(&mut rng, m, k);
    let r = gaussian_matrix(&mut rng, k, n);
    l.matmul(&r).unwrap()
}

fn rel_err(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.max_abs_diff(y) / y.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn moore_penrose_identities(seed in any::<u64>(), m in 1usize..9, n in 1usize..9, k in 1usize..9) {
        let a = low_rank(seed, m, n, k.min(m).min(n));
        let p = linalg::pseudoinverse_default(&a).unwrap();
        let apa = a.matmul(&p).unwrap().matmul(&a).unwrap();
        let pap = p.matmul(&a).unwrap().matmul(&p).unwrap();
        let ap = a.matmul(&p).unwrap();
        let pa = p.matmul(&a).unwrap();
        prop_assert!(rel_err(&apa, &a) < 1e-9);
        prop_assert!(pap.max_abs_diff(&p) < 1e-9 * p.max_abs().max(1.0));
        prop_assert!(ap.max_abs_diff(&ap.transpose()) < 1e-9);
        prop_assert!(pa.max_abs_diff(&pa.transpose()) < 1e-9);
    }

    #[test]
    fn weyl_inequality(seed in any::<u64>(), m in 2usize..10, n in 2usize..10, scale in 1e-3f64..10.0) {
        let a = gaussian_matrix(&mut stream_rng(seed, Stream::LeftFactor), m, n);
        let e = gaussian_matrix(&mut stream_rng(seed, Stream::NoiseE), m, n).scale(scale);
        prop_assert!(weyl_slack(&a, &e).unwrap() >= -1e-9);
    }

    #[test]
    fn scaled_condition_is_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let a = gaussian_matrix(&mut stream_rng(seed, Stream::LeftFactor), 7, 4);
        let r = linalg::scaled_condition_r(&a).unwrap();
        let rc = linalg::scaled_condition_r(&a.scale(c)).unwrap();
        prop_assert!((r - rc).abs() <= 1e-9 * r);
        prop_assert!(r >= 4.0 * (1.0 - 1e-12));
    }

    #[test]
    fn singular_values_match_eigen_oracle(seed in any::<u64>(), m in 1usize..12, n in 1usize..12) {
        let a = gaussian_matrix(&mut stream_rng(seed, Stream::LeftFactor), m, n);
        let f = linalg::svd_with_tolerance(&a, 0.0).unwrap();
        let na = to_na(&a);
        let gram = na.transpose() * &na;
        let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (s, o) in f.sigma.iter().zip(&eig) {
            prop_assert!((s - o).abs() <= 1e-7 * eig[0]);
        }
        prop_assert!(rel_err(&f.reconstruct(), &a) < 1e-10);
    }

    #[test]
    fn pseudoinverse_matches_normal_equations(seed in any::<u64>(), n in 1usize..8, extra in 0usize..6) {
        let m = n + extra;
        let a = gaussian_matrix(&mut stream_rng(seed, Stream::LeftFactor), m, n);
        let na = to_na(&a);
        let Some(inv) = (na.transpose() * &na).try_inverse() else { return Ok(()) };
        let oracle = inv * na.transpose();
        let p = linalg::pseudoinverse_default(&a).unwrap();
        let cond = linalg::svd(&a).unwrap().condition_number();
        let tol = 1e-12 * cond * cond * oracle.amax().max(1.0);
        for i in 0..n {
            for j in 0..m {
                prop_assert!((p[(i, j)] - oracle[(i, j)]).abs() <= tol.max(1e-10));
            }
        }
    }

    #[test]
    fn orthonormalized_columns(seed in any::<u64>(), m in 1usize..15, k in 1usize..15) {
        let k = k.min(m);
        let g = gaussian_matrix(&mut stream_rng(seed, Stream::RightFactor), m, k);
        let q = linalg::orthonormalize_columns(&g).unwrap();
        let qtq = q.transpose().matmul(&q).unwrap();
        prop_assert!(qtq.max_abs_diff(&DenseMatrix::identity(k)) < 1e-12);
    }
}

#[test]
fn zero_matrix_conventions() {
    let z = DenseMatrix::zeros(3, 2);
    assert!(linalg::svd(&z).is_err());
    assert_eq!(linalg::pseudoinverse_default(&z).unwrap(), DenseMatrix::zeros(2, 3));
    assert_eq!(linalg::frobenius_norm(&z), 0.0);
}
