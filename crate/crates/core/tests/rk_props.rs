use kaczmarz::linalg::{self, DenseMatrix, DenseVector};
use kaczmarz::problems::{additive_noise, generate_system, NoisySystem, Spacing, SpectrumSpec};
use kaczmarz::rk::{self, rk_step, RkConfig, RowSampler, StartPoint};
use kaczmarz::rng::{gaussian_matrix, gaussian_vector, stream_rng, Stream};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn small_system(seed: u64) -> kaczmarz::problems::LinearSystem {
    generate_system(&SpectrumSpec::new(12, 6, 6, 1.0, 5.0, Spacing::Even), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = stream_rng(seed, Stream::Solution);
        let row = gaussian_vector(&mut rng, n);
        let x = gaussian_vector(&mut rng, n).scale(10.0);
        let rhs = gaussian_vector(&mut rng, 1)[0];
        let once = rk_step(&x, &row, rhs).unwrap();
        let twice = rk_step(&once, &row, rhs).unwrap();
        let scale = x.norm().max(1.0);
        prop_assert!(once.distance_squared(&twice).sqrt() <= 1e-12 * scale);
        // the selected equation is solved exactly
        let residual = linalg::dot(&row, &once) - rhs;
        prop_assert!(residual.abs() <= 1e-12 * (row.norm() * once.norm() + rhs.abs()).max(1.0));
    }

    #[test]
    fn step_is_an_orthogonal_decomposition(seed in any::<u64>(), n in 1usize..20) {
        // x − x' is parallel to the row and x' − y ⟂ row for every y on the hyperplane
        let mut rng = stream_rng(seed, Stream::Solution);
        let row = gaussian_vector(&mut rng, n);
        let x = gaussian_vector(&mut rng, n);
        let y = gaussian_vector(&mut rng, n);
        let rhs = linalg::dot(&row, &y);
        let next = rk_step(&x, &row, rhs).unwrap();
        let lhs = x.distance_squared(&y);
        let rhs_sum = x.distance_squared(&next) + next.distance_squared(&y);
        prop_assert!((lhs - rhs_sum).abs() <= 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn noiseless_steps_never_increase_error(seed in any::<u64>()) {
        let sys = small_system(seed);
        let noisy = NoisySystem::noiseless(sys.clone());
        let mut sampler = rk::make_sampler(&noisy.a_tilde, seed).unwrap();
        let mut x = DenseVector::zeros(sys.cols());
        let mut prev = x.distance_squared(&sys.x_ls);
        for _ in 0..200 {
            let i = sampler.sample();
            x = rk_step(&x, sys.a.row(i), sys.b[i]).unwrap();
            let err = x.distance_squared(&sys.x_ls);
            prop_assert!(err <= prev * (1.0 + 1e-12) + 1e-24);
            prev = err;
        }
    }
}

#[test]
fn iterates_stay_in_start_plus_row_space() {
    let sys = generate_system(&SpectrumSpec::new(8, 6, 3, 1.0, 3.0, Spacing::Even), 4).unwrap();
    let noisy = additive_noise(&sys, 0.0, 0.3, 4).unwrap();
    let x0 = gaussian_vector(&mut stream_rng(9, Stream::StartPoint(0)), 6);
    let cfg = RkConfig::new(500, 1, 3);
    let mut x = x0.clone();
    let mut sampler = rk::make_sampler(&noisy.a_tilde, cfg.seed).unwrap();
    let pinv = linalg::pseudoinverse_default(&noisy.a_tilde).unwrap();
    let projector = pinv.matmul(&noisy.a_tilde).unwrap();
    for _ in 0..cfg.max_iterations {
        let i = sampler.sample();
        x = rk_step(&x, noisy.a_tilde.row(i), noisy.b_tilde[i]).unwrap();
        let d = x.sub(&x0);
        let off = d.sub(&projector.matvec(&d).unwrap()).norm();
        assert!(off <= 1e-8 * d.norm().max(1.0), "left the row space by {off}");
    }
}

#[test]
fn sampler_frequencies_pass_chi_square() {
    let a = gaussian_matrix(&mut stream_rng(17, Stream::LeftFactor), 25, 4);
    let mut sampler = RowSampler::new(&a, stream_rng(17, Stream::Sampler(0))).unwrap();
    let p = sampler.probabilities();
    let n = 1_000_000;
    let mut counts = vec![0usize; p.len()];
    for _ in 0..n {
        counts[sampler.sample()] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&p)
        .map(|(&c, &pi)| {
            let expected = pi * n as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    let critical = ChiSquared::new((p.len() - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} exceeds {critical}");
}

#[test]
fn zero_row_is_never_sampled() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let sampler = RowSampler::new(&a, stream_rng(1, Stream::Sampler(0))).unwrap();
    assert!(sampler.take(10_000).all(|i| i != 1));
}

#[test]
fn trials_are_independent_of_thread_count() {
    let sys = small_system(2);
    let noisy = additive_noise(&sys, 0.05, 0.05, 2).unwrap();
    let cfg = RkConfig::new(400, 6, 11).with_stride(7);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = single.install(|| rk::solve(&noisy, &cfg).unwrap());
    let b = rk::solve(&noisy, &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn per_trial_starts_differ_but_ignore_noise_level() {
    let sys = small_system(5);
    let cfg = RkConfig::new(10, 3, 5).with_start(StartPoint::RangeOfATildeT);
    let clean = NoisySystem::noiseless(sys.clone());
    let starts = cfg.start_points(&clean).unwrap();
    assert_ne!(starts[0], starts[1]);
    // same y draw, so the start moves only through Ãᵀ
    let noisy = additive_noise(&sys, 0.1, 0.0, 5).unwrap();
    let noisy_starts = cfg.start_points(&noisy).unwrap();
    let e = noisy.a_tilde.sub(&sys.a).unwrap();
    let y = gaussian_vector(&mut stream_rng(5, Stream::StartPoint(0)), sys.rows());
    let expected = starts[0].add(&e.tr_matvec(&y).unwrap());
    assert!(noisy_starts[0].distance_squared(&expected).sqrt() < 1e-12 * expected.norm());
}
