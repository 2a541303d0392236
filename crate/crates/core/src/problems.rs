//! Consistent test systems with prescribed spectra and the noise models
//! applied to them.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, DenseVector, SvdFactors};
use crate::rng::{gaussian_matrix, gaussian_vector, stream_rng, Stream};

const MAX_REDRAWS: usize = 100;
const NONSINGULAR_FLOOR: f64 = 1e-8;
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Arithmetic progression from `sigma_max` down to `sigma_min`, endpoints included.
    Even,
    /// Endpoints pinned, interior values uniform in between, all distinct.
    RandomDistinct,
    /// `sigma_max` repeated `r - 1` times followed by `sigma_min`.
    TwoLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub spacing: Spacing,
}

impl SpectrumSpec {
    pub fn new(m: usize, n: usize, r: usize, sigma_min: f64, sigma_max: f64, spacing: Spacing) -> Self {
        Self { m, n, r, sigma_min, sigma_max, spacing }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpectrum(msg));
        if self.r < 1 || self.r > self.m.min(self.n) {
            return bad(format!("rank {} outside [1, min({}, {})]", self.r, self.m, self.n));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min.is_finite() && self.sigma_max.is_finite()) {
            return bad(format!("sigma_min must be positive and finite, got {}", self.sigma_min));
        }
        if self.sigma_min > self.sigma_max {
            return bad(format!("sigma_min {} exceeds sigma_max {}", self.sigma_min, self.sigma_max));
        }
        if self.r >= 2 && self.sigma_min == self.sigma_max {
            return bad("singular values must be distinct: sigma_min equals sigma_max".into());
        }
        if self.spacing == Spacing::RandomDistinct && self.r >= 2 {
            let needed = (self.r - 1) as f64 * 1e-6 * self.sigma_max;
            if self.sigma_max - self.sigma_min < needed {
                return bad("interval too narrow for the minimum gap".into());
            }
        }
        Ok(())
    }

    /// Nonincreasing singular values for this spec.
    pub fn singular_values<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let (lo, hi, r) = (self.sigma_min, self.sigma_max, self.r);
        if r == 1 {
            return Ok(vec![hi]);
        }
        match self.spacing {
            Spacing::Even => Ok((0..r)
                .map(|i| if i == r - 1 { lo } else { hi - (hi - lo) * i as f64 / (r - 1) as f64 })
                .collect()),
            Spacing::TwoLevel => Ok((0..r).map(|i| if i == r - 1 { lo } else { hi }).collect()),
            Spacing::RandomDistinct => {
                let gap = 1e-6 * hi;
                for _ in 0..MAX_REDRAWS {
                    let mut s: Vec<f64> = (0..r - 2).map(|_| rng.random_range(lo..=hi)).collect();
                    s.push(lo);
                    s.push(hi);
                    s.sort_by(|a, b| b.total_cmp(a));
                    if s.windows(2).all(|w| w[0] - w[1] >= gap) {
                        return Ok(s);
                    }
                }
                Err(Error::RedrawExhausted(MAX_REDRAWS, "distinct singular values".into()))
            }
        }
    }
}

/// A consistent noiseless system `A x = b` with its minimal-norm solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub a: DenseMatrix,
    pub b: DenseVector,
    pub x_ls: DenseVector,
    pub factors: SvdFactors,
}

impl LinearSystem {
    /// Wraps `(A, b)`, computing `x_LS = A†b` and rejecting inconsistent right-hand sides.
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if b.dim() != a.rows() {
            return Err(Error::Dimension(format!("b has {} entries for {} rows", b.dim(), a.rows())));
        }
        let factors = linalg::svd(&a)?;
        let x_ls = factors.pseudoinverse().matvec(&b)?;
        let residual = a.matvec(&x_ls)?.sub(&b).norm();
        if residual > CONSISTENCY_TOL * b.norm().max(f64::MIN_POSITIVE) && residual > 0.0 {
            return Err(Error::Hypothesis(format!(
                "consistency of Ax = b (relative residual {:.3e})",
                residual / b.norm()
            )));
        }
        Ok(Self { a, b, x_ls, factors })
    }

    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    pub fn scaled_condition(&self) -> f64 {
        self.factors.scaled_condition()
    }
}

/// Builds `A = U Σ Vᵀ` from Gaussian-then-orthonormalised factors and
/// `b = A z` for a standard normal `z`.
pub fn generate_system(spec: &SpectrumSpec, seed: u64) -> Result<LinearSystem> {
    let sigma = spec.singular_values(&mut stream_rng(seed, Stream::Spectrum))?;
    system_with_singular_values(spec.m, spec.n, &sigma, seed)
}

/// Same construction as [`generate_system`] with an explicit spectrum.
pub fn system_with_singular_values(m: usize, n: usize, sigma: &[f64], seed: u64) -> Result<LinearSystem> {
    let r = sigma.len();
    if r == 0 || r > m.min(n) || sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidSpectrum(format!("{r} singular values for a {m}x{n} matrix")));
    }
    let u = linalg::orthonormalize_columns(&gaussian_matrix(&mut stream_rng(seed, Stream::LeftFactor), m, r))?;
    let v = linalg::orthonormalize_columns(&gaussian_matrix(&mut stream_rng(seed, Stream::RightFactor), n, r))?;
    let mut us = u;
    for i in 0..m {
        for (j, s) in sigma.iter().enumerate() {
            us[(i, j)] *= s;
        }
    }
    let a = us.matmul(&v.transpose())?;
    let z = gaussian_vector(&mut stream_rng(seed, Stream::Solution), n);
    let b = a.matvec(&z)?;
    LinearSystem::new(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Additive,
    Multiplicative,
    PartialConsistent,
    Preconditioner,
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NoiseModel::Additive => "additive",
            NoiseModel::Multiplicative => "multiplicative",
            NoiseModel::PartialConsistent => "partial_consistent",
            NoiseModel::Preconditioner => "preconditioner",
        };
        f.write_str(s)
    }
}

/// A noiseless system together with its noisy counterpart `Ã x ≈ b̃`.
///
/// `e`, `f` and `eps` hold the unit-scale draws; `sigma_a` and `sigma_b`
/// are the magnitudes they are scaled by. For the additive model
/// `Ã = A + σ_A E`; for the multiplicative model `Ã = (I + σ_A E) A (I + σ_A F)`.
/// The partially consistent and preconditioner models store the realised
/// additive perturbation in `e` with `sigma_a = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySystem {
    pub base: LinearSystem,
    pub a_tilde: DenseMatrix,
    pub b_tilde: DenseVector,
    pub e: DenseMatrix,
    pub f: Option<DenseMatrix>,
    pub eps: DenseVector,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub model: NoiseModel,
}

impl NoisySystem {
    /// The base system viewed as a noise-free instance of the additive model.
    pub fn noiseless(base: LinearSystem) -> Self {
        let (m, n) = base.a.shape();
        Self {
            a_tilde: base.a.clone(),
            b_tilde: base.b.clone(),
            e: DenseMatrix::zeros(m, n),
            f: None,
            eps: DenseVector::zeros(m),
            sigma_a: 0.0,
            sigma_b: 0.0,
            model: NoiseModel::Additive,
            base,
        }
    }

    /// Effective right-hand side noise `σ_B ε`.
    pub fn rhs_noise(&self) -> DenseVector {
        self.eps.scale(self.sigma_b)
    }

    /// Effective matrix perturbation `ΔA` with `Ã = A + ΔA`. For the
    /// multiplicative model this is the expansion `EA + AF + EAF` over the
    /// scaled factors, not the difference `Ã − A`.
    pub fn matrix_noise(&self) -> DenseMatrix {
        match self.model {
            NoiseModel::Multiplicative => {
                let a = &self.base.a;
                let e = self.e.scale(self.sigma_a);
                let f = self.f.as_ref().map(|f| f.scale(self.sigma_a));
                let ea = e.matmul(a).expect("E is m×m");
                match f {
                    Some(f) => {
                        let af = a.matmul(&f).expect("F is n×n");
                        let eaf = ea.matmul(&f).expect("F is n×n");
                        ea.add(&af).and_then(|s| s.add(&eaf)).expect("shapes agree")
                    }
                    None => ea,
                }
            }
            _ => self.e.scale(self.sigma_a),
        }
    }

    /// Scaled left and right multiplicative factors `(σ_A E, σ_A F)`.
    pub fn multiplicative_factors(&self) -> Result<(DenseMatrix, DenseMatrix)> {
        self.expect_model(NoiseModel::Multiplicative)?;
        let n = self.base.cols();
        let f = self.f.clone().unwrap_or_else(|| DenseMatrix::zeros(n, n));
        Ok((self.e.scale(self.sigma_a), f.scale(self.sigma_a)))
    }

    pub fn expect_model(&self, expected: NoiseModel) -> Result<()> {
        if self.model == expected {
            Ok(())
        } else {
            Err(Error::ModelMismatch { expected: expected.to_string(), got: self.model.to_string() })
        }
    }

    /// Writes `A.mat`, `b.vec`, `xls.vec`, `atilde.mat`, `btilde.vec` and `meta.json`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, meta: &serde_json::Value) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        linalg::write_matrix(dir.join("A.mat"), &self.base.a)?;
        linalg::write_vector(dir.join("b.vec"), &self.base.b)?;
        linalg::write_vector(dir.join("xls.vec"), &self.base.x_ls)?;
        linalg::write_matrix(dir.join("atilde.mat"), &self.a_tilde)?;
        linalg::write_vector(dir.join("btilde.vec"), &self.b_tilde)?;
        let mut meta = meta.clone();
        if let Some(obj) = meta.as_object_mut() {
            obj.insert("model".into(), self.model.to_string().into());
            obj.insert("sigma_a".into(), self.sigma_a.into());
            obj.insert("sigma_b".into(), self.sigma_b.into());
            obj.insert("rows".into(), self.base.rows().into());
            obj.insert("cols".into(), self.base.cols().into());
        }
        fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

fn check_magnitude(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be a finite nonnegative number, got {v}")))
    }
}

/// `Ã = A + σ_A E`, `b̃ = b + σ_B ε` with standard normal `E` and `ε`.
pub fn additive_noise(sys: &LinearSystem, sigma_a: f64, sigma_b: f64, seed: u64) -> Result<NoisySystem> {
    check_magnitude("sigma_a", sigma_a)?;
    check_magnitude("sigma_b", sigma_b)?;
    let (m, n) = sys.a.shape();
    let e = gaussian_matrix(&mut stream_rng(seed, Stream::NoiseE), m, n);
    let eps = gaussian_vector(&mut stream_rng(seed, Stream::NoiseEps), m);
    let a_tilde = sys.a.add(&e.scale(sigma_a))?;
    let b_tilde = sys.b.add(&eps.scale(sigma_b));
    Ok(NoisySystem {
        base: sys.clone(),
        a_tilde,
        b_tilde,
        e,
        f: None,
        eps,
        sigma_a,
        sigma_b,
        model: NoiseModel::Additive,
    })
}

fn smallest_singular_value(m: &DenseMatrix) -> f64 {
    match linalg::svd_with_tolerance(m, 0.0) {
        Ok(f) if f.numerical_rank == m.rows().min(m.cols()) => f.sigma_min(),
        _ => 0.0,
    }
}

/// Draws a standard normal square factor until `I + scale · X` is safely nonsingular.
fn draw_nonsingular_factor<R: Rng>(rng: &mut R, dim: usize, scale: f64, what: &str) -> Result<DenseMatrix> {
    for _ in 0..MAX_REDRAWS {
        let x = gaussian_matrix(rng, dim, dim);
        if smallest_singular_value(&x.scale(scale).add_identity()?) >= NONSINGULAR_FLOOR {
            return Ok(x);
        }
    }
    Err(Error::RedrawExhausted(MAX_REDRAWS, format!("nonsingular I + σ_A {what}")))
}

/// `Ã = (I + σ_A E) A (I + σ_A F)`, `b̃ = b + σ_B ε`; a disabled factor is zero.
pub fn multiplicative_noise(
    sys: &LinearSystem,
    sigma_a: f64,
    sigma_b: f64,
    use_e: bool,
    use_f: bool,
    seed: u64,
) -> Result<NoisySystem> {
    check_magnitude("sigma_a", sigma_a)?;
    check_magnitude("sigma_b", sigma_b)?;
    let (m, n) = sys.a.shape();
    let e = if use_e {
        draw_nonsingular_factor(&mut stream_rng(seed, Stream::NoiseE), m, sigma_a, "E")?
    } else {
        DenseMatrix::zeros(m, m)
    };
    let f = if use_f {
        draw_nonsingular_factor(&mut stream_rng(seed, Stream::NoiseF), n, sigma_a, "F")?
    } else {
        DenseMatrix::zeros(n, n)
    };
    let eps = gaussian_vector(&mut stream_rng(seed, Stream::NoiseEps), m);

    let mut a_tilde = sys.a.clone();
    if use_e {
        a_tilde = e.scale(sigma_a).add_identity()?.matmul(&a_tilde)?;
    }
    if use_f {
        a_tilde = a_tilde.matmul(&f.scale(sigma_a).add_identity()?)?;
    }
    let b_tilde = sys.b.add(&eps.scale(sigma_b));
    Ok(NoisySystem {
        base: sys.clone(),
        a_tilde,
        b_tilde,
        e,
        f: Some(f),
        eps,
        sigma_a,
        sigma_b,
        model: NoiseModel::Multiplicative,
    })
}

/// Partially noisy system `Ã = A (I + M)` with `‖A†‖‖AM‖ = strength` and `b̃ = b`.
pub fn partial_consistent_noise(sys: &LinearSystem, strength: f64, seed: u64) -> Result<NoisySystem> {
    partial_consistent_noise_with_rhs(sys, strength, 0.0, seed)
}

/// As [`partial_consistent_noise`], additionally observing `b̃ = b + σ_B ε`.
/// The partially noisy system `Ãx = b` stays consistent either way.
pub fn partial_consistent_noise_with_rhs(
    sys: &LinearSystem,
    strength: f64,
    sigma_b: f64,
    seed: u64,
) -> Result<NoisySystem> {
    if !(strength > 0.0 && strength < 1.0) {
        return Err(Error::InvalidArgument(format!("strength must lie in (0, 1), got {strength}")));
    }
    check_magnitude("sigma_b", sigma_b)?;
    let (m, n) = sys.a.shape();
    let pinv_norm = 1.0 / sys.factors.sigma_min();
    let mut rng = stream_rng(seed, Stream::NoiseE);
    for _ in 0..MAX_REDRAWS {
        let raw = gaussian_matrix(&mut rng, n, n);
        let am = sys.a.matmul(&raw)?;
        let Ok(am_norm) = linalg::spectral_norm(&am) else { continue };
        let c = strength / (pinv_norm * am_norm);
        let mix = raw.scale(c);
        let right = mix.add_identity()?;
        if smallest_singular_value(&right) < NONSINGULAR_FLOOR {
            continue;
        }
        let a_tilde = sys.a.matmul(&right)?;
        let e = a_tilde.sub(&sys.a)?;
        if linalg::svd(&a_tilde)?.numerical_rank != sys.factors.numerical_rank {
            continue;
        }
        let eps = gaussian_vector(&mut stream_rng(seed, Stream::NoiseEps), m);
        let b_tilde = sys.b.add(&eps.scale(sigma_b));
        return Ok(NoisySystem {
            base: sys.clone(),
            a_tilde,
            b_tilde,
            e,
            f: Some(mix),
            eps,
            sigma_a: 1.0,
            sigma_b,
            model: NoiseModel::PartialConsistent,
        });
    }
    Err(Error::RedrawExhausted(MAX_REDRAWS, "rank-preserving nonsingular I + M".into()))
}

/// Lifts the smallest singular value to the next one:
/// `Ã = A + (σ_{r−1} − σ_r) u_r v_rᵀ`, `b̃ = b`.
pub fn preconditioner_noise(sys: &LinearSystem) -> Result<NoisySystem> {
    let f = &sys.factors;
    let r = f.numerical_rank;
    if r < 2 {
        return Err(Error::InvalidSpectrum("preconditioner needs rank at least 2".into()));
    }
    let gap = f.sigma[r - 2] - f.sigma[r - 1];
    if gap <= 1e-12 * f.sigma_max() {
        return Err(Error::InvalidSpectrum("σ_{r-1} equals σ_r; nothing to lift".into()));
    }
    let (m, n) = sys.a.shape();
    let (ur, vr) = (f.u_column(r - 1), f.v_column(r - 1));
    let mut e = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            e[(i, j)] = gap * ur[i] * vr[j];
        }
    }
    let a_tilde = sys.a.add(&e)?;
    Ok(NoisySystem {
        base: sys.clone(),
        a_tilde,
        b_tilde: sys.b.clone(),
        e,
        f: None,
        eps: DenseVector::zeros(m),
        sigma_a: 1.0,
        sigma_b: 0.0,
        model: NoiseModel::Preconditioner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SpectrumSpec {
        SpectrumSpec::new(30, 12, 12, 1.0, 10.0, Spacing::Even)
    }

    #[test]
    fn spectrum_validation() {
        assert!(SpectrumSpec::new(3, 3, 3, 1.0, 1.0, Spacing::Even).validate().is_err());
        assert!(SpectrumSpec::new(3, 3, 4, 1.0, 2.0, Spacing::Even).validate().is_err());
        assert!(SpectrumSpec::new(3, 3, 0, 1.0, 2.0, Spacing::Even).validate().is_err());
        assert!(SpectrumSpec::new(3, 3, 2, 0.0, 2.0, Spacing::Even).validate().is_err());
        assert!(SpectrumSpec::new(3, 3, 2, 3.0, 2.0, Spacing::Even).validate().is_err());
        assert!(SpectrumSpec::new(3, 3, 1, 1.0, 1.0, Spacing::Even).validate().is_ok());
        assert!(matches!(
            generate_system(&SpectrumSpec::new(3, 3, 3, 1.0, 1.0, Spacing::Even), 0),
            Err(Error::InvalidSpectrum(_))
        ));
    }

    #[test]
    fn spacings_produce_expected_values() {
        let mut rng = stream_rng(0, Stream::Spectrum);
        let even = SpectrumSpec::new(5, 5, 4, 2.0, 8.0, Spacing::Even).singular_values(&mut rng).unwrap();
        assert_eq!(even, vec![8.0, 6.0, 4.0, 2.0]);
        let two = SpectrumSpec::new(5, 5, 3, 1.0, 4.0, Spacing::TwoLevel).singular_values(&mut rng).unwrap();
        assert_eq!(two, vec![4.0, 4.0, 1.0]);
        let rnd = SpectrumSpec::new(9, 9, 9, 1.0, 5.0, Spacing::RandomDistinct).singular_values(&mut rng).unwrap();
        assert_eq!(rnd[0], 5.0);
        assert_eq!(rnd[8], 1.0);
        assert!(rnd.windows(2).all(|w| w[0] - w[1] >= 5e-6));
    }

    #[test]
    fn generated_system_is_consistent_and_has_spectrum() {
        let sys = generate_system(&small_spec(), 3).unwrap();
        let res = sys.a.matvec(&sys.x_ls).unwrap().sub(&sys.b).norm();
        assert!(res <= 1e-9 * sys.b.norm());
        assert!((sys.factors.sigma_max() - 10.0).abs() < 1e-10);
        assert!((sys.factors.sigma_min() - 1.0).abs() < 1e-10);
        assert_eq!(generate_system(&small_spec(), 3).unwrap(), sys);
    }

    #[test]
    fn rank_deficient_solution_lies_in_row_space() {
        let sys = generate_system(&SpectrumSpec::new(20, 15, 6, 1.0, 3.0, Spacing::Even), 11).unwrap();
        assert_eq!(sys.factors.numerical_rank, 6);
        let p = linalg::pseudoinverse_default(&sys.a).unwrap().matmul(&sys.a).unwrap();
        let proj = p.matvec(&sys.x_ls).unwrap();
        assert!(sys.x_ls.sub(&proj).norm() <= 1e-9 * sys.x_ls.norm());
    }

    #[test]
    fn additive_zero_noise_is_bit_exact() {
        let sys = generate_system(&small_spec(), 1).unwrap();
        let noisy = additive_noise(&sys, 0.0, 0.0, 9).unwrap();
        assert_eq!(noisy.a_tilde, sys.a);
        assert_eq!(noisy.b_tilde, sys.b);
        let rhs_only = additive_noise(&sys, 0.0, 1.0, 9).unwrap();
        assert_eq!(rhs_only.a_tilde, sys.a);
        assert_eq!(rhs_only.b_tilde, sys.b.add(&rhs_only.eps));
        assert_eq!(additive_noise(&sys, 0.3, 0.2, 9).unwrap(), additive_noise(&sys, 0.3, 0.2, 9).unwrap());
        assert!(additive_noise(&sys, -1.0, 0.0, 9).is_err());
    }

    #[test]
    fn noise_streams_do_not_shift_each_other() {
        let sys = generate_system(&small_spec(), 1).unwrap();
        let a = additive_noise(&sys, 0.1, 0.0, 4).unwrap();
        let b = additive_noise(&sys, 0.0, 0.7, 4).unwrap();
        assert_eq!(a.e, b.e);
        assert_eq!(a.eps, b.eps);
    }

    #[test]
    fn multiplicative_variants() {
        let sys = generate_system(&small_spec(), 2).unwrap();
        let off = multiplicative_noise(&sys, 0.1, 0.0, false, false, 5).unwrap();
        assert_eq!(off.a_tilde, sys.a);
        assert_eq!(off.b_tilde, sys.b);

        let left = multiplicative_noise(&sys, 0.1, 0.0, true, false, 5).unwrap();
        let expected = left.e.scale(0.1).matmul(&sys.a).unwrap();
        let delta = left.a_tilde.sub(&sys.a).unwrap();
        assert!(delta.max_abs_diff(&expected) <= 1e-12 * expected.max_abs());

        let both = multiplicative_noise(&sys, 0.05, 0.1, true, true, 5).unwrap();
        let diff = both.a_tilde.sub(&sys.a).unwrap();
        let expansion = both.matrix_noise();
        assert!(diff.max_abs_diff(&expansion) <= 1e-10 * expansion.max_abs());
    }

    #[test]
    fn partial_consistent_hypotheses_hold() {
        let sys = generate_system(&small_spec(), 4).unwrap();
        let noisy = partial_consistent_noise(&sys, 0.4, 8).unwrap();
        assert_eq!(noisy.b_tilde, sys.b);
        let e_norm = linalg::spectral_norm(&noisy.e).unwrap();
        assert!((e_norm / sys.factors.sigma_min() - 0.4).abs() < 1e-9);
        let x_pnls = linalg::pseudoinverse_default(&noisy.a_tilde).unwrap().matvec(&sys.b).unwrap();
        let res = noisy.a_tilde.matvec(&x_pnls).unwrap().sub(&sys.b).norm();
        assert!(res <= 1e-9 * sys.b.norm());
        assert!(partial_consistent_noise(&sys, 1.0, 8).is_err());
        assert!(partial_consistent_noise(&sys, 0.0, 8).is_err());

        let tiny = partial_consistent_noise(&sys, 1e-12, 8).unwrap();
        assert!(tiny.a_tilde.max_abs_diff(&sys.a) < 1e-10);
    }

    #[test]
    fn preconditioner_toy_spectrum() {
        let a = DenseMatrix::from_diagonal(3, 3, &[3.0, 3.0, 1.0]).unwrap();
        let sys = LinearSystem::new(a, DenseVector::from(vec![0.0, 0.0, 1.0])).unwrap();
        let noisy = preconditioner_noise(&sys).unwrap();
        assert!((linalg::spectral_norm(&noisy.e).unwrap() - 2.0).abs() < 1e-12);
        let s = linalg::svd(&noisy.a_tilde).unwrap();
        assert!(s.sigma.iter().all(|x| (x - 3.0).abs() < 1e-9));
        assert!((s.scaled_condition() - 3.0).abs() < 1e-9);

        let flat = LinearSystem::new(DenseMatrix::identity(2), DenseVector::from(vec![1.0, 1.0])).unwrap();
        assert!(preconditioner_noise(&flat).is_err());
    }

    #[test]
    fn preconditioner_two_by_two() {
        let a = DenseMatrix::from_diagonal(2, 2, &[5.0, 4.0]).unwrap();
        let sys = LinearSystem::new(a, DenseVector::from(vec![1.0, 1.0])).unwrap();
        let noisy = preconditioner_noise(&sys).unwrap();
        let s = linalg::svd(&noisy.a_tilde).unwrap();
        assert!((s.sigma[0] - 5.0).abs() < 1e-12 && (s.sigma[1] - 5.0).abs() < 1e-12);
        assert!((linalg::spectral_norm(&noisy.e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_rhs_is_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(LinearSystem::new(a, DenseVector::from(vec![1.0, 1.0])), Err(Error::Hypothesis(_))));
    }
}
