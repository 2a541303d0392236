//! Expected-error bounds for Kaczmarz on noisy and doubly-noisy systems.
//!
//! Every bound has the shape `rate^k · initial + horizon`. Squared bounds
//! control `E‖x_k − x_LS‖²`; unsquared ones control `E‖x_k − x_LS‖` and use
//! the per-step rate `(1 − 1/R̃)^{1/2}`.
//!
//! Noise terms always enter scaled: `σ_A E` and `σ_B ε` (or the realised
//! perturbation for the constructed models).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, io::fmt_f64, DenseMatrix, DenseVector, SvdFactors};
use crate::problems::{LinearSystem, NoiseModel, NoisySystem};
use crate::rk::Trajectory;

/// Relative residual below which a system counts as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Noiseless rate `1 − 1/R`, zero horizon.
    Strohmer,
    /// Right-hand side noise only: horizon `‖ε‖²/σ_min²(A)`.
    ZouziasRhsNoise,
    /// Through the perturbed least squares solution of a consistent noisy system.
    PerturbDoubly,
    /// Through the least squares solution of the partially noisy system `Ãx = b`.
    PerturbPartial,
    /// Hypothesis-free additive bound with horizon `‖E x_LS − ε‖²/σ_min²(Ã)`.
    MainAdditive,
    /// Multiplicative version of the main bound with `ΔA = EA + AF + EAF`.
    MainMultiplicative,
    /// Multiplicative perturbation bound with the `e₁`, `e₂` constants.
    MultiplicativePerturb,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::Strohmer,
        BoundKind::ZouziasRhsNoise,
        BoundKind::PerturbDoubly,
        BoundKind::PerturbPartial,
        BoundKind::MainAdditive,
        BoundKind::MainMultiplicative,
        BoundKind::MultiplicativePerturb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Strohmer => "strohmer",
            BoundKind::ZouziasRhsNoise => "zouzias_rhs_noise",
            BoundKind::PerturbDoubly => "perturb_doubly",
            BoundKind::PerturbPartial => "perturb_partial",
            BoundKind::MainAdditive => "main_additive",
            BoundKind::MainMultiplicative => "main_multiplicative",
            BoundKind::MultiplicativePerturb => "multiplicative_perturb",
        }
    }

    pub fn is_squared(self) -> bool {
        !matches!(self, BoundKind::PerturbDoubly | BoundKind::PerturbPartial | BoundKind::MultiplicativePerturb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    /// Contraction per iteration (already square-rooted for unsquared bounds).
    pub rate: f64,
    pub horizon: f64,
    pub initial_error: f64,
    pub squared: bool,
    pub iterations: Vec<usize>,
    pub values: Vec<f64>,
    /// Scalar norms that went into the bound, for the metadata sidecar.
    pub scalars: BTreeMap<String, f64>,
}

impl BoundCurve {
    fn new(kind: BoundKind, rate: f64, initial_error: f64, horizon: f64, ks: &[usize]) -> Self {
        let values = ks.iter().map(|&k| rate.powf(k as f64) * initial_error + horizon).collect();
        Self {
            kind,
            rate,
            horizon,
            initial_error,
            squared: kind.is_squared(),
            iterations: ks.to_vec(),
            values,
            scalars: BTreeMap::new(),
        }
    }

    /// Mean of curves that differ only in their start point. Every bound is
    /// affine in the initial error, so this bounds the mean over random starts.
    pub fn average(curves: &[BoundCurve]) -> Result<BoundCurve> {
        let first = curves.first().ok_or_else(|| Error::InvalidArgument("no curves to average".into()))?;
        let init = curves.iter().map(|c| c.initial_error).sum::<f64>() / curves.len() as f64;
        let mut out = BoundCurve::new(first.kind, first.rate, init, first.horizon, &first.iterations);
        out.scalars = first.scalars.clone();
        Ok(out)
    }

    fn with(mut self, name: &str, v: f64) -> Self {
        self.scalars.insert(name.to_string(), v);
        self
    }

    /// Fraction of records at which the matching empirical mean (squared or
    /// unsquared) lies at or below the bound.
    pub fn domination_fraction(&self, traj: &Trajectory) -> f64 {
        let empirical = self.empirical_curve(traj);
        let hits = empirical
            .iter()
            .zip(&self.values)
            .filter(|(e, b)| **e <= **b * (1.0 + 1e-12) + 1e-300)
            .count();
        hits as f64 / self.values.len().max(1) as f64
    }

    pub fn empirical_curve(&self, traj: &Trajectory) -> Vec<f64> {
        assert_eq!(traj.recorded_iterations, self.iterations, "bound and trajectory records differ");
        if self.squared {
            traj.mean_squared_error.clone()
        } else {
            traj.error_mean_std().0
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,bound_value\n");
        for (k, v) in self.iterations.iter().zip(&self.values) {
            let _ = writeln!(s, "{k},{}", fmt_f64(*v));
        }
        s
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.name(),
            "rate": self.rate,
            "horizon": self.horizon,
            "initial_error": self.initial_error,
            "squared": self.squared,
            "scalars": self.scalars,
        })
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.metadata())?)?;
        Ok(())
    }
}

fn squared_rate(r: f64) -> f64 {
    1.0 - 1.0 / r
}

fn noisy_factors(noisy: &NoisySystem) -> Result<SvdFactors> {
    linalg::svd(&noisy.a_tilde)
}

fn spectral_or_zero(m: &DenseMatrix) -> Result<f64> {
    if m.is_zero() {
        Ok(0.0)
    } else {
        linalg::spectral_norm(m)
    }
}

/// Noiseless system: rate `1 − 1/R`, no horizon.
pub fn bound_noiseless(sys: &LinearSystem, x0: &DenseVector, ks: &[usize]) -> Result<BoundCurve> {
    let r = sys.scaled_condition();
    let init = x0.distance_squared(&sys.x_ls);
    Ok(BoundCurve::new(BoundKind::Strohmer, squared_rate(r), init, 0.0, ks).with("r", r))
}

/// `A x ≈ b + ε`: horizon `‖ε‖²/σ_min²(A)`; `eps` is the effective noise.
pub fn bound_rhs_noise(sys: &LinearSystem, eps: &DenseVector, x0: &DenseVector, ks: &[usize]) -> Result<BoundCurve> {
    let r = sys.scaled_condition();
    let smin = sys.factors.sigma_min();
    let init = x0.distance_squared(&sys.x_ls);
    let horizon = eps.norm_squared() / (smin * smin);
    Ok(BoundCurve::new(BoundKind::ZouziasRhsNoise, squared_rate(r), init, horizon, ks)
        .with("r", r)
        .with("sigma_min_a", smin)
        .with("eps_norm", eps.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationDistance {
    /// Upper bound on `‖x_NLS − x_LS‖`.
    pub bound: f64,
    /// `‖x_NLS − x_LS‖` computed through the pseudoinverse.
    pub observed: f64,
    /// `‖A†‖ ‖E‖`.
    pub contraction: f64,
}

struct PerturbationTerms {
    pinv_norm: f64,
    e_norm: f64,
    contraction: f64,
}

/// Checks `rank(A) = rank(A + E)` and `‖A†‖‖E‖ < 1`.
fn perturbation_hypotheses(noisy: &NoisySystem, at: &SvdFactors) -> Result<PerturbationTerms> {
    let base = &noisy.base.factors;
    if at.numerical_rank != base.numerical_rank {
        return Err(Error::Hypothesis(format!(
            "rank(A) = rank(A+E) fails: {} vs {}",
            base.numerical_rank, at.numerical_rank
        )));
    }
    let pinv_norm = 1.0 / base.sigma_min();
    let e_norm = spectral_or_zero(&noisy.matrix_noise())?;
    let contraction = pinv_norm * e_norm;
    if contraction >= 1.0 {
        return Err(Error::Hypothesis(format!("‖A†‖‖E‖ < 1 fails: {contraction:.6}")));
    }
    Ok(PerturbationTerms { pinv_norm, e_norm, contraction })
}

/// `(‖x_LS‖ / (1 − ‖A†‖‖E‖)) · (2‖A†‖‖E‖ + ‖A†‖‖ε‖/‖x_LS‖)`, written so that
/// `x_LS = 0` is harmless.
fn perturbation_bound(x_ls_norm: f64, terms: &PerturbationTerms, eps_norm: f64) -> f64 {
    (2.0 * terms.contraction * x_ls_norm + terms.pinv_norm * eps_norm) / (1.0 - terms.contraction)
}

/// Distance between the noisy and noiseless least squares solutions.
pub fn perturbed_ls_distance(sys: &LinearSystem, noisy: &NoisySystem) -> Result<PerturbationDistance> {
    let at = noisy_factors(noisy)?;
    let terms = perturbation_hypotheses(noisy, &at)?;
    let eps = noisy.rhs_noise();
    let bound = perturbation_bound(sys.x_ls.norm(), &terms, eps.norm());
    let x_nls = at.pseudoinverse().matvec(&noisy.b_tilde)?;
    let observed = x_nls.sub(&sys.x_ls).norm();
    if observed > bound * (1.0 + 1e-9) + 1e-12 {
        log::warn!("perturbation bound {bound:.6e} below observed distance {observed:.6e}");
    }
    Ok(PerturbationDistance { bound, observed, contraction: terms.contraction })
}

fn check_consistent(m: &DenseMatrix, x: &DenseVector, rhs: &DenseVector, what: &str) -> Result<()> {
    let residual = m.matvec(x)?.sub(rhs).norm();
    if residual > CONSISTENCY_TOL * rhs.norm() && residual > 0.0 {
        return Err(Error::Hypothesis(format!(
            "{what} (relative residual {:.3e})",
            residual / rhs.norm()
        )));
    }
    Ok(())
}

/// Doubly-noisy bound through `x_NLS = Ã†b̃`; needs `Ãx = b̃` consistent.
pub fn bound_perturb_doubly(
    sys: &LinearSystem,
    noisy: &NoisySystem,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    let at = noisy_factors(noisy)?;
    let terms = perturbation_hypotheses(noisy, &at)?;
    let x_nls = at.pseudoinverse().matvec(&noisy.b_tilde)?;
    check_consistent(&noisy.a_tilde, &x_nls, &noisy.b_tilde, "consistency of Ãx = b̃")?;
    let eps_norm = noisy.rhs_noise().norm();
    let horizon = perturbation_bound(sys.x_ls.norm(), &terms, eps_norm);
    let r_tilde = at.scaled_condition();
    Ok(BoundCurve::new(
        BoundKind::PerturbDoubly,
        squared_rate(r_tilde).sqrt(),
        x0.sub(&x_nls).norm(),
        horizon,
        ks,
    )
    .with("r_tilde", r_tilde)
    .with("pinv_norm_a", terms.pinv_norm)
    .with("e_norm", terms.e_norm)
    .with("eps_norm", eps_norm)
    .with("x_ls_norm", sys.x_ls.norm()))
}

/// Partially noisy bound through `x_PNLS = Ã†b`.
pub fn bound_perturb_partial(
    sys: &LinearSystem,
    noisy: &NoisySystem,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    noisy.expect_model(NoiseModel::PartialConsistent)?;
    let at = noisy_factors(noisy)?;
    let terms = perturbation_hypotheses(noisy, &at)?;
    let x_pnls = at.pseudoinverse().matvec(&sys.b)?;
    check_consistent(&noisy.a_tilde, &x_pnls, &sys.b, "consistency of Ãx = b")?;
    let eps_norm = noisy.rhs_noise().norm();
    let smin_t = at.sigma_min();
    let horizon = perturbation_bound(sys.x_ls.norm(), &terms, 0.0) + eps_norm / smin_t;
    let r_tilde = at.scaled_condition();
    Ok(BoundCurve::new(
        BoundKind::PerturbPartial,
        squared_rate(r_tilde).sqrt(),
        x0.sub(&x_pnls).norm(),
        horizon,
        ks,
    )
    .with("r_tilde", r_tilde)
    .with("pinv_norm_a", terms.pinv_norm)
    .with("e_norm", terms.e_norm)
    .with("eps_norm", eps_norm)
    .with("sigma_min_a_tilde", smin_t)
    .with("x_ls_norm", sys.x_ls.norm()))
}

fn main_bound(
    kind: BoundKind,
    sys: &LinearSystem,
    noisy: &NoisySystem,
    delta: &DenseMatrix,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    let at = noisy_factors(noisy)?;
    let r_tilde = at.scaled_condition();
    let smin_t = at.sigma_min();
    let residual = delta.matvec(&sys.x_ls)?.sub(&noisy.rhs_noise());
    let horizon = residual.norm_squared() / (smin_t * smin_t);
    Ok(BoundCurve::new(kind, squared_rate(r_tilde), x0.distance_squared(&sys.x_ls), horizon, ks)
        .with("r_tilde", r_tilde)
        .with("sigma_min_a_tilde", smin_t)
        .with("noise_residual_norm", residual.norm()))
}

/// The hypothesis-free bound: rate `1 − 1/R̃`, horizon `‖E x_LS − ε‖²/σ_min²(Ã)`.
pub fn bound_main_additive(
    sys: &LinearSystem,
    noisy: &NoisySystem,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    main_bound(BoundKind::MainAdditive, sys, noisy, &noisy.matrix_noise(), x0, ks)
}

/// Multiplicative noise: horizon `‖ΔA x_LS − ε‖²/σ_min²(Ã)` with the expanded `ΔA`.
pub fn bound_main_multiplicative(
    sys: &LinearSystem,
    noisy: &NoisySystem,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    noisy.expect_model(NoiseModel::Multiplicative)?;
    main_bound(BoundKind::MainMultiplicative, sys, noisy, &noisy.matrix_noise(), x0, ks)
}

/// `sqrt(‖X‖² + ‖(I + X)⁻¹X‖²)`.
fn factor_size(x: &DenseMatrix, name: &str) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    let inv_x = x.add_identity()?.solve(x).map_err(|_| Error::Hypothesis(format!("I + {name} nonsingular")))?;
    let a = linalg::spectral_norm(x)?;
    let b = spectral_or_zero(&inv_x)?;
    Ok((a * a + b * b).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeConstants {
    pub e1: f64,
    pub e2: f64,
}

pub fn multiplicative_constants(noisy: &NoisySystem) -> Result<MultiplicativeConstants> {
    let (e, f) = noisy.multiplicative_factors()?;
    let e1 = factor_size(&f, "F")?;
    let rho = noisy.rhs_noise().norm() / noisy.base.b.norm();
    let e2 = (1.0 + e1) * (rho + (1.0 + rho) * factor_size(&e, "E")?);
    Ok(MultiplicativeConstants { e1, e2 })
}

/// Multiplicative perturbation bound, horizon `e₁‖x_LS‖ + e₂‖A†‖‖b‖`;
/// needs `Ãx = b̃` consistent.
pub fn bound_multiplicative_perturb(
    sys: &LinearSystem,
    noisy: &NoisySystem,
    x0: &DenseVector,
    ks: &[usize],
) -> Result<BoundCurve> {
    noisy.expect_model(NoiseModel::Multiplicative)?;
    let consts = multiplicative_constants(noisy)?;
    let at = noisy_factors(noisy)?;
    let x_nls = at.pseudoinverse().matvec(&noisy.b_tilde)?;
    check_consistent(&noisy.a_tilde, &x_nls, &noisy.b_tilde, "consistency of Ãx = b̃")?;
    let pinv_norm = 1.0 / sys.factors.sigma_min();
    let horizon = consts.e1 * sys.x_ls.norm() + consts.e2 * pinv_norm * sys.b.norm();
    let r_tilde = at.scaled_condition();
    Ok(BoundCurve::new(
        BoundKind::MultiplicativePerturb,
        squared_rate(r_tilde).sqrt(),
        x0.sub(&x_nls).norm(),
        horizon,
        ks,
    )
    .with("r_tilde", r_tilde)
    .with("e1", consts.e1)
    .with("e2", consts.e2)
    .with("pinv_norm_a", pinv_norm)
    .with("b_norm", sys.b.norm()))
}

/// Evaluates any bound kind against a noisy instance. The noiseless and
/// right-hand-side-only bounds read the base system and `σ_B ε`.
pub fn evaluate(kind: BoundKind, noisy: &NoisySystem, x0: &DenseVector, ks: &[usize]) -> Result<BoundCurve> {
    let sys = &noisy.base;
    match kind {
        BoundKind::Strohmer => bound_noiseless(sys, x0, ks),
        BoundKind::ZouziasRhsNoise => bound_rhs_noise(sys, &noisy.rhs_noise(), x0, ks),
        BoundKind::PerturbDoubly => bound_perturb_doubly(sys, noisy, x0, ks),
        BoundKind::PerturbPartial => bound_perturb_partial(sys, noisy, x0, ks),
        BoundKind::MainAdditive => bound_main_additive(sys, noisy, x0, ks),
        BoundKind::MainMultiplicative => bound_main_multiplicative(sys, noisy, x0, ks),
        BoundKind::MultiplicativePerturb => bound_multiplicative_perturb(sys, noisy, x0, ks),
    }
}

/// [`evaluate`] averaged over per-trial start points.
pub fn evaluate_over_starts(
    kind: BoundKind,
    noisy: &NoisySystem,
    starts: &[DenseVector],
    ks: &[usize],
) -> Result<BoundCurve> {
    let curves = starts.iter().map(|x0| evaluate(kind, noisy, x0, ks)).collect::<Result<Vec<_>>>()?;
    BoundCurve::average(&curves)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonComparison {
    /// `2σ_min(Ã) > σ_min(A) − ‖E‖`.
    pub condition_holds: bool,
    /// Unsquared main horizon `‖E x_LS − ε‖/σ_min(Ã)`.
    pub main_horizon: f64,
    /// Horizon of the partially noisy bound.
    pub partial_horizon: f64,
    /// The two-step inequality chain holds (vacuously true when the condition fails).
    pub chain_verified: bool,
}

pub fn horizon_comparison(sys: &LinearSystem, noisy: &NoisySystem) -> Result<HorizonComparison> {
    noisy.expect_model(NoiseModel::PartialConsistent)?;
    let at = noisy_factors(noisy)?;
    let terms = perturbation_hypotheses(noisy, &at)?;
    let smin_a = sys.factors.sigma_min();
    let smin_t = at.sigma_min();
    let eps = noisy.rhs_noise();
    let x_norm = sys.x_ls.norm();
    let e_norm = terms.e_norm;

    let main_horizon = noisy.matrix_noise().matvec(&sys.x_ls)?.sub(&eps).norm() / smin_t;
    let partial_horizon = perturbation_bound(x_norm, &terms, 0.0) + eps.norm() / smin_t;
    let condition_holds = 2.0 * smin_t > smin_a - e_norm;

    let middle = e_norm * x_norm / smin_t + eps.norm() / smin_t;
    let right = 2.0 * e_norm * x_norm / (smin_a - e_norm) + eps.norm() / smin_t;
    let le = |a: f64, b: f64| a <= b + 1e-9 * b.abs().max(1.0);
    let chain_verified = !condition_holds || (le(main_horizon, middle) && le(middle, right));
    Ok(HorizonComparison { condition_holds, main_horizon, partial_horizon, chain_verified })
}

/// Smallest `min_i (‖E‖ − |σᵢ(A+E) − σᵢ(A)|)` over `i ≤ min(m, n)`, with
/// truncated singular values read as zero. Nonnegative up to rounding.
pub fn weyl_slack(a: &DenseMatrix, e: &DenseMatrix) -> Result<f64> {
    let k = a.rows().min(a.cols());
    let spectrum = |m: &DenseMatrix| -> Result<Vec<f64>> {
        let mut s = if m.is_zero() { Vec::new() } else { linalg::svd_with_tolerance(m, 0.0)?.sigma };
        s.resize(k, 0.0);
        Ok(s)
    };
    let sa = spectrum(a)?;
    let sae = spectrum(&a.add(e)?)?;
    let e_norm = spectral_or_zero(e)?;
    Ok(sa.iter().zip(&sae).map(|(x, y)| e_norm - (y - x).abs()).fold(f64::INFINITY, f64::min))
}

/// Smallest `K` with `(1 − 1/r)^K · init_sq_err ≤ tau − tau0`.
pub fn iterations_to_tolerance(r: f64, init_sq_err: f64, tau: f64, tau0: f64) -> Result<u64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("scaled condition must exceed 1, got {r}")));
    }
    if !(tau0 >= 0.0 && init_sq_err >= 0.0) {
        return Err(Error::InvalidArgument("tau0 and the initial error must be nonnegative".into()));
    }
    if tau <= tau0 {
        return Err(Error::Unreachable);
    }
    let gap = tau - tau0;
    if init_sq_err <= gap {
        return Ok(0);
    }
    let rate = squared_rate(r);
    let holds = |k: u64| rate.powf(k as f64) * init_sq_err <= gap;
    let mut k = ((gap / init_sq_err).ln() / rate.ln()).ceil().max(0.0) as u64;
    while !holds(k) {
        k += 1;
    }
    while k > 0 && holds(k - 1) {
        k -= 1;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        additive_noise, generate_system, multiplicative_noise, partial_consistent_noise,
        partial_consistent_noise_with_rhs, preconditioner_noise, Spacing, SpectrumSpec,
    };

    fn toy() -> LinearSystem {
        let a = DenseMatrix::from_diagonal(3, 3, &[3.0, 3.0, 1.0]).unwrap();
        LinearSystem::new(a, DenseVector::from(vec![0.0, 0.0, 1.0])).unwrap()
    }

    fn system(seed: u64) -> LinearSystem {
        generate_system(&SpectrumSpec::new(30, 10, 10, 1.0, 4.0, Spacing::Even), seed).unwrap()
    }

    #[test]
    fn noiseless_bound_basics() {
        let sys = LinearSystem::new(DenseMatrix::identity(4), DenseVector::from(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let x0 = DenseVector::zeros(4);
        let c = bound_noiseless(&sys, &x0, &[0, 1, 2]).unwrap();
        assert_eq!(c.values[0], 30.0);
        assert!((c.rate - 0.75).abs() < 1e-15);
        assert_eq!(c.horizon, 0.0);
        assert!(c.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rhs_noise_reduces_to_noiseless_and_identity_horizon() {
        let sys = LinearSystem::new(DenseMatrix::identity(3), DenseVector::from(vec![1.0, 0.0, 0.0])).unwrap();
        let x0 = DenseVector::zeros(3);
        let ks = [0, 5, 10];
        let a = bound_rhs_noise(&sys, &DenseVector::zeros(3), &x0, &ks).unwrap();
        let b = bound_noiseless(&sys, &x0, &ks).unwrap();
        assert_eq!(a.values, b.values);
        let c = bound_rhs_noise(&sys, &DenseVector::from(vec![0.0, 2.0, 0.0]), &x0, &ks).unwrap();
        assert!((c.horizon - 4.0).abs() < 1e-14);
    }

    #[test]
    fn main_additive_matches_rhs_bound_without_matrix_noise() {
        let sys = system(1);
        let noisy = additive_noise(&sys, 0.0, 0.3, 2).unwrap();
        let x0 = DenseVector::zeros(sys.cols());
        let ks: Vec<usize> = (0..200).step_by(7).collect();
        let main = bound_main_additive(&sys, &noisy, &x0, &ks).unwrap();
        let rhs = bound_rhs_noise(&sys, &noisy.rhs_noise(), &x0, &ks).unwrap();
        for (a, b) in main.values.iter().zip(&rhs.values) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let clean = bound_main_additive(&sys, &additive_noise(&sys, 0.0, 0.0, 2).unwrap(), &x0, &ks).unwrap();
        assert_eq!(clean.horizon, 0.0);
    }

    #[test]
    fn preconditioner_toy_horizon() {
        let sys = toy();
        let noisy = preconditioner_noise(&sys).unwrap();
        let c = bound_main_additive(&sys, &noisy, &DenseVector::zeros(3), &[0]).unwrap();
        assert!((c.horizon - 4.0 / 9.0).abs() < 1e-12);
        assert!((c.rate - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perturbation_distance_collapses() {
        let sys = system(3);
        let clean = additive_noise(&sys, 0.0, 0.0, 1).unwrap();
        assert_eq!(perturbed_ls_distance(&sys, &clean).unwrap().bound, 0.0);
        let rhs = additive_noise(&sys, 0.0, 0.5, 1).unwrap();
        let d = perturbed_ls_distance(&sys, &rhs).unwrap();
        let expected = rhs.rhs_noise().norm() / sys.factors.sigma_min();
        assert!((d.bound - expected).abs() <= 1e-12 * expected);
        assert!(d.observed <= d.bound);
    }

    #[test]
    fn perturbation_bound_dominates_true_distance() {
        for seed in 0..10 {
            let sys = system(seed);
            let noisy = partial_consistent_noise_with_rhs(&sys, 0.3, 0.05, seed + 100).unwrap();
            let d = perturbed_ls_distance(&sys, &noisy).unwrap();
            assert!(d.observed <= d.bound, "seed {seed}: {d:?}");
        }
    }

    #[test]
    fn perturbation_hypotheses_are_named() {
        let sys = system(4);
        let big = additive_noise(&sys, 5.0, 0.0, 1).unwrap();
        let err = perturbed_ls_distance(&sys, &big).unwrap_err();
        assert!(err.to_string().contains("‖A†‖‖E‖ < 1"), "{err}");
        let small = additive_noise(&sys, 1e-3, 0.1, 1).unwrap();
        let err = bound_perturb_doubly(&sys, &small, &DenseVector::zeros(sys.cols()), &[0]).unwrap_err();
        assert!(err.to_string().contains("consistency of Ãx = b̃"), "{err}");
        assert!(err.is_hypothesis());
    }

    #[test]
    fn perturb_doubly_on_partially_noisy_instance() {
        let sys = system(5);
        let noisy = partial_consistent_noise(&sys, 0.2, 9).unwrap();
        let c = bound_perturb_doubly(&sys, &noisy, &DenseVector::zeros(sys.cols()), &[0, 10]).unwrap();
        let e = linalg::spectral_norm(&noisy.e).unwrap();
        let q = e / sys.factors.sigma_min();
        let expected = 2.0 * sys.x_ls.norm() * q / (1.0 - q);
        assert!((c.horizon - expected).abs() <= 1e-9 * expected);
        assert!(!c.squared);

        let clean = additive_noise(&sys, 0.0, 0.0, 0).unwrap();
        let x0 = DenseVector::zeros(sys.cols());
        let d = bound_perturb_doubly(&sys, &clean, &x0, &[0, 3]).unwrap();
        let s = bound_noiseless(&sys, &x0, &[0, 3]).unwrap();
        for (u, v) in d.values.iter().zip(&s.values) {
            assert!((u - v.sqrt()).abs() <= 1e-12 * v.sqrt());
        }
    }

    #[test]
    fn perturb_partial_requires_model_and_drops_terms() {
        let sys = system(6);
        let x0 = DenseVector::zeros(sys.cols());
        let additive = additive_noise(&sys, 0.01, 0.0, 1).unwrap();
        assert!(matches!(bound_perturb_partial(&sys, &additive, &x0, &[0]), Err(Error::ModelMismatch { .. })));
        let noisy = partial_consistent_noise(&sys, 0.25, 3).unwrap();
        let c = bound_perturb_partial(&sys, &noisy, &x0, &[0]).unwrap();
        let q = linalg::spectral_norm(&noisy.e).unwrap() / sys.factors.sigma_min();
        let expected = 2.0 * sys.x_ls.norm() * q / (1.0 - q);
        assert!((c.horizon - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn multiplicative_bound_cases() {
        let sys = system(7);
        let x0 = DenseVector::zeros(sys.cols());
        let off = multiplicative_noise(&sys, 0.1, 0.0, false, false, 2).unwrap();
        assert_eq!(bound_main_multiplicative(&sys, &off, &x0, &[0]).unwrap().horizon, 0.0);
        let k = multiplicative_constants(&off).unwrap();
        assert_eq!((k.e1, k.e2), (0.0, 0.0));
        assert_eq!(bound_multiplicative_perturb(&sys, &off, &x0, &[0]).unwrap().horizon, 0.0);

        let left = multiplicative_noise(&sys, 0.01, 0.0, true, false, 2).unwrap();
        let k = multiplicative_constants(&left).unwrap();
        let e = left.e.scale(0.01);
        let inv = e.add_identity().unwrap().solve(&e).unwrap();
        let expected = (linalg::spectral_norm(&e).unwrap().powi(2) + linalg::spectral_norm(&inv).unwrap().powi(2)).sqrt();
        assert_eq!(k.e1, 0.0);
        assert!((k.e2 - expected).abs() <= 1e-12 * expected);

        let additive = additive_noise(&sys, 0.1, 0.0, 1).unwrap();
        assert!(bound_main_multiplicative(&sys, &additive, &x0, &[0]).is_err());
    }

    #[test]
    fn iteration_counts() {
        assert_eq!(iterations_to_tolerance(19.0, 1e6, 0.5, 0.0).unwrap(), 269);
        assert_eq!(iterations_to_tolerance(3.0, 1e6, 0.5, 4.0 / 9.0).unwrap(), 42);
        assert_eq!(iterations_to_tolerance(3.0, 0.5, 1.0, 0.5).unwrap(), 0);
        assert!(matches!(iterations_to_tolerance(3.0, 1e6, 0.5, 0.5), Err(Error::Unreachable)));
        assert!(iterations_to_tolerance(1.0, 1e6, 0.5, 0.0).is_err());
    }

    #[test]
    fn weyl_slack_on_small_pairs() {
        let a = DenseMatrix::from_diagonal(2, 2, &[3.0, 1.0]).unwrap();
        let e = DenseMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert!(weyl_slack(&a, &e).unwrap() >= -1e-12);
        assert!(weyl_slack(&a, &DenseMatrix::zeros(2, 2)).unwrap().abs() < 1e-15);
    }
}
