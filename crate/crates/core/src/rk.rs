//! The randomized Kaczmarz iteration with squared-row-norm sampling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, io::fmt_f64, DenseMatrix, DenseVector};
use crate::problems::NoisySystem;
use crate::rng::{gaussian_vector, stream_rng, Stream};

/// Upper bound on recorded points per run when the stride is chosen automatically.
pub const MAX_RECORDS: usize = 2000;

/// Projects `x` onto the hyperplane `rowᵀx = rhs`.
pub fn rk_step(x: &DenseVector, row: &[f64], rhs: f64) -> Result<DenseVector> {
    let mut out = x.clone();
    rk_step_in_place(out.as_mut_slice(), row, rhs)?;
    Ok(out)
}

pub fn rk_step_in_place(x: &mut [f64], row: &[f64], rhs: f64) -> Result<()> {
    let nrm2 = dot(row, row);
    if nrm2 == 0.0 {
        return Err(Error::InvalidArgument("Kaczmarz step on a zero row".into()));
    }
    let c = (dot(row, x) - rhs) / nrm2;
    axpy(-c, row, x);
    Ok(())
}

/// Draws row indices with probability `‖ãᵢ‖² / ‖Ã‖_F²`, with replacement,
/// by inverse CDF over prefix sums. Zero rows are never drawn.
#[derive(Debug, Clone)]
pub struct RowSampler {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RowSampler {
    pub fn new(a: &DenseMatrix, rng: ChaCha8Rng) -> Result<Self> {
        Self::from_weights(a.row_norms_squared(), rng)
    }

    pub fn from_weights(weights: Vec<f64>, rng: ChaCha8Rng) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("sampling weights must be finite and nonnegative".into()));
        }
        let cumulative: Vec<f64> = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        if cumulative.last().is_none_or(|&t| t <= 0.0) {
            return Err(Error::ZeroMatrix);
        }
        Ok(Self { weights, cumulative, rng })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total();
        self.weights.iter().map(|w| w / total).collect()
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn sample(&mut self) -> usize {
        let u = self.rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        // u < total always, but guard against rounding in the last prefix sum
        i.min(self.last_supported())
    }

    fn last_supported(&self) -> usize {
        self.weights.iter().rposition(|&w| w > 0.0).expect("nonzero total")
    }
}

impl Iterator for RowSampler {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(self.sample())
    }
}

pub fn make_sampler(a_tilde: &DenseMatrix, seed: u64) -> Result<RowSampler> {
    RowSampler::new(a_tilde, stream_rng(seed, Stream::Sampler(0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    Zero,
    /// `x₀ = Ãᵀy` with standard normal `y` drawn per trial. A trial's `y` does
    /// not depend on the noise level, so grid points share their start draws.
    #[default]
    RangeOfATildeT,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkConfig {
    pub max_iterations: usize,
    /// `None` picks a stride giving at most [`MAX_RECORDS`] records.
    #[serde(default)]
    pub record_stride: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub x0: StartPoint,
}

impl RkConfig {
    pub fn new(max_iterations: usize, trials: usize, seed: u64) -> Self {
        Self { max_iterations, record_stride: None, trials, seed, x0: StartPoint::default() }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = Some(stride);
        self
    }

    pub fn with_start(mut self, x0: StartPoint) -> Self {
        self.x0 = x0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.record_stride == Some(0) {
            return Err(Error::InvalidArgument("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.record_stride
            .unwrap_or_else(|| self.max_iterations.div_ceil(MAX_RECORDS - 2).max(1))
    }

    /// Iteration indices at which errors are recorded: 0, every stride, and the last.
    pub fn recorded_iterations(&self) -> Vec<usize> {
        let stride = self.stride();
        let mut ks: Vec<usize> = (0..=self.max_iterations).step_by(stride).collect();
        if ks.last() != Some(&self.max_iterations) {
            ks.push(self.max_iterations);
        }
        ks
    }

    pub fn start_point(&self, noisy: &NoisySystem, trial: usize) -> Result<DenseVector> {
        let n = noisy.a_tilde.cols();
        match &self.x0 {
            StartPoint::Zero => Ok(DenseVector::zeros(n)),
            StartPoint::RangeOfATildeT => {
                let mut rng = stream_rng(self.seed, Stream::StartPoint(trial as u32));
                let y = gaussian_vector(&mut rng, noisy.a_tilde.rows());
                noisy.a_tilde.tr_matvec(&y)
            }
            StartPoint::Given(v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!("x0 has {} entries, expected {n}", v.len())));
                }
                DenseVector::new(v.clone())
            }
        }
    }

    pub fn start_points(&self, noisy: &NoisySystem) -> Result<Vec<DenseVector>> {
        (0..self.trials).map(|t| self.start_point(noisy, t)).collect()
    }
}

/// Squared errors `‖x_k − x_LS‖²` recorded across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub recorded_iterations: Vec<usize>,
    /// trials × records.
    pub per_trial_squared_error: Vec<Vec<f64>>,
    pub mean_squared_error: Vec<f64>,
    /// Population standard deviation across trials.
    pub std_squared_error: Vec<f64>,
    /// Start point of each trial.
    pub starts: Vec<DenseVector>,
}

impl Trajectory {
    pub fn from_trials(recorded_iterations: Vec<usize>, per_trial: Vec<Vec<f64>>, starts: Vec<DenseVector>) -> Self {
        let (mean, std) = mean_std(&per_trial, |v| v);
        Self {
            recorded_iterations,
            per_trial_squared_error: per_trial,
            mean_squared_error: mean,
            std_squared_error: std,
            starts,
        }
    }

    pub fn trials(&self) -> usize {
        self.per_trial_squared_error.len()
    }

    /// Mean and population std of the unsquared error `‖x_k − x_LS‖`.
    pub fn error_mean_std(&self) -> (Vec<f64>, Vec<f64>) {
        mean_std(&self.per_trial_squared_error, f64::sqrt)
    }

    /// Mean squared error at the record closest to (not after) iteration `k`.
    pub fn mean_at(&self, k: usize) -> Option<f64> {
        let j = self.recorded_iterations.partition_point(|&it| it <= k).checked_sub(1)?;
        Some(self.mean_squared_error[j])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,mean_sq_err,std_sq_err");
        for t in 0..self.trials() {
            let _ = write!(s, ",trial_{t}");
        }
        s.push('\n');
        for (j, k) in self.recorded_iterations.iter().enumerate() {
            let _ = write!(s, "{k},{},{}", fmt_f64(self.mean_squared_error[j]), fmt_f64(self.std_squared_error[j]));
            for trial in &self.per_trial_squared_error {
                let _ = write!(s, ",{}", fmt_f64(trial[j]));
            }
            s.push('\n');
        }
        s
    }

    /// `μ ± 0.5σ` bands for the squared and unsquared error.
    pub fn band_csv(&self) -> String {
        let (em, es) = self.error_mean_std();
        let mut s = String::from("iteration,mean_sq_err,sq_lower,sq_upper,mean_err,err_lower,err_upper\n");
        for (j, k) in self.recorded_iterations.iter().enumerate() {
            let (m, sd) = (self.mean_squared_error[j], self.std_squared_error[j]);
            let _ = writeln!(
                s,
                "{k},{},{},{},{},{},{}",
                fmt_f64(m),
                fmt_f64(m - 0.5 * sd),
                fmt_f64(m + 0.5 * sd),
                fmt_f64(em[j]),
                fmt_f64(em[j] - 0.5 * es[j]),
                fmt_f64(em[j] + 0.5 * es[j])
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn mean_std(per_trial: &[Vec<f64>], f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let t = per_trial.len() as f64;
    let records = per_trial.first().map_or(0, Vec::len);
    (0..records)
        .map(|j| {
            let mean = per_trial.iter().map(|row| f(row[j])).sum::<f64>() / t;
            let var = per_trial.iter().map(|row| (f(row[j]) - mean).powi(2)).sum::<f64>() / t;
            (mean, var.sqrt())
        })
        .unzip()
}

/// Runs `cfg.trials` independent RK runs on `Ã x ≈ b̃`, measuring error
/// against the noiseless `x_LS`. Trial `t` samples from its own stream, so
/// results do not depend on thread scheduling.
pub fn solve(noisy: &NoisySystem, cfg: &RkConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let starts = cfg.start_points(noisy)?;
    solve_from(noisy, cfg, starts)
}

/// Like [`solve`] with explicit per-trial start points, ignoring `cfg.x0`.
pub fn solve_from(noisy: &NoisySystem, cfg: &RkConfig, starts: Vec<DenseVector>) -> Result<Trajectory> {
    cfg.validate()?;
    if starts.len() != cfg.trials {
        return Err(Error::Dimension(format!("{} start points for {} trials", starts.len(), cfg.trials)));
    }
    if let Some(x0) = starts.iter().find(|x0| x0.dim() != noisy.a_tilde.cols()) {
        return Err(Error::Dimension(format!("x0 has {} entries, expected {}", x0.dim(), noisy.a_tilde.cols())));
    }
    let ks = cfg.recorded_iterations();
    let a = &noisy.a_tilde;
    let b = &noisy.b_tilde;
    let x_ls = &noisy.base.x_ls;
    // fail early on a zero matrix rather than inside the workers
    RowSampler::new(a, stream_rng(cfg.seed, Stream::Sampler(0)))?;

    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut sampler = RowSampler::new(a, stream_rng(cfg.seed, Stream::Sampler(t as u32)))?;
            let mut x = starts[t].clone();
            let mut errs = Vec::with_capacity(ks.len());
            let mut next = 0;
            for k in 0..=cfg.max_iterations {
                if ks[next] == k {
                    errs.push(x.distance_squared(x_ls));
                    next += 1;
                    if next == ks.len() {
                        break;
                    }
                }
                let i = sampler.sample();
                rk_step_in_place(x.as_mut_slice(), a.row(i), b[i])?;
            }
            Ok(errs)
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory::from_trials(ks, per_trial, starts))
}

/// Mean squared error at the final record; once the geometric term has
/// decayed this is the empirical convergence horizon.
pub fn empirical_horizon(traj: &Trajectory) -> f64 {
    *traj.mean_squared_error.last().expect("trajectory has records")
}
