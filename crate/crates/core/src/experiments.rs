//! End-to-end experiment drivers: figure datasets, the noise sweep table
//! and the additive preconditioner demo. Everything is seeded and written
//! as CSV so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundCurve, BoundKind};
use crate::error::{Error, Result};
use crate::linalg::{self, io::fmt_f64};
use crate::problems::{
    additive_noise, generate_system, multiplicative_noise, partial_consistent_noise_with_rhs, preconditioner_noise,
    LinearSystem, NoiseModel, NoisySystem, Spacing, SpectrumSpec,
};
use crate::rk::{self, RkConfig, StartPoint, Trajectory};

/// The `(σ_A, σ_B)` grid of the published noise sweep.
pub const PUBLISHED_GRID: [(f64, f64); 10] = [
    (0.0, 0.0),
    (0.0, 1.0),
    (0.005, 0.005),
    (0.01, 0.01),
    (0.05, 0.05),
    (0.1, 0.1),
    (0.5, 0.5),
    (1.0, 1.0),
    (1.0, 0.0),
    (20.0, 20.0),
];

pub const FULL_SCALE_ITERATIONS: usize = 300_000;
pub const DEFAULT_ITERATION_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseConfig {
    Additive,
    Multiplicative {
        #[serde(default = "yes")]
        use_e: bool,
        #[serde(default = "yes")]
        use_f: bool,
    },
    /// Grid `σ_A` is the strength `‖A†‖‖E‖ ∈ (0, 1)`.
    PartialConsistent,
    /// The grid is ignored; the instance is fully determined by `A`.
    Preconditioner,
}

fn yes() -> bool {
    true
}

impl NoiseConfig {
    pub fn model(&self) -> NoiseModel {
        match self {
            NoiseConfig::Additive => NoiseModel::Additive,
            NoiseConfig::Multiplicative { .. } => NoiseModel::Multiplicative,
            NoiseConfig::PartialConsistent => NoiseModel::PartialConsistent,
            NoiseConfig::Preconditioner => NoiseModel::Preconditioner,
        }
    }

    pub fn build(&self, sys: &LinearSystem, sigma_a: f64, sigma_b: f64, seed: u64) -> Result<NoisySystem> {
        match *self {
            NoiseConfig::Additive => additive_noise(sys, sigma_a, sigma_b, seed),
            NoiseConfig::Multiplicative { use_e, use_f } => {
                multiplicative_noise(sys, sigma_a, sigma_b, use_e, use_f, seed)
            }
            NoiseConfig::PartialConsistent => partial_consistent_noise_with_rhs(sys, sigma_a, sigma_b, seed),
            NoiseConfig::Preconditioner => preconditioner_noise(sys),
        }
    }

    fn supports(&self, kind: BoundKind) -> bool {
        match kind {
            BoundKind::MainMultiplicative | BoundKind::MultiplicativePerturb => {
                matches!(self, NoiseConfig::Multiplicative { .. })
            }
            BoundKind::PerturbPartial => matches!(self, NoiseConfig::PartialConsistent),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RkSettings {
    /// `None` chooses the iteration count from `R̃` so the geometric term decays.
    pub max_iterations: Option<usize>,
    pub record_stride: Option<usize>,
    pub trials: usize,
    pub x0: StartPoint,
    pub iteration_cap: usize,
}

impl Default for RkSettings {
    fn default() -> Self {
        Self { max_iterations: None, record_stride: None, trials: 10, x0: StartPoint::default(), iteration_cap: DEFAULT_ITERATION_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub spectrum: SpectrumSpec,
    pub noise: NoiseConfig,
    pub noise_grid: Vec<(f64, f64)>,
    pub rk: RkSettings,
    pub bounds: Vec<BoundKind>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Target squared error for the preconditioner demo.
    pub tau: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSpec::new(200, 100, 100, 5.0, 50.0, Spacing::Even),
            noise: NoiseConfig::Additive,
            noise_grid: vec![(0.0, 0.0)],
            rk: RkSettings::default(),
            bounds: vec![BoundKind::MainAdditive],
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            tau: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.spectrum.validate()?;
        if self.noise_grid.is_empty() {
            return Err(Error::InvalidArgument("noise grid is empty".into()));
        }
        if self.rk.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        for &kind in &self.bounds {
            if !self.noise.supports(kind) {
                return Err(Error::ModelMismatch { expected: format!("a model supporting {}", kind.name()), got: self.noise.model().to_string() });
            }
        }
        Ok(())
    }

    /// Paper scale swaps in the published dimensions, iteration count and trial count.
    pub fn apply_scale(&mut self, scale: Scale) {
        if scale == Scale::Paper {
            self.spectrum.m = 500;
            self.spectrum.n = 300;
            self.spectrum.r = 300;
            self.rk.max_iterations = Some(FULL_SCALE_ITERATIONS);
            self.rk.trials = 10;
        }
    }

    pub fn grid(&self) -> Vec<(f64, f64)> {
        if self.noise == NoiseConfig::Preconditioner {
            vec![(0.0, 0.0)]
        } else {
            self.noise_grid.clone()
        }
    }

    pub fn base_system(&self) -> Result<LinearSystem> {
        generate_system(&self.spectrum, self.master_seed)
    }

    pub fn noisy_system(&self, sys: &LinearSystem, sigma_a: f64, sigma_b: f64) -> Result<NoisySystem> {
        self.noise.build(sys, sigma_a, sigma_b, self.master_seed)
    }

    /// The RK configuration for one noisy instance.
    pub fn rk_config(&self, noisy: &NoisySystem) -> Result<RkConfig> {
        let mut cfg = RkConfig::new(1, self.rk.trials, self.master_seed).with_start(self.rk.x0.clone());
        cfg.record_stride = self.rk.record_stride;
        cfg.max_iterations = match self.rk.max_iterations {
            Some(k) => k,
            None => {
                let starts = cfg.start_points(noisy)?;
                let mut k = 1;
                for x0 in &starts {
                    let main = bounds::bound_main_additive(&noisy.base, noisy, x0, &[0])?;
                    let r_tilde = main.scalars["r_tilde"];
                    k = k.max(adaptive_iterations(r_tilde, main.initial_error, main.horizon, self.rk.iteration_cap));
                }
                k
            }
        };
        Ok(cfg)
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self,
            "seeds": {
                "system": self.master_seed,
                "noise": self.master_seed,
                "rk": self.master_seed,
            },
            "library_version": env!("CARGO_PKG_VERSION"),
        })
    }
}

/// Iterations until `(1 − 1/R̃)^K · init` falls below `1e-4 · horizon`, or
/// below `1e-12` for a zero horizon, clamped to `[1, cap]`.
pub fn adaptive_iterations(r_tilde: f64, init: f64, horizon: f64, cap: usize) -> usize {
    let target = if horizon > 0.0 { 1e-4 * horizon } else { 1e-12 };
    if init <= target || r_tilde <= 1.0 {
        return 1;
    }
    let k = (target / init).ln() / (1.0 - 1.0 / r_tilde).ln();
    (k.ceil() as usize).clamp(1, cap)
}

pub fn grid_label(sigma_a: f64, sigma_b: f64) -> String {
    format!("{sigma_a}_{sigma_b}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPointResult {
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub trajectory: Trajectory,
    pub bounds: Vec<BoundCurve>,
    /// Bounds whose hypotheses failed on this instance.
    pub errors: Vec<(BoundKind, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureDataset {
    pub points: Vec<GridPointResult>,
}

/// Runs every grid point, evaluates the requested bounds at the recorded
/// iterations and writes trajectory, band and bound files under `output_dir`.
pub fn run_figure_experiment(cfg: &ExperimentConfig) -> Result<FigureDataset> {
    cfg.validate()?;
    let sys = cfg.base_system()?;
    let mut points = Vec::new();
    for (sa, sb) in cfg.grid() {
        let noisy = cfg.noisy_system(&sys, sa, sb)?;
        let rk_cfg = cfg.rk_config(&noisy)?;
        let traj = rk::solve(&noisy, &rk_cfg)?;
        let mut curves = Vec::new();
        let mut errors = Vec::new();
        for &kind in &cfg.bounds {
            match bounds::evaluate_over_starts(kind, &noisy, &traj.starts, &traj.recorded_iterations) {
                Ok(c) => curves.push(c),
                Err(e) => {
                    log::warn!("({sa}, {sb}) {}: {e}", kind.name());
                    errors.push((kind, e.to_string()));
                }
            }
        }
        points.push(GridPointResult { sigma_a: sa, sigma_b: sb, trajectory: traj, bounds: curves, errors });
    }
    let dataset = FigureDataset { points };
    write_figure_dataset(cfg, &dataset)?;
    Ok(dataset)
}

fn write_figure_dataset(cfg: &ExperimentConfig, data: &FigureDataset) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&cfg.metadata())?)?;
    let mut summary = Vec::new();
    for p in &data.points {
        let label = grid_label(p.sigma_a, p.sigma_b);
        fs::write(dir.join(format!("traj_{label}.csv")), p.trajectory.to_csv())?;
        fs::write(dir.join(format!("band_{label}.csv")), p.trajectory.band_csv())?;
        let mut domination = serde_json::Map::new();
        for c in &p.bounds {
            c.write(dir, &format!("bound_{}_{label}", c.kind.name()))?;
            domination.insert(c.kind.name().into(), c.domination_fraction(&p.trajectory).into());
        }
        let errors: serde_json::Map<String, serde_json::Value> =
            p.errors.iter().map(|(k, e)| (k.name().to_string(), e.clone().into())).collect();
        summary.push(serde_json::json!({
            "sigma_a": p.sigma_a,
            "sigma_b": p.sigma_b,
            "iterations": p.trajectory.recorded_iterations.last(),
            "final_mean_sq_err": rk::empirical_horizon(&p.trajectory),
            "domination_fraction": domination,
            "bound_errors": errors,
        }));
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `σ₁(Ã)/σ_min(Ã)`.
    pub kappa_a_tilde: f64,
    pub r_tilde: f64,
    pub theoretical_horizon: f64,
    pub empirical_horizon: f64,
    pub iterations: usize,
}

/// Noise sweep on the additive model. An empty grid in the config means the
/// published grid.
pub fn run_table2(cfg: &ExperimentConfig) -> Result<Vec<Table2Row>> {
    if cfg.noise != NoiseConfig::Additive {
        return Err(Error::ModelMismatch { expected: "additive".into(), got: cfg.noise.model().to_string() });
    }
    cfg.spectrum.validate()?;
    let grid: Vec<(f64, f64)> =
        if cfg.noise_grid.is_empty() { PUBLISHED_GRID.to_vec() } else { cfg.noise_grid.clone() };
    let sys = cfg.base_system()?;
    let mut rows = Vec::new();
    for (sa, sb) in grid {
        let noisy = cfg.noisy_system(&sys, sa, sb)?;
        let factors = linalg::svd(&noisy.a_tilde)?;
        let rk_cfg = cfg.rk_config(&noisy)?;
        let traj = rk::solve(&noisy, &rk_cfg)?;
        let main = bounds::evaluate_over_starts(BoundKind::MainAdditive, &noisy, &traj.starts, &[0])?;
        let row = Table2Row {
            sigma_a: sa,
            sigma_b: sb,
            kappa_a_tilde: factors.condition_number(),
            r_tilde: factors.scaled_condition(),
            theoretical_horizon: main.horizon,
            empirical_horizon: rk::empirical_horizon(&traj),
            iterations: rk_cfg.max_iterations,
        };
        // absolute floor so roundoff at zero noise does not warn
        if row.empirical_horizon > row.theoretical_horizon * (1.0 + 1e-9) + 1e-10 {
            log::warn!(
                "({sa}, {sb}): empirical horizon {:.6e} exceeds theoretical {:.6e}",
                row.empirical_horizon,
                row.theoretical_horizon
            );
        }
        rows.push(row);
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&cfg.metadata())?)?;
    fs::write(dir.join("table2.csv"), table2_csv(&rows))?;
    Ok(rows)
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut s = String::from("sigma_a,sigma_b,kappa,r_tilde,theo_horizon,emp_horizon\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sigma_a,
            r.sigma_b,
            fmt_f64(r.kappa_a_tilde),
            fmt_f64(r.r_tilde),
            fmt_f64(r.theoretical_horizon),
            fmt_f64(r.empirical_horizon)
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerDemo {
    pub r: f64,
    pub r_tilde: f64,
    /// Mean over trials of `‖x₀ − x_LS‖²`.
    pub initial_error: f64,
    /// Squared horizon of the lifted system.
    pub tau0: f64,
    pub k_noiseless: u64,
    /// `None` when `tau` lies below the lifted system's horizon.
    pub k_noisy: Option<u64>,
    pub traj_noiseless: Trajectory,
    pub traj_noisy: Trajectory,
}

/// Runs RK on `A x = b` and on the lifted `Ã x = b` from the same start and
/// predicts the iteration counts needed to reach `tau`.
pub fn run_preconditioner_demo(spec: &SpectrumSpec, tau: f64, settings: &RkSettings, seed: u64) -> Result<PreconditionerDemo> {
    let sys = generate_system(spec, seed)?;
    let noisy = preconditioner_noise(&sys)?;
    let clean = NoisySystem::noiseless(sys.clone());

    let mut cfg = RkConfig::new(settings.max_iterations.unwrap_or(10_000), settings.trials, seed)
        .with_start(settings.x0.clone());
    cfg.record_stride = settings.record_stride;
    // both runs start from the lifted system's draws
    let starts = cfg.start_points(&noisy)?;

    let r = sys.scaled_condition();
    let main = bounds::evaluate_over_starts(BoundKind::MainAdditive, &noisy, &starts, &[0])?;
    let r_tilde = main.scalars["r_tilde"];
    let init = main.initial_error;
    let k_noiseless = bounds::iterations_to_tolerance(r, init, tau, 0.0)?;
    let k_noisy = match bounds::iterations_to_tolerance(r_tilde, init, tau, main.horizon) {
        Ok(k) => Some(k),
        Err(Error::Unreachable) => None,
        Err(e) => return Err(e),
    };
    Ok(PreconditionerDemo {
        r,
        r_tilde,
        initial_error: init,
        tau0: main.horizon,
        k_noiseless,
        k_noisy,
        traj_noiseless: rk::solve_from(&clean, &cfg, starts.clone())?,
        traj_noisy: rk::solve_from(&noisy, &cfg, starts)?,
    })
}

pub fn write_preconditioner_demo(dir: impl AsRef<Path>, demo: &PreconditionerDemo, meta: serde_json::Value) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    fs::write(dir.join("traj_noiseless.csv"), demo.traj_noiseless.to_csv())?;
    fs::write(dir.join("traj_noisy.csv"), demo.traj_noisy.to_csv())?;
    fs::write(dir.join("band_noiseless.csv"), demo.traj_noiseless.band_csv())?;
    fs::write(dir.join("band_noisy.csv"), demo.traj_noisy.band_csv())?;
    let summary = serde_json::json!({
        "r": demo.r,
        "r_tilde": demo.r_tilde,
        "initial_error": demo.initial_error,
        "tau0": demo.tau0,
        "k_noiseless": demo.k_noiseless,
        "k_noisy": demo.k_noisy,
    });
    fs::write(dir.join("precondition.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"noise": {"model": "multiplicative", "use_e": false}}"#).unwrap();
        assert_eq!(cfg.noise, NoiseConfig::Multiplicative { use_e: false, use_f: true });
        assert_eq!(cfg.spectrum.m, 200);
        assert_eq!(cfg.rk.trials, 10);
        cfg.validate().unwrap();

        let mut bad = cfg.clone();
        bad.bounds = vec![BoundKind::PerturbPartial];
        assert!(matches!(bad.validate(), Err(Error::ModelMismatch { .. })));

        let mut ok = cfg.clone();
        ok.bounds = vec![BoundKind::MainMultiplicative];
        ok.validate().unwrap();
        ok.noise_grid.clear();
        assert!(ok.validate().is_err());
    }

    #[test]
    fn full_scale_overrides_dimensions() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_scale(Scale::Paper);
        assert_eq!((cfg.spectrum.m, cfg.spectrum.n, cfg.spectrum.r), (500, 300, 300));
        assert_eq!(cfg.rk.max_iterations, Some(FULL_SCALE_ITERATIONS));
    }

    #[test]
    fn adaptive_iteration_counts() {
        assert_eq!(adaptive_iterations(10.0, 1e-13, 0.0, 100), 1);
        let k = adaptive_iterations(10.0, 1.0, 0.0, 10_000);
        assert!(0.9f64.powf(k as f64) <= 1e-12 && 0.9f64.powf(k as f64 - 1.0) > 1e-12);
        assert_eq!(adaptive_iterations(1e6, 1.0, 0.0, 50), 50);
    }

    #[test]
    fn labels_are_stable() {
        assert_eq!(grid_label(0.005, 0.0), "0.005_0");
        assert_eq!(grid_label(20.0, 1.0), "20_1");
    }
}
