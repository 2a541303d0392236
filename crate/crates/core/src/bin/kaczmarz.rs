use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kaczmarz::bounds::{self, BoundKind};
use kaczmarz::experiments::{self, ExperimentConfig, Scale};
use kaczmarz::problems::{Spacing, SpectrumSpec};
use kaczmarz::rk;
use kaczmarz::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "kaczmarz", version, about = "Randomized Kaczmarz on doubly-noisy linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a system and its noisy counterpart.
    Gen(PointArgs),
    /// Run RK on one grid point and write the trajectory.
    Solve(PointArgs),
    /// Evaluate bound curves on one grid point.
    Bounds {
        #[command(flatten)]
        point: PointArgs,
        /// Bound to evaluate; repeatable. Defaults to the config's list.
        #[arg(long = "kind", value_enum)]
        kinds: Vec<KindArg>,
    },
    /// Noise sweep on the additive model.
    Table2 {
        #[command(flatten)]
        common: CommonArgs,
        /// Use the grid from the config instead of the published one.
        #[arg(long)]
        config_grid: bool,
    },
    /// Trajectories and bounds over the config's noise grid.
    Figure(CommonArgs),
    /// Compare RK on a system and its rank-one lifted counterpart.
    Precondition {
        #[command(flatten)]
        common: CommonArgs,
        /// Target squared error.
        #[arg(long)]
        tau: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
    /// Worker threads for parallel trials.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Defaults to the first grid point of the config.
    #[arg(long)]
    sigma_a: Option<f64>,
    #[arg(long)]
    sigma_b: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Strohmer,
    ZouziasRhsNoise,
    PerturbDoubly,
    PerturbPartial,
    MainAdditive,
    MainMultiplicative,
    MultiplicativePerturb,
}

impl From<KindArg> for BoundKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Strohmer => BoundKind::Strohmer,
            KindArg::ZouziasRhsNoise => BoundKind::ZouziasRhsNoise,
            KindArg::PerturbDoubly => BoundKind::PerturbDoubly,
            KindArg::PerturbPartial => BoundKind::PerturbPartial,
            KindArg::MainAdditive => BoundKind::MainAdditive,
            KindArg::MainMultiplicative => BoundKind::MainMultiplicative,
            KindArg::MultiplicativePerturb => BoundKind::MultiplicativePerturb,
        }
    }
}

impl CommonArgs {
    fn load(&self, fallback: impl FnOnce() -> ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => fallback(),
        };
        cfg.apply_scale(match self.scale {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        });
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(t) = self.trials {
            cfg.rk.trials = t;
        }
        if let Some(k) = self.iterations {
            cfg.rk.max_iterations = Some(k);
        }
        if let Some(threads) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        Ok(cfg)
    }
}

impl PointArgs {
    fn load(&self) -> Result<(ExperimentConfig, f64, f64)> {
        let cfg = self.common.load(ExperimentConfig::default)?;
        cfg.validate()?;
        let (ga, gb) = cfg.grid()[0];
        Ok((cfg.clone(), self.sigma_a.unwrap_or(ga), self.sigma_b.unwrap_or(gb)))
    }
}

fn preconditioner_default() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        spectrum: SpectrumSpec::new(100, 50, 50, 1.0, 4.0, Spacing::TwoLevel),
        ..Default::default()
    };
    cfg.rk.max_iterations = Some(10_000);
    cfg
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen(point) => {
            let (cfg, sa, sb) = point.load()?;
            let sys = cfg.base_system()?;
            let noisy = cfg.noisy_system(&sys, sa, sb)?;
            let mut meta = cfg.metadata();
            meta["sigma_a"] = sa.into();
            meta["sigma_b"] = sb.into();
            noisy.write_dir(&cfg.output_dir, &meta)?;
            log::info!("wrote system to {}", cfg.output_dir.display());
        }
        Command::Solve(point) => {
            let (cfg, sa, sb) = point.load()?;
            let sys = cfg.base_system()?;
            let noisy = cfg.noisy_system(&sys, sa, sb)?;
            let rk_cfg = cfg.rk_config(&noisy)?;
            let traj = rk::solve(&noisy, &rk_cfg)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            std::fs::write(cfg.output_dir.join("traj.csv"), traj.to_csv())?;
            std::fs::write(cfg.output_dir.join("band.csv"), traj.band_csv())?;
            std::fs::write(cfg.output_dir.join("meta.json"), serde_json::to_string_pretty(&cfg.metadata())?)?;
            print_json(&serde_json::json!({
                "sigma_a": sa,
                "sigma_b": sb,
                "iterations": rk_cfg.max_iterations,
                "final_mean_sq_err": rk::empirical_horizon(&traj),
            }))?;
        }
        Command::Bounds { point, kinds } => {
            let (mut cfg, sa, sb) = point.load()?;
            if !kinds.is_empty() {
                cfg.bounds = kinds.into_iter().map(BoundKind::from).collect();
                cfg.validate()?;
            }
            let sys = cfg.base_system()?;
            let noisy = cfg.noisy_system(&sys, sa, sb)?;
            let rk_cfg = cfg.rk_config(&noisy)?;
            let starts = rk_cfg.start_points(&noisy)?;
            let ks = rk_cfg.recorded_iterations();
            std::fs::create_dir_all(&cfg.output_dir)?;
            let mut out = serde_json::Map::new();
            for kind in &cfg.bounds {
                let curve = bounds::evaluate_over_starts(*kind, &noisy, &starts, &ks)?;
                curve.write(&cfg.output_dir, &format!("bound_{}", kind.name()))?;
                out.insert(kind.name().into(), curve.metadata());
            }
            print_json(&out.into())?;
        }
        Command::Table2 { common, config_grid } => {
            let mut cfg = common.load(ExperimentConfig::default)?;
            if !config_grid {
                cfg.noise_grid.clear();
            }
            let rows = experiments::run_table2(&cfg)?;
            print!("{}", experiments::table2_csv(&rows));
        }
        Command::Figure(common) => {
            let cfg = common.load(ExperimentConfig::default)?;
            let data = experiments::run_figure_experiment(&cfg)?;
            log::info!("wrote {} grid points to {}", data.points.len(), cfg.output_dir.display());
        }
        Command::Precondition { common, tau } => {
            let mut cfg = common.load(preconditioner_default)?;
            if let Some(t) = tau {
                cfg.tau = t;
            }
            cfg.spectrum.validate()?;
            let demo = experiments::run_preconditioner_demo(&cfg.spectrum, cfg.tau, &cfg.rk, cfg.master_seed)?;
            experiments::write_preconditioner_demo(&cfg.output_dir, &demo, cfg.metadata())?;
            print_json(&serde_json::json!({
                "r": demo.r,
                "r_tilde": demo.r_tilde,
                "tau": cfg.tau,
                "tau0": demo.tau0,
                "k_noiseless": demo.k_noiseless,
                "k_noisy": demo.k_noisy,
            }))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_hypothesis() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
