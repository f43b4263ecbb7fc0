use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tvtomo::analysis::{diagnose, DiagnoseOptions, DEFAULT_SPARK_BUDGET};
use tvtomo::bounds::{kappa_empirical, kappa_upper, validity_threshold, BoundReport};
use tvtomo::geometry::{perturb, Perturbation, ProjectionGeometry};
use tvtomo::harness::{emit, run_plan, ExperimentPlan, THREADS_ENV};
use tvtomo::lpsolve::LpOptions;
use tvtomo::phantom::{generate, read_image, shepp_logan_like, write_image, PhantomSpec, HEAD_LAYER_COUNT};
use tvtomo::recovery::{recover, Mode, RecoveryProblem};
use tvtomo::{mtx, Lattice};

#[derive(Parser)]
#[command(name = "tvtomo", version, about = "Total-variation recovery from few tomographic projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a projection matrix and write it in Matrix Market format.
    BuildMatrix {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        dirs: usize,
        /// Randomize the nonzeros, e.g. `interval:0.9,1.1` or `epsilon:0.05`.
        #[arg(long)]
        perturb: Option<Perturbation>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank, spark and nullspace diagnostics of a matrix, as JSON.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SPARK_BUDGET)]
        spark_budget: u128,
        #[arg(long, default_value_t = 40)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Side length of the image grid the columns belong to; enables the
        /// local nullvector search.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 2, requires = "grid")]
        grid_dim: usize,
    },
    /// Cosparsity bounds for a `d`-sided grid.
    Bounds {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        d: usize,
        /// Cosparsity; required unless `--empirical` is given.
        #[arg(long, required_unless_present = "empirical")]
        ell: Option<usize>,
        /// Report the measurement count for a known cosupport.
        #[arg(long)]
        known: bool,
        /// Emit a CSV of (ℓ, mean subspace dimension, bound) over random cosupports.
        #[arg(long)]
        empirical: bool,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Spacing of the ℓ values in the empirical table.
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a random piecewise-constant phantom.
    Phantom {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        d: usize,
        /// Target gradient sparsity `k/n`.
        #[arg(long, required_unless_present = "head")]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Paint the layered head phantom instead of random ellipses.
        #[arg(long)]
        head: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover an image from its projections and grade the result, as JSON.
    Recover {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        known_cosupport: bool,
        #[arg(long, value_enum, default_value_t = RecoverMode::Tv)]
        mode: RecoverMode,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run a phase-transition plan and write `<out>.csv`, `<out>.svg` and `<out>.json`.
    PhaseTransition {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RecoverMode {
    Tv,
    L1,
    L1Nonneg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::BuildMatrix { dim, d, dirs, perturb: scheme, seed, out } => {
            let mut a = ProjectionGeometry::new(dim, d, dirs)?.build();
            if let Some(scheme) = scheme {
                a = perturb(&a, seed, scheme)?;
            }
            mtx::write_file(&out, &a).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} x {} matrix, {} nonzeros -> {}", a.nrows(), a.ncols(), a.nnz(), out.display());
        }
        Command::Analyze { matrix, spark_budget, trials, seed, grid, grid_dim } => {
            let a = mtx::read_file(&matrix).with_context(|| format!("reading {}", matrix.display()))?;
            let lattice = grid.map(|d| Lattice::cube(grid_dim, d)).transpose()?;
            let opts = DiagnoseOptions {
                spark_budget,
                trials,
                seed,
                lattice,
                ..DiagnoseOptions::default()
            };
            print_json(&diagnose(&a, &opts)?)?;
        }
        Command::Bounds { dim, d, ell, known, empirical, trials, step, seed } => {
            let lattice = Lattice::cube(dim, d)?;
            if empirical {
                if step == 0 {
                    bail!("--step must be positive");
                }
                let lo = validity_threshold(dim)?.floor() as usize + 1;
                let mut out = csv::Writer::from_writer(io::stdout().lock());
                out.write_record(["ell", "mean_dim", "bound"])?;
                for l in (lo..=lattice.p()).step_by(step) {
                    let mean = kappa_empirical(&lattice, l, trials, seed)?;
                    let bound = kappa_upper(dim, lattice.n(), l as f64)?;
                    out.write_record([l.to_string(), mean.to_string(), bound.to_string()])?;
                }
                out.flush()?;
            } else {
                let ell = ell.expect("clap enforces --ell");
                let report = BoundReport::new(&lattice, ell)?;
                let m = if known { report.m_known } else { report.m_unknown };
                print_json(&json!({
                    "report": report,
                    "cosupport_known": known,
                    "measurements_required": m,
                }))?;
            }
        }
        Command::Phantom { dim, d, rho, seed, head, out } => {
            let lattice = Lattice::cube(dim, d)?;
            if head {
                let image = shepp_logan_like(&lattice, HEAD_LAYER_COUNT)?;
                write_image(&out, &image, None)?;
                eprintln!("head phantom: k = {}, rho = {:.5}", image.k(), image.rho());
            } else {
                let spec = PhantomSpec::new(lattice, rho.expect("clap enforces --rho"), seed);
                let phantom = generate(&spec)?;
                write_image(&out, &phantom.image, Some(&spec))?;
                eprintln!(
                    "{} shapes, k = {}, rho = {:.5} (target {})",
                    phantom.shapes.len(),
                    phantom.k,
                    phantom.rho,
                    spec.target_rho
                );
            }
        }
        Command::Recover { matrix, image, known_cosupport, mode, epsilon } => {
            let a = mtx::read_file(&matrix).with_context(|| format!("reading {}", matrix.display()))?;
            let image = read_image(&image).with_context(|| format!("reading {}", image.display()))?;
            let lattice = *image.lattice();
            let mode = match (mode, known_cosupport) {
                (RecoverMode::Tv, false) => Mode::TvUnknown,
                (RecoverMode::Tv, true) => Mode::TvKnown(image.cosupport()),
                (_, true) => bail!("--known-cosupport only applies to --mode tv"),
                (RecoverMode::L1, false) => Mode::L1,
                (RecoverMode::L1Nonneg, false) => Mode::L1Nonneg,
            };
            let name = mode.name();
            let problem = RecoveryProblem::from_truth(lattice, a, image.values(), mode)?;
            let result = recover(&problem, epsilon, &LpOptions::default())?;
            print_json(&json!({
                "mode": name,
                "success": result.success,
                "l2_error": result.l2_error,
                "epsilon": result.epsilon,
                "tv": result.tv,
                "tv_truth": result.tv_truth,
                "solver": result.solver,
            }))?;
        }
        Command::PhaseTransition { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let plan: ExperimentPlan = serde_json::from_str(&text).context("parsing the plan")?;
            if let Ok(v) = std::env::var(THREADS_ENV) {
                eprintln!("{THREADS_ENV}={v}");
            }
            let grid = run_plan(&plan)?;
            let mut files = emit(&grid, &out)?;
            let mut json_path = out.into_os_string();
            json_path.push(".json");
            std::fs::write(&json_path, serde_json::to_string_pretty(&grid)?)?;
            files.push(json_path.into());
            for f in &files {
                eprintln!("wrote {}", f.display());
            }
            if let Some(alpha) = grid.alpha {
                eprintln!("alpha = {alpha:.4}");
            }
            if !grid.skips.is_empty() {
                eprintln!("{} trial(s) skipped, see the JSON report", grid.skips.len());
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
