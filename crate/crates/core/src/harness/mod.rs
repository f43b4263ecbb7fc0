//! Phase-transition experiments: sweep `(d, ρ)`, recover random phantoms,
//! tally successes, locate the transition per `d` and fit the scaling factor
//! `α` against the theoretical curves.

mod emit;
mod fit;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{perturb, Perturbation, ProjectionGeometry};
use crate::lattice::Lattice;
use crate::lpsolve::{LpOptions, Status};
use crate::phantom::{generate, PhantomSpec};
use crate::recovery::{recover, Mode, RecoveryProblem};
use crate::sparse::SparseMatrix;

pub use emit::{emit, write_csv, write_svg};
pub use fit::{fit_alpha, logistic_crossing, theory_rho};

/// Environment variable holding the worker count for [`run_plan`].
pub const THREADS_ENV: &str = "TVTOMO_THREADS";

/// Phantom parameters used by every trial of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomParams {
    pub tolerance: f64,
    pub intensity_levels: Vec<f64>,
    pub background: f64,
    pub radius_range: (f64, f64),
    pub max_shapes: usize,
    pub contained: bool,
}

impl Default for PhantomParams {
    fn default() -> Self {
        let base = PhantomSpec::new(Lattice::cube(2, 2).expect("2x2 lattice"), 0.0, 0);
        PhantomParams {
            tolerance: base.tolerance,
            intensity_levels: base.intensity_levels,
            background: base.background,
            radius_range: base.radius_range,
            max_shapes: base.max_shapes,
            contained: base.contained,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dim: usize,
    pub d_values: Vec<usize>,
    pub rho_values: Vec<f64>,
    pub num_dirs: usize,
    pub trials_per_cell: usize,
    pub cosupport_known: bool,
    pub perturbed: bool,
    #[serde(default)]
    pub perturbation: Perturbation,
    pub master_seed: u64,
    #[serde(default)]
    pub phantom: PhantomParams,
    /// Success threshold override; the default depends on the dimension.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl ExperimentPlan {
    /// A plan with default phantoms and the standard perturbation.
    pub fn new(dim: usize, d_values: Vec<usize>, rho_values: Vec<f64>, num_dirs: usize, trials_per_cell: usize) -> Self {
        ExperimentPlan {
            dim,
            d_values,
            rho_values,
            num_dirs,
            trials_per_cell,
            cosupport_known: false,
            perturbed: false,
            perturbation: Perturbation::default(),
            master_seed: 0,
            phantom: PhantomParams::default(),
            epsilon: None,
        }
    }

    /// `rho_values` as uniform bins of the given width covering `[lo, hi]`,
    /// each represented by its center.
    pub fn rho_bins(lo: f64, hi: f64, width: f64) -> Vec<f64> {
        let count = ((hi - lo) / width).round().max(1.0) as usize;
        (0..count).map(|i| lo + (i as f64 + 0.5) * width).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_cell == 0 {
            return Err(Error::invalid("trials_per_cell must be at least 1"));
        }
        if self.d_values.is_empty() || self.rho_values.is_empty() {
            return Err(Error::invalid("plan needs at least one d and one rho"));
        }
        for &d in &self.d_values {
            // constructs and checks dim/num_dirs/d together
            ProjectionGeometry::new(self.dim, d, self.num_dirs)?;
            let lattice = Lattice::cube(self.dim, d)?;
            let max_rho = lattice.p() as f64 / lattice.n() as f64;
            if let Some(&r) = self.rho_values.iter().find(|&&r| !(0.0..=max_rho).contains(&r)) {
                return Err(Error::invalid(format!("rho {r} outside [0, {max_rho}] at d={d}")));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::invalid("epsilon must be positive"));
            }
        }
        Ok(())
    }
}

/// Tally of one `(d, ρ)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub d: usize,
    pub rho: f64,
    pub trials: usize,
    pub successes: usize,
    /// Trials that produced no verdict (see [`Skip`]).
    pub skipped: usize,
    /// Mean achieved `ρ` of the phantoms that were tried.
    pub mean_rho: f64,
}

impl Cell {
    pub fn rate(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.successes as f64 / self.trials as f64)
    }
}

/// A trial that was not counted, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub d: usize,
    pub rho: f64,
    pub trial: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub plan: ExperimentPlan,
    /// Sorted by `d`, then `ρ`.
    pub cells: Vec<Cell>,
    pub skips: Vec<Skip>,
    /// Empirical transition per entry of `plan.d_values`, `None` where the
    /// data show no crossing.
    pub transition_rho_per_d: Vec<Option<f64>>,
    /// Least-squares scaling factor, if at least two transitions were found.
    pub alpha: Option<f64>,
}

impl PhaseGrid {
    pub fn cell(&self, d: usize, rho: f64) -> Option<&Cell> {
        self.cells.iter().find(|c| c.d == d && c.rho == rho)
    }

    /// Cells of one `d`, ordered by `ρ`.
    pub fn row(&self, d: usize) -> Vec<&Cell> {
        self.cells.iter().filter(|c| c.d == d).collect()
    }

    /// Fills in transitions and `α` from the cells.
    pub fn refit(&mut self) {
        self.transition_rho_per_d = self
            .plan
            .d_values
            .iter()
            .map(|&d| {
                let row = self.row(d);
                let pts: Vec<(f64, usize, usize)> = row.iter().map(|c| (c.rho, c.successes, c.trials)).collect();
                logistic_crossing(&pts)
            })
            .collect();
        self.alpha = fit_alpha(self, self.plan.cosupport_known).ok();
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial. Depends only on the plan's master seed and the trial
/// coordinates, so scheduling cannot change results.
pub fn trial_seed(master: u64, d: usize, rho_bin: usize, trial: usize) -> u64 {
    [d as u64, rho_bin as u64, trial as u64]
        .iter()
        .fold(mix(master), |acc, &x| mix(acc ^ mix(x)))
}

enum Outcome {
    Counted { success: bool, rho: f64 },
    Skipped(String),
}

fn run_trial(plan: &ExperimentPlan, lattice: Lattice, a: &SparseMatrix, rho: f64, seed: u64) -> Result<Outcome> {
    let p = &plan.phantom;
    let mut spec = PhantomSpec::new(lattice, rho, seed)
        .with_background(p.background)
        .with_levels(p.intensity_levels.clone());
    spec.tolerance = p.tolerance;
    spec.radius_range = p.radius_range;
    spec.max_shapes = p.max_shapes;
    spec.contained = p.contained;
    let phantom = match generate(&spec) {
        Ok(ph) => ph,
        Err(e @ Error::PhantomUnreachable { .. }) => return Ok(Outcome::Skipped(e.to_string())),
        Err(e) => return Err(e),
    };
    let a = if plan.perturbed {
        perturb(a, mix(seed ^ 0x5045_5254), plan.perturbation)?
    } else {
        a.clone()
    };
    let truth = phantom.image.values();
    let mode = if plan.cosupport_known {
        Mode::TvKnown(lattice.cosupport_of(truth, 0.0))
    } else {
        Mode::TvUnknown
    };
    let problem = RecoveryProblem::from_truth(lattice, a, truth, mode)?;
    let result = match recover(&problem, plan.epsilon, &LpOptions::default()) {
        Ok(r) => r,
        Err(Error::Solver(msg)) => return Ok(Outcome::Skipped(format!("solver failure: {msg}"))),
        Err(e) => return Err(e),
    };
    if result.solver.status != Status::Optimal {
        return Ok(Outcome::Skipped(format!("solver ended with {:?}", result.solver.status)));
    }
    Ok(Outcome::Counted {
        success: result.success == Some(true),
        rho: phantom.rho,
    })
}

#[derive(Default)]
struct Partial {
    // (d index, rho index) -> (trials, successes, skipped, rho sum)
    cells: BTreeMap<(usize, usize), (usize, usize, usize, f64)>,
    skips: Vec<Skip>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (k, v) in other.cells {
            let e = self.cells.entry(k).or_default();
            e.0 += v.0;
            e.1 += v.1;
            e.2 += v.2;
            e.3 += v.3;
        }
        self.skips.extend(other.skips);
        self
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs every trial of the plan and returns the tallied grid.
///
/// Trials run in parallel on the rayon pool (sized by [`THREADS_ENV`] when
/// set); each worker accumulates a private partial grid and the partials are
/// merged at the end. Phantoms that cannot reach their target `ρ` and
/// solves that end without an optimum are recorded as skips, not failures.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PhaseGrid> {
    plan.validate()?;
    match configured_threads() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| run_plan_inner(plan)),
        None => run_plan_inner(plan),
    }
}

fn run_plan_inner(plan: &ExperimentPlan) -> Result<PhaseGrid> {
    let setups: Vec<(Lattice, SparseMatrix)> = plan
        .d_values
        .iter()
        .map(|&d| Ok((Lattice::cube(plan.dim, d)?, ProjectionGeometry::new(plan.dim, d, plan.num_dirs)?.build())))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize, usize)> = (0..plan.d_values.len())
        .flat_map(|di| {
            (0..plan.rho_values.len()).flat_map(move |ri| (0..plan.trials_per_cell).map(move |t| (di, ri, t)))
        })
        .collect();
    let partial = tasks
        .par_iter()
        .try_fold(Partial::default, |mut acc, &(di, ri, t)| -> Result<Partial> {
            let (d, rho) = (plan.d_values[di], plan.rho_values[ri]);
            let (lattice, a) = &setups[di];
            let seed = trial_seed(plan.master_seed, d, ri, t);
            let entry = acc.cells.entry((di, ri)).or_default();
            match run_trial(plan, *lattice, a, rho, seed)? {
                Outcome::Counted { success, rho: achieved } => {
                    entry.0 += 1;
                    entry.1 += usize::from(success);
                    entry.3 += achieved;
                }
                Outcome::Skipped(reason) => {
                    entry.2 += 1;
                    log::debug!("d={d} rho={rho} trial {t} skipped: {reason}");
                    acc.skips.push(Skip { d, rho, trial: t, reason });
                }
            }
            Ok(acc)
        })
        .try_reduce(Partial::default, |a, b| Ok(a.merge(b)))?;

    let mut cells = Vec::with_capacity(plan.d_values.len() * plan.rho_values.len());
    for (di, &d) in plan.d_values.iter().enumerate() {
        for (ri, &rho) in plan.rho_values.iter().enumerate() {
            let (trials, successes, skipped, rho_sum) = partial.cells.get(&(di, ri)).copied().unwrap_or_default();
            cells.push(Cell {
                d,
                rho,
                trials,
                successes,
                skipped,
                mean_rho: if trials > 0 { rho_sum / trials as f64 } else { f64::NAN },
            });
        }
    }
    cells.sort_by(|a, b| a.d.cmp(&b.d).then(a.rho.total_cmp(&b.rho)));
    let mut skips = partial.skips;
    skips.sort_by(|a, b| a.d.cmp(&b.d).then(a.rho.total_cmp(&b.rho)).then(a.trial.cmp(&b.trial)));
    let mut grid = PhaseGrid {
        plan: plan.clone(),
        cells,
        skips,
        transition_rho_per_d: Vec::new(),
        alpha: None,
    };
    grid.refit();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = trial_seed(7, 40, 3, 0);
        assert_eq!(a, trial_seed(7, 40, 3, 0));
        assert_ne!(a, trial_seed(7, 40, 3, 1));
        assert_ne!(a, trial_seed(7, 40, 4, 0));
        assert_ne!(a, trial_seed(8, 40, 3, 0));
    }

    #[test]
    fn rho_bins_are_centered() {
        let b = ExperimentPlan::rho_bins(0.0, 0.02, 0.005);
        assert_eq!(b.len(), 4);
        assert!((b[0] - 0.0025).abs() < 1e-15);
        assert!((b[3] - 0.0175).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_plans() {
        let mut plan = ExperimentPlan::new(2, vec![8], vec![0.05], 3, 0);
        assert!(plan.validate().is_err());
        plan.trials_per_cell = 1;
        assert!(plan.validate().is_ok());
        plan.rho_values = vec![5.0];
        assert!(plan.validate().is_err());
        plan.rho_values = vec![0.05];
        plan.num_dirs = 9;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn tiny_plan_is_reproducible() {
        let mut plan = ExperimentPlan::new(2, vec![10], vec![0.02, 0.3], 3, 3);
        plan.master_seed = 5;
        let a = run_plan(&plan).unwrap();
        let b = run_plan(&plan).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.cells.len(), 2);
        for c in &a.cells {
            assert_eq!(c.trials + c.skipped, 3);
            assert!(c.successes <= c.trials);
        }
    }
}
