//! Monte-Carlo harness: true error quantiles from repeated sketching against
//! the exact SVD, bootstrap estimates, their extrapolation, and coverage.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_errors_with, validate_index_set, BootstrapConfig, ErrorMetric};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::io::{read_matrix, MatrixFormat};
use crate::linalg::{empirical_quantile, partial_svd, SvdResult};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_seed, domain};
use crate::sketch::{
    sketch_with, squared_length_probabilities, uniform_probabilities, SketchKind, SketchSpec,
};
use crate::solve::sketched_svd_from_sketch;
use crate::synthetic::{
    cyclic_rows_matrix, elliptical_rows_matrix, haar_factor_matrix, DecayProfile, RadialLaw,
};

/// Largest `rows · cols` for which the harness computes an exact SVD.
pub const EXACT_SVD_ENTRY_LIMIT: usize = 1 << 27;

/// Where the input matrix comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MatrixSpec {
    HaarFactor {
        n: usize,
        d: usize,
        profile: DecayProfile,
        seed: u64,
    },
    Cyclic {
        n: usize,
        gram: DenseMatrix,
    },
    Elliptical {
        n: usize,
        gram: DenseMatrix,
        radial: RadialLaw,
        seed: u64,
    },
    File {
        path: PathBuf,
        /// Detected from the file contents when absent.
        #[serde(default)]
        format: Option<MatrixFormat>,
    },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<DenseMatrix> {
        match self {
            MatrixSpec::HaarFactor {
                n,
                d,
                profile,
                seed,
            } => haar_factor_matrix(*n, *d, profile, *seed),
            MatrixSpec::Cyclic { n, gram } => cyclic_rows_matrix(*n, gram),
            MatrixSpec::Elliptical {
                n,
                gram,
                radial,
                seed,
            } => elliptical_rows_matrix(*n, gram, *radial, *seed),
            MatrixSpec::File { path, format } => read_matrix(path, *format),
        }
    }
}

/// How row-sampling probabilities are derived from `A`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityRule {
    Uniform,
    #[default]
    SquaredLength,
}

/// Sketch sizes at which each trial also runs the bootstrap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapSchedule {
    /// Every grid point; gives estimate and coverage curves everywhere.
    #[default]
    EveryT,
    /// Only `t0`; enough for the extrapolated curve.
    T0Only,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub matrix: MatrixSpec,
    pub sketch_kind: SketchKind,
    #[serde(default)]
    pub probabilities: ProbabilityRule,
    /// Strictly ascending sketch sizes.
    pub t_grid: Vec<usize>,
    pub trials: usize,
    pub k: usize,
    /// 1-based triplet indices.
    pub index_set: Vec<usize>,
    pub alpha: f64,
    /// Bootstrap replicates per estimate.
    pub replicates: usize,
    /// Sketch size the extrapolated curve starts from; must be on the grid.
    pub t0: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub bootstrap_at: BootstrapSchedule,
    #[serde(default)]
    pub metric: ErrorMetric,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let grid = &self.t_grid;
        if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "t_grid must be nonempty, positive and strictly ascending",
            ));
        }
        if !grid.contains(&self.t0) {
            return Err(Error::config(format!(
                "t0 = {} is not on the grid",
                self.t0
            )));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.k == 0 || self.k > grid[0] {
            return Err(Error::config(format!(
                "k = {} outside 1..={}",
                self.k, grid[0]
            )));
        }
        BootstrapConfig {
            replicates: self.replicates,
            alpha: self.alpha,
            index_set: self.index_set.clone(),
            metric: self.metric,
            seed: 0,
        }
        .validate(self.k)
    }

    fn bootstraps_at(&self, t: usize) -> bool {
        match self.bootstrap_at {
            BootstrapSchedule::EveryT => true,
            BootstrapSchedule::T0Only => t == self.t0,
        }
    }
}

/// One value per error family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyTriple {
    pub u: f64,
    pub sigma: f64,
    pub v: f64,
}

impl FamilyTriple {
    pub const FAMILIES: [&'static str; 3] = ["u", "sigma", "v"];

    fn from_fn(mut f: impl FnMut(usize) -> Result<f64>) -> Result<Self> {
        Ok(FamilyTriple {
            u: f(0)?,
            sigma: f(1)?,
            v: f(2)?,
        })
    }

    /// Values in `FAMILIES` order.
    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.sigma, self.v]
    }

    fn scale(self, c: f64) -> Self {
        FamilyTriple {
            u: self.u * c,
            sigma: self.sigma * c,
            v: self.v * c,
        }
    }
}

/// Outcome of one sketch in one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t: usize,
    pub trial: usize,
    /// Realized sketching errors against the exact SVD.
    pub error: FamilyTriple,
    /// This trial's bootstrap quantile estimate, when scheduled.
    pub estimate: Option<FamilyTriple>,
    pub rank_deficient_replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub true_quantile: FamilyTriple,
    pub estimate_mean: Option<FamilyTriple>,
    pub estimate_std: Option<FamilyTriple>,
    pub extrapolated_mean: FamilyTriple,
    pub extrapolated_std: FamilyTriple,
    /// Fraction of trials whose own estimate bounded their own error.
    pub coverage: Option<FamilyTriple>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurves {
    pub t0: usize,
    pub alpha: f64,
    pub points: Vec<CurvePoint>,
    /// Grid-major, then trial order.
    pub trials: Vec<TrialRecord>,
}

impl ErrorCurves {
    pub fn point(&self, t: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// Runs the experiment described by `cfg`, building the matrix from its spec.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ErrorCurves> {
    cfg.validate()?;
    let a = cfg.matrix.build()?;
    run_experiment_on(&a, cfg, Execution::default())
}

/// Runs the experiment on an already materialized `a`; `cfg.matrix` is
/// ignored.
pub fn run_experiment_on(
    a: &DenseMatrix,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<ErrorCurves> {
    cfg.validate()?;
    let records = run_trials(a, cfg, &cfg.t_grid, exec)?;
    let trials = cfg.trials;
    let level = 1.0 - cfg.alpha;
    let t0_index = cfg.t_grid.iter().position(|&t| t == cfg.t0).unwrap();
    let t0_estimates: Vec<FamilyTriple> = records[t0_index * trials..(t0_index + 1) * trials]
        .iter()
        .map(|r| r.estimate.expect("bootstrap always runs at t0"))
        .collect();
    let t0_mean = mean_std(&t0_estimates).0;
    let t0_std = mean_std(&t0_estimates).1;

    let mut points = Vec::with_capacity(cfg.t_grid.len());
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let block = &records[ti * trials..(ti + 1) * trials];
        let errors: Vec<FamilyTriple> = block.iter().map(|r| r.error).collect();
        let true_quantile = family_quantile(&errors, level)?;
        let estimates: Option<Vec<FamilyTriple>> = block.iter().map(|r| r.estimate).collect();
        let (estimate_mean, estimate_std, coverage) = match estimates {
            Some(est) => {
                let (m, s) = mean_std(&est);
                (Some(m), Some(s), Some(coverage_of(block)))
            }
            None => (None, None, None),
        };
        let factor = (cfg.t0 as f64 / t as f64).sqrt();
        points.push(CurvePoint {
            t,
            true_quantile,
            estimate_mean,
            estimate_std,
            extrapolated_mean: t0_mean.scale(factor),
            extrapolated_std: t0_std.scale(factor),
            coverage,
        });
    }
    Ok(ErrorCurves {
        t0: cfg.t0,
        alpha: cfg.alpha,
        points,
        trials: records,
    })
}

/// True `(1 − α)` error quantiles at each grid size, without bootstrapping.
pub fn ground_truth_quantiles(
    a: &DenseMatrix,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<(usize, FamilyTriple)>> {
    let no_bootstrap = ExperimentConfig {
        bootstrap_at: BootstrapSchedule::T0Only,
        t0: usize::MAX,
        ..cfg.clone()
    };
    let records = run_trials(a, &no_bootstrap, &cfg.t_grid, exec)?;
    cfg.t_grid
        .iter()
        .zip(records.chunks(cfg.trials))
        .map(|(&t, block)| {
            let errors: Vec<FamilyTriple> = block.iter().map(|r| r.error).collect();
            Ok((t, family_quantile(&errors, 1.0 - cfg.alpha)?))
        })
        .collect()
}

/// Per-family fraction of trials at sketch size `t` whose own bootstrap
/// estimate bounds their own realized error. `t` need not be on the grid.
pub fn coverage_rate(
    a: &DenseMatrix,
    cfg: &ExperimentConfig,
    t: usize,
    exec: Execution,
) -> Result<FamilyTriple> {
    let at_t = ExperimentConfig {
        t_grid: vec![t],
        t0: t,
        ..cfg.clone()
    };
    let records = run_trials(a, &at_t, &[t], exec)?;
    Ok(coverage_of(&records))
}

fn coverage_of(records: &[TrialRecord]) -> FamilyTriple {
    let n = records.len() as f64;
    let rate = |pick: fn(&FamilyTriple) -> f64| {
        records
            .iter()
            .filter(|r| r.estimate.is_some_and(|q| pick(&r.error) <= pick(&q)))
            .count() as f64
            / n
    };
    FamilyTriple {
        u: rate(|x| x.u),
        sigma: rate(|x| x.sigma),
        v: rate(|x| x.v),
    }
}

fn family_quantile(values: &[FamilyTriple], level: f64) -> Result<FamilyTriple> {
    FamilyTriple::from_fn(|f| {
        let xs: Vec<f64> = values.iter().map(|x| x.to_array()[f]).collect();
        empirical_quantile(&xs, level)
    })
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_std(values: &[FamilyTriple]) -> (FamilyTriple, FamilyTriple) {
    let n = values.len() as f64;
    let stats = |f: usize| {
        let mean = values.iter().map(|x| x.to_array()[f]).sum::<f64>() / n;
        let ss: f64 = values
            .iter()
            .map(|x| (x.to_array()[f] - mean).powi(2))
            .sum();
        let std = if values.len() > 1 {
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (mean, std)
    };
    let [u, s, v] = [stats(0), stats(1), stats(2)];
    (
        FamilyTriple {
            u: u.0,
            sigma: s.0,
            v: v.0,
        },
        FamilyTriple {
            u: u.1,
            sigma: s.1,
            v: v.1,
        },
    )
}

/// Sketches `a` `cfg.trials` times at each size in `grid`. Trial `i` at size
/// `t` uses seeds derived from `(master_seed, i, t)` only.
fn run_trials(
    a: &DenseMatrix,
    cfg: &ExperimentConfig,
    grid: &[usize],
    exec: Execution,
) -> Result<Vec<TrialRecord>> {
    let (n, d) = a.shape();
    if n.saturating_mul(d) > EXACT_SVD_ENTRY_LIMIT {
        return Err(Error::TooLarge { rows: n, cols: d });
    }
    if cfg.trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    if cfg.k == 0 || cfg.k > d.min(n) {
        return Err(Error::config(format!(
            "k = {} outside 1..={}",
            cfg.k,
            d.min(n)
        )));
    }
    validate_index_set(&cfg.index_set, cfg.k)?;
    let exact = partial_svd(a, cfg.k)?;
    let probabilities = match (cfg.sketch_kind, cfg.probabilities) {
        (SketchKind::GaussianProjection, _) => None,
        (SketchKind::RowSampling, ProbabilityRule::Uniform) => Some(uniform_probabilities(n)),
        (SketchKind::RowSampling, ProbabilityRule::SquaredLength) => {
            Some(squared_length_probabilities(a)?)
        }
    };

    let trials = cfg.trials;
    try_map_indexed(grid.len() * trials, exec, |job| {
        let (t, trial) = (grid[job / trials], job % trials);
        let trial_seed = derive_seed(cfg.master_seed, domain::TRIAL, trial as u64);
        let spec = SketchSpec {
            kind: cfg.sketch_kind,
            t,
            probabilities: probabilities.clone(),
            seed: derive_seed(trial_seed, domain::TRIAL_SKETCH, t as u64),
        };
        // Trials are already spread across threads.
        let sk = sketch_with(a, &spec, Execution::Serial)?;
        let sketched = sketched_svd_from_sketch(&sk, cfg.k, Some(a))?;
        let error = realized_error(&exact, &sketched.svd, &cfg.index_set, cfg.metric)?;
        let (estimate, rank_deficient_replicates) = if cfg.bootstraps_at(t) {
            let bcfg = BootstrapConfig {
                replicates: cfg.replicates,
                alpha: cfg.alpha,
                index_set: cfg.index_set.clone(),
                metric: cfg.metric,
                seed: derive_seed(trial_seed, domain::TRIAL_BOOTSTRAP, t as u64),
            };
            let est = bootstrap_errors_with(&sk, &sketched, &bcfg, Execution::Serial)?;
            let q = FamilyTriple {
                u: est.q_u,
                sigma: est.q_sigma,
                v: est.q_v,
            };
            (Some(q), est.rank_deficient_replicates)
        } else {
            (None, 0)
        };
        Ok(TrialRecord {
            t,
            trial,
            error,
            estimate,
            rank_deficient_replicates,
        })
    })
}

/// Sketching errors of `sketched` against `exact`, maximized over the
/// 1-based `index_set`.
pub fn realized_error(
    exact: &SvdResult,
    sketched: &SvdResult,
    index_set: &[usize],
    metric: ErrorMetric,
) -> Result<FamilyTriple> {
    let mut out = FamilyTriple::default();
    for &j in index_set {
        let j = j - 1;
        out.sigma = out
            .sigma
            .max((sketched.singular_values[j] - exact.singular_values[j]).abs());
        out.v = out
            .v
            .max(metric.distance(&sketched.right_vector(j), &exact.right_vector(j))?);
        let (Some(u), Some(u_exact)) = (sketched.left_vector(j), exact.left_vector(j)) else {
            return Err(Error::config(
                "realized error needs left singular vectors on both sides",
            ));
        };
        out.u = out.u.max(metric.distance(&u, &u_exact)?);
    }
    Ok(out)
}
