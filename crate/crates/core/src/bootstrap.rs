//! Bootstrap estimation of sketching-error quantiles.
//!
//! Given only the sketch `Ã` and the sketched pairs `(σ̃_j, ṽ_j)`, each
//! replicate resamples the `t` rows of `Ã` uniformly with replacement,
//! recomputes the top-`k` SVD of the resampled matrix `Ã*`, and records how
//! far the recomputed quantities moved:
//!
//! - `ε*_Σ = max_{j∈J} |σ*_j − σ̃_j|`
//! - `ε*_V = max_{j∈J} ρ(v*_j, ṽ_j)`
//! - `ε*_U = max_{j∈J} ρ(ŭ*_j, ŭ_j)`, with `ŭ_j = normalize(Ã ṽ_j)` and
//!   `ŭ*_j = normalize(Ã v*_j)` (the original `Ã`, not `Ã*`).
//!
//! The `(1 − α)` empirical quantiles of the replicate errors estimate the
//! quantiles of the actual sketching errors. `A` itself is never read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::linalg::{
    empirical_quantile, normalize_or_zero, right_singular_triplets, sine_distance,
};
use crate::rng::{domain, Stream};
use crate::sketch::Sketch;
use crate::solve::SketchedSvd;

/// Distance used to compare singular vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    #[default]
    SineDistance,
}

impl ErrorMetric {
    pub fn distance(self, w: &[f64], w_prime: &[f64]) -> Result<f64> {
        match self {
            ErrorMetric::SineDistance => sine_distance(w, w_prime),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub alpha: f64,
    /// 1-based, sorted, unique indices of the triplets to control jointly.
    pub index_set: Vec<usize>,
    #[serde(default)]
    pub metric: ErrorMetric,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, alpha: f64, index_set: Vec<usize>, seed: u64) -> Self {
        BootstrapConfig {
            replicates,
            alpha,
            index_set,
            metric: ErrorMetric::SineDistance,
            seed,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config(
                "number of bootstrap replicates must be at least 1",
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        validate_index_set(&self.index_set, k)
    }
}

pub(crate) fn validate_index_set(index_set: &[usize], k: usize) -> Result<()> {
    if index_set.is_empty() {
        return Err(Error::config("index set is empty"));
    }
    if index_set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("index set must be sorted and unique"));
    }
    if index_set[0] == 0 || *index_set.last().unwrap() > k {
        return Err(Error::config(format!("index set must lie within 1..={k}")));
    }
    Ok(())
}

/// Per-replicate bootstrap errors, in replicate order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Replicates {
    pub u: Vec<f64>,
    pub sigma: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub q_u: f64,
    pub q_sigma: f64,
    pub q_v: f64,
    /// Sketch size the estimate was computed at.
    pub t0: usize,
    pub alpha: f64,
    pub index_set: Vec<usize>,
    pub replicates: Replicates,
    /// Replicates whose resampled sketch had numerical rank below `k`.
    pub rank_deficient_replicates: usize,
}

impl QuantileEstimate {
    /// Builds an estimate from replicate errors, taking the `(1 − α)`
    /// empirical quantile of each family.
    pub fn from_replicates(
        replicates: Replicates,
        t0: usize,
        alpha: f64,
        index_set: Vec<usize>,
        rank_deficient_replicates: usize,
    ) -> Result<Self> {
        let level = 1.0 - alpha;
        Ok(QuantileEstimate {
            q_u: empirical_quantile(&replicates.u, level)?,
            q_sigma: empirical_quantile(&replicates.sigma, level)?,
            q_v: empirical_quantile(&replicates.v, level)?,
            t0,
            alpha,
            index_set,
            replicates,
            rank_deficient_replicates,
        })
    }

    /// Number of replicates `B`.
    pub fn b(&self) -> usize {
        self.replicates.sigma.len()
    }

    /// True when each `q` equals the quantile of its stored replicates.
    pub fn is_consistent(&self) -> bool {
        let level = 1.0 - self.alpha;
        let check = |xs: &[f64], q: f64| empirical_quantile(xs, level).is_ok_and(|x| x == q);
        check(&self.replicates.u, self.q_u)
            && check(&self.replicates.sigma, self.q_sigma)
            && check(&self.replicates.v, self.q_v)
    }

    pub fn has_rank_deficiency_warning(&self) -> bool {
        self.rank_deficient_replicates > 0
    }
}

struct ReplicateErrors {
    u: f64,
    sigma: f64,
    v: f64,
    rank_deficient: bool,
}

/// Runs the bootstrap on `sketch` and its sketched SVD.
pub fn bootstrap_errors(
    sketch: &Sketch,
    sketched: &SketchedSvd,
    cfg: &BootstrapConfig,
) -> Result<QuantileEstimate> {
    bootstrap_errors_with(sketch, sketched, cfg, Execution::default())
}

/// As [`bootstrap_errors`], with an explicit schedule. Replicate `b` draws
/// its rows from the stream keyed by `(cfg.seed, b)`, so every schedule
/// yields the same replicate arrays.
pub fn bootstrap_errors_with(
    sketch: &Sketch,
    sketched: &SketchedSvd,
    cfg: &BootstrapConfig,
    exec: Execution,
) -> Result<QuantileEstimate> {
    let a_tilde = &sketch.a_tilde;
    let (t, d) = a_tilde.shape();
    let k = sketched.k;
    cfg.validate(k)?;
    if sketched.right_vectors().rows() != d || sketched.t != t {
        return Err(Error::dim(format!(
            "sketched SVD ({}x{}) does not derive from a {t}x{d} sketch",
            sketched.t,
            sketched.right_vectors().rows()
        )));
    }
    if k > t.min(d) {
        return Err(Error::dim(format!(
            "k = {k} exceeds min(t, d) = {}",
            t.min(d)
        )));
    }

    let indices: Vec<usize> = cfg.index_set.iter().map(|&j| j - 1).collect();
    let sigma_ref: Vec<f64> = indices
        .iter()
        .map(|&j| sketched.singular_values()[j])
        .collect();
    let v_ref: Vec<Vec<f64>> = indices
        .iter()
        .map(|&j| sketched.svd.right_vector(j))
        .collect();
    let u_ref: Vec<Vec<f64>> = v_ref
        .iter()
        .map(|v| normalize_or_zero(&a_tilde.mul_vec(v)))
        .collect();

    let replicate = |b: usize| -> Result<ReplicateErrors> {
        let mut stream = Stream::derived(cfg.seed, domain::REPLICATE, b as u64);
        let rows: Vec<usize> = (0..t).map(|_| stream.index(t)).collect();
        let resampled = a_tilde.select_rows(&rows);
        let star = right_singular_triplets(&resampled, k).map_err(|e| Error::Replicate {
            index: b,
            source: Box::new(e),
        })?;
        let mut out = ReplicateErrors {
            u: 0.0,
            sigma: 0.0,
            v: 0.0,
            rank_deficient: {
                let s = &star.singular_values;
                s[0] == 0.0 || s[k - 1] <= s[0] * t.max(d) as f64 * f64::EPSILON
            },
        };
        for (slot, &j) in indices.iter().enumerate() {
            let v_star = star.right_vector(j);
            let u_star = normalize_or_zero(&a_tilde.mul_vec(&v_star));
            out.sigma = out
                .sigma
                .max((star.singular_values[j] - sigma_ref[slot]).abs());
            out.v = out.v.max(cfg.metric.distance(&v_star, &v_ref[slot])?);
            out.u = out.u.max(cfg.metric.distance(&u_star, &u_ref[slot])?);
        }
        Ok(out)
    };

    let results = try_map_indexed(cfg.replicates, exec, replicate)?;
    let mut reps = Replicates {
        u: Vec::with_capacity(cfg.replicates),
        sigma: Vec::with_capacity(cfg.replicates),
        v: Vec::with_capacity(cfg.replicates),
    };
    let mut deficient = 0;
    for r in results {
        reps.u.push(r.u);
        reps.sigma.push(r.sigma);
        reps.v.push(r.v);
        deficient += usize::from(r.rank_deficient);
    }
    QuantileEstimate::from_replicates(reps, t, cfg.alpha, cfg.index_set.clone(), deficient)
}

/// Quantile estimates carried to another sketch size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedPoint {
    pub t: usize,
    pub q_u: f64,
    pub q_sigma: f64,
    pub q_v: f64,
}

/// Rescales each quantile by `√(t0 / t1)`.
///
/// # Panics
///
/// If `t1` is zero.
pub fn extrapolate(est: &QuantileEstimate, t1: usize) -> ExtrapolatedPoint {
    assert!(t1 >= 1, "extrapolation target must be at least 1");
    let factor = (est.t0 as f64 / t1 as f64).sqrt();
    ExtrapolatedPoint {
        t: t1,
        q_u: est.q_u * factor,
        q_sigma: est.q_sigma * factor,
        q_v: est.q_v * factor,
    }
}

/// [`extrapolate`] over a strictly ascending grid of sketch sizes.
pub fn extrapolate_curve(est: &QuantileEstimate, grid: &[usize]) -> Result<Vec<ExtrapolatedPoint>> {
    if grid.is_empty() {
        return Err(Error::config("extrapolation grid is empty"));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(
            "extrapolation grid must be positive and strictly ascending",
        ));
    }
    Ok(grid.iter().map(|&t| extrapolate(est, t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;
    use crate::sketch::SketchSpec;
    use crate::solve::sketched_svd_from_sketch;

    fn sketch_of(a_tilde: DenseMatrix) -> Sketch {
        let t = a_tilde.rows();
        Sketch::from_matrix(a_tilde, SketchSpec::gaussian(t, 0), t).unwrap()
    }

    fn random_sketch(t: usize, d: usize, seed: u64) -> Sketch {
        let mut s = Stream::new(seed);
        sketch_of(DenseMatrix::from_fn(t, d, |_, j| {
            s.normal() / (j + 1) as f64
        }))
    }

    fn solve(s: &Sketch, k: usize) -> SketchedSvd {
        sketched_svd_from_sketch::<DenseMatrix>(s, k, None).unwrap()
    }

    #[test]
    fn single_replicate() {
        let s = random_sketch(40, 5, 1);
        let sk = solve(&s, 3);
        let est = bootstrap_errors(&s, &sk, &BootstrapConfig::new(1, 0.05, vec![1, 2], 9)).unwrap();
        assert_eq!(est.b(), 1);
        assert_eq!(est.q_u, est.replicates.u[0]);
        assert_eq!(est.q_sigma, est.replicates.sigma[0]);
        assert_eq!(est.q_v, est.replicates.v[0]);
        assert_eq!(est.t0, 40);
    }

    #[test]
    fn identical_rows_give_zero_error() {
        let s = sketch_of(DenseMatrix::from_fn(6, 3, |_, j| [1.0, -2.0, 0.5][j]));
        let sk = solve(&s, 1);
        let est = bootstrap_errors(&s, &sk, &BootstrapConfig::new(20, 0.05, vec![1], 3)).unwrap();
        assert_eq!((est.q_u, est.q_sigma, est.q_v), (0.0, 0.0, 0.0));
        assert!(est.replicates.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quantiles_match_replicates() {
        let s = random_sketch(60, 6, 2);
        let sk = solve(&s, 3);
        let est = bootstrap_errors(&s, &sk, &BootstrapConfig::new(30, 0.05, vec![1], 4)).unwrap();
        assert!(est.is_consistent());
        assert!(est.q_u >= 0.0 && est.q_sigma >= 0.0 && est.q_v >= 0.0);
        assert_eq!(est.rank_deficient_replicates, 0);
    }

    #[test]
    fn schedule_independent() {
        let s = random_sketch(80, 6, 3);
        let sk = solve(&s, 3);
        let cfg = BootstrapConfig::new(24, 0.1, vec![1, 2, 3], 77);
        let serial = bootstrap_errors_with(&s, &sk, &cfg, Execution::Serial).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let parallel =
            pool.install(|| bootstrap_errors_with(&s, &sk, &cfg, Execution::Parallel).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn larger_index_set_never_smaller() {
        let s = random_sketch(50, 5, 4);
        let sk = solve(&s, 3);
        let small = bootstrap_errors(&s, &sk, &BootstrapConfig::new(30, 0.05, vec![1], 5)).unwrap();
        let large =
            bootstrap_errors(&s, &sk, &BootstrapConfig::new(30, 0.05, vec![1, 2, 3], 5)).unwrap();
        for (family_small, family_large) in [
            (&small.replicates.u, &large.replicates.u),
            (&small.replicates.sigma, &large.replicates.sigma),
            (&small.replicates.v, &large.replicates.v),
        ] {
            for (a, b) in family_small.iter().zip(family_large) {
                assert!(b >= a);
            }
        }
        assert!(large.q_u >= small.q_u && large.q_sigma >= small.q_sigma && large.q_v >= small.q_v);
    }

    #[test]
    fn config_validation() {
        let s = random_sketch(10, 3, 5);
        let sk = solve(&s, 2);
        for cfg in [
            BootstrapConfig::new(0, 0.05, vec![1], 0),
            BootstrapConfig::new(10, 0.0, vec![1], 0),
            BootstrapConfig::new(10, 1.0, vec![1], 0),
            BootstrapConfig::new(10, 0.05, vec![], 0),
            BootstrapConfig::new(10, 0.05, vec![3], 0),
            BootstrapConfig::new(10, 0.05, vec![0], 0),
            BootstrapConfig::new(10, 0.05, vec![2, 1], 0),
        ] {
            assert!(
                matches!(
                    bootstrap_errors(&s, &sk, &cfg),
                    Err(Error::InvalidConfig(_))
                ),
                "{cfg:?}"
            );
        }
        let other = random_sketch(12, 3, 6);
        assert!(bootstrap_errors(&other, &sk, &BootstrapConfig::new(5, 0.05, vec![1], 0)).is_err());
    }

    fn estimate(q: f64, t0: usize) -> QuantileEstimate {
        QuantileEstimate {
            q_u: q,
            q_sigma: 2.0 * q,
            q_v: 3.0 * q,
            t0,
            alpha: 0.05,
            index_set: vec![1],
            replicates: Replicates::default(),
            rank_deficient_replicates: 0,
        }
    }

    #[test]
    fn extrapolation_examples() {
        let est = estimate(0.04, 500);
        assert_eq!(extrapolate(&est, 2000).q_u, 0.02);
        let same = extrapolate(&est, 500);
        assert_eq!(
            (same.q_u, same.q_sigma, same.q_v),
            (est.q_u, est.q_sigma, est.q_v)
        );
        let zero = estimate(0.0, 500);
        for t1 in [1, 10, 500, 10_000] {
            let p = extrapolate(&zero, t1);
            assert_eq!((p.q_u, p.q_sigma, p.q_v), (0.0, 0.0, 0.0));
        }
        // Smaller targets scale the estimate up.
        assert!(extrapolate(&est, 125).q_u > est.q_u);
    }

    #[test]
    fn extrapolated_curve() {
        let est = estimate(0.3, 500);
        let single = extrapolate_curve(&est, &[500]).unwrap();
        assert_eq!(single[0].q_v, est.q_v);
        let two = extrapolate_curve(&est, &[500, 2000]).unwrap();
        assert_eq!(two[1].q_sigma, two[0].q_sigma / 2.0);

        let grid: Vec<usize> = (1..=12).map(|i| 500 * i).collect();
        let curve = extrapolate_curve(&est, &grid).unwrap();
        assert_eq!(curve.len(), 12);
        for w in curve.windows(2) {
            assert!(w[1].q_u <= w[0].q_u && w[1].q_sigma <= w[0].q_sigma && w[1].q_v <= w[0].q_v);
        }
        assert!((curve[11].q_u - curve[0].q_u / 12f64.sqrt()).abs() < 1e-15);
        for p in &curve {
            let ratio = p.q_v / est.q_v;
            assert!((ratio - (500.0 / p.t as f64).sqrt()).abs() <= 4.0 * f64::EPSILON);
        }

        assert!(extrapolate_curve(&est, &[]).is_err());
        assert!(extrapolate_curve(&est, &[1000, 500]).is_err());
        assert!(extrapolate_curve(&est, &[0, 500]).is_err());
    }
}
