//! Sketching operators: `Ã = S A` for Gaussian projections and row sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::linalg::dot;
use crate::matrix::{DenseMatrix, RowAccess};
use crate::rng::{domain, Stream};

/// Rows of `A` handled per work item when accumulating a Gaussian sketch.
const GAUSSIAN_BLOCK_ROWS: usize = 256;
/// Work items whose partial sums are held in memory at once.
const GAUSSIAN_BLOCKS_IN_FLIGHT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    GaussianProjection,
    RowSampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    /// Sketch size (rows of `Ã`).
    pub t: usize,
    /// Sampling probabilities over the rows of `A`; row sampling only.
    pub probabilities: Option<Vec<f64>>,
    pub seed: u64,
}

impl SketchSpec {
    pub fn gaussian(t: usize, seed: u64) -> Self {
        SketchSpec {
            kind: SketchKind::GaussianProjection,
            t,
            probabilities: None,
            seed,
        }
    }

    pub fn row_sampling(t: usize, probabilities: Vec<f64>, seed: u64) -> Self {
        SketchSpec {
            kind: SketchKind::RowSampling,
            t,
            probabilities: Some(probabilities),
            seed,
        }
    }

    /// Checks the spec against an input with `n` rows.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.t == 0 {
            return Err(Error::config("sketch size t must be at least 1"));
        }
        match (self.kind, &self.probabilities) {
            (SketchKind::GaussianProjection, None) => Ok(()),
            (SketchKind::GaussianProjection, Some(_)) => Err(Error::config(
                "Gaussian projection does not take sampling probabilities",
            )),
            (SketchKind::RowSampling, None) => Err(Error::config(
                "row sampling requires sampling probabilities",
            )),
            (SketchKind::RowSampling, Some(p)) => validate_probabilities(p, n),
        }
    }
}

/// A sketch `Ã` together with how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    pub a_tilde: DenseMatrix,
    pub spec: SketchSpec,
    pub source_rows: usize,
}

impl Sketch {
    pub fn t(&self) -> usize {
        self.a_tilde.rows()
    }

    /// Wraps an existing `t × d` sketch (e.g. one read from disk) whose
    /// provenance beyond its size is unknown.
    pub fn from_matrix(a_tilde: DenseMatrix, spec: SketchSpec, source_rows: usize) -> Result<Self> {
        if a_tilde.rows() != spec.t {
            return Err(Error::dim(format!(
                "sketch has {} rows but spec says t = {}",
                a_tilde.rows(),
                spec.t
            )));
        }
        Ok(Sketch {
            a_tilde,
            spec,
            source_rows,
        })
    }
}

/// Accepts nonnegative finite entries with at least one positive, summing to
/// one. The tolerance on the sum is `max(1e-12, n·ε)` so that probability
/// vectors normalized in floating point over many rows still pass.
fn validate_probabilities(p: &[f64], n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::InvalidProbabilities(format!(
            "length {} does not match {n} rows",
            p.len()
        )));
    }
    if let Some(i) = p.iter().position(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidProbabilities(format!(
            "entry {i} is {} (must be finite and nonnegative)",
            p[i]
        )));
    }
    if !p.iter().any(|&x| x > 0.0) {
        return Err(Error::InvalidProbabilities("no positive entries".into()));
    }
    let sum: f64 = p.iter().sum();
    let tol = 1e-12f64.max(n as f64 * f64::EPSILON);
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidProbabilities(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// `p_l = ‖a_l‖² / ‖A‖_F²` (one pass over `A`). Zero rows get probability 0.
pub fn squared_length_probabilities<A: RowAccess + ?Sized>(a: &A) -> Result<Vec<f64>> {
    let pass = a.begin_pass();
    let norms: Vec<f64> = pass.rows().map(|r| dot(r, r)).collect();
    let total: f64 = norms.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(norms.into_iter().map(|x| x / total).collect())
}

pub fn uniform_probabilities(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Builds the sketch described by `spec`.
pub fn sketch<A: RowAccess + ?Sized>(a: &A, spec: &SketchSpec) -> Result<Sketch> {
    sketch_with(a, spec, Execution::default())
}

pub fn sketch_with<A: RowAccess + ?Sized>(
    a: &A,
    spec: &SketchSpec,
    exec: Execution,
) -> Result<Sketch> {
    spec.validate(a.nrows())?;
    match spec.kind {
        SketchKind::GaussianProjection => gaussian_sketch_with(a, spec.t, spec.seed, exec),
        SketchKind::RowSampling => row_sampling_sketch(
            a,
            spec.t,
            spec.probabilities.as_deref().expect("validated"),
            spec.seed,
        ),
    }
}

/// `Ã = S A` with i.i.d. `N(0, 1/t)` entries in `S`, in one pass over `A`.
///
/// Column `l` of `S` is drawn from its own stream keyed by `(seed, l)`, and
/// block partial sums `Σ_l S[:, l] a_lᵀ` are reduced in block order, so the
/// result is independent of how rows are spread over workers.
pub fn gaussian_sketch<A: RowAccess + ?Sized>(a: &A, t: usize, seed: u64) -> Result<Sketch> {
    gaussian_sketch_with(a, t, seed, Execution::default())
}

pub fn gaussian_sketch_with<A: RowAccess + ?Sized>(
    a: &A,
    t: usize,
    seed: u64,
    exec: Execution,
) -> Result<Sketch> {
    let spec = SketchSpec::gaussian(t, seed);
    let (n, d) = a.shape();
    spec.validate(n)?;
    let pass = a.begin_pass();
    let scale = 1.0 / (t as f64).sqrt();
    let blocks = n.div_ceil(GAUSSIAN_BLOCK_ROWS);

    let block_sum = |b: usize| {
        let mut acc = vec![0.0; t * d];
        let mut column = vec![0.0; t];
        let end = ((b + 1) * GAUSSIAN_BLOCK_ROWS).min(n);
        for l in b * GAUSSIAN_BLOCK_ROWS..end {
            let row = pass.row(l);
            Stream::derived(seed, domain::GAUSSIAN_COLUMN, l as u64).fill_normal(&mut column);
            for (i, &s) in column.iter().enumerate() {
                let s = s * scale;
                for (dst, &x) in acc[i * d..(i + 1) * d].iter_mut().zip(row) {
                    *dst += s * x;
                }
            }
        }
        acc
    };

    let mut total = vec![0.0; t * d];
    for group_start in (0..blocks).step_by(GAUSSIAN_BLOCKS_IN_FLIGHT) {
        let count = GAUSSIAN_BLOCKS_IN_FLIGHT.min(blocks - group_start);
        let partials = map_indexed(count, exec, |i| block_sum(group_start + i));
        for partial in partials {
            for (dst, x) in total.iter_mut().zip(partial) {
                *dst += x;
            }
        }
    }

    Ok(Sketch {
        a_tilde: DenseMatrix::from_vec(t, d, total)?,
        spec,
        source_rows: n,
    })
}

/// Draws `t` row indices i.i.d. from `probabilities` and stacks the rows
/// `a_l / √(t p_l)`. Reads only the sampled rows, in a single pass.
pub fn row_sampling_sketch<A: RowAccess + ?Sized>(
    a: &A,
    t: usize,
    probabilities: &[f64],
    seed: u64,
) -> Result<Sketch> {
    let spec = SketchSpec::row_sampling(t, probabilities.to_vec(), seed);
    let (n, d) = a.shape();
    spec.validate(n)?;
    let indices = sample_indices(probabilities, t, seed);
    let pass = a.begin_pass();
    let mut data = Vec::with_capacity(t * d);
    for &l in &indices {
        let w = 1.0 / (t as f64 * probabilities[l]).sqrt();
        data.extend(pass.row(l).iter().map(|x| x * w));
    }
    Ok(Sketch {
        a_tilde: DenseMatrix::from_vec(t, d, data)?,
        spec,
        source_rows: n,
    })
}

/// Inverse-CDF sampling over the cumulative table; rows with zero
/// probability can never be selected.
pub(crate) fn sample_indices(probabilities: &[f64], t: usize, seed: u64) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut running = 0.0;
    for &p in probabilities {
        running += p;
        cumulative.push(running);
    }
    let last_positive = probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("validated: some probability is positive");
    let mut stream = Stream::derived(seed, domain::ROW_SAMPLE, 0);
    (0..t)
        .map(|_| {
            let u = stream.uniform() * running;
            let idx = cumulative.partition_point(|&c| c <= u);
            idx.min(last_positive)
        })
        .collect()
}
