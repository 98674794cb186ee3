//! Sketch-and-solve SVD: the top-`k` SVD of `Ã`, with left vectors
//! recovered as `ũ_j = A ṽ_j / ‖A ṽ_j‖`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, normalize_or_zero, right_singular_triplets, SvdResult};
use crate::matrix::{DenseMatrix, RowAccess};
use crate::sketch::{sketch, Sketch, SketchSpec};

/// Sketched triplets `(ũ_j, σ̃_j, ṽ_j)` with their provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchedSvd {
    pub svd: SvdResult,
    pub t: usize,
    pub k: usize,
    pub spec: SketchSpec,
}

impl SketchedSvd {
    pub fn singular_values(&self) -> &[f64] {
        &self.svd.singular_values
    }

    pub fn right_vectors(&self) -> &DenseMatrix {
        &self.svd.right_vectors
    }

    pub fn left_vectors(&self) -> Option<&DenseMatrix> {
        self.svd.left_vectors.as_ref()
    }
}

/// Sketches `a` per `spec` (one pass) and solves, lifting the left vectors
/// through `a` (one more pass).
pub fn sketched_svd<A: RowAccess + ?Sized>(
    a: &A,
    spec: &SketchSpec,
    k: usize,
) -> Result<SketchedSvd> {
    let s = sketch(a, spec)?;
    sketched_svd_from_sketch(&s, k, Some(a))
}

/// Solves on an existing sketch. `σ̃` and `ṽ` depend on `Ã` alone; when `a`
/// is given, the left vectors are computed in a single pass over it.
pub fn sketched_svd_from_sketch<A: RowAccess + ?Sized>(
    sketch: &Sketch,
    k: usize,
    a: Option<&A>,
) -> Result<SketchedSvd> {
    let (t, d) = sketch.a_tilde.shape();
    if k == 0 || k > t.min(d) {
        return Err(Error::dim(format!(
            "k = {k} outside 1..={} for a {t}x{d} sketch",
            t.min(d)
        )));
    }
    let mut svd = right_singular_triplets(&sketch.a_tilde, k)?;
    if let Some(a) = a {
        if a.ncols() != d {
            return Err(Error::dim(format!(
                "input has {} columns but the sketch has {d}",
                a.ncols()
            )));
        }
        svd.left_vectors = Some(lift_left_vectors(a, &svd.right_vectors));
    }
    Ok(SketchedSvd {
        svd,
        t,
        k,
        spec: sketch.spec.clone(),
    })
}

/// Columns `normalize_or_zero(M v_j)` for each column `v_j` of `v`, in one
/// pass over `m`.
pub(crate) fn lift_left_vectors<A: RowAccess + ?Sized>(m: &A, v: &DenseMatrix) -> DenseMatrix {
    let k = v.cols();
    let vcols: Vec<Vec<f64>> = (0..k).map(|j| v.column(j)).collect();
    let pass = m.begin_pass();
    let n = pass.nrows();
    let mut columns = vec![vec![0.0; n]; k];
    for (i, row) in pass.rows().enumerate() {
        for (col, vj) in columns.iter_mut().zip(&vcols) {
            col[i] = dot(row, vj);
        }
    }
    let columns: Vec<Vec<f64>> = columns.iter().map(|c| normalize_or_zero(c)).collect();
    DenseMatrix::from_columns(n, &columns)
}
