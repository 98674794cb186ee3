//! Deterministic dense SVD.
//!
//! Tall inputs are first reduced by column-pivoted Householder QR,
//! `M P = Q R`; one-sided (Hestenes) Jacobi is then applied to the columns
//! of `Rᵀ`. Once those columns are mutually orthogonal they equal
//! `V_R Σ`, so the right singular vectors come out directly without
//! accumulating rotations. Wide inputs skip the QR step and run Jacobi on
//! `Mᵀ`. Sweep order is fixed, so repeated calls are bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::qr::householder_qr;
use super::vector::{dot, norm2, normalize_or_zero};

/// Columns `p`, `q` count as orthogonal once `|w_pᵀw_q| ≤ tol·‖w_p‖‖w_q‖`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 60;

/// Top-`k` singular triplets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub right_vectors: DenseMatrix,
    /// `rows × k`; each column is unit-norm or exactly zero.
    pub left_vectors: Option<DenseMatrix>,
}

impl SvdResult {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn right_vector(&self, j: usize) -> Vec<f64> {
        self.right_vectors.column(j)
    }

    pub fn left_vector(&self, j: usize) -> Option<Vec<f64>> {
        self.left_vectors.as_ref().map(|u| u.column(j))
    }
}

/// Top-`k` singular values with right and left singular vectors.
///
/// Each left vector is `normalize_or_zero(M v_j)`. Signs are fixed by
/// making the largest-magnitude entry of each `v_j` positive.
pub fn partial_svd(m: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let mut svd = right_singular_triplets(m, k)?;
    let v = &svd.right_vectors;
    let mut u = vec![0.0; m.rows() * k];
    let vcols: Vec<Vec<f64>> = (0..k).map(|j| v.column(j)).collect();
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, vj) in vcols.iter().enumerate() {
            u[i * k + j] = dot(row, vj);
        }
    }
    let u = DenseMatrix::from_raw_parts(m.rows(), k, u);
    let columns: Vec<Vec<f64>> = (0..k).map(|j| normalize_or_zero(&u.column(j))).collect();
    svd.left_vectors = Some(DenseMatrix::from_columns(m.rows(), &columns));
    Ok(svd)
}

/// Top-`k` singular values and right singular vectors only.
pub fn right_singular_triplets(m: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::dim(format!(
            "k = {k} outside 1..={} for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    if let Some(pos) = m.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / cols,
            col: pos % cols,
        });
    }

    // Columns of W are the rows of R (tall) or of M (wide); either way
    // right singular vectors of the reduced problem are the normalized
    // columns of W after orthogonalization.
    let (mut w, perm): (Vec<Vec<f64>>, Option<Vec<usize>>) = if rows >= cols {
        let qr = householder_qr(m, true);
        let w = (0..cols).map(|i| qr.r_row(i).to_vec()).collect();
        (w, Some(qr.permutation().to_vec()))
    } else {
        ((0..rows).map(|i| m.row(i).to_vec()).collect(), None)
    };

    one_sided_jacobi(&mut w)?;

    let sigmas: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]).then(a.cmp(&b)));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(w.len());
    let mut pending_zero = Vec::new();
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; w.len()];
    for (slot, &idx) in order.iter().enumerate() {
        if sigmas[idx] > 0.0 {
            let v = normalize_or_zero(&w[idx]);
            basis.push(v.clone());
            vectors[slot] = Some(v);
        } else {
            pending_zero.push(slot);
        }
    }
    for slot in pending_zero {
        let v = complete_basis(&basis, cols);
        basis.push(v.clone());
        vectors[slot] = Some(v);
    }

    let mut singular_values = Vec::with_capacity(k);
    let mut columns = Vec::with_capacity(k);
    for (slot, v) in vectors.into_iter().take(k).enumerate() {
        let mut v = v.expect("every slot filled");
        canonicalize_sign(&mut v);
        if let Some(perm) = &perm {
            let mut unpermuted = vec![0.0; cols];
            for (i, &p) in perm.iter().enumerate() {
                unpermuted[p] = v[i];
            }
            v = unpermuted;
        }
        singular_values.push(sigmas[order[slot]]);
        columns.push(v);
    }

    Ok(SvdResult {
        singular_values,
        right_vectors: DenseMatrix::from_columns(cols, &columns),
        left_vectors: None,
    })
}

fn one_sided_jacobi(w: &mut [Vec<f64>]) -> Result<()> {
    let n = w.len();
    let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (left, right) = w.split_at_mut(q);
                let (wp, wq) = (&mut left[p], &mut right[0]);
                let gamma = dot(wp, wq);
                if gamma.abs() <= JACOBI_TOLERANCE * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in wp.iter_mut().zip(wq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                norms[p] = dot(wp, wp);
                norms[q] = dot(wq, wq);
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}

/// Lowest-index standard basis vector not in `span(basis)`, orthogonalized.
fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for e in 0..dim {
        let mut x = vec![0.0; dim];
        x[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let c = dot(&x, b);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= c * bi;
                }
            }
        }
        if norm2(&x) > 0.5 {
            return normalize_or_zero(&x);
        }
    }
    unreachable!("basis already spans the space")
}

/// Makes the largest-magnitude entry (first on ties) positive.
fn canonicalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Symmetric positive semi-definite square root of an SPD matrix.
///
/// Positive definiteness is checked by Cholesky; the root is formed from the
/// eigendecomposition `G = V Λ Vᵀ` (for SPD matrices, the SVD).
pub fn sqrt_spd(g: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, c) = g.shape();
    if n != c || n == 0 {
        return Err(Error::dim(format!(
            "expected a nonempty square matrix, got {n}x{c}"
        )));
    }
    let scale = g.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (g.get(i, j) - g.get(j, i)).abs() > 1e-12 * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    cholesky_check(g)?;
    let svd = right_singular_triplets(g, n)?;
    let v = &svd.right_vectors;
    let roots: Vec<f64> = svd.singular_values.iter().map(|s| s.sqrt()).collect();
    let mut out = DenseMatrix::zeros(n, n);
    let data = out.data_mut();
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = (0..n).map(|l| v.get(i, l) * roots[l] * v.get(j, l)).sum();
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
            data[i * n + j] = avg;
            data[j * n + i] = avg;
        }
    }
    Ok(out)
}

fn cholesky_check(g: &DenseMatrix) -> Result<()> {
    let n = g.rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = g.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(())
}
