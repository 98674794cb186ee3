//! Householder QR, optionally with column pivoting.

use crate::matrix::DenseMatrix;

use super::vector::dot;

/// Factorization `M P = Q R` of an `m × c` matrix with `m ≥ c`.
pub struct Qr {
    m: usize,
    c: usize,
    /// Row-major `c × c` upper-triangular factor.
    r: Vec<f64>,
    /// Column `j` of `M P` is column `perm[j]` of `M`.
    perm: Vec<usize>,
    /// Householder vectors `v_i` (acting on rows `i..m`) and `‖v_i‖²`.
    reflectors: Vec<(Vec<f64>, f64)>,
}

/// Factors `m` (which must have at least as many rows as columns).
pub fn householder_qr(m: &DenseMatrix, pivot: bool) -> Qr {
    let (rows, c) = m.shape();
    assert!(rows >= c, "householder_qr expects a tall matrix");

    // Column-major working copy: each column contiguous.
    let t = m.transpose();
    let mut cols: Vec<Vec<f64>> = t
        .as_slice()
        .chunks_exact(rows.max(1))
        .take(c)
        .map(<[f64]>::to_vec)
        .collect();
    let mut perm: Vec<usize> = (0..c).collect();
    let mut norms: Vec<f64> = cols.iter().map(|x| dot(x, x)).collect();
    let mut reference = norms.clone();
    let mut reflectors = Vec::with_capacity(c);
    let recompute_ratio = f64::EPSILON.sqrt();

    for i in 0..c {
        if pivot {
            let mut best = i;
            for j in i + 1..c {
                if norms[j] > norms[best] {
                    best = j;
                }
            }
            if best != i {
                cols.swap(i, best);
                perm.swap(i, best);
                norms.swap(i, best);
                reference.swap(i, best);
            }
        }

        let (head, tail) = cols.split_at_mut(i + 1);
        let x = &mut head[i][i..];
        let alpha = super::vector::norm2(x);
        if alpha == 0.0 {
            reflectors.push((Vec::new(), 0.0));
            continue;
        }
        let beta = if x[0] >= 0.0 { -alpha } else { alpha };
        let mut v = x.to_vec();
        v[0] -= beta;
        let vnorm = dot(&v, &v);
        for col in tail.iter_mut() {
            let y = &mut col[i..];
            let s = 2.0 * dot(&v, y) / vnorm;
            if s != 0.0 {
                for (yk, vk) in y.iter_mut().zip(&v) {
                    *yk -= s * vk;
                }
            }
        }
        x[0] = beta;
        for xk in x[1..].iter_mut() {
            *xk = 0.0;
        }
        reflectors.push((v, vnorm));

        if pivot {
            for (j, col) in tail.iter().enumerate() {
                let j = j + i + 1;
                let rij = col[i];
                norms[j] = (norms[j] - rij * rij).max(0.0);
                if norms[j] <= recompute_ratio * reference[j] {
                    norms[j] = dot(&col[i + 1..], &col[i + 1..]);
                    reference[j] = norms[j];
                }
            }
        }
    }

    let mut r = vec![0.0; c * c];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..=j {
            r[i * c + j] = col[i];
        }
    }
    Qr {
        m: rows,
        c,
        r,
        perm,
        reflectors,
    }
}

impl Qr {
    pub fn r(&self) -> DenseMatrix {
        DenseMatrix::from_raw_parts(self.c, self.c, self.r.clone())
    }

    /// Row `i` of `R` (entries `i..c` are the nonzero part).
    pub(crate) fn r_row(&self, i: usize) -> &[f64] {
        &self.r[i * self.c..(i + 1) * self.c]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// The thin `m × c` orthonormal factor.
    pub fn thin_q(&self) -> DenseMatrix {
        let mut columns = Vec::with_capacity(self.c);
        for j in 0..self.c {
            let mut e = vec![0.0; self.m];
            e[j] = 1.0;
            for (i, (v, vnorm)) in self.reflectors.iter().enumerate().rev() {
                if v.is_empty() {
                    continue;
                }
                let y = &mut e[i..];
                let s = 2.0 * dot(v, y) / vnorm;
                for (yk, vk) in y.iter_mut().zip(v) {
                    *yk -= s * vk;
                }
            }
            columns.push(e);
        }
        DenseMatrix::from_columns(self.m, &columns)
    }

    /// Thin `Q` with column signs flipped so that `R` has a nonnegative
    /// diagonal. Applied to a Gaussian matrix this yields a Haar-distributed
    /// orthonormal factor.
    pub fn thin_q_positive(&self) -> DenseMatrix {
        let mut q = self.thin_q();
        let c = self.c;
        let flips: Vec<bool> = (0..c).map(|i| self.r[i * c + i] < 0.0).collect();
        for row in q.data_mut().chunks_exact_mut(c) {
            for (x, &f) in row.iter_mut().zip(&flips) {
                if f {
                    *x = -*x;
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = Stream::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| s.normal())
    }

    fn permuted(m: &DenseMatrix, perm: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(m.rows(), perm.len(), |i, j| m.get(i, perm[j]))
    }

    #[test]
    fn reconstructs_with_and_without_pivoting() {
        let m = random(12, 5, 3);
        for pivot in [false, true] {
            let qr = householder_qr(&m, pivot);
            let q = qr.thin_q();
            let qtq = q.transpose().matmul(&q).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq.get(i, j) - e).abs() < 1e-13);
                }
            }
            let back = q.matmul(&qr.r()).unwrap();
            let target = permuted(&m, qr.permutation());
            for (a, b) in back.as_slice().iter().zip(target.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
            if !pivot {
                assert_eq!(qr.permutation(), &[0, 1, 2, 3, 4]);
            }
        }
    }

    #[test]
    fn pivoting_orders_diagonal() {
        let m = random(20, 6, 9);
        let qr = householder_qr(&m, true);
        let r = qr.r();
        for i in 1..6 {
            assert!(r.get(i, i).abs() <= r.get(i - 1, i - 1).abs() + 1e-12);
        }
    }

    #[test]
    fn positive_diagonal_variant() {
        let m = random(7, 3, 11);
        let qr = householder_qr(&m, false);
        let q = qr.thin_q_positive();
        // Qᵀ M is then upper-triangular with a nonnegative diagonal.
        let r = q.transpose().matmul(&m).unwrap();
        for i in 0..3 {
            assert!(r.get(i, i) > 0.0);
        }
    }

    #[test]
    fn zero_matrix() {
        let m = DenseMatrix::zeros(4, 2);
        let qr = householder_qr(&m, true);
        assert!(qr.r().as_slice().iter().all(|&x| x == 0.0));
    }
}
