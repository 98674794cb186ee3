//! Test-matrix generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, normalize_or_zero, sqrt_spd};
use crate::matrix::DenseMatrix;
use crate::rng::{domain, Stream};

/// Singular-value decay profile `σ_1 ≥ σ_2 ≥ … ≥ σ_d > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayProfile {
    /// `σ_j = j^(−β)`.
    PowerLaw {
        beta: f64,
    },
    /// `σ_j = 10^(−γ j)`. Values below the `f64` range underflow to zero.
    Exponential {
        gamma: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl DecayProfile {
    pub fn values(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            DecayProfile::PowerLaw { beta } => {
                if !(beta.is_finite() && *beta > 0.0) {
                    return Err(Error::config(format!(
                        "power-law exponent {beta} must be positive"
                    )));
                }
                Ok((1..=d).map(|j| (j as f64).powf(-beta)).collect())
            }
            DecayProfile::Exponential { gamma } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::config(format!(
                        "exponential rate {gamma} must be positive"
                    )));
                }
                Ok((1..=d).map(|j| 10f64.powf(-gamma * j as f64)).collect())
            }
            DecayProfile::Explicit { values } => {
                if values.len() != d {
                    return Err(Error::dim(format!(
                        "explicit profile has {} values, expected {d}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::config(
                        "explicit singular values must be positive and finite",
                    ));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::config(
                        "explicit singular values must be nonincreasing",
                    ));
                }
                Ok(values.clone())
            }
        }
    }
}

/// Haar-distributed `rows × cols` matrix with orthonormal columns: the Q
/// factor of a Gaussian matrix, with signs fixed so `R` has a positive
/// diagonal.
pub fn haar_orthonormal(rows: usize, cols: usize, seed: u64) -> Result<DenseMatrix> {
    if cols == 0 || rows < cols {
        return Err(Error::dim(format!(
            "cannot draw {rows}x{cols} orthonormal columns"
        )));
    }
    let mut stream = Stream::new(seed);
    let g = DenseMatrix::from_fn(rows, cols, |_, _| stream.normal());
    Ok(householder_qr(&g, false).thin_q_positive())
}

/// `A = U Σ Vᵀ` with Haar `U` (`n × d`) and `V` (`d × d`) and `Σ` from
/// `profile`.
pub fn haar_factor_matrix(
    n: usize,
    d: usize,
    profile: &DecayProfile,
    seed: u64,
) -> Result<DenseMatrix> {
    if d == 0 || n < d {
        return Err(Error::dim(format!("need n ≥ d ≥ 1, got n = {n}, d = {d}")));
    }
    let sigma = profile.values(d)?;
    let u = haar_orthonormal(n, d, crate::rng::derive_seed(seed, domain::HAAR_LEFT, 0))?;
    let v = haar_orthonormal(d, d, crate::rng::derive_seed(seed, domain::HAAR_RIGHT, 0))?;
    let us = DenseMatrix::from_fn(n, d, |i, j| u.get(i, j) * sigma[j]);
    us.matmul(&v.transpose())
}

/// Rows of `√d · G^{1/2}` repeated cyclically to fill `n` rows, so that
/// `(1/n) AᵀA = G` whenever `d` divides `n`.
pub fn cyclic_rows_matrix(n: usize, g: &DenseMatrix) -> Result<DenseMatrix> {
    let root = sqrt_spd(g)?;
    let d = root.rows();
    if n < d {
        return Err(Error::dim(format!("need n ≥ d, got n = {n}, d = {d}")));
    }
    let scale = (d as f64).sqrt();
    Ok(DenseMatrix::from_fn(n, d, |i, j| {
        scale * root.get(i % d, j)
    }))
}

/// Law of the radial factor `ν` in [`elliptical_rows_matrix`]; both have
/// `E[ν²] = 1` and a finite moment generating function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialLaw {
    ConstantOne,
    /// `ν = χ_m / √m`.
    ScaledChi {
        dof: u32,
    },
}

impl RadialLaw {
    fn sample(self, stream: &mut Stream) -> f64 {
        match self {
            RadialLaw::ConstantOne => 1.0,
            RadialLaw::ScaledChi { dof } => {
                let s: f64 = (0..dof).map(|_| stream.normal().powi(2)).sum();
                (s / dof as f64).sqrt()
            }
        }
    }
}

/// I.i.d. rows `a_i = √d · ν_i · G^{1/2} U_i` with `U_i` uniform on the unit
/// sphere, so that `E[a_i a_iᵀ] = G`.
pub fn elliptical_rows_matrix(
    n: usize,
    g: &DenseMatrix,
    nu: RadialLaw,
    seed: u64,
) -> Result<DenseMatrix> {
    if let RadialLaw::ScaledChi { dof: 0 } = nu {
        return Err(Error::config(
            "scaled-chi law needs at least one degree of freedom",
        ));
    }
    let root = sqrt_spd(g)?;
    let d = root.rows();
    let scale = (d as f64).sqrt();
    let mut data = Vec::with_capacity(n * d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        let mut stream = Stream::derived(seed, domain::ELLIPTICAL, i as u64);
        stream.fill_normal(&mut z);
        let dir = normalize_or_zero(&z);
        let radius = scale * nu.sample(&mut stream);
        data.extend(root.mul_vec(&dir).into_iter().map(|x| radius * x));
    }
    DenseMatrix::from_vec(n, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_svd;

    fn gram_over_n(a: &DenseMatrix) -> DenseMatrix {
        let n = a.rows() as f64;
        let g = a.transpose().matmul(a).unwrap();
        DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j) / n)
    }

    fn frob_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn profile_values() {
        let p = DecayProfile::PowerLaw { beta: 1.0 }.values(5).unwrap();
        assert_eq!(p, vec![1.0, 0.5, 1.0 / 3.0, 0.25, 0.2]);
        let e = DecayProfile::Exponential { gamma: 0.5 }.values(3).unwrap();
        for (x, y) in e.iter().zip([10f64.powf(-0.5), 0.1, 10f64.powf(-1.5)]) {
            assert!((x - y).abs() < 1e-16);
        }
        assert!(DecayProfile::PowerLaw { beta: 0.0 }.values(3).is_err());
        assert!(DecayProfile::Explicit {
            values: vec![1.0, 2.0]
        }
        .values(2)
        .is_err());
        assert!(DecayProfile::Explicit { values: vec![1.0] }
            .values(2)
            .is_err());
        assert!(DecayProfile::Explicit {
            values: vec![1.0, 0.0]
        }
        .values(2)
        .is_err());
    }

    #[test]
    fn explicit_profile_recovered() {
        let a = haar_factor_matrix(
            4,
            2,
            &DecayProfile::Explicit {
                values: vec![2.0, 1.0],
            },
            3,
        )
        .unwrap();
        let s = partial_svd(&a, 2).unwrap().singular_values;
        assert!((s[0] - 2.0).abs() < 1e-10 && (s[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_law_recovered_up_to_d_64() {
        for (n, d) in [(10, 5), (200, 64)] {
            let profile = DecayProfile::PowerLaw { beta: 1.0 };
            let a = haar_factor_matrix(n, d, &profile, 17).unwrap();
            let s = partial_svd(&a, d).unwrap().singular_values;
            for (x, y) in s.iter().zip(profile.values(d).unwrap()) {
                assert!((x - y).abs() <= 1e-10 * y, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn haar_columns_orthonormal() {
        let q = haar_orthonormal(30, 7, 5).unwrap();
        let g = q.transpose().matmul(&q).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - e).abs() < 1e-13);
            }
        }
        assert!(haar_orthonormal(3, 4, 0).is_err());
    }

    /// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
    fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn haar_first_coordinate_distribution() {
        let trials = 2000;
        // Asymptotic 1% critical value of the one-sample KS statistic.
        let critical = 1.628 / (trials as f64).sqrt();

        // d = 3: |x_1| of a uniform unit vector is uniform on [0, 1].
        let samples: Vec<f64> = (0..trials)
            .map(|s| haar_orthonormal(3, 3, s).unwrap().get(0, 0).abs())
            .collect();
        let ks = ks_statistic(samples, |y| y);
        assert!(ks < critical, "d=3 KS {ks} ≥ {critical}");

        // d = 2: x_1 = cos θ with θ uniform, so P(|x_1| ≤ y) = 1 − (2/π) acos y.
        let samples: Vec<f64> = (0..trials)
            .map(|s| haar_orthonormal(2, 2, s).unwrap().get(0, 0).abs())
            .collect();
        let ks = ks_statistic(samples, |y| 1.0 - std::f64::consts::FRAC_2_PI * y.acos());
        assert!(ks < critical, "d=2 KS {ks} ≥ {critical}");
    }

    #[test]
    fn cyclic_identity_example() {
        let a = cyclic_rows_matrix(4, &DenseMatrix::identity(2)).unwrap();
        let r2 = 2f64.sqrt();
        let expected =
            DenseMatrix::from_rows(&[[r2, 0.0], [0.0, r2], [r2, 0.0], [0.0, r2]]).unwrap();
        assert!(frob_diff(&a, &expected) < 1e-14);
        assert!(frob_diff(&gram_over_n(&a), &DenseMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn cyclic_diagonal_example() {
        let g = DenseMatrix::from_diagonal(&[2.0, 1.0]).unwrap();
        let a = cyclic_rows_matrix(2, &g).unwrap();
        assert!((a.get(0, 0) - 4f64.sqrt()).abs() < 1e-14);
        assert!((a.get(1, 1) - 2f64.sqrt()).abs() < 1e-14);
        assert!(a.get(0, 1).abs() < 1e-14 && a.get(1, 0).abs() < 1e-14);
        assert!(frob_diff(&gram_over_n(&a), &g) < 1e-13);
    }

    #[test]
    fn cyclic_gram_identity_and_limit() {
        let b =
            DenseMatrix::from_rows(&[[2.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 0.5]]).unwrap();
        let g = b.transpose().matmul(&b).unwrap();
        let d = 3;
        for n in [d, 2 * d, 7 * d] {
            let a = cyclic_rows_matrix(n, &g).unwrap();
            assert!(frob_diff(&gram_over_n(&a), &g) <= 1e-10 * g.frobenius_norm());
        }
        let off = cyclic_rows_matrix(d + 1, &g).unwrap();
        assert!(frob_diff(&gram_over_n(&off), &g) > 1e-3);
        let near = cyclic_rows_matrix(100 * d + 1, &g).unwrap();
        assert!(frob_diff(&gram_over_n(&near), &g) <= 0.02 * g.frobenius_norm());
    }

    #[test]
    fn non_spd_rejected() {
        let bad = DenseMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            cyclic_rows_matrix(4, &bad),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            elliptical_rows_matrix(4, &bad, RadialLaw::ConstantOne, 0),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn elliptical_constant_radius() {
        let d = 5;
        let a = elliptical_rows_matrix(100, &DenseMatrix::identity(d), RadialLaw::ConstantOne, 1)
            .unwrap();
        for i in 0..100 {
            let norm = crate::linalg::norm2(a.row(i));
            assert!((norm - (d as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn elliptical_second_moment() {
        let g = DenseMatrix::from_diagonal(&[4.0, 3.0, 2.0, 1.0]).unwrap();
        for law in [RadialLaw::ConstantOne, RadialLaw::ScaledChi { dof: 4 }] {
            let a = elliptical_rows_matrix(50_000, &g, law, 12).unwrap();
            let diff = frob_diff(&gram_over_n(&a), &g);
            assert!(diff <= 0.1, "{law:?}: {diff}");
        }
    }
}
