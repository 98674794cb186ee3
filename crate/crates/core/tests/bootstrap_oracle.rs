//! The bootstrap on a 3×2 sketch with k = 1 has only 27 equally likely
//! resamples. Each is checked against a closed-form 2×2 eigen-solution, and
//! the Monte-Carlo quantiles against the exact resampling distribution.

use sketchboot::{
    bootstrap_errors, sketched_svd_from_sketch, BootstrapConfig, DenseMatrix, Sketch, SketchSpec,
};

/// Top eigenpair of the symmetric matrix `[[a, b], [b, c]]`.
fn top_eigenpair(a: f64, b: f64, c: f64) -> (f64, [f64; 2]) {
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda = mid + rad;
    let x = [b, lambda - a];
    let y = [lambda - c, b];
    let pick = if x[0].hypot(x[1]) >= y[0].hypot(y[1]) {
        x
    } else {
        y
    };
    let norm = pick[0].hypot(pick[1]);
    if norm == 0.0 {
        return (lambda, [1.0, 0.0]);
    }
    (lambda, [pick[0] / norm, pick[1] / norm])
}

fn top_right_pair(rows: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for r in rows {
        a += r[0] * r[0];
        b += r[0] * r[1];
        c += r[1] * r[1];
    }
    let (lambda, v) = top_eigenpair(a, b, c);
    (lambda.max(0.0).sqrt(), v)
}

fn sine(w: &[f64], z: &[f64]) -> f64 {
    let nw: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nz: f64 = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let c: f64 = w.iter().zip(z).map(|(x, y)| x * y).sum::<f64>() / (nw * nz);
    (1.0 - (c * c).min(1.0)).sqrt()
}

fn lift(rows: &[[f64; 2]], v: [f64; 2]) -> Vec<f64> {
    rows.iter().map(|r| r[0] * v[0] + r[1] * v[1]).collect()
}

const A_TILDE: [[f64; 2]; 3] = [[2.0, 0.3], [0.5, 1.1], [-0.7, 0.9]];

/// `(u, sigma, v)` errors of all 27 resamples, each with weight 1/27.
fn enumerate() -> Vec<[f64; 3]> {
    let (sigma, v) = top_right_pair(&A_TILDE);
    let u = lift(&A_TILDE, v);
    let mut out = Vec::new();
    for ai in A_TILDE {
        for aj in A_TILDE {
            for al in A_TILDE {
                let star = [ai, aj, al];
                let (s_star, v_star) = top_right_pair(&star);
                let u_star = lift(&A_TILDE, v_star);
                out.push([sine(&u_star, &u), (s_star - sigma).abs(), sine(&v_star, &v)]);
            }
        }
    }
    out
}

/// Smallest value whose exact resampling CDF reaches `level`.
fn exact_quantile(values: &mut [f64], level: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    *values
        .iter()
        .enumerate()
        .find(|(i, _)| (*i + 1) as f64 / n >= level)
        .unwrap()
        .1
}

fn sketch() -> Sketch {
    let m = DenseMatrix::from_rows(&A_TILDE).unwrap();
    Sketch::from_matrix(m, SketchSpec::gaussian(3, 0), 3).unwrap()
}

#[test]
fn every_replicate_is_one_of_the_enumerated_resamples() {
    let atoms = enumerate();
    let sk = sketch();
    let sketched = sketched_svd_from_sketch::<DenseMatrix>(&sk, 1, None).unwrap();
    let est =
        bootstrap_errors(&sk, &sketched, &BootstrapConfig::new(500, 0.05, vec![1], 1)).unwrap();
    for b in 0..est.b() {
        let r = [
            est.replicates.u[b],
            est.replicates.sigma[b],
            est.replicates.v[b],
        ];
        let hit = atoms
            .iter()
            .any(|a| a.iter().zip(&r).all(|(x, y)| (x - y).abs() < 1e-7));
        assert!(hit, "replicate {b} = {r:?} matches no resample");
    }
}

#[test]
fn monte_carlo_quantiles_match_exact_distribution() {
    let atoms = enumerate();
    let sk = sketch();
    let sketched = sketched_svd_from_sketch::<DenseMatrix>(&sk, 1, None).unwrap();
    for alpha in [0.05, 0.2, 0.5] {
        let est = bootstrap_errors(
            &sk,
            &sketched,
            &BootstrapConfig::new(50_000, alpha, vec![1], 7),
        )
        .unwrap();
        let exact: Vec<f64> = (0..3)
            .map(|f| {
                exact_quantile(
                    &mut atoms.iter().map(|a| a[f]).collect::<Vec<_>>(),
                    1.0 - alpha,
                )
            })
            .collect();
        assert!(
            (est.q_u - exact[0]).abs() <= 0.01,
            "alpha {alpha}: u {} vs {}",
            est.q_u,
            exact[0]
        );
        assert!(
            (est.q_sigma - exact[1]).abs() <= 0.005,
            "alpha {alpha}: sigma {} vs {}",
            est.q_sigma,
            exact[1]
        );
        assert!(
            (est.q_v - exact[2]).abs() <= 0.01,
            "alpha {alpha}: v {} vs {}",
            est.q_v,
            exact[2]
        );
    }
}
