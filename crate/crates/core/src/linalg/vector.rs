use crate::error::{Error, Result};

/// Inner product. Four partial sums keep the loop vectorizable; the
/// summation order is fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Euclidean norm, scaled to avoid underflow and overflow.
pub fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s = x.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>();
    scale * s.sqrt()
}

/// `x / ‖x‖₂`, or the zero vector when `x` is exactly zero.
pub fn normalize_or_zero(x: &[f64]) -> Vec<f64> {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return vec![0.0; x.len()];
    }
    let scaled: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let n = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    scaled.into_iter().map(|v| v / n).collect()
}

/// Sine of the acute angle between two unit vectors, `sqrt(1 - (wᵀw')²)`.
///
/// Evaluated as `‖w - w'‖·‖w + w'‖ / 2`, which equals the expression above
/// for unit vectors but keeps full relative accuracy at small angles and is
/// exactly zero for identical inputs. A zero vector is at distance 1 from
/// everything.
pub fn sine_distance(w: &[f64], w_prime: &[f64]) -> Result<f64> {
    if w.len() != w_prime.len() {
        return Err(Error::dim(format!(
            "sine distance between vectors of length {} and {}",
            w.len(),
            w_prime.len()
        )));
    }
    if w.iter().all(|&v| v == 0.0) || w_prime.iter().all(|&v| v == 0.0) {
        return Ok(1.0);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in w.iter().zip(w_prime) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((0.5 * (diff * sum).sqrt()).min(1.0))
}
