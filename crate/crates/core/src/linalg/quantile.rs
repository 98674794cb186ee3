use crate::error::{Error, Result};

/// Empirical quantile `inf{q : F_B(q) ≥ level}` of `xs`.
///
/// For an empirical distribution this infimum is attained at the `r`-th
/// order statistic, where `r` is the smallest rank with `r / B ≥ level`
/// (no interpolation). The result is always one of the observed values.
pub fn empirical_quantile(xs: &[f64], level: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("empirical quantile of an empty sample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config(format!(
            "quantile level {level} outside (0, 1)"
        )));
    }
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let b = xs.len();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[quantile_rank(b, level) - 1])
}

/// Smallest 1-based rank `r` in `1..=b` with `r / b ≥ level`, evaluated the
/// same way the empirical CDF is, so lattice points are not lost to rounding.
pub(crate) fn quantile_rank(b: usize, level: f64) -> usize {
    let bf = b as f64;
    let mut r = ((level * bf).ceil() as usize).clamp(1, b);
    while r > 1 && (r - 1) as f64 / bf >= level {
        r -= 1;
    }
    while r < b && (r as f64 / bf) < level {
        r += 1;
    }
    r
}
