//! Dense linear-algebra primitives: deterministic partial SVD, sine
//! distance, normalization and empirical quantiles.

mod qr;
mod quantile;
mod svd;
mod vector;

pub use qr::{householder_qr, Qr};
pub use quantile::empirical_quantile;
pub use svd::{partial_svd, right_singular_triplets, sqrt_spd, SvdResult, JACOBI_TOLERANCE};
pub use vector::{dot, norm2, normalize_or_zero, sine_distance};
