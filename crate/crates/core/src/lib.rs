//! Sketch-and-solve SVD with data-driven bootstrap estimates of the
//! sketching error.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`] and [`linalg`]: dense row-major matrices, a deterministic
//!   partial SVD, sine distance and empirical quantiles.
//! - [`sketch`]: Gaussian projections and row-sampling sketches `Ã = SA`.
//! - [`solve`]: the sketch-and-solve SVD (top-k SVD of `Ã`, left vectors
//!   lifted through `A`).
//! - [`bootstrap`]: resampling the rows of `Ã` to estimate error quantiles,
//!   plus the `1/√t` extrapolation rule.
//! - [`synthetic`]: test-matrix generators.
//! - [`evaluation`]: a Monte-Carlo harness that compares the estimates
//!   against ground truth.
//! - [`io`]: matrix file formats and result schemas.
//!
//! Data-parallel loops (bootstrap replicates, Monte-Carlo trials, Gaussian
//! sketch accumulation) run on rayon when the `parallel` feature is enabled
//! and fall back to plain iteration otherwise. Every random stream is keyed
//! by a seed and an index, so results never depend on the schedule.

pub mod bootstrap;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod sketch;
pub mod solve;
pub mod synthetic;

pub use bootstrap::{
    bootstrap_errors, bootstrap_errors_with, extrapolate, extrapolate_curve, BootstrapConfig,
    ErrorMetric, ExtrapolatedPoint, QuantileEstimate, Replicates,
};
pub use error::{Error, Result};
pub use evaluation::{
    coverage_rate, ground_truth_quantiles, realized_error, run_experiment, run_experiment_on,
    BootstrapSchedule, CurvePoint, ErrorCurves, ExperimentConfig, FamilyTriple, MatrixSpec,
    ProbabilityRule, TrialRecord,
};
pub use exec::Execution;
pub use io::{read_matrix, write_matrix, EstimateReport, MatrixFormat};
pub use linalg::{empirical_quantile, normalize_or_zero, partial_svd, sine_distance, SvdResult};
pub use matrix::{CountedMatrix, DenseMatrix, RowAccess, RowPass};
pub use sketch::{
    gaussian_sketch, gaussian_sketch_with, row_sampling_sketch, sketch, sketch_with,
    squared_length_probabilities, uniform_probabilities, Sketch, SketchKind, SketchSpec,
};
pub use solve::{sketched_svd, sketched_svd_from_sketch, SketchedSvd};
pub use synthetic::{
    cyclic_rows_matrix, elliptical_rows_matrix, haar_factor_matrix, haar_orthonormal, DecayProfile,
    RadialLaw,
};
