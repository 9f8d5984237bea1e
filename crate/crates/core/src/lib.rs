//! Two-block recursive VAR(1) systems: simulation, regularized maximum-likelihood
//! estimation, spectral diagnostics and group Granger-causality testing.
//!
//! The model couples two blocks of series, `x_t = A x_{t-1} + u_t` and
//! `z_t = B x_{t-1} + C z_{t-1} + v_t`, with sparse intra-block transitions
//! `A`, `C`, a sparse or low-rank inter-block matrix `B`, and sparse noise
//! precisions. The crate provides:
//!
//! - [`solvers`]: the numerical kernels (soft thresholding, singular value
//!   thresholding, weighted row Lasso, graphical Lasso, proximal gradient
//!   with nuclear-norm penalty),
//! - [`simulate`]: parameter generators and trajectory simulation under
//!   Gaussian, multivariate-t and elliptical noise,
//! - [`estimate`]: the two block-coordinate ML estimators and one-step
//!   forecasting,
//! - [`spectra`]: model-implied spectral densities and the bounds that
//!   control estimation error constants,
//! - [`granger`]: the canonical-correlation rank test, the trace-form
//!   block-causality test and the higher-criticism sparse test, with
//!   subsample calibration,
//! - [`evaluation`]: support/error metrics, BIC tuning, rolling windows,
//!   stability selection and the Monte-Carlo experiment harness,
//! - [`reproduce`]: canned experiment suites with reference values.

pub mod error;
pub mod estimate;
pub mod evaluation;
pub mod granger;
pub mod linalg;
pub mod panel;
pub mod reproduce;
pub mod rng;
pub mod simulate;
pub mod solvers;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use panel::TimeSeriesPanel;

/// Dense real matrix used throughout the crate.
pub type Mat = ndarray::Array2<f64>;
/// Dense real vector.
pub type Vec1 = ndarray::Array1<f64>;
