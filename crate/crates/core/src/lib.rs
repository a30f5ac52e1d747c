//! Spectral Galerkin simulation of the local and nonlocal stochastic
//! Swift-Hohenberg equations on the 2π-periodic line, together with the
//! tooling needed to probe their ergodicity numerically: binding couplings
//! with Girsanov weights, energy certificates, mode-count thresholds and
//! bounded-Lipschitz distances between ensembles.
//!
//! Module map:
//!
//! - [`spectral`]: real Fourier basis, operator spectrum, transforms and
//!   periodic convolution.
//! - [`forcing`]: finite-mode additive noise with counter-based streams.
//! - [`dynamics`]: kernels, the exponential Euler-Maruyama stepper and the
//!   slaved high-mode flow.
//! - [`coupling`]: binding coupling, Girsanov bookkeeping and coupled-set
//!   classification.
//! - [`diagnostics`]: certificates, thresholds, distances and decay fits.
//! - [`ensemble`]: parallel (or sequential) ensemble execution.
//! - [`harness`]: configuration, experiments, persistence and manifests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
mod error;
pub mod exec;
pub mod forcing;
pub mod harness;
pub mod spectral;

pub use error::{Error, Result};
