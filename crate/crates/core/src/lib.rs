//! Testbed for neural approximation of matrix inversion.
//!
//! The crate bundles the pieces needed to study when a small ReLU network can
//! (and cannot) stand in for `A ↦ A⁻¹`:
//!
//! - [`linalg`]: exact small-matrix determinants, adjugates and inverses.
//! - [`regions`]: clearance of training boxes from the singular set, dataset
//!   sampling, and plot grids of the ε-neighbourhood of singular matrices.
//! - [`linear_approx`] and [`analytic_net`]: the first-order expansion of the
//!   inverse and the exact 2-layer ReLU network realizing it.
//! - [`mlp`]: from-scratch MLP training (Adam, cosine warm restarts) and
//!   checkpoints.
//! - [`region_analysis`]: activation patterns, per-region affine maps and LP
//!   bounds on their gap to the linearization.
//! - [`limits`]: probes of the inverse blow-up near rank `n−1` singular
//!   matrices.
//! - [`lipschitz`]: polynomial Lipschitz bound algebra with a falsification
//!   harness.

pub mod analytic_net;
pub mod error;
pub mod exec;
pub mod kvconfig;
pub mod limits;
pub mod linalg;
pub mod linear_approx;
pub mod lipschitz;
pub mod lp;
pub mod mlp;
pub mod region_analysis;
pub mod regions;

pub use error::{Error, Result};
pub use linalg::{Matrix, NormKind};
