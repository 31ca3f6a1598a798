//! Privacy amplification by iteration.
//!
//! Accounting for Contractive Noisy Iterations (CNI) through shifted Rényi
//! divergences, the noisy projected SGD variants that instantiate them, and
//! the numerical oracles used to check the accounting.
//!
//! Units: every divergence and privacy loss is in nats; every shift,
//! displacement and allowance is measured in the Euclidean norm of the
//! parameter space.
//!
//! Module map:
//!
//! - [`divergence`]: closed-form Gaussian Rényi quantities, RDP/DP conversion
//!   and composition, and the two per-step shifted-budget transitions.
//! - [`accountant`]: schedule-based and closed-form RDP accountants for
//!   PNSGD, Skip-/Stop-PNSGD, multi-epoch PNMSGD, local RDP and multi-task
//!   calibration, plus α-grid optimisation.
//! - [`cni`]: convex sets, loss families, seeded noise streams and the four
//!   SGD variants.
//! - [`smoothing`]: Gaussian-convolution smoothing of Lipschitz losses.
//! - [`oracle`]: 1-D grid density propagation and Rényi quadrature used as
//!   ground truth for the accountants.

pub mod accountant;
pub mod cni;
pub mod divergence;
mod error;
pub mod oracle;
pub mod smoothing;

pub use error::{Error, Result};
