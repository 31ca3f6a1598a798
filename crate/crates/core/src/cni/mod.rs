//! Contractive noisy iteration: feasible sets, loss families, seeded noise
//! streams and the projected noisy SGD variants.

mod audit;
mod dataset;
mod loss;
mod noise;
mod sets;
mod sgd;

pub use audit::{
    audit_lipschitz, audit_smoothness, check_contractivity, check_contractivity_on,
    check_contractivity_with, ContractivityReport, Probe, Violation,
};
pub use dataset::{read_binary, read_csv, write_binary, write_csv, BINARY_MAGIC};
pub use loss::{
    huber, ClippedLeastSquares, Domain, Example, GradientOracle, HuberLocation, Linear, Logistic,
    LossFamily, NormHinge, Quadratic, Zero,
};
pub use noise::{box_muller, derive_seed, unit_open, GaussianStream, Purpose};
pub use sgd::{
    amplification_applies, pnmsgd, pnsgd, run_variant, skip_offset, skip_pnsgd,
    skip_pnsgd_with_offset, stop_pnsgd, stop_pnsgd_at, stop_time, RunOutcome, SgdRunConfig,
    Variant,
};
pub use sets::ConvexSet;

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
