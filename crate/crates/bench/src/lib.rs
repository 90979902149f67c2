//! Shared fixtures for the benchmark targets.

use concentrate_core::SchmidtPair;

/// The working pair used across benchmarks: far enough from maximal
/// that every branch stays populated.
pub fn standard_pair() -> SchmidtPair {
    SchmidtPair::from_alpha_sq(0.75).expect("valid pair")
}

/// Majority weights spanning the interesting range, for grid-shaped
/// benchmarks.
pub fn weight_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 0.5 + 0.49 * k as f64 / (points - 1).max(1) as f64)
        .collect()
}
