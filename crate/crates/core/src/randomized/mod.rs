//! Seeded sampling: generator streams, estimator plumbing, the distributional
//! statistics and a random polynomial generator.

pub mod estimator;
pub mod generate;
pub mod rng;
pub mod statistics;

pub use estimator::{EstimatorResult, RunningMoments, Sampling};
pub use generate::{monomial_count, random_instance, random_polynomial, PolynomialSpec};
pub use rng::{sample_bernoulli, sample_gaussian, StreamRng};
pub use statistics::{
    abs_comparison_gap, carbery_wright_estimate, carbery_wright_estimates, clamped_ratio,
    estimate_alpha, estimate_average_sensitivity, estimate_beta, estimate_noise_sensitivity,
    exact_alpha, hypercontractivity_check, invariance_gap, rotation_pair,
    strong_anticoncentration_estimate, strong_anticoncentration_estimates,
    strong_anticoncentration_rotated, tail_curve, tail_envelope, weak_anticoncentration_estimate,
    weak_anticoncentration_exact, weak_anticoncentration_floor, CdfGap, Distribution,
    HypercontractivityCheck, InvarianceGap, TailCurve, DEFAULT_GRID_POINTS, EXACT_ALPHA_CAP,
};
