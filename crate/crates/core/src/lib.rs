//! Exact and Monte Carlo analysis of low-degree polynomial threshold functions
//! `f = sgn(p)` on the Boolean hypercube and under Gaussian input.
//!
//! * [`polynomial`]: sparse multilinear arithmetic, influences, regularity.
//! * [`hypercube`]: truth tables, Walsh–Hadamard spectra, average and noise
//!   sensitivity, the Gotsman–Linial bound and its middle-layers witness.
//! * [`randomized`]: seeded samplers and estimators for the α/β statistics,
//!   tails, anticoncentration and Bernoulli/Gaussian invariance gaps.
//! * [`decompose`]: regularity decision trees, block partitions and the
//!   identities behind the block recursion.

pub mod decompose;
pub mod error;
pub mod hypercube;
pub mod polynomial;
pub mod randomized;

pub use error::{PtfError, Result};
pub use hypercube::{
    average_sensitivity_exact, fourier, gl_bound, middle_layers_witness, noise_sensitivity_exact,
    sgn, theorem_bound, truth_table, BoundConstants, FourierSpectrum, GlRow, SignFunction,
    TruthTable,
};
pub use polynomial::{HypercubePoint, Moments, MultilinearPolynomial, RealPoint};
