//! Block partitions of the coordinates and the block-restriction identities.

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};
use crate::hypercube::{truth_table, SignFunction, TruthTable};
use crate::polynomial::{MultilinearPolynomial, RealKernel};
use crate::randomized::estimator::{monte_carlo_scalar, EstimatorResult, Sampling};
use crate::randomized::statistics::{clamped_ratio, estimate_alpha};
use crate::randomized::StreamRng;

/// Exact block identity enumerates every vertex.
pub const BLOCK_IDENTITY_CAP: usize = 20;

/// Disjoint coordinate blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in blocks.iter().flatten() {
            if i >= n {
                return Err(crate::PtfError::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(invalid(format!("coordinate {i} appears in two blocks")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(invalid("blocks must cover every coordinate"));
        }
        if blocks.iter().any(Vec::is_empty) {
            return Err(invalid("blocks must be nonempty"));
        }
        Ok(Self { n, blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block index of each coordinate.
    pub fn owners(&self) -> Vec<usize> {
        let mut owner = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                owner[i] = b;
            }
        }
        owner
    }
}

/// `b` contiguous blocks; the first `n mod b` have one extra coordinate.
pub fn block_partition(n: usize, b: usize) -> Result<BlockPartition> {
    if b == 0 || b > n {
        return Err(invalid(format!("block count must lie in 1..={n}, got {b}")));
    }
    let (base, extra) = (n / b, n % b);
    let mut start = 0;
    let blocks = (0..b)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let block: Vec<usize> = (start..start + len).collect();
            start += len;
            block
        })
        .collect();
    Ok(BlockPartition { n, blocks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockIdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Average sensitivity of the block-`ℓ` restriction at the outer assignment
/// `outer`, read off the full truth table.
fn restricted_sensitivity(table: &TruthTable, block: &[usize], outer: u64) -> u64 {
    let k = block.len();
    let embed = |x: u64| -> u64 {
        block
            .iter()
            .enumerate()
            .filter(|&(j, _)| x >> j & 1 == 1)
            .fold(outer, |m, (_, &i)| m | 1 << i)
    };
    let sub: Vec<i8> = (0..1u64 << k).map(|x| table.get(embed(x))).collect();
    let mut sensitive = 0;
    for x in 0..sub.len() {
        for j in 0..k {
            if sub[x] != sub[x ^ 1 << j] {
                sensitive += 1;
            }
        }
    }
    sensitive
}

/// `as(f)` against `Σ_ℓ E_{A^ℓ}[as(f_{A^ℓ})]`, each restriction enumerated
/// separately.
pub fn block_sensitivity_identity_check(f: &SignFunction, partition: &BlockPartition) -> Result<BlockIdentityCheck> {
    let n = f.n();
    check_cap("block identity check", n, BLOCK_IDENTITY_CAP)?;
    if partition.n() != n {
        return Err(crate::PtfError::DimensionMismatch {
            expected: n,
            got: partition.n(),
        });
    }
    let table = truth_table(f)?;
    let lhs = table.average_sensitivity();
    let mut rhs = 0.0;
    for block in partition.blocks() {
        let inner: u64 = block.iter().fold(0, |m, &i| m | 1 << i);
        let outer_mask = ((1u64 << n) - 1) & !inner;
        // enumerate submasks of the outer coordinates
        let mut total = 0u64;
        let mut count = 0u64;
        let mut o = 0u64;
        loop {
            total += restricted_sensitivity(&table, block, o);
            count += 1;
            if o == outer_mask {
                break;
            }
            o = (o.wrapping_sub(outer_mask)) & outer_mask;
        }
        rhs += total as f64 / (count as f64 * (1u64 << block.len()) as f64);
    }
    Ok(BlockIdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Options for [`block_alpha_sum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockAlphaConfig {
    pub c1: f64,
    pub c2: f64,
    /// Pair every draw with its negation so each coordinate takes both signs
    /// equally often; one observation is the average over the pair.
    pub stratified: bool,
}

impl Default for BlockAlphaConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockAlphaSum {
    pub sum: EstimatorResult,
    pub alpha: EstimatorResult,
    pub blocks: usize,
    pub degree: usize,
    pub tau: f64,
    pub c1: f64,
    pub c2: f64,
    /// `c1 d^3 alpha sqrt(b) + c2 d^4 b tau^{1/(8d)}`.
    pub reference: f64,
}

pub fn block_alpha_reference(alpha: f64, degree: usize, blocks: usize, tau: f64, c1: f64, c2: f64) -> f64 {
    let d = degree as f64;
    let b = blocks as f64;
    let tail = if degree == 0 { 0.0 } else { tau.powf(1.0 / (8.0 * d)) };
    c1 * d.powi(3) * alpha * b.sqrt() + c2 * d.powi(4) * b * tail
}

/// Σ over blocks of `min(1, (Σ_{i∈ℓ} B_i ∂_i p(A))^2 / p(A)^2)`.
fn block_ratio_sum(value: f64, grad: &[f64], b: &[f64], owners: &[usize], slopes: &mut [f64]) -> f64 {
    slopes.iter_mut().for_each(|s| *s = 0.0);
    for ((&g, &bi), &o) in grad.iter().zip(b).zip(owners) {
        slopes[o] += g * bi;
    }
    slopes.iter().map(|&s| clamped_ratio(value, s)).sum()
}

/// Estimates `Σ_ℓ E_{A^ℓ}[α(p_{A^ℓ})]`.
///
/// For uniform `A, B` the restriction `p_{A^ℓ}` evaluated at the block part
/// of `A` is `p(A)`, and its derivative along the block part of `B` is
/// `Σ_{i∈ℓ} B_i ∂_i p(A)`, so one draw of `(A, B)` serves every block.
pub fn block_alpha_sum(
    p: &MultilinearPolynomial,
    partition: &BlockPartition,
    sampling: &Sampling,
    config: &BlockAlphaConfig,
) -> Result<BlockAlphaSum> {
    sampling.require_samples()?;
    let n = p.n();
    if partition.n() != n {
        return Err(crate::PtfError::DimensionMismatch {
            expected: n,
            got: partition.n(),
        });
    }
    let owners = partition.owners();
    let kernel = RealKernel::new(p);
    let blocks = partition.len();
    let stratified = config.stratified;
    let sum = monte_carlo_scalar(sampling, || {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut slopes = vec![0.0; blocks];
        let (kernel, owners) = (&kernel, &owners);
        move |rng: &mut StreamRng| {
            rng.fill_bernoulli(&mut a);
            rng.fill_bernoulli(&mut b);
            let value = kernel.value_and_gradient_on_cube(&a, &mut grad);
            let first = block_ratio_sum(value, &grad, &b, owners, &mut slopes);
            if !stratified {
                return first;
            }
            a.iter_mut().for_each(|x| *x = -*x);
            let value = kernel.value_and_gradient_on_cube(&a, &mut grad);
            0.5 * (first + block_ratio_sum(value, &grad, &b, owners, &mut slopes))
        }
    });
    let alpha = estimate_alpha(p, &sampling.derived(1))?;
    let tau = p.regularity().unwrap_or(0.0);
    let degree = p.degree();
    Ok(BlockAlphaSum {
        sum,
        alpha,
        blocks,
        degree,
        tau,
        c1: config.c1,
        c2: config.c2,
        reference: block_alpha_reference(alpha.estimate, degree, blocks, tau, config.c1, config.c2),
    })
}
