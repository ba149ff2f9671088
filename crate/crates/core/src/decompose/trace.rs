//! Level-by-level measurement of the block recursion.

use serde::{Deserialize, Serialize};

use super::blocks::{block_alpha_reference, block_partition};
use super::tree::{build_regularity_tree, LeafClass, RegularityConfig};
use crate::error::{check_cap, invalid, Result};
use crate::hypercube::{average_sensitivity_exact, SignFunction};
use crate::polynomial::MultilinearPolynomial;
use crate::randomized::estimator::Sampling;
use crate::randomized::statistics::{estimate_alpha, exact_alpha, EXACT_ALPHA_CAP};
use crate::randomized::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSchedule {
    /// Block count per level.
    pub blocks: Vec<usize>,
    pub regularity: RegularityConfig,
    pub c1: f64,
    pub c2: f64,
    /// Outer assignments drawn per block and population member.
    pub outer_samples: usize,
    /// Cap on the population carried to the next level.
    pub population_cap: usize,
    /// Restrictions with at most this many live variables get exact α.
    pub exact_cap: usize,
}

impl TraceSchedule {
    pub fn new(blocks: Vec<usize>, regularity: RegularityConfig) -> Self {
        Self {
            blocks,
            regularity,
            c1: 1.0,
            c2: 1.0,
            outer_samples: 16,
            population_cap: 64,
            exact_cap: 8,
        }
    }
}

/// Summary of the sampled per-block α values at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlephSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub exact_fraction: f64,
}

impl AlephSummary {
    fn from_values(values: &[(f64, bool)]) -> Self {
        if values.is_empty() {
            return Self {
                count: 0,
                mean: 0.0,
                min: 0.0,
                median: 0.0,
                max: 0.0,
                exact_fraction: 0.0,
            };
        }
        let mut v: Vec<f64> = values.iter().map(|x| x.0).collect();
        v.sort_by(f64::total_cmp);
        let count = v.len();
        Self {
            count,
            mean: v.iter().sum::<f64>() / count as f64,
            min: v[0],
            median: v[count / 2],
            max: v[count - 1],
            exact_fraction: values.iter().filter(|x| x.1).count() as f64 / count as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLevel {
    pub level: usize,
    pub members: usize,
    /// Mean live-variable count over the population.
    pub mean_n: f64,
    pub b: usize,
    /// Population mean of `Σ_ℓ E[α(p_{A^ℓ})]`.
    pub measured: f64,
    /// Population mean of the reference value.
    pub reference: f64,
    pub mean_block_alpha: f64,
    pub aleph: AlephSummary,
    pub regular_mass: f64,
    pub near_constant_mass: f64,
    pub bad_mass: f64,
    pub tree_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub levels: Vec<TraceLevel>,
    pub diagnostics: Vec<String>,
    pub seed: u64,
    pub stream: u64,
}

fn alpha_of(q: &MultilinearPolynomial, exact_cap: usize, sampling: &Sampling) -> Result<(f64, bool)> {
    let (c, _) = q.compact();
    if c.is_constant() {
        return Ok((if c.is_zero() { 1.0 } else { 0.0 }, true));
    }
    if c.n() <= exact_cap.min(EXACT_ALPHA_CAP) {
        Ok((exact_alpha(&c)?, true))
    } else {
        Ok((estimate_alpha(&c, sampling)?.estimate, false))
    }
}

/// Runs measure, regularize and partition at each scheduled level.
///
/// At every level each population member `q` (on its live variables) is
/// partitioned into `b` blocks; for each block, `outer_samples` uniform
/// assignments to the other coordinates give restrictions whose α values
/// form the level's empirical ℵ sample. Their sum over blocks is the
/// measured quantity. A regularity tree per member records leaf masses.
/// The sampled restrictions, thinned to `population_cap`, become the next
/// population. Nothing here is asserted; the trace only records.
pub fn recursion_trace(p: &MultilinearPolynomial, schedule: &TraceSchedule, sampling: &Sampling) -> Result<RecursionTrace> {
    if schedule.blocks.is_empty() || schedule.blocks.len() > 3 {
        return Err(invalid("the schedule must have between one and three levels"));
    }
    if schedule.outer_samples == 0 || schedule.population_cap == 0 {
        return Err(invalid("outer samples and population cap must be positive"));
    }
    sampling.require_samples()?;
    schedule.regularity.validate()?;

    let mut population = vec![p.clone()];
    let mut levels = Vec::new();
    let mut diagnostics = Vec::new();
    let mut inner_stream = 0u64;
    for (li, &b) in schedule.blocks.iter().enumerate() {
        let level = li + 1;
        let mut rng = StreamRng::new(sampling.seed, sampling.derived(100 + level as u32).stream);
        let inner = sampling.derived(200 + level as u32);
        let mut aleph = Vec::new();
        let mut next = Vec::new();
        let (mut measured, mut reference, mut mean_n) = (0.0, 0.0, 0.0);
        let (mut regular, mut near, mut bad) = (0.0, 0.0, 0.0);
        let mut failures = 0;
        for member in &population {
            let (q, _) = member.compact();
            mean_n += q.n() as f64;
            if q.n() == 0 {
                // constants have a single empty block with α 0 (or 1 for zero)
                let (a, exact) = alpha_of(&q, schedule.exact_cap, &inner)?;
                aleph.push((a, exact));
                measured += a;
                near += 1.0;
                next.push(q);
                continue;
            }
            let tree = build_regularity_tree(&q, &schedule.regularity)?;
            regular += tree.mass_of(|c| *c == LeafClass::Regular);
            near += tree.mass_of(|c| matches!(c, LeafClass::NearConstant { .. }));
            bad += tree.bad_mass;
            failures += usize::from(!tree.success);

            let bq = b.min(q.n());
            if bq < b {
                diagnostics.push(format!("level {level}: member with {} live variables uses {bq} blocks", q.n()));
            }
            let partition = block_partition(q.n(), bq)?;
            let mut member_sum = 0.0;
            for block in partition.blocks() {
                let outer: Vec<usize> = (0..q.n()).filter(|i| !block.contains(i)).collect();
                let mut block_total = 0.0;
                for _ in 0..schedule.outer_samples {
                    let fixed: Vec<(usize, i8)> = outer
                        .iter()
                        .map(|&i| (i, if rng.bernoulli_mask(1) == 1 { -1 } else { 1 }))
                        .collect();
                    let r = q.restrict_many(&fixed)?;
                    let s = inner.with_stream(inner.stream.wrapping_add(inner_stream));
                    inner_stream += 1;
                    let (a, exact) = alpha_of(&r, schedule.exact_cap, &s)?;
                    aleph.push((a, exact));
                    block_total += a;
                    next.push(r);
                }
                member_sum += block_total / schedule.outer_samples as f64;
            }
            measured += member_sum;
            let a = alpha_of(&q, schedule.exact_cap, &inner.with_stream(inner.stream.wrapping_add(inner_stream)))?.0;
            inner_stream += 1;
            let tau = q.regularity().unwrap_or(0.0);
            reference += block_alpha_reference(a, q.degree(), bq, tau, schedule.c1, schedule.c2);
        }
        let members = population.len();
        let m = members as f64;
        let summary = AlephSummary::from_values(&aleph);
        levels.push(TraceLevel {
            level,
            members,
            mean_n: mean_n / m,
            b,
            measured: measured / m,
            reference: reference / m,
            mean_block_alpha: summary.mean,
            aleph: summary,
            regular_mass: regular / m,
            near_constant_mass: near / m,
            bad_mass: bad / m,
            tree_failures: failures,
        });
        if next.len() > schedule.population_cap {
            // evenly spaced thinning keeps the choice deterministic
            let step = next.len() as f64 / schedule.population_cap as f64;
            next = (0..schedule.population_cap)
                .map(|k| next[(k as f64 * step) as usize].clone())
                .collect();
        }
        population = next;
    }
    Ok(RecursionTrace {
        levels,
        diagnostics,
        seed: sampling.seed,
        stream: sampling.stream,
    })
}

/// Exact α next to exact `as(sgn p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallAlphaCheck {
    pub alpha: f64,
    pub as_exact: f64,
    /// `as / α`, zero when both vanish.
    pub ratio: f64,
}

pub fn small_alpha_check(p: &MultilinearPolynomial) -> Result<SmallAlphaCheck> {
    check_cap("small alpha check", p.n(), EXACT_ALPHA_CAP)?;
    let alpha = exact_alpha(p)?;
    let as_exact = average_sensitivity_exact(&SignFunction::new(p.clone()))?;
    let ratio = if as_exact == 0.0 {
        0.0
    } else if alpha == 0.0 {
        f64::INFINITY
    } else {
        as_exact / alpha
    };
    Ok(SmallAlphaCheck { alpha, as_exact, ratio })
}
