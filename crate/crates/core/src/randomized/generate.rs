use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::StreamRng;
use crate::error::{invalid, PtfError, Result};
use crate::polynomial::MultilinearPolynomial;

/// Largest number of terms the generator will produce.
pub const MAX_GENERATED_TERMS: usize = 1 << 20;
/// Below this many candidate monomials the generator samples from the full
/// list instead of rejection sampling.
const ENUMERATE_BELOW: u128 = 1 << 16;

/// Shape of a random polynomial: `terms` distinct monomials of degree at most
/// `d` in `n` variables. `None` means `min(#monomials, 4n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub n: usize,
    pub d: usize,
    pub terms: Option<usize>,
}

/// `Σ_{k<=d} C(n, k)`, saturating.
pub fn monomial_count(n: usize, d: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=d.min(n) {
        total = total.saturating_add(c);
        // C(n, k+1) = C(n, k) (n-k) / (k+1); exact while it fits
        c = match c.checked_mul((n - k) as u128) {
            Some(v) => v / (k as u128 + 1),
            None => return u128::MAX,
        };
    }
    total
}

impl PolynomialSpec {
    pub fn resolved_terms(&self) -> Result<usize> {
        let total = monomial_count(self.n, self.d);
        let terms = match self.terms {
            Some(t) => t,
            None => total.min(4 * self.n.max(1) as u128) as usize,
        };
        if terms as u128 > total {
            return Err(PtfError::Infeasible(format!(
                "{terms} distinct monomials requested but only {total} exist for n = {}, d = {}",
                self.n, self.d
            )));
        }
        if terms > MAX_GENERATED_TERMS {
            return Err(PtfError::Infeasible(format!(
                "{terms} terms exceeds the generator limit {MAX_GENERATED_TERMS}"
            )));
        }
        Ok(terms)
    }
}

fn all_monomials(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for k in 1..=d.min(n) {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            out.push(comb.clone());
            let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
                break;
            };
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// A random multilinear polynomial: distinct uniformly chosen monomials of
/// degree at most `d` with standard normal coefficients. Output depends only
/// on the requested shape and the generator state.
pub fn random_polynomial(spec: &PolynomialSpec, rng: &mut StreamRng) -> Result<MultilinearPolynomial> {
    if spec.n > u32::MAX as usize {
        return Err(invalid("too many variables"));
    }
    let terms = spec.resolved_terms()?;
    let total = monomial_count(spec.n, spec.d);
    let mut chosen: Vec<(Vec<usize>, f64)> = Vec::with_capacity(terms);
    if total <= ENUMERATE_BELOW || (terms as u128) * 4 > total {
        let all = all_monomials(spec.n, spec.d);
        for idx in rand::seq::index::sample(rng, all.len(), terms).into_iter() {
            let c: f64 = rng.sample(StandardNormal);
            chosen.push((all[idx].clone(), c));
        }
    } else {
        // sizes weighted by C(n, k) make each monomial equally likely
        let ln_weights: Vec<f64> = (0..=spec.d.min(spec.n))
            .map(|k| ln_choose(spec.n, k))
            .collect();
        let top = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sizes = WeightedIndex::new(ln_weights.iter().map(|w| (w - top).exp()))
            .map_err(|e| invalid(e.to_string()))?;
        let mut seen = HashSet::with_capacity(terms);
        while chosen.len() < terms {
            let k = sizes.sample(rng);
            let mut vars = rand::seq::index::sample(rng, spec.n, k).into_vec();
            vars.sort_unstable();
            if seen.insert(vars.clone()) {
                let c: f64 = rng.sample(StandardNormal);
                chosen.push((vars, c));
            }
        }
    }
    MultilinearPolynomial::from_terms(spec.n, chosen)
}

/// A random polynomial whose shape is itself random: `d` uniform in
/// `1..=max_d`, `n` uniform in `max(2, d)..=max_n`, default term count.
pub fn random_instance(rng: &mut StreamRng, max_n: usize, max_d: usize) -> Result<MultilinearPolynomial> {
    if max_d == 0 || max_n < 2 || max_n < max_d {
        return Err(invalid("random instances need 1 <= max_d <= max_n and max_n >= 2"));
    }
    let d = 1 + rng.random_range(0..max_d);
    let lo = d.max(2);
    let n = rng.random_range(lo..=max_n);
    random_polynomial(&PolynomialSpec { n, d, terms: None }, rng)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}
