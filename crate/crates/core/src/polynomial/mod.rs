//! Sparse multilinear polynomials over `n` real variables.
//!
//! A polynomial is a map from variable subsets to coefficients. Keys are
//! strictly increasing index lists, so multilinearity is structural. Values
//! are immutable: every operation returns a new polynomial.
//!
//! Points of the hypercube can also be packed into a `u64` mask (bit `i` set
//! means `x_i = -1`); [`CubeKernel`] evaluates on that representation and is
//! what the enumerators and Bernoulli samplers run on.

mod json;
mod kernel;

pub use json::{PolynomialFile, TermRecord};
pub use kernel::{CubeKernel, RealKernel, MAX_MASK_VARS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PtfError, Result};

/// Coefficients with absolute value below this are dropped after arithmetic.
pub const ZERO_TOLERANCE: f64 = 1e-15;

/// A single monomial `coeff * prod_{i in vars} x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    vars: Vec<u32>,
    coeff: f64,
}

impl Term {
    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.vars.binary_search(&(i as u32)).is_ok()
    }
}

/// Graded lexicographic order: by size, then lexicographically.
fn graded_cmp(a: &[u32], b: &[u32]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Mean, variance and L2 norm of `p` under uniform hypercube (equivalently
/// standard Gaussian) input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub l2_norm: f64,
}

/// A canonical sparse multilinear polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialFile", into = "PolynomialFile")]
pub struct MultilinearPolynomial {
    n: usize,
    terms: Vec<Term>,
}

impl MultilinearPolynomial {
    /// The zero polynomial on `n` variables.
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_accumulator(n, std::iter::once((Vec::new(), c)))
    }

    /// The coordinate function `x_i`.
    pub fn variable(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(PtfError::IndexOutOfRange { index: i, n });
        }
        Ok(Self::from_accumulator(n, std::iter::once((vec![i as u32], 1.0))))
    }

    /// `sum_i weights[i] * x_i`.
    pub fn linear(weights: &[f64]) -> Self {
        let n = weights.len();
        Self::from_accumulator(
            n,
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (vec![i as u32], w)),
        )
    }

    /// Builds a polynomial from `(variables, coefficient)` pairs.
    ///
    /// Variable lists may be given in any order but must not repeat an index.
    /// Repeated subsets are summed. Use [`MultilinearPolynomial::from_file`]
    /// for the strict loader that rejects them.
    pub fn from_terms<I, V>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (V, f64)>,
        V: AsRef<[usize]>,
    {
        let mut collected = Vec::new();
        for (vars, coeff) in terms {
            let vars = vars.as_ref();
            if !coeff.is_finite() {
                return Err(invalid(format!("non-finite coefficient {coeff}")));
            }
            let mut key: Vec<u32> = Vec::with_capacity(vars.len());
            for &i in vars {
                if i >= n {
                    return Err(PtfError::IndexOutOfRange { index: i, n });
                }
                key.push(i as u32);
            }
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(invalid(format!(
                    "repeated variable in monomial {vars:?}; polynomial must be multilinear"
                )));
            }
            collected.push((key, coeff));
        }
        Ok(Self::from_accumulator(n, collected))
    }

    /// Sums pre-validated sorted keys and drops near-zero coefficients.
    pub(crate) fn from_accumulator<I>(n: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (k, c) in terms {
            *acc.entry(k).or_insert(0.0) += c;
        }
        let mut terms: Vec<Term> = acc
            .into_iter()
            .filter(|(_, c)| c.abs() >= ZERO_TOLERANCE)
            .map(|(vars, coeff)| Term { vars, coeff })
            .collect();
        terms.sort_by(|a, b| graded_cmp(&a.vars, &b.vars));
        Self { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Coefficient of the monomial on `vars` (sorted), zero if absent.
    pub fn coeff(&self, vars: &[usize]) -> f64 {
        let key: Vec<u32> = vars.iter().map(|&i| i as u32).collect();
        self.terms
            .binary_search_by(|t| graded_cmp(&t.vars, &key))
            .map(|idx| self.terms[idx].coeff)
            .unwrap_or(0.0)
    }

    /// Indices that appear in at least one monomial, ascending.
    pub fn live_vars(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        for t in &self.terms {
            for &v in &t.vars {
                seen[v as usize] = true;
            }
        }
        (0..self.n).filter(|&i| seen[i]).collect()
    }

    /// Relabels the live variables to `0..k`, returning the compact polynomial
    /// together with the original index of each new variable.
    pub fn compact(&self) -> (Self, Vec<usize>) {
        let live = self.live_vars();
        let mut remap = vec![u32::MAX; self.n];
        for (new, &old) in live.iter().enumerate() {
            remap[old] = new as u32;
        }
        let terms = self
            .terms
            .iter()
            .map(|t| (t.vars.iter().map(|&v| remap[v as usize]).collect(), t.coeff));
        (Self::from_accumulator(live.len(), terms), live)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n {
            Err(PtfError::DimensionMismatch {
                expected: self.n,
                got,
            })
        } else {
            Ok(())
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(PtfError::IndexOutOfRange { index: i, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Evaluates `p(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.vars.iter().map(|&v| x[v as usize]).product::<f64>())
            .sum()
    }

    /// Evaluates `p` at a hypercube vertex.
    pub fn eval_cube(&self, x: &HypercubePoint) -> Result<f64> {
        self.check_len(x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let negatives = t.vars.iter().filter(|&&v| x.coords[v as usize] < 0).count();
                if negatives % 2 == 0 {
                    t.coeff
                } else {
                    -t.coeff
                }
            })
            .sum())
    }

    /// `∂p/∂x_i` as a polynomial on the same index space.
    pub fn partial_derivative(&self, i: usize) -> Result<Self> {
        self.check_index(i)?;
        let i = i as u32;
        let terms = self.terms.iter().filter_map(|t| {
            t.vars.binary_search(&i).ok().map(|pos| {
                let mut vars = t.vars.clone();
                vars.remove(pos);
                (vars, t.coeff)
            })
        });
        Ok(Self::from_accumulator(self.n, terms))
    }

    /// `∇p(x)`.
    pub fn gradient_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut grad = vec![0.0; self.n];
        for t in &self.terms {
            for (k, &i) in t.vars.iter().enumerate() {
                let rest: f64 = t
                    .vars
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &v)| x[v as usize])
                    .product();
                grad[i as usize] += t.coeff * rest;
            }
        }
        Ok(grad)
    }

    /// `D_v p(x) = v · ∇p(x)`.
    pub fn directional_derivative_eval(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        let grad = self.gradient_eval(x)?;
        Ok(grad.iter().zip(v).map(|(g, v)| g * v).sum())
    }

    /// Fixes `x_i = value` (`value` must be ±1). Coordinate `i` no longer
    /// appears in the result.
    pub fn restrict(&self, i: usize, value: i8) -> Result<Self> {
        self.restrict_many(&[(i, value)])
    }

    /// Fixes several coordinates at once.
    pub fn restrict_many(&self, fixed: &[(usize, i8)]) -> Result<Self> {
        let mut assign = vec![0i8; self.n];
        for &(i, value) in fixed {
            self.check_index(i)?;
            if value != 1 && value != -1 {
                return Err(invalid(format!("restriction value must be ±1, got {value}")));
            }
            assign[i] = value;
        }
        let terms = self.terms.iter().map(|t| {
            let mut sign = 1.0;
            let mut vars = Vec::with_capacity(t.vars.len());
            for &v in &t.vars {
                match assign[v as usize] {
                    0 => vars.push(v),
                    s => sign *= f64::from(s),
                }
            }
            (vars, sign * t.coeff)
        });
        Ok(Self::from_accumulator(self.n, terms))
    }

    pub fn moments(&self) -> Moments {
        let mean = self.coeff(&[]);
        let variance: f64 = self
            .terms
            .iter()
            .filter(|t| !t.vars.is_empty())
            .map(|t| t.coeff * t.coeff)
            .sum();
        Moments {
            mean,
            variance,
            l2_norm: (mean * mean + variance).sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.moments().variance
    }

    pub fn l2_norm(&self) -> f64 {
        self.moments().l2_norm
    }

    /// `Inf_i(p) = sum_{S ∋ i} coeff(S)^2`.
    pub fn influence(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self
            .terms
            .iter()
            .filter(|t| t.contains(i))
            .map(|t| t.coeff * t.coeff)
            .sum())
    }

    /// All `n` influences in one pass.
    pub fn influences(&self) -> Vec<f64> {
        let mut inf = vec![0.0; self.n];
        for t in &self.terms {
            let sq = t.coeff * t.coeff;
            for &v in &t.vars {
                inf[v as usize] += sq;
            }
        }
        inf
    }

    pub fn total_influence(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.vars.len() as f64 * t.coeff * t.coeff)
            .sum()
    }

    /// Largest influence, lowest index on ties. `None` when `n == 0`.
    pub fn max_influence(&self) -> Option<(usize, f64)> {
        self.influences()
            .into_iter()
            .enumerate()
            .fold(None, |best, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
    }

    /// `max_i Inf_i(p) <= tau * Var(p)`, with a relative slack of `1e-12` so
    /// exact ties survive rounding.
    pub fn is_regular(&self, tau: f64) -> Result<bool> {
        if !(tau > 0.0) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        let var = self.variance();
        if var <= 0.0 {
            return Err(PtfError::ConstantPolynomial);
        }
        let max = self.max_influence().map_or(0.0, |(_, v)| v);
        Ok(max <= tau * var * (1.0 + 1e-12))
    }

    /// The smallest `tau` for which `p` is `tau`-regular.
    pub fn regularity(&self) -> Result<f64> {
        let var = self.variance();
        if var <= 0.0 {
            return Err(PtfError::ConstantPolynomial);
        }
        Ok(self.max_influence().map_or(0.0, |(_, v)| v) / var)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_accumulator(
            self.n,
            self.terms.iter().map(|t| (t.vars.clone(), c * t.coeff)),
        )
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_len(other.n)?;
        Ok(Self::from_accumulator(
            self.n,
            self.terms
                .iter()
                .chain(&other.terms)
                .map(|t| (t.vars.clone(), t.coeff)),
        ))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(-1.0))
    }

    /// Product reduced with `x_i^2 = 1`, i.e. the product of the two functions
    /// on the hypercube: monomials multiply by symmetric difference.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_len(other.n)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push((symmetric_difference(&a.vars, &b.vars), a.coeff * b.coeff));
            }
        }
        Ok(Self::from_accumulator(self.n, out))
    }

    /// Bitmask kernel for hypercube evaluation; `None` when `n > 64`.
    pub fn cube_kernel(&self) -> Option<CubeKernel> {
        CubeKernel::new(self)
    }

    pub fn real_kernel(&self) -> RealKernel {
        RealKernel::new(self)
    }
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// A vertex of `{-1, +1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HypercubePoint {
    coords: Vec<i8>,
}

impl HypercubePoint {
    pub fn new(coords: Vec<i8>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|&&c| c != 1 && c != -1) {
            return Err(invalid(format!("hypercube coordinate must be ±1, got {bad}")));
        }
        Ok(Self { coords })
    }

    /// Unpacks a mask with bit `i` set meaning `x_i = -1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= MAX_MASK_VARS, "mask points support n <= {MAX_MASK_VARS}");
        Self {
            coords: (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        }
    }

    pub fn to_mask(&self) -> Option<u64> {
        (self.coords.len() <= MAX_MASK_VARS).then(|| {
            self.coords
                .iter()
                .enumerate()
                .filter(|(_, &c)| c < 0)
                .fold(0u64, |m, (i, _)| m | 1 << i)
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[i8] {
        &self.coords
    }

    /// The point with coordinate `i` negated.
    pub fn flipped(&self, i: usize) -> Self {
        let mut coords = self.coords.clone();
        coords[i] = -coords[i];
        Self { coords }
    }

    pub fn to_real(&self) -> RealPoint {
        RealPoint(self.coords.iter().map(|&c| f64::from(c)).collect())
    }
}

/// A point of `R^n` with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoint(Vec<f64>);

impl RealPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("real point coordinates must be finite"));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for RealPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
