//! Exact analysis of sign functions by enumerating `{-1, +1}^n`.
//!
//! Truth tables and Fourier spectra are indexed by `u64` masks with bit `i`
//! set iff `x_i = -1`. Under that convention the character `χ_S(x)` is
//! `(-1)^{popcount(S & x)}`, so the Walsh–Hadamard butterflies need no
//! reordering.

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};
use crate::polynomial::{HypercubePoint, MultilinearPolynomial};

/// Largest `n` the enumerators accept.
pub const ENUMERATION_CAP: usize = 24;

/// `sgn` with the convention `sgn(0) = +1`.
#[inline]
pub fn sgn(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// `f = sgn(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignFunction {
    source: MultilinearPolynomial,
}

impl SignFunction {
    pub fn new(source: MultilinearPolynomial) -> Self {
        Self { source }
    }

    pub fn source(&self) -> &MultilinearPolynomial {
        &self.source
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn eval(&self, x: &HypercubePoint) -> Result<i8> {
        Ok(sgn(self.source.eval_cube(x)?))
    }

    pub fn truth_table(&self) -> Result<TruthTable> {
        truth_table(self)
    }
}

impl From<MultilinearPolynomial> for SignFunction {
    fn from(p: MultilinearPolynomial) -> Self {
        Self::new(p)
    }
}

/// Values of a ±1 function at all `2^n` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    values: Vec<i8>,
}

impl TruthTable {
    pub fn from_values(n: usize, values: Vec<i8>) -> Result<Self> {
        check_cap("truth table", n, ENUMERATION_CAP)?;
        if values.len() != 1 << n {
            return Err(invalid(format!(
                "truth table for n = {n} needs {} entries, got {}",
                1u64 << n,
                values.len()
            )));
        }
        if values.iter().any(|&v| v != 1 && v != -1) {
            return Err(invalid("truth table entries must be ±1"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, mask: u64) -> i8 {
        self.values[mask as usize]
    }

    /// `Inf_i(f) = Pr[f(A) != f(A^i)]` for every coordinate.
    pub fn influences(&self) -> Vec<f64> {
        let size = self.values.len();
        (0..self.n)
            .map(|i| {
                let bit = 1usize << i;
                let mut edges = 0u64;
                for x in (0..size).filter(|x| x & bit == 0) {
                    if self.values[x] != self.values[x | bit] {
                        edges += 1;
                    }
                }
                // each sensitive edge is counted once but covers two points
                2.0 * edges as f64 / size as f64
            })
            .collect()
    }

    /// Expected number of sensitive coordinates at a uniform point.
    pub fn average_sensitivity(&self) -> f64 {
        let size = self.values.len();
        let mut sensitive = 0u64;
        for x in 0..size {
            for i in 0..self.n {
                if self.values[x] != self.values[x ^ (1 << i)] {
                    sensitive += 1;
                }
            }
        }
        sensitive as f64 / size as f64
    }

    /// Fraction of vertices where `f` differs from `sign`.
    pub fn disagreement_with(&self, sign: i8) -> f64 {
        let bad = self.values.iter().filter(|&&v| v != sign).count();
        bad as f64 / self.values.len() as f64
    }
}

/// Enumerates `sgn(p)` on every vertex.
pub fn truth_table(f: &SignFunction) -> Result<TruthTable> {
    let n = f.n();
    check_cap("truth table", n, ENUMERATION_CAP)?;
    let kernel = f.source.cube_kernel().expect("n within mask range");
    let values = (0..1u64 << n).map(|m| sgn(kernel.eval(m))).collect();
    Ok(TruthTable { n, values })
}

/// Fourier coefficients `ĥ(S) = E[f(A) χ_S(A)]` indexed by subset mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coefficients: Vec<f64>,
}

impl FourierSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coeff(&self, subset: u64) -> f64 {
        self.coefficients[subset as usize]
    }

    /// `sum_S ĥ(S)^2`; equal to 1 for a ±1 function.
    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// `sum_S |S| ĥ(S)^2`.
    pub fn total_influence(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(s, c)| s.count_ones() as f64 * c * c)
            .sum()
    }

    /// `sum_S ĥ(S)^2 rho^{|S|}`.
    pub fn noise_stability(&self, rho: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(s, c)| c * c * rho.powi(s.count_ones() as i32))
            .sum()
    }
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn fwht(values: &mut [f64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for j in block..block + h {
                let (a, b) = (values[j], values[j + h]);
                values[j] = a + b;
                values[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

pub fn fourier(t: &TruthTable) -> Result<FourierSpectrum> {
    check_cap("Fourier transform", t.n, ENUMERATION_CAP)?;
    let mut coefficients: Vec<f64> = t.values.iter().map(|&v| f64::from(v)).collect();
    fwht(&mut coefficients);
    let scale = 1.0 / coefficients.len() as f64;
    coefficients.iter_mut().for_each(|c| *c *= scale);
    Ok(FourierSpectrum {
        n: t.n,
        coefficients,
    })
}

/// `as(f)` by counting sensitive edges.
pub fn average_sensitivity_exact(f: &SignFunction) -> Result<f64> {
    Ok(truth_table(f)?.average_sensitivity())
}

/// `NS_delta(f) = Pr[f(A) != f(Ã)]` where `Ã` flips each coordinate with
/// probability `delta`, via `1/2 - 1/2 sum_S ĥ(S)^2 (1 - 2 delta)^{|S|}`.
pub fn noise_sensitivity_exact(f: &SignFunction, delta: f64) -> Result<f64> {
    check_noise_rate(delta)?;
    let spectrum = fourier(&truth_table(f)?)?;
    Ok(noise_sensitivity_from_spectrum(&spectrum, delta))
}

pub fn noise_sensitivity_from_spectrum(spectrum: &FourierSpectrum, delta: f64) -> f64 {
    (0.5 - 0.5 * spectrum.noise_stability(1.0 - 2.0 * delta)).max(0.0)
}

pub(crate) fn check_noise_rate(delta: f64) -> Result<()> {
    if (0.0..=0.5).contains(&delta) {
        Ok(())
    } else {
        Err(invalid(format!("noise rate must lie in [0, 1/2], got {delta}")))
    }
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// The conjectured Gotsman–Linial maximum
/// `2^{-n+1} sum_{k=0}^{d-1} C(n, ⌊(n-k)/2⌋) (n - ⌊(n-k)/2⌋)`.
///
/// Integer arithmetic is exact for `n <= 63`; larger `n` uses log-space
/// binomials. Terms with `k > n` vanish.
pub fn gl_bound(n: usize, d: usize) -> Result<f64> {
    if n <= 1 {
        return Err(invalid(format!("the Gotsman–Linial bound needs n > 1, got {n}")));
    }
    if d == 0 {
        return Err(invalid("the Gotsman–Linial bound needs d >= 1"));
    }
    let n64 = n as u64;
    let ks = 0..(d as u64).min(n64 + 1);
    if n <= 63 {
        let total: u128 = ks
            .map(|k| {
                let m = (n64 - k) / 2;
                binomial_u128(n64, m) * u128::from(n64 - m)
            })
            .sum();
        Ok(total as f64 * 2f64.powi(-(n as i32 - 1)))
    } else {
        let scale = -((n - 1) as f64) * std::f64::consts::LN_2;
        Ok(ks
            .map(|k| {
                let m = (n64 - k) / 2;
                (ln_binomial(n64, m) + scale).exp() * (n64 - m) as f64
            })
            .sum())
    }
}

/// `prod_{j<d} (sum_i x_i - θ_j)` reduced to multilinear form, with
/// `θ_j = 2j - (d-1) + σ` and `σ ∈ {0,1}` chosen so every `θ_j` has parity
/// opposite to `n`; no vertex then lies on any of the hyperplanes.
pub fn middle_layers_witness(n: usize, d: usize) -> Result<MultilinearPolynomial> {
    if d == 0 || d > n {
        return Err(invalid(format!("witness needs 1 <= d <= n, got d = {d}, n = {n}")));
    }
    let sigma = if (d - 1) % 2 != n % 2 { 0 } else { 1 };
    let sum = MultilinearPolynomial::linear(&vec![1.0; n]);
    let mut product = MultilinearPolynomial::constant(n, 1.0);
    for j in 0..d {
        let theta = 2 * j as i64 - (d as i64 - 1) + sigma;
        let factor = sum.checked_add(&MultilinearPolynomial::constant(n, -(theta as f64)))?;
        product = product.checked_mul(&factor)?;
    }
    Ok(product)
}

/// Constants standing in for the unspecified `O(·)` exponents of the
/// `sqrt(n) (log n)^{O(d log d)} 2^{O(d^2 log d)}` bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_log: f64,
    pub c_exp: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c_log: 1.0,
            c_exp: 1.0,
        }
    }
}

/// `sqrt(n) (ln n)^{c_log d L} 2^{c_exp d^2 L}` with `L = max(1, ln d)`.
///
/// Parameterized evaluation only; the constants are user choices.
pub fn theorem_bound(n: f64, d: usize, constants: BoundConstants) -> Result<f64> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(invalid(format!("theorem bound needs n > 1, got {n}")));
    }
    if d == 0 {
        return Err(invalid("theorem bound needs d >= 1"));
    }
    let BoundConstants { c_log, c_exp } = constants;
    if !(c_log >= 0.0 && c_exp >= 0.0 && c_log.is_finite() && c_exp.is_finite()) {
        return Err(invalid(format!(
            "bound constants must be finite and non-negative, got c_log = {c_log}, c_exp = {c_exp}"
        )));
    }
    let d = d as f64;
    let l = d.ln().max(1.0);
    Ok(n.sqrt() * n.ln().powf(c_log * d * l) * 2f64.powf(c_exp * d * d * l))
}

/// One row of the witness-versus-bound report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlRow {
    pub n: usize,
    pub d: usize,
    pub as_exact: f64,
    pub gl_bound: f64,
    pub ratio: f64,
    /// The middle-layers witness attains the bound to within `1e-9`.
    pub witness_flag: bool,
}

impl GlRow {
    pub const CSV_HEADER: [&'static str; 6] =
        ["n", "d", "as_exact", "gl_bound", "ratio", "witness_flag"];
}

/// Average sensitivity of the middle-layers witness against the bound.
pub fn gl_witness_row(n: usize, d: usize) -> Result<GlRow> {
    let witness = SignFunction::new(middle_layers_witness(n, d)?);
    let as_exact = average_sensitivity_exact(&witness)?;
    let bound = gl_bound(n, d)?;
    Ok(GlRow {
        n,
        d,
        as_exact,
        gl_bound: bound,
        ratio: as_exact / bound,
        witness_flag: (as_exact - bound).abs() <= 1e-9,
    })
}
