//! Estimators (and small-`n` exact oracles) for the distributional quantities
//! of a polynomial under Bernoulli and Gaussian input.

use serde::{Deserialize, Serialize};

use super::estimator::{collect_draws, monte_carlo, monte_carlo_scalar, EstimatorResult, Sampling};
use super::rng::StreamRng;
use crate::error::{check_cap, invalid, PtfError, Result};
use crate::hypercube::sgn;
use crate::polynomial::{CubeKernel, MultilinearPolynomial, RealKernel, RealPoint};

/// Exact α enumerates `2^{2n}` pairs.
pub const EXACT_ALPHA_CAP: usize = 12;
/// Exact weak anticoncentration enumerates `2^n` points.
pub const WEAK_ANTICONCENTRATION_CAP: usize = 20;
/// Exact hypercontractivity check enumerates `2^n` points.
pub const HYPERCONTRACTIVITY_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Bernoulli,
    Gaussian,
}

/// `min(1, D^2 / p^2)`, read as `∫_0^1 1{|p| <= s^{-1/2} |D|} ds` so that a
/// zero value contributes 1.
#[inline]
pub fn clamped_ratio(value: f64, slope: f64) -> f64 {
    if value == 0.0 {
        1.0
    } else {
        (slope * slope / (value * value)).min(1.0)
    }
}

/// Draws `p(Z)` and `D_W p(Z)` for independent `Z, W` from one distribution.
enum PairSampler<'a> {
    Mask { kernel: CubeKernel, n: usize },
    Real {
        kernel: &'a RealKernel,
        dist: Distribution,
        x: Vec<f64>,
        v: Vec<f64>,
    },
}

impl<'a> PairSampler<'a> {
    fn new(p: &MultilinearPolynomial, real: &'a RealKernel, dist: Distribution) -> Self {
        match (dist, p.cube_kernel()) {
            (Distribution::Bernoulli, Some(kernel)) => PairSampler::Mask { kernel, n: p.n() },
            _ => PairSampler::Real {
                kernel: real,
                dist,
                x: vec![0.0; p.n()],
                v: vec![0.0; p.n()],
            },
        }
    }

    fn fill(dist: Distribution, rng: &mut StreamRng, out: &mut [f64]) {
        match dist {
            Distribution::Bernoulli => rng.fill_bernoulli(out),
            Distribution::Gaussian => rng.fill_gaussian(out),
        }
    }

    #[inline]
    fn value(&mut self, rng: &mut StreamRng) -> f64 {
        match self {
            PairSampler::Mask { kernel, n } => kernel.eval(rng.bernoulli_mask(*n)),
            PairSampler::Real { kernel, dist, x, .. } => {
                Self::fill(*dist, rng, x);
                kernel.eval(x)
            }
        }
    }

    #[inline]
    fn value_and_slope(&mut self, rng: &mut StreamRng) -> (f64, f64) {
        match self {
            PairSampler::Mask { kernel, n } => {
                let a = rng.bernoulli_mask(*n);
                let b = rng.bernoulli_mask(*n);
                kernel.value_and_directional(a, b)
            }
            PairSampler::Real { kernel, dist, x, v } => {
                Self::fill(*dist, rng, x);
                Self::fill(*dist, rng, v);
                kernel.value_and_slope(x, v)
            }
        }
    }
}

fn nonzero_norm(p: &MultilinearPolynomial) -> Result<f64> {
    let norm = p.l2_norm();
    if norm > 0.0 {
        Ok(norm)
    } else {
        Err(PtfError::ZeroPolynomial)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn ratio_estimate(p: &MultilinearPolynomial, dist: Distribution, sampling: &Sampling) -> Result<EstimatorResult> {
    sampling.require_samples()?;
    let real = p.real_kernel();
    Ok(monte_carlo_scalar(sampling, || {
        let mut sampler = PairSampler::new(p, &real, dist);
        move |rng: &mut StreamRng| {
            let (value, slope) = sampler.value_and_slope(rng);
            clamped_ratio(value, slope)
        }
    }))
}

/// `α(p) = E[min(1, |D_B p(A)|^2 / |p(A)|^2)]` for independent uniform `A, B`.
pub fn estimate_alpha(p: &MultilinearPolynomial, sampling: &Sampling) -> Result<EstimatorResult> {
    ratio_estimate(p, Distribution::Bernoulli, sampling)
}

/// `β(p)`: the Gaussian analogue of α.
pub fn estimate_beta(p: &MultilinearPolynomial, sampling: &Sampling) -> Result<EstimatorResult> {
    ratio_estimate(p, Distribution::Gaussian, sampling)
}

/// α by enumerating every `(A, B)`; for fixed `A` the directional derivative
/// is updated along a Gray code over `B`.
pub fn exact_alpha(p: &MultilinearPolynomial) -> Result<f64> {
    let n = p.n();
    check_cap("exact alpha", n, EXACT_ALPHA_CAP)?;
    let kernel = p.cube_kernel().expect("n within mask range");
    let size = 1u64 << n;
    let mut grad = vec![0.0; n];
    let mut total = 0.0;
    for a in 0..size {
        let value = kernel.value_and_gradient(a, &mut grad);
        if value == 0.0 {
            total += size as f64;
            continue;
        }
        let inv = 1.0 / (value * value);
        let mut slope: f64 = grad.iter().sum();
        let mut b = 0u64;
        let mut inner = (slope * slope * inv).min(1.0);
        for step in 1..size {
            let i = step.trailing_zeros() as usize;
            b ^= 1 << i;
            if b >> i & 1 == 1 {
                slope -= 2.0 * grad[i];
            } else {
                slope += 2.0 * grad[i];
            }
            inner += (slope * slope * inv).min(1.0);
        }
        total += inner;
    }
    Ok(total / (size * size) as f64)
}

/// Tail probabilities `Pr(|p| > N |p|_2)` next to the envelope
/// `2^{-(N/2)^{2/d}}` (with `d = max(1, deg p)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub distribution: Distribution,
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub envelope: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
}

impl TailCurve {
    pub const CSV_HEADER: [&'static str; 3] = ["threshold", "probability", "envelope"];

    /// `(threshold, probability, envelope)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.thresholds
            .iter()
            .zip(&self.probabilities)
            .zip(&self.envelope)
            .map(|((&t, &p), &e)| (t, p, e))
    }
}

pub fn tail_envelope(threshold: f64, degree: usize) -> f64 {
    let d = degree.max(1) as f64;
    2f64.powf(-(threshold / 2.0).powf(2.0 / d))
}

pub fn tail_curve(
    p: &MultilinearPolynomial,
    dist: Distribution,
    thresholds: &[f64],
    sampling: &Sampling,
) -> Result<TailCurve> {
    let norm = nonzero_norm(p)?;
    sampling.require_samples()?;
    if thresholds.is_empty() {
        return Err(invalid("at least one threshold is required"));
    }
    for w in thresholds.windows(2) {
        if !(w[0] < w[1]) {
            return Err(invalid("thresholds must be strictly increasing"));
        }
    }
    positive("tail threshold", thresholds[0])?;
    let real = p.real_kernel();
    let moments = monte_carlo(sampling, thresholds.len(), || {
        let mut sampler = PairSampler::new(p, &real, dist);
        move |rng: &mut StreamRng, out: &mut [f64]| {
            let r = sampler.value(rng).abs() / norm;
            for (o, &t) in out.iter_mut().zip(thresholds) {
                *o = f64::from(u8::from(r > t));
            }
        }
    });
    let degree = p.degree();
    Ok(TailCurve {
        distribution: dist,
        thresholds: thresholds.to_vec(),
        probabilities: moments.iter().map(|m| m.mean()).collect(),
        std_errors: moments.iter().map(|m| m.std_error()).collect(),
        envelope: thresholds.iter().map(|&t| tail_envelope(t, degree)).collect(),
        samples: sampling.samples,
        seed: sampling.seed,
        stream: sampling.stream,
    })
}

/// `Pr(|p(A)| >= |p|_2 / 2)` by enumeration.
pub fn weak_anticoncentration_exact(p: &MultilinearPolynomial) -> Result<f64> {
    let norm = nonzero_norm(p)?;
    check_cap("exact weak anticoncentration", p.n(), WEAK_ANTICONCENTRATION_CAP)?;
    let kernel = p.cube_kernel().expect("n within mask range");
    let size = 1u64 << p.n();
    let hits = (0..size).filter(|&m| kernel.eval(m).abs() >= norm / 2.0).count();
    Ok(hits as f64 / size as f64)
}

/// The weak anticoncentration floor `9^{-d} / 2`.
pub fn weak_anticoncentration_floor(degree: usize) -> f64 {
    0.5 * 9f64.powi(-(degree as i32))
}

pub fn weak_anticoncentration_estimate(
    p: &MultilinearPolynomial,
    dist: Distribution,
    sampling: &Sampling,
) -> Result<EstimatorResult> {
    let norm = nonzero_norm(p)?;
    sampling.require_samples()?;
    let real = p.real_kernel();
    Ok(monte_carlo_scalar(sampling, || {
        let mut sampler = PairSampler::new(p, &real, dist);
        move |rng: &mut StreamRng| f64::from(u8::from(sampler.value(rng).abs() >= norm / 2.0))
    }))
}

/// `Pr(|p(X)| <= eps |p|_2)` for each `eps`, from one shared set of draws.
pub fn carbery_wright_estimates(
    p: &MultilinearPolynomial,
    eps: &[f64],
    sampling: &Sampling,
) -> Result<Vec<EstimatorResult>> {
    let norm = nonzero_norm(p)?;
    sampling.require_samples()?;
    for &e in eps {
        positive("epsilon", e)?;
    }
    let real = p.real_kernel();
    let moments = monte_carlo(sampling, eps.len(), || {
        let mut sampler = PairSampler::new(p, &real, Distribution::Gaussian);
        move |rng: &mut StreamRng, out: &mut [f64]| {
            let v = sampler.value(rng).abs();
            for (o, &e) in out.iter_mut().zip(eps) {
                *o = f64::from(u8::from(v <= e * norm));
            }
        }
    });
    Ok(moments.iter().map(|m| EstimatorResult::from_moments(m, sampling)).collect())
}

pub fn carbery_wright_estimate(p: &MultilinearPolynomial, eps: f64, sampling: &Sampling) -> Result<EstimatorResult> {
    Ok(carbery_wright_estimates(p, &[eps], sampling)?[0])
}

/// `(cos θ x + sin θ y, -sin θ x + cos θ y)`.
pub fn rotation_pair(x: &[f64], y: &[f64], theta: f64) -> Result<(RealPoint, RealPoint)> {
    if x.len() != y.len() {
        return Err(PtfError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (s, c) = theta.sin_cos();
    let (xs, ys) = x.iter().zip(y).map(|(&a, &b)| (c * a + s * b, -s * a + c * b)).unzip();
    Ok((RealPoint::new(xs)?, RealPoint::new(ys)?))
}

/// `Pr(|p(X)| <= eps |D_Y p(X)|)` for each `eps`, from one shared set of draws.
pub fn strong_anticoncentration_estimates(
    p: &MultilinearPolynomial,
    eps: &[f64],
    sampling: &Sampling,
) -> Result<Vec<EstimatorResult>> {
    if p.is_constant() {
        return Err(PtfError::ConstantPolynomial);
    }
    sampling.require_samples()?;
    for &e in eps {
        positive("epsilon", e)?;
    }
    let real = p.real_kernel();
    let moments = monte_carlo(sampling, eps.len(), || {
        let mut sampler = PairSampler::new(p, &real, Distribution::Gaussian);
        move |rng: &mut StreamRng, out: &mut [f64]| {
            let (value, slope) = sampler.value_and_slope(rng);
            for (o, &e) in out.iter_mut().zip(eps) {
                *o = f64::from(u8::from(value.abs() <= e * slope.abs()));
            }
        }
    });
    Ok(moments.iter().map(|m| EstimatorResult::from_moments(m, sampling)).collect())
}

pub fn strong_anticoncentration_estimate(
    p: &MultilinearPolynomial,
    eps: f64,
    sampling: &Sampling,
) -> Result<EstimatorResult> {
    Ok(strong_anticoncentration_estimates(p, &[eps], sampling)?[0])
}

/// The same probability through the rotation coupling: draw `X, Y` and a
/// uniform angle, and test the event at `(X_θ, Y_θ)`, which is again a pair
/// of independent standard Gaussians.
pub fn strong_anticoncentration_rotated(
    p: &MultilinearPolynomial,
    eps: f64,
    sampling: &Sampling,
) -> Result<EstimatorResult> {
    if p.is_constant() {
        return Err(PtfError::ConstantPolynomial);
    }
    sampling.require_samples()?;
    positive("epsilon", eps)?;
    let real = p.real_kernel();
    let n = p.n();
    Ok(monte_carlo_scalar(sampling, || {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let real = &real;
        move |rng: &mut StreamRng| {
            rng.fill_gaussian(&mut x);
            rng.fill_gaussian(&mut y);
            let theta = std::f64::consts::TAU * rng.uniform();
            let (xt, yt) = rotation_pair(&x, &y, theta).expect("equal lengths");
            let (value, slope) = real.value_and_slope(xt.coords(), yt.coords());
            f64::from(u8::from(value.abs() <= eps * slope.abs()))
        }
    }))
}

/// One grid point of an invariance measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfGap {
    pub t: f64,
    pub bernoulli_cdf: f64,
    pub gaussian_cdf: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceGap {
    pub gap: f64,
    pub per_t: Vec<CdfGap>,
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
}

/// Number of quantile positions in the default grid.
pub const DEFAULT_GRID_POINTS: usize = 201;

fn pooled_quantile_grid(a: &[f64], b: &[f64], points: usize) -> Vec<f64> {
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let last = pooled.len() - 1;
    let mut grid: Vec<f64> = (0..points)
        .map(|k| {
            let pos = k as f64 / (points - 1).max(1) as f64;
            pooled[(pos * last as f64).round() as usize]
        })
        .collect();
    grid.dedup();
    grid
}

fn empirical_cdf(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&v| v <= t) as f64 / sorted.len() as f64
}

/// `|Pr(p(X) <= t) - Pr(p(A) <= t)|` on a grid of `t` values, each CDF from
/// `sampling.samples` draws. Without an explicit grid, 201 evenly spaced
/// quantiles of the pooled sample are used.
pub fn invariance_gap(
    p: &MultilinearPolynomial,
    t_grid: Option<&[f64]>,
    sampling: &Sampling,
) -> Result<InvarianceGap> {
    sampling.require_samples()?;
    if let Some(grid) = t_grid {
        if grid.is_empty() {
            return Err(invalid("t grid must be nonempty"));
        }
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(invalid("t grid must be sorted"));
        }
    }
    let real = p.real_kernel();
    let draws = |dist: Distribution, s: Sampling| {
        let mut v = collect_draws(&s, || {
            let mut sampler = PairSampler::new(p, &real, dist);
            move |rng: &mut StreamRng| sampler.value(rng)
        });
        v.sort_by(f64::total_cmp);
        v
    };
    let bern = draws(Distribution::Bernoulli, sampling.derived(1));
    let gauss = draws(Distribution::Gaussian, sampling.derived(2));
    let grid = match t_grid {
        Some(g) => g.to_vec(),
        None => pooled_quantile_grid(&bern, &gauss, DEFAULT_GRID_POINTS),
    };
    let per_t: Vec<CdfGap> = grid
        .into_iter()
        .map(|t| {
            let bernoulli_cdf = empirical_cdf(&bern, t);
            let gaussian_cdf = empirical_cdf(&gauss, t);
            CdfGap {
                t,
                bernoulli_cdf,
                gaussian_cdf,
                gap: (bernoulli_cdf - gaussian_cdf).abs(),
            }
        })
        .collect();
    Ok(InvarianceGap {
        gap: per_t.iter().map(|g| g.gap).fold(0.0, f64::max),
        per_t,
        samples: sampling.samples,
        seed: sampling.seed,
        stream: sampling.stream,
    })
}

/// `|Pr(|p(A)| <= |q(A)|) - Pr(|p(X)| <= |q(X)|)|` from independent
/// Bernoulli and Gaussian sample sets; the standard error combines both.
pub fn abs_comparison_gap(
    p: &MultilinearPolynomial,
    q: &MultilinearPolynomial,
    sampling: &Sampling,
) -> Result<EstimatorResult> {
    if p.n() != q.n() {
        return Err(PtfError::DimensionMismatch {
            expected: p.n(),
            got: q.n(),
        });
    }
    sampling.require_samples()?;
    let n = p.n();
    let (rp, rq) = (p.real_kernel(), q.real_kernel());
    let (cp, cq) = (p.cube_kernel(), q.cube_kernel());
    let bern = monte_carlo_scalar(&sampling.derived(1), || {
        let mut x = vec![0.0; n];
        let (rp, rq, cp, cq) = (&rp, &rq, &cp, &cq);
        move |rng: &mut StreamRng| {
            let (a, b) = match (cp, cq) {
                (Some(cp), Some(cq)) => {
                    let m = rng.bernoulli_mask(n);
                    (cp.eval(m), cq.eval(m))
                }
                _ => {
                    rng.fill_bernoulli(&mut x);
                    (rp.eval(&x), rq.eval(&x))
                }
            };
            f64::from(u8::from(a.abs() <= b.abs()))
        }
    });
    let gauss = monte_carlo_scalar(&sampling.derived(2), || {
        let mut x = vec![0.0; n];
        let (rp, rq) = (&rp, &rq);
        move |rng: &mut StreamRng| {
            rng.fill_gaussian(&mut x);
            f64::from(u8::from(rp.eval(&x).abs() <= rq.eval(&x).abs()))
        }
    });
    let gap = (bern.estimate - gauss.estimate).abs();
    let se = bern.std_error.hypot(gauss.std_error);
    Ok(EstimatorResult::new(gap, se, sampling.samples, sampling))
}

/// Exact `|p|_{B,t}` against `sqrt(t-1)^d |p|_{B,2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypercontractivityCheck {
    pub t: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn hypercontractivity_check(p: &MultilinearPolynomial, t: u32) -> Result<HypercontractivityCheck> {
    if t < 2 || t % 2 == 1 {
        return Err(invalid(format!("moment order must be an even integer >= 2, got {t}")));
    }
    check_cap("exact hypercontractivity", p.n(), HYPERCONTRACTIVITY_CAP)?;
    let kernel = p.cube_kernel().expect("n within mask range");
    let size = 1u64 << p.n();
    let (mut moment_t, mut moment_2) = (0.0, 0.0);
    for m in 0..size {
        let v = kernel.eval(m);
        let sq = v * v;
        moment_2 += sq;
        moment_t += sq.powi(t as i32 / 2);
    }
    let lhs = (moment_t / size as f64).powf(1.0 / f64::from(t));
    let rhs = f64::from(t - 1).sqrt().powi(p.degree() as i32) * (moment_2 / size as f64).sqrt();
    Ok(HypercontractivityCheck {
        t,
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

/// `as(sgn p)` by sampling `A` and counting coordinates whose flip changes
/// the sign.
pub fn estimate_average_sensitivity(p: &MultilinearPolynomial, sampling: &Sampling) -> Result<EstimatorResult> {
    sampling.require_samples()?;
    let n = p.n();
    let real = p.real_kernel();
    let cube = p.cube_kernel();
    Ok(monte_carlo_scalar(sampling, || {
        let mut x = vec![0.0; n];
        let (real, cube) = (&real, &cube);
        move |rng: &mut StreamRng| match cube {
            Some(k) => {
                let a = rng.bernoulli_mask(n);
                let s = sgn(k.eval(a));
                (0..n).filter(|&i| sgn(k.eval(a ^ 1 << i)) != s).count() as f64
            }
            None => {
                rng.fill_bernoulli(&mut x);
                let s = sgn(real.eval(&x));
                let mut count = 0;
                for i in 0..n {
                    x[i] = -x[i];
                    if sgn(real.eval(&x)) != s {
                        count += 1;
                    }
                    x[i] = -x[i];
                }
                f64::from(count)
            }
        }
    }))
}

/// `NS_delta(sgn p)` by sampling `A` and an independent `delta`-noisy copy.
pub fn estimate_noise_sensitivity(
    p: &MultilinearPolynomial,
    delta: f64,
    sampling: &Sampling,
) -> Result<EstimatorResult> {
    crate::hypercube::check_noise_rate(delta)?;
    sampling.require_samples()?;
    let n = p.n();
    let real = p.real_kernel();
    Ok(monte_carlo_scalar(sampling, || {
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let real = &real;
        move |rng: &mut StreamRng| {
            rng.fill_bernoulli(&mut x);
            for (yi, &xi) in y.iter_mut().zip(&x) {
                *yi = if rng.uniform() < delta { -xi } else { xi };
            }
            f64::from(u8::from(sgn(real.eval(&x)) != sgn(real.eval(&y))))
        }
    }))
}

#[cfg(test)]
mod tests;
