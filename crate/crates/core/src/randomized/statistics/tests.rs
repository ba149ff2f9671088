use super::*;
use crate::randomized::rng::{sample_bernoulli, sample_gaussian};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn phi(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

fn poly(n: usize, terms: &[(&[usize], f64)]) -> MultilinearPolynomial {
    MultilinearPolynomial::from_terms(n, terms.iter().map(|&(v, c)| (v, c))).unwrap()
}

fn x0(n: usize) -> MultilinearPolynomial {
    MultilinearPolynomial::variable(n, 0).unwrap()
}

fn points(n: usize) -> Vec<Vec<f64>> {
    (0u64..1 << n)
        .map(|m| (0..n).map(|i| if m >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

/// α by enumerating `(A, B)` through the plain gradient/directional
/// derivative path.
fn alpha_oracle(p: &MultilinearPolynomial) -> f64 {
    let pts = points(p.n());
    let mut total = 0.0;
    for a in &pts {
        let value = p.eval(a).unwrap();
        for b in &pts {
            let slope = p.directional_derivative_eval(a, b).unwrap();
            total += if value == 0.0 { 1.0 } else { (slope * slope / (value * value)).min(1.0) };
        }
    }
    total / (pts.len() * pts.len()) as f64
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `β(x0) = (1/2π) ∫ min(1, tan^2 φ) dφ`, integrated piecewise between the
/// kinks at multiples of π/4.
fn beta_x0_quadrature() -> f64 {
    let f = |t: f64| t.tan().powi(2).min(1.0);
    let q = std::f64::consts::FRAC_PI_4;
    // the integrand has period π; integrate [0, π) and average
    let below = adaptive_simpson(&f, 0.0, q, 1e-12);
    let above = adaptive_simpson(&|t| f(t), q, 2.0 * q - 1e-12, 1e-12);
    let upper = adaptive_simpson(&f, 2.0 * q + 1e-12, 3.0 * q, 1e-12) + adaptive_simpson(&f, 3.0 * q, 4.0 * q, 1e-12);
    (below + above + upper) / std::f64::consts::PI
}

/// `Pr(|X Y| <= eps) = E_X[2Φ(eps/|X|) - 1]`.
fn product_of_normals_oracle(eps: f64) -> f64 {
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |x: f64| if x == 0.0 { density(0.0) } else { (2.0 * phi(eps / x) - 1.0) * density(x) };
    2.0 * (adaptive_simpson(&f, 0.0, 10.0 * eps, 1e-14) + adaptive_simpson(&f, 10.0 * eps, 12.0, 1e-13))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[test]
fn sampling_is_reproducible() {
    let mut a = StreamRng::new(11, 2);
    let mut b = StreamRng::new(11, 2);
    assert_eq!(sample_bernoulli(70, &mut a), sample_bernoulli(70, &mut b));
    assert_eq!(sample_gaussian(5, &mut a), sample_gaussian(5, &mut b));
    let mut c = StreamRng::new(11, 3);
    assert_ne!(sample_gaussian(5, &mut a), sample_gaussian(5, &mut c));
}

#[test]
fn bernoulli_mask_matches_point_sampler() {
    let mut a = StreamRng::new(5, 0);
    let mut b = StreamRng::new(5, 0);
    for _ in 0..100 {
        let m = a.bernoulli_mask(13);
        let x = sample_bernoulli(13, &mut b);
        assert_eq!(x.to_mask(), Some(m));
    }
}

#[test]
fn sampler_moments() {
    let mut rng = StreamRng::new(2024, 0);
    let draws = 1_000_000;
    let n = 3;
    let mut bern = vec![0.0; n];
    let mut gauss_sq = vec![0.0; n];
    let mut x = vec![0.0; n];
    for _ in 0..draws {
        rng.fill_bernoulli(&mut x);
        bern.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
        rng.fill_gaussian(&mut x);
        gauss_sq.iter_mut().zip(&x).for_each(|(s, v)| *s += v * v);
    }
    for i in 0..n {
        let mean = bern[i] / draws as f64;
        let var = gauss_sq[i] / draws as f64;
        assert!(mean.abs() < 0.01, "bernoulli mean {mean}");
        assert!(var > 0.99 && var < 1.01, "gaussian variance {var}");
    }
}

#[test]
fn alpha_exact_examples() {
    assert_eq!(exact_alpha(&x0(1)).unwrap(), 1.0);
    assert_eq!(exact_alpha(&MultilinearPolynomial::constant(2, 5.0)).unwrap(), 0.0);
    assert_eq!(alpha_oracle(&MultilinearPolynomial::linear(&[1.0, 1.0])), 0.75);
    assert_eq!(exact_alpha(&MultilinearPolynomial::linear(&[1.0, 1.0])).unwrap(), 0.75);
    assert!(exact_alpha(&MultilinearPolynomial::zero(13)).is_err());
}

#[test]
fn alpha_estimate_examples() {
    let s = Sampling::new(20_000, 1);
    let one = estimate_alpha(&x0(1), &s).unwrap();
    assert_eq!((one.estimate, one.std_error), (1.0, 0.0));
    let c = estimate_alpha(&MultilinearPolynomial::constant(3, 5.0), &s).unwrap();
    assert_eq!(c.estimate, 0.0);
    let r = estimate_alpha(&MultilinearPolynomial::linear(&[1.0, 1.0]), &s).unwrap();
    assert!(r.z_score(0.75) < 4.0);
    assert!(estimate_alpha(&x0(1), &Sampling::new(0, 1)).is_err());
}

#[test]
fn alpha_estimate_falls_in_ci_of_exact() {
    let p = poly(6, &[(&[0, 1], 0.8), (&[2], -0.5), (&[3, 4, 5], 0.3), (&[], 0.2), (&[1, 5], -0.6)]);
    let exact = exact_alpha(&p).unwrap();
    assert!((exact - alpha_oracle(&p)).abs() < 1e-12);
    let covered = (0..20)
        .filter(|&seed| estimate_alpha(&p, &Sampling::new(100_000, seed)).unwrap().covers(exact))
        .count();
    assert!(covered >= 17, "covered {covered}/20");
}

#[test]
fn alpha_estimates_for_wide_polynomials_use_word_draws() {
    // n > 64 leaves the mask kernel; α of a dictator is still exactly 1.
    let p = x0(100);
    let r = estimate_alpha(&p, &Sampling::new(1000, 3)).unwrap();
    assert_eq!(r.estimate, 1.0);
}

#[test]
fn beta_of_dictator_matches_quadrature() {
    let oracle = beta_x0_quadrature();
    assert!((oracle - 2.0 / std::f64::consts::PI).abs() < 1e-6, "quadrature {oracle}");
    let r = estimate_beta(&x0(1), &Sampling::new(400_000, 17)).unwrap();
    assert!(r.z_score(oracle) < 3.0, "{r:?}");
    assert_eq!(estimate_beta(&MultilinearPolynomial::constant(2, -1.0), &Sampling::new(100, 1)).unwrap().estimate, 0.0);
}

#[test]
fn beta_is_scale_invariant_for_shared_seed() {
    let p = poly(4, &[(&[0, 1], 0.8), (&[2], -0.5), (&[1, 2, 3], 0.3)]);
    let s = Sampling::new(50_000, 99);
    let base = estimate_beta(&p, &s).unwrap();
    for c in [4.0, -0.5, 1024.0] {
        assert_eq!(estimate_beta(&p.scale(c), &s).unwrap().estimate, base.estimate);
    }
    let odd = estimate_beta(&p.scale(3.7), &s).unwrap();
    assert!((odd.estimate - base.estimate).abs() < 1e-9);
}

#[test]
fn tail_curve_examples() {
    let s = Sampling::new(100_000, 4);
    let t = tail_curve(&x0(1), Distribution::Bernoulli, &[2.0], &s).unwrap();
    assert_eq!(t.probabilities, vec![0.0]);
    assert!((t.envelope[0] - 0.5).abs() < 1e-15);

    let n = 100;
    let p = MultilinearPolynomial::linear(&vec![0.1; n]);
    assert!((p.l2_norm() - 1.0).abs() < 1e-12);
    let s = Sampling::new(1_000_000, 8);
    // Gaussian input: p(X) is exactly standard normal.
    let g = tail_curve(&p, Distribution::Gaussian, &[3.0], &s).unwrap();
    let truth = 2.0 * phi(-3.0);
    assert!((g.probabilities[0] - truth).abs() <= 3.0 * g.std_errors[0], "{g:?}");
    // Bernoulli input puts atoms on the threshold, so use dyadic weights that
    // evaluate exactly: |sum x_i| / 8 > 3 means at least 45 equal signs of 64.
    let p = MultilinearPolynomial::linear(&[0.125; 64]);
    assert_eq!(p.l2_norm(), 1.0);
    let b = tail_curve(&p, Distribution::Bernoulli, &[3.0], &s).unwrap();
    let exact: f64 = 2.0 * (45..=64u64).map(|k| (ln_choose(64, k) - 64.0 * std::f64::consts::LN_2).exp()).sum::<f64>();
    assert!((b.probabilities[0] - exact).abs() <= 3.0 * b.std_errors[0], "{b:?} vs {exact}");

    let grid = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let curve = tail_curve(&poly(5, &[(&[0, 1], 1.0), (&[2, 3], 1.0), (&[4], 0.5)]), Distribution::Gaussian, &grid, &Sampling::new(50_000, 2)).unwrap();
    for w in curve.probabilities.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert_eq!(curve.rows().count(), grid.len());

    assert!(matches!(tail_curve(&MultilinearPolynomial::zero(2), Distribution::Gaussian, &[1.0], &s), Err(PtfError::ZeroPolynomial)));
    assert!(tail_curve(&x0(1), Distribution::Gaussian, &[2.0, 1.0], &s).is_err());
}

#[test]
fn weak_anticoncentration_examples() {
    assert_eq!(weak_anticoncentration_exact(&x0(1)).unwrap(), 1.0);
    let p = poly(2, &[(&[0, 1], 1.0), (&[0], 1.0), (&[1], 1.0), (&[], 1.0)]);
    assert_eq!(p.l2_norm(), 2.0);
    assert_eq!(weak_anticoncentration_exact(&p).unwrap(), 0.25);
    assert!(0.25 >= weak_anticoncentration_floor(2));
    let e = weak_anticoncentration_estimate(&p, Distribution::Bernoulli, &Sampling::new(100_000, 6)).unwrap();
    assert!(e.z_score(0.25) < 4.0);
    assert!(weak_anticoncentration_exact(&MultilinearPolynomial::zero(3)).is_err());
    assert!(weak_anticoncentration_exact(&x0(21)).is_err());
}

#[test]
fn carbery_wright_examples() {
    let s = Sampling::new(1_000_000, 12);
    let r = carbery_wright_estimate(&x0(1), 0.1, &s).unwrap();
    let truth = 2.0 * (phi(0.1) - 0.5);
    assert!(r.z_score(truth) < 3.0, "{r:?} vs {truth}");
    let both = carbery_wright_estimates(&x0(1), &[0.1, 0.01], &s).unwrap();
    assert!(both[1].estimate <= both[0].estimate);

    // d = 2: the density of X*Y is log-singular at 0.
    let xy = poly(2, &[(&[0, 1], 1.0)]);
    let (hi, lo) = (product_of_normals_oracle(1e-2), product_of_normals_oracle(1e-4));
    assert!((hi - 0.036422).abs() < 1e-5 && (lo - 6.5739e-4).abs() < 1e-7, "{hi} {lo}");
    let est = carbery_wright_estimates(&xy, &[1e-2, 1e-4], &Sampling::new(10_000_000, 5)).unwrap();
    assert!(est[0].z_score(hi) < 3.0 && est[1].z_score(lo) < 3.0, "{est:?}");
    let ratio = est[0].estimate / est[1].estimate;
    assert!(ratio > hi / lo / 2.0 && ratio < hi / lo * 2.0, "ratio {ratio}");
}

#[test]
fn rotation_pair_examples() {
    let x = [1.0, -2.0, 0.5];
    let y = [0.25, 3.0, -1.0];
    let (a, b) = rotation_pair(&x, &y, 0.0).unwrap();
    assert_eq!((a.coords(), b.coords()), (&x[..], &y[..]));
    let (a, b) = rotation_pair(&x, &y, std::f64::consts::FRAC_PI_2).unwrap();
    for i in 0..3 {
        assert!((a.coords()[i] - y[i]).abs() < 1e-15);
        assert!((b.coords()[i] + x[i]).abs() < 1e-15);
    }
    let (a, b) = rotation_pair(&x, &y, 0.83).unwrap();
    let before: f64 = x.iter().chain(&y).map(|v| v * v).sum();
    let after: f64 = a.coords().iter().chain(b.coords()).map(|v| v * v).sum();
    assert!((before - after).abs() < 1e-12);
    assert!(rotation_pair(&x, &y[..2], 0.1).is_err());
}

#[test]
fn rotated_gaussians_stay_standard_and_independent() {
    let mut rng = StreamRng::new(77, 0);
    let draws = 1_000_000;
    let theta = 1.1;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    let mut x = [0.0];
    let mut y = [0.0];
    for _ in 0..draws {
        rng.fill_gaussian(&mut x);
        rng.fill_gaussian(&mut y);
        let (a, b) = rotation_pair(&x, &y, theta).unwrap();
        let (a, b) = (a.coords()[0], b.coords()[0]);
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let d = draws as f64;
    assert!((sxx / d - 1.0).abs() < 0.01);
    assert!((syy / d - 1.0).abs() < 0.01);
    assert!((sxy / d).abs() < 0.01);
}

#[test]
fn strong_anticoncentration_examples() {
    let s = Sampling::new(1_000_000, 21);
    let truth = 2.0 / std::f64::consts::PI * 0.1f64.atan();
    let r = strong_anticoncentration_estimate(&x0(1), 0.1, &s).unwrap();
    assert!(r.z_score(truth) < 3.0, "{r:?} vs {truth}");
    let rot = strong_anticoncentration_rotated(&x0(1), 0.1, &s).unwrap();
    assert!(rot.z_score(truth) < 3.0, "{rot:?} vs {truth}");
    let big = strong_anticoncentration_estimate(&x0(1), 1e12, &Sampling::new(10_000, 1)).unwrap();
    assert_eq!(big.estimate, 1.0);
    assert!(matches!(
        strong_anticoncentration_estimate(&MultilinearPolynomial::constant(1, 2.0), 0.1, &s),
        Err(PtfError::ConstantPolynomial)
    ));
}

#[test]
fn strong_anticoncentration_is_linear_in_small_eps() {
    let p = poly(5, &[(&[0, 1], 0.7), (&[2], 0.4), (&[1, 3, 4], -0.9), (&[], 0.1)]);
    let est = strong_anticoncentration_estimates(&p, &[0.02, 0.01], &Sampling::new(2_000_000, 3)).unwrap();
    let ratio = est[0].estimate / est[1].estimate;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn invariance_gap_examples() {
    let s = Sampling::new(200_000, 31);
    let g = invariance_gap(&x0(1), Some(&[-0.5]), &s).unwrap();
    let truth = (phi(-0.5) - 0.5).abs();
    assert!((g.gap - truth).abs() < 0.006, "{} vs {truth}", g.gap);

    let c = invariance_gap(&MultilinearPolynomial::constant(3, 1.5), Some(&[-1.0, 0.0, 1.0, 2.0]), &s).unwrap();
    assert!(c.per_t.iter().all(|t| t.gap == 0.0));

    let default = invariance_gap(&poly(3, &[(&[0, 1], 1.0), (&[2], 0.5)]), None, &Sampling::new(10_000, 1)).unwrap();
    assert!(default.per_t.len() <= DEFAULT_GRID_POINTS && default.per_t.len() > 3);
    assert!(invariance_gap(&x0(1), Some(&[]), &s).is_err());
    assert!(invariance_gap(&x0(1), Some(&[1.0, 0.0]), &s).is_err());
}

#[test]
fn abs_comparison_gap_examples() {
    let n = 16;
    let p = MultilinearPolynomial::linear(&vec![1.0 / (n as f64).sqrt(); n]);
    let s = Sampling::new(50_000, 2);
    let same = abs_comparison_gap(&p, &p, &s).unwrap();
    assert_eq!((same.estimate, same.std_error), (0.0, 0.0));
    let weights: Vec<f64> = (0..n).rev().map(|_| 1.0 / (n as f64).sqrt()).collect();
    let reversed = MultilinearPolynomial::linear(&weights);
    assert_eq!(abs_comparison_gap(&p, &reversed, &s).unwrap().estimate, 0.0);
    assert!(abs_comparison_gap(&p, &x0(3), &s).is_err());
}

#[test]
fn hypercontractivity_examples() {
    let c = hypercontractivity_check(&x0(1), 4).unwrap();
    assert_eq!(c.lhs, 1.0);
    assert!((c.rhs - 3f64.sqrt()).abs() < 1e-15 && c.holds);
    let c = hypercontractivity_check(&poly(2, &[(&[0, 1], 1.0)]), 4).unwrap();
    assert!(c.lhs == 1.0 && (c.rhs - 3.0).abs() < 1e-12 && c.holds);
    assert!(hypercontractivity_check(&x0(2), 5).is_err());
    assert!(hypercontractivity_check(&x0(17), 4).is_err());
}

#[test]
fn sampled_sensitivity_matches_enumeration() {
    let p = poly(8, &[(&[0, 1], 0.8), (&[2], -0.5), (&[3, 4, 5], 0.3), (&[6, 7], 0.4), (&[], 0.2)]);
    let f = crate::SignFunction::new(p.clone());
    let exact = crate::average_sensitivity_exact(&f).unwrap();
    let est = estimate_average_sensitivity(&p, &Sampling::new(200_000, 7)).unwrap();
    assert!(est.z_score(exact) < 4.0, "{est:?} vs {exact}");
    let ns = crate::noise_sensitivity_exact(&f, 0.1).unwrap();
    let est = estimate_noise_sensitivity(&p, 0.1, &Sampling::new(200_000, 7)).unwrap();
    assert!(est.z_score(ns) < 4.0, "{est:?} vs {ns}");
}

#[test]
fn estimators_are_reproducible_per_worker_count() {
    let p = poly(6, &[(&[0, 1], 0.8), (&[2], -0.5), (&[3, 4, 5], 0.3)]);
    let s = Sampling::new(30_001, 44);
    assert_eq!(estimate_alpha(&p, &s).unwrap(), estimate_alpha(&p, &s).unwrap());
    let k = s.with_workers(3);
    assert_eq!(estimate_beta(&p, &k).unwrap(), estimate_beta(&p, &k).unwrap());
    assert_eq!(invariance_gap(&p, None, &k).unwrap(), invariance_gap(&p, None, &k).unwrap());
}

#[test]
fn calibration_over_seeded_runs() {
    let sa = 2.0 / std::f64::consts::PI * 0.1f64.atan();
    let cw = 2.0 * (phi(0.1) - 0.5);
    let beta = 2.0 / std::f64::consts::PI;
    let sum = MultilinearPolynomial::linear(&[1.0, 1.0]);
    let mut counts = [0usize; 4];
    for seed in 0..20 {
        let s = Sampling::new(100_000, 1000 + seed);
        counts[0] += usize::from(estimate_alpha(&sum, &s).unwrap().covers(0.75));
        counts[1] += usize::from(strong_anticoncentration_estimate(&x0(1), 0.1, &s).unwrap().covers(sa));
        counts[2] += usize::from(carbery_wright_estimate(&x0(1), 0.1, &s).unwrap().covers(cw));
        counts[3] += usize::from(estimate_beta(&x0(1), &s).unwrap().covers(beta));
    }
    assert!(counts.iter().all(|&c| c >= 17), "{counts:?}");
}

fn arb_poly(max_n: usize, max_d: usize) -> impl Strategy<Value = MultilinearPolynomial> {
    (1..=max_n).prop_flat_map(move |n| {
        let term = (proptest::collection::btree_set(0..n, 0..=max_d.min(n)), -3.0f64..3.0);
        proptest::collection::vec(term, 1..12).prop_map(move |terms| {
            MultilinearPolynomial::from_terms(n, terms.into_iter().map(|(s, c)| (s.into_iter().collect::<Vec<_>>(), c))).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_alpha_matches_pair_enumeration(p in arb_poly(6, 3)) {
        prop_assert!((exact_alpha(&p).unwrap() - alpha_oracle(&p)).abs() <= 1e-10);
    }

    #[test]
    fn alpha_is_a_probability_and_vanishes_only_on_constants(p in arb_poly(8, 4)) {
        prop_assume!(!p.is_zero());
        let a = exact_alpha(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!(a == 0.0, p.is_constant());
    }

    #[test]
    fn exact_alpha_is_scale_invariant(p in arb_poly(8, 4), c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0]) {
        prop_assert!((exact_alpha(&p.scale(c)).unwrap() - exact_alpha(&p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn weak_anticoncentration_floor_holds(p in arb_poly(12, 4)) {
        prop_assume!(!p.is_zero());
        prop_assert!(weak_anticoncentration_exact(&p).unwrap() >= weak_anticoncentration_floor(p.degree()));
    }

    #[test]
    fn hypercontractivity_holds(p in arb_poly(12, 4), t in prop_oneof![Just(4u32), Just(6u32), Just(8u32)]) {
        prop_assert!(hypercontractivity_check(&p, t).unwrap().holds);
    }
}
