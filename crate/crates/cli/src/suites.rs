//! Check batteries. Every row is deterministic given the seed, sample count
//! and worker count; nothing timing-dependent is recorded.

use std::f64::consts::PI;

use ptflab::decompose::{
    block_alpha_sum, block_partition, block_sensitivity_identity_check, build_regularity_tree,
    recursion_trace, small_alpha_check, tree_sensitivity_check, BlockAlphaConfig, BlockPartition,
    ClassMethod, LeafClass, RegularityConfig, TraceSchedule,
};
use ptflab::hypercube::{fourier, gl_witness_row};
use ptflab::randomized::{
    abs_comparison_gap, carbery_wright_estimate, carbery_wright_estimates, estimate_alpha,
    estimate_beta, hypercontractivity_check, invariance_gap, random_instance, strong_anticoncentration_estimates,
    strong_anticoncentration_estimate, tail_curve, weak_anticoncentration_exact,
    weak_anticoncentration_floor, Distribution, Sampling, StreamRng,
};
use ptflab::{gl_bound, middle_layers_witness, MultilinearPolynomial, SignFunction};

use crate::args::SuiteName;
use crate::error::CliError;
use crate::report::{CheckKind, CheckRow};

#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
    pub regularity: RegularityConfig,
    pub c1: f64,
    pub c2: f64,
}

impl SuiteContext {
    /// Generator for instance `i` of check group `group`.
    fn rng(&self, group: u64, i: u64) -> StreamRng {
        StreamRng::new(self.seed, group << 40 | i)
    }

    fn sampling(&self, stream: u64) -> Sampling {
        Sampling::new(self.samples, self.seed)
            .with_stream(stream << 40)
            .with_workers(self.workers)
    }

    fn instances(&self, group: u64, count: u64, max_n: usize, max_d: usize) -> Result<Vec<MultilinearPolynomial>, CliError> {
        (0..count)
            .map(|i| Ok(random_instance(&mut self.rng(group, i), max_n, max_d)?))
            .collect()
    }
}

struct Rows<'a> {
    suite: &'a str,
    rows: Vec<CheckRow>,
}

impl<'a> Rows<'a> {
    fn new(suite: &'a str) -> Self {
        Self { suite, rows: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        check: &str,
        instance: impl Into<String>,
        kind: CheckKind,
        passed: bool,
        measured: f64,
        bound: Option<f64>,
        method: &str,
        detail: impl Into<String>,
    ) {
        self.rows.push(CheckRow {
            suite: self.suite.to_string(),
            check: check.to_string(),
            instance: instance.into(),
            kind,
            passed,
            measured,
            bound,
            method: method.to_string(),
            detail: detail.into(),
        });
    }

    /// One summary row for a sweep plus a row for every failing instance.
    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &mut self,
        check: &str,
        kind: CheckKind,
        results: &[(String, bool, f64)],
        worst: f64,
        bound: Option<f64>,
        detail: &str,
    ) {
        let failed: Vec<&(String, bool, f64)> = results.iter().filter(|r| !r.1).collect();
        self.push(
            check,
            format!("{} instances", results.len()),
            kind,
            failed.is_empty(),
            worst,
            bound,
            "enumeration",
            format!("{detail}; {} failed", failed.len()),
        );
        for (instance, _, measured) in failed {
            self.push(check, instance.clone(), kind, false, *measured, bound, "enumeration", "finding");
        }
    }
}

fn describe(i: usize, p: &MultilinearPolynomial) -> String {
    format!("#{i} n={} d={} terms={}", p.n(), p.degree(), p.num_terms())
}

pub fn gl_suite(ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Rows::new("gl");
    for n in (3..=15).step_by(2) {
        let r = gl_witness_row(n, 1)?;
        rows.push(
            "witness_equality_d1",
            format!("n={n}"),
            CheckKind::Hard,
            r.witness_flag,
            r.as_exact,
            Some(r.gl_bound),
            "enumeration",
            format!("ratio {}", r.ratio),
        );
    }
    for (d, ns) in [(2usize, 4..=12usize), (3, 6..=12)] {
        for n in ns {
            let r = gl_witness_row(n, d)?;
            rows.push(
                "witness_ratio",
                format!("n={n} d={d}"),
                CheckKind::Observational,
                true,
                r.ratio,
                Some(1.0),
                "enumeration",
                format!("as {} against bound {}", r.as_exact, r.gl_bound),
            );
        }
    }
    let mut results = Vec::new();
    let mut worst = 0f64;
    for (i, p) in ctx.instances(1, 500, 12, 3)?.iter().enumerate() {
        let f = SignFunction::new(p.clone());
        let as_exact = ptflab::average_sensitivity_exact(&f)?;
        let bound = gl_bound(p.n(), p.degree().max(1))?;
        worst = worst.max(as_exact / bound);
        results.push((describe(i, p), as_exact <= bound + 1e-9, as_exact / bound));
    }
    rows.sweep("gl_random_sweep", CheckKind::Hard, &results, worst, Some(1.0), "max as/gl ratio over random PTFs");
    Ok(rows.rows)
}

pub fn invariants_suite(ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Rows::new("invariants");
    let polys = ctx.instances(2, 200, 12, 4)?;
    let (mut l2, mut two_path, mut sandwich, mut weak, mut hyper, mut tree) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut w_l2, mut w_path, mut w_sand, mut w_weak, mut w_hyper, mut w_tree) = (0f64, 0f64, f64::INFINITY, f64::INFINITY, 0f64, f64::INFINITY);
    for (i, p) in polys.iter().enumerate() {
        let id = describe(i, p);
        let kernel = p.cube_kernel().expect("small n");
        let size = 1u64 << p.n();
        let enumerated = (0..size).map(|m| kernel.eval(m).powi(2)).sum::<f64>() / size as f64;
        let gap = (p.l2_norm().powi(2) - enumerated).abs();
        w_l2 = w_l2.max(gap);
        l2.push((id.clone(), gap <= 1e-10, gap));

        let f = SignFunction::new(p.clone());
        let table = f.truth_table()?;
        let edge = table.average_sensitivity();
        let spectral = fourier(&table)?.total_influence();
        let gap = (edge - spectral).abs();
        w_path = w_path.max(gap);
        two_path.push((id.clone(), gap <= 1e-9, gap));

        let (var, total, d) = (p.variance(), p.total_influence(), p.degree() as f64);
        let margin = (total - var).min(d * var - total);
        w_sand = w_sand.min(margin);
        sandwich.push((id.clone(), margin >= -1e-9, margin));

        let pr = weak_anticoncentration_exact(p)?;
        let floor = weak_anticoncentration_floor(p.degree());
        w_weak = w_weak.min(pr / floor);
        weak.push((id.clone(), pr >= floor, pr));

        let h = hypercontractivity_check(p, 4)?;
        w_hyper = w_hyper.max(h.lhs / h.rhs);
        hyper.push((id.clone(), h.holds, h.lhs / h.rhs));

        let t = build_regularity_tree(p, &ctx.regularity)?;
        let c = tree_sensitivity_check(&f, &t)?;
        let slack = c.depth as f64 + c.leaf_expectation - c.as_exact;
        w_tree = w_tree.min(slack);
        tree.push((id, c.holds, slack));
    }
    rows.sweep("coefficient_l2_identity", CheckKind::Identity, &l2, w_l2, Some(1e-10), "max |sum c_S^2 - E[p^2]|");
    rows.sweep("two_path_sensitivity", CheckKind::Identity, &two_path, w_path, Some(1e-9), "max |edge count - sum |S| f^(S)^2|");
    rows.sweep("influence_sandwich", CheckKind::Hard, &sandwich, w_sand, Some(0.0), "min slack of var <= sum Inf <= d var");
    rows.sweep("weak_anticoncentration", CheckKind::Hard, &weak, w_weak, Some(1.0), "min Pr(|p| >= |p|/2) / (9^-d / 2)");
    rows.sweep("hypercontractivity_t4", CheckKind::Hard, &hyper, w_hyper, Some(1.0), "max |p|_4 / (sqrt3^d |p|_2)");
    rows.sweep("tree_sensitivity", CheckKind::Hard, &tree, w_tree, Some(0.0), "min depth + E[as leaf] - as");

    let mut blocks = Vec::new();
    let mut w_block = 0f64;
    for (i, p) in ctx.instances(3, 50, 10, 3)?.iter().enumerate() {
        let f = SignFunction::new(p.clone());
        let n = p.n();
        let mut parts = vec![BlockPartition::singletons(n)];
        for b in [2, 3] {
            if b <= n {
                parts.push(block_partition(n, b)?);
            }
        }
        for part in parts {
            let c = block_sensitivity_identity_check(&f, &part)?;
            w_block = w_block.max(c.gap);
            blocks.push((format!("{} b={}", describe(i, p), part.len()), c.gap <= 1e-9, c.gap));
        }
    }
    rows.sweep("block_identity", CheckKind::Identity, &blocks, w_block, Some(1e-9), "max |as - sum_l E[as restricted]|");
    Ok(rows.rows)
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error
/// below `1.2e-7`).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

pub fn anticoncentration_suite(ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Rows::new("anticoncentration");
    let x0 = MultilinearPolynomial::variable(1, 0)?;
    let mc = "monte_carlo";

    let truth = 2.0 / PI * 0.1f64.atan();
    let r = strong_anticoncentration_estimate(&x0, 0.1, &ctx.sampling(1))?;
    rows.push("strong_anticoncentration_x0", "eps=0.1", CheckKind::Hard, r.z_score(truth) <= 3.0, r.estimate, Some(truth), mc,
        format!("std_error {}, z {}", r.std_error, r.z_score(truth)));

    let truth = 2.0 * (normal_cdf(0.1) - 0.5);
    let r = carbery_wright_estimate(&x0, 0.1, &ctx.sampling(2))?;
    rows.push("carbery_wright_x0", "eps=0.1", CheckKind::Hard, r.z_score(truth) <= 3.0, r.estimate, Some(truth), mc,
        format!("std_error {}, z {}", r.std_error, r.z_score(truth)));

    let truth = 2.0 / PI;
    let r = estimate_beta(&x0, &ctx.sampling(3))?;
    rows.push("beta_x0", "n=1", CheckKind::Hard, r.z_score(truth) <= 3.0, r.estimate, Some(truth), mc,
        format!("std_error {}, z {}", r.std_error, r.z_score(truth)));

    let sum = MultilinearPolynomial::linear(&[1.0, 1.0]);
    let mut covered = 0;
    for k in 0..20 {
        covered += usize::from(estimate_alpha(&sum, &ctx.sampling(100 + k))?.covers(0.75));
    }
    rows.push("alpha_calibration", "x0+x1, 20 runs", CheckKind::Hard, covered >= 17, covered as f64, Some(17.0), mc,
        "ci95 covers 0.75 in at least 17 of 20 seeded runs");

    for i in 0..5u64 {
        let spec = ptflab::randomized::PolynomialSpec { n: 10, d: 3, terms: None };
        let p = ptflab::randomized::random_polynomial(&spec, &mut ctx.rng(4, i))?;
        let est = strong_anticoncentration_estimates(&p, &[0.01, 0.005], &ctx.sampling(200 + i))?;
        let ratio = est[0].estimate / est[1].estimate;
        rows.push("strong_anticoncentration_scaling", describe(i as usize, &p), CheckKind::Hard, (1.5..=2.5).contains(&ratio), ratio,
            Some(2.0), mc, format!("estimates {} and {}", est[0].estimate, est[1].estimate));
    }

    let xy = ptflab::MultilinearPolynomial::from_terms(2, [(vec![0usize, 1], 1.0)])?;
    let est = carbery_wright_estimates(&xy, &[1e-2, 1e-4], &ctx.sampling(5))?;
    rows.push("carbery_wright_degree2_ratio", "x0*x1", CheckKind::Observational, true, est[0].estimate / est[1].estimate, None, mc,
        "Pr(|p| <= 1e-2) / Pr(|p| <= 1e-4); log-singular density at 0");

    let thresholds = [1.0, 2.0, 3.0, 4.0];
    let p = MultilinearPolynomial::linear(&[0.125; 64]);
    for (k, dist) in [Distribution::Bernoulli, Distribution::Gaussian].into_iter().enumerate() {
        let curve = tail_curve(&p, dist, &thresholds, &ctx.sampling(6 + k as u64))?;
        for (t, prob, env) in curve.rows() {
            rows.push("tail_envelope", format!("{dist:?} N={t}"), CheckKind::Observational, true, prob, Some(env), mc,
                "Pr(|p| > N |p|_2) beside 2^-(N/2)^(2/d)");
        }
    }
    Ok(rows.rows)
}

pub fn invariance_suite(ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Rows::new("invariance");
    let mc = "monte_carlo";
    let normalized = |n: usize| MultilinearPolynomial::linear(&vec![1.0 / (n as f64).sqrt(); n]);
    let small = invariance_gap(&normalized(25), None, &ctx.sampling(1))?;
    let large = invariance_gap(&normalized(400), None, &ctx.sampling(2))?;
    rows.push("invariance_decay", "n=400 vs n=25", CheckKind::Hard, large.gap <= small.gap, large.gap, Some(small.gap), mc,
        "sup-grid CDF gap shrinks with regularity");

    let x0 = MultilinearPolynomial::variable(1, 0)?;
    let g = invariance_gap(&x0, Some(&[-0.5]), &ctx.sampling(3))?;
    let truth = (normal_cdf(-0.5) - 0.5).abs();
    rows.push("invariance_dictator", "t=-0.5", CheckKind::Observational, true, g.gap, Some(truth), mc,
        "|Phi(-0.5) - 1/2| for the maximally irregular x0");

    for (k, n) in [9usize, 100].into_iter().enumerate() {
        let p = normalized(n);
        let mut rng = ctx.rng(5, k as u64);
        let w: Vec<f64> = (0..n).map(|_| 0.1 * (rng.uniform() - 0.5)).collect();
        let q = MultilinearPolynomial::linear(&w);
        let r = abs_comparison_gap(&p, &q, &ctx.sampling(4 + k as u64))?;
        rows.push("abs_comparison_gap", format!("n={n}"), CheckKind::Observational, true, r.estimate, None, mc,
            format!("std_error {}", r.std_error));
    }
    Ok(rows.rows)
}

pub fn decompose_suite(ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    let mut rows = Rows::new("decompose");
    let mut successes = 0;
    let mut soundness = Vec::new();
    let mut w_sound = 0f64;
    let mut tree_results = Vec::new();
    let mut w_tree = f64::INFINITY;
    let polys = ctx.instances(6, 50, 14, 3)?;
    for (i, p) in polys.iter().enumerate() {
        let tree = build_regularity_tree(p, &ctx.regularity)?;
        successes += usize::from(tree.success);
        for leaf in tree.leaves() {
            if let (LeafClass::NearConstant { sign }, ClassMethod::Enumeration) = (leaf.class, leaf.method) {
                let (q, _) = leaf.polynomial.compact();
                let wrong = SignFunction::new(q).truth_table()?.disagreement_with(sign);
                w_sound = w_sound.max(wrong);
                soundness.push((format!("{} leaf depth {}", describe(i, p), leaf.depth), wrong <= ctx.regularity.eps, wrong));
            }
        }
        let c = tree_sensitivity_check(&SignFunction::new(p.clone()), &tree)?;
        let slack = c.depth as f64 + c.leaf_expectation - c.as_exact;
        w_tree = w_tree.min(slack);
        tree_results.push((describe(i, p), c.holds, slack));
    }
    rows.push("regularity_tree_success", "50 instances", CheckKind::Hard, successes >= 45, successes as f64, Some(45.0), "enumeration",
        format!("bad mass <= delta = {} within budgets", ctx.regularity.delta));
    let soundness_detail = format!("every enumerated near-constant leaf errs with probability <= {}", ctx.regularity.eps);
    rows.sweep("near_constant_soundness", CheckKind::Hard, &soundness, w_sound, Some(ctx.regularity.eps), &soundness_detail);
    rows.sweep("tree_sensitivity", CheckKind::Hard, &tree_results, w_tree, Some(0.0), "min depth + E[as leaf] - as");

    let w = middle_layers_witness(12, 2)?;
    let config = BlockAlphaConfig { c1: ctx.c1, c2: ctx.c2, stratified: false };
    let r = block_alpha_sum(&w, &block_partition(12, 3)?, &ctx.sampling(1), &config)?;
    rows.push("block_alpha_sum", "witness n=12 d=2 b=3", CheckKind::Observational, r.sum.estimate.is_finite(), r.sum.estimate,
        Some(r.reference), "monte_carlo", format!("std_error {}, alpha {}", r.sum.std_error, r.alpha.estimate));

    let mut rng = ctx.rng(7, 0);
    let q = ptflab::randomized::random_polynomial(&ptflab::randomized::PolynomialSpec { n: 16, d: 2, terms: None }, &mut rng)?;
    let schedule = TraceSchedule {
        c1: ctx.c1,
        c2: ctx.c2,
        ..TraceSchedule::new(vec![4, 2], ctx.regularity.clone())
    };
    let trace_sampling = Sampling::new(ctx.samples.clamp(1, 2000), ctx.seed).with_stream(2 << 40);
    let trace = recursion_trace(&q, &schedule, &trace_sampling)?;
    for l in &trace.levels {
        rows.push("recursion_trace", format!("level {} b={}", l.level, l.b), CheckKind::Observational, true, l.mean_block_alpha,
            Some(l.reference), "mixed", format!("measured {}, {} aleph values", l.measured, l.aleph.count));
    }
    if let [a, b] = trace.levels.as_slice() {
        rows.push("recursion_decay", "level 2 vs 1", CheckKind::Observational, b.mean_block_alpha <= a.mean_block_alpha,
            b.mean_block_alpha, Some(a.mean_block_alpha), "mixed", "flagged, not asserted");
    }

    // the last three rates let the sign actually flip
    let n = 10;
    for t in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
        let p = MultilinearPolynomial::linear(&vec![t / (n as f64).sqrt(); n])
            .checked_add(&MultilinearPolynomial::constant(n, 1.0))?;
        let c = small_alpha_check(&p)?;
        rows.push("small_alpha_ratio", format!("t={t}"), CheckKind::Observational, true, c.ratio, None, "enumeration",
            format!("alpha {}, as {}", c.alpha, c.as_exact));
    }
    Ok(rows.rows)
}

pub fn run_suite(name: SuiteName, ctx: &SuiteContext) -> Result<Vec<CheckRow>, CliError> {
    Ok(match name {
        SuiteName::Invariants => invariants_suite(ctx)?,
        SuiteName::Gl => gl_suite(ctx)?,
        SuiteName::Anticoncentration => anticoncentration_suite(ctx)?,
        SuiteName::Invariance => invariance_suite(ctx)?,
        SuiteName::Decompose => decompose_suite(ctx)?,
        SuiteName::All => {
            let mut rows = invariants_suite(ctx)?;
            rows.extend(gl_suite(ctx)?);
            rows.extend(anticoncentration_suite(ctx)?);
            rows.extend(invariance_suite(ctx)?);
            rows.extend(decompose_suite(ctx)?);
            rows
        }
    })
}
