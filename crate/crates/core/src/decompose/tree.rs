//! Regularity decision trees: restrict influential coordinates until almost
//! every leaf is either regular or close to constant sign.

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, invalid, Result};
use crate::hypercube::{average_sensitivity_exact, sgn, SignFunction, ENUMERATION_CAP};
use crate::polynomial::MultilinearPolynomial;

/// Leaf count guard for [`build_regularity_tree`].
pub const DEFAULT_LEAF_BUDGET: usize = 1 << 16;
/// Live-variable count up to which near-constant leaves are checked exactly.
pub const DEFAULT_EXACT_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    /// `None` means `n`.
    pub max_depth: Option<usize>,
    /// `None` means `8 * 2^d * ceil(ln(1/delta))`.
    pub max_rounds: Option<usize>,
    pub leaf_budget: usize,
    pub exact_cap: usize,
}

impl RegularityConfig {
    pub fn new(tau: f64, eps: f64, delta: f64) -> Result<Self> {
        let c = Self {
            tau,
            eps,
            delta,
            big_m: 1.0,
            max_depth: None,
            max_rounds: None,
            leaf_budget: DEFAULT_LEAF_BUDGET,
            exact_cap: DEFAULT_EXACT_CAP,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(invalid(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.eps > 0.0 && self.eps < 0.25) {
            return Err(invalid(format!("eps must lie in (0, 1/4), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 0.25) {
            return Err(invalid(format!("delta must lie in (0, 1/4), got {}", self.delta)));
        }
        if !(self.big_m > 0.0 && self.big_m.is_finite()) {
            return Err(invalid(format!("M must be positive, got {}", self.big_m)));
        }
        if self.leaf_budget == 0 || self.max_rounds == Some(0) {
            return Err(invalid("leaf budget and round cap must be positive"));
        }
        Ok(())
    }

    pub fn rounds_for_degree(&self, d: usize) -> usize {
        self.max_rounds.unwrap_or_else(|| {
            let log = (1.0 / self.delta).ln().ceil().max(1.0) as usize;
            8usize.saturating_mul(1usize.checked_shl(d as u32).unwrap_or(usize::MAX)).saturating_mul(log)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum LeafClass {
    Regular,
    NearConstant { sign: i8 },
    Bad,
}

/// How a leaf was classified as near constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMethod {
    Regularity,
    Enumeration,
    VarianceCriterion,
    None,
}

/// `{i : Inf_i(p) > m}`, in increasing index order.
pub fn influential_set(p: &MultilinearPolynomial, m: f64) -> Result<Vec<usize>> {
    if !(m > 0.0) {
        return Err(invalid(format!("influence threshold must be positive, got {m}")));
    }
    Ok(p.influences()
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| v > m)
        .map(|(i, _)| i)
        .collect())
}

/// `tau (d ln(1/tau) ln(1/eps))^{-M d}`.
pub fn default_threshold(tau: f64, eps: f64, d: usize, big_m: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(eps > 0.0 && eps < 0.25) {
        return Err(invalid(format!("eps must lie in (0, 1/4), got {eps}")));
    }
    if !(big_m >= 0.0) {
        return Err(invalid(format!("M must be non-negative, got {big_m}")));
    }
    let base = d as f64 * (1.0 / tau).ln() * (1.0 / eps).ln();
    if big_m == 0.0 || d == 0 {
        return Ok(tau);
    }
    Ok(tau * base.powf(-big_m * d as f64))
}

fn exact_disagreement(p: &MultilinearPolynomial, sign: i8) -> f64 {
    let (q, _) = p.compact();
    let kernel = q.cube_kernel().expect("compacted within cap");
    let size = 1u64 << q.n();
    let bad = (0..size).filter(|&m| sgn(kernel.eval(m)) != sign).count();
    bad as f64 / size as f64
}

fn classify(p: &MultilinearPolynomial, tau: f64, eps: f64, exact_cap: usize) -> (LeafClass, ClassMethod) {
    let m = p.moments();
    if m.variance > 0.0 && p.is_regular(tau).unwrap_or(false) {
        return (LeafClass::Regular, ClassMethod::Regularity);
    }
    let sign = sgn(m.mean);
    if p.live_vars().len() <= exact_cap {
        if exact_disagreement(p, sign) <= eps {
            return (LeafClass::NearConstant { sign }, ClassMethod::Enumeration);
        }
    } else {
        let d = p.degree() as f64;
        if m.variance <= (4.0 * (1.0 / eps).ln()).powf(-d / 2.0) * m.mean * m.mean {
            return (LeafClass::NearConstant { sign }, ClassMethod::VarianceCriterion);
        }
    }
    (LeafClass::Bad, ClassMethod::None)
}

/// Regular first, then near constant (exactly when at most `exact_cap`
/// variables are live, by the variance/mean criterion otherwise), else bad.
pub fn classify_leaf(p: &MultilinearPolynomial, tau: f64, eps: f64, exact_cap: usize) -> LeafClass {
    classify(p, tau, eps, exact_cap).0
}

/// One coordinate fixed along a root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub var: usize,
    pub value: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    #[serde(flatten)]
    pub class: LeafClass,
    pub method: ClassMethod,
    pub depth: usize,
    pub path: Vec<PathStep>,
    pub polynomial: MultilinearPolynomial,
}

impl Leaf {
    /// Probability of reaching the leaf under uniform input.
    pub fn mass(&self) -> f64 {
        0.5f64.powi(self.depth as i32)
    }
}

/// Nested form used for serialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal { var: usize, children: Box<[TreeNode; 2]> },
    Leaf(Leaf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionTree {
    pub n: usize,
    pub depth: usize,
    pub leaf_count: usize,
    pub bad_mass: f64,
    pub success: bool,
    pub rounds: usize,
    pub expansions: usize,
    pub diagnostics: Vec<String>,
    #[serde(serialize_with = "serialize_root", rename = "root")]
    leaves: Vec<Leaf>,
}

fn serialize_root<S: serde::Serializer>(leaves: &[Leaf], s: S) -> std::result::Result<S::Ok, S::Error> {
    let refs: Vec<&Leaf> = leaves.iter().collect();
    nest(&refs, 0).serialize(s)
}

fn nest(leaves: &[&Leaf], level: usize) -> TreeNode {
    if leaves.len() == 1 && leaves[0].path.len() == level {
        return TreeNode::Leaf(leaves[0].clone());
    }
    let var = leaves[0].path[level].var;
    let (neg, pos): (Vec<&Leaf>, Vec<&Leaf>) = leaves.iter().partition(|l| l.path[level].value == -1);
    TreeNode::Internal {
        var,
        children: Box::new([nest(&neg, level + 1), nest(&pos, level + 1)]),
    }
}

impl DecisionTree {
    /// Leaves in expansion order; the `-1` branch precedes the `+1` branch.
    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn root(&self) -> TreeNode {
        let refs: Vec<&Leaf> = self.leaves.iter().collect();
        nest(&refs, 0)
    }

    pub fn mass_of(&self, pred: impl Fn(&LeafClass) -> bool) -> f64 {
        self.leaves.iter().filter(|l| pred(&l.class)).map(Leaf::mass).sum()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }
}

fn make_leaf(p: MultilinearPolynomial, path: Vec<PathStep>, config: &RegularityConfig) -> Leaf {
    let (class, method) = classify(&p, config.tau, config.eps, config.exact_cap);
    Leaf {
        class,
        method,
        depth: path.len(),
        path,
        polynomial: p,
    }
}

/// The coordinate to split a bad leaf on: the most influential member of the
/// influential set (lowest index on ties), or the most influential live
/// coordinate when the set is empty.
fn split_coordinate(p: &MultilinearPolynomial, threshold: f64) -> Option<usize> {
    let norm_sq = p.moments().l2_norm.powi(2);
    if norm_sq == 0.0 {
        return None;
    }
    let inf = p.influences();
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in inf.iter().enumerate() {
        if v / norm_sq > threshold && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.or_else(|| p.max_influence().filter(|&(_, v)| v > 0.0)).map(|(i, _)| i)
}

/// Expands bad leaves until their total mass is at most `delta` or a cap is
/// hit.
///
/// Each round splits every bad leaf on one coordinate of its influential set
/// (threshold [`default_threshold`] on the leaf normalized to unit L2 norm),
/// taking coordinates in decreasing-influence order and reclassifying both
/// children before going further. Children that come out regular or near
/// constant are not expanded again.
pub fn build_regularity_tree(p: &MultilinearPolynomial, config: &RegularityConfig) -> Result<DecisionTree> {
    config.validate()?;
    let n = p.n();
    let d = p.degree();
    let threshold = default_threshold(config.tau, config.eps, d.max(1), config.big_m)?;
    let max_depth = config.max_depth.unwrap_or(n).min(n);
    let max_rounds = config.rounds_for_degree(d);

    let mut leaves = vec![make_leaf(p.clone(), Vec::new(), config)];
    let mut diagnostics = Vec::new();
    let mut rounds = 0;
    let mut expansions = 0;
    let bad_mass = |leaves: &[Leaf]| -> f64 {
        leaves.iter().filter(|l| l.class == LeafClass::Bad).map(Leaf::mass).sum()
    };

    while bad_mass(&leaves) > config.delta {
        if rounds == max_rounds {
            diagnostics.push(format!("round cap {max_rounds} reached"));
            break;
        }
        rounds += 1;
        let mut next = Vec::with_capacity(leaves.len());
        let mut progressed = false;
        let mut budget_hit = false;
        let mut depth_hit = false;
        let mut remaining = leaves.len();
        for leaf in leaves {
            remaining -= 1;
            let split = if leaf.class != LeafClass::Bad || budget_hit {
                None
            } else if leaf.depth >= max_depth {
                depth_hit = true;
                None
            } else if next.len() + remaining + 2 > config.leaf_budget {
                budget_hit = true;
                None
            } else {
                split_coordinate(&leaf.polynomial, threshold)
            };
            match split {
                Some(var) => {
                    for value in [-1i8, 1] {
                        // restrict the root in one pass so leaves match it exactly
                        let mut path = leaf.path.clone();
                        path.push(PathStep { var, value });
                        let fixed: Vec<(usize, i8)> = path.iter().map(|s| (s.var, s.value)).collect();
                        next.push(make_leaf(p.restrict_many(&fixed)?, path, config));
                    }
                    expansions += 1;
                    progressed = true;
                }
                None => next.push(leaf),
            }
        }
        leaves = next;
        if budget_hit {
            diagnostics.push(format!("leaf budget {} reached", config.leaf_budget));
            break;
        }
        if !progressed {
            if depth_hit {
                diagnostics.push(format!("depth cap {max_depth} reached"));
            } else {
                diagnostics.push("no bad leaf can be split further".to_string());
            }
            break;
        }
    }

    let bad = bad_mass(&leaves);
    let success = bad <= config.delta;
    if !success && diagnostics.is_empty() {
        diagnostics.push("bad-leaf mass above target".to_string());
    }
    Ok(DecisionTree {
        n,
        depth: leaves.iter().map(|l| l.depth).max().unwrap_or(0),
        leaf_count: leaves.len(),
        bad_mass: bad,
        success,
        rounds,
        expansions,
        diagnostics,
        leaves,
    })
}

/// `as(f)` against `depth + E_leaf[as(f_leaf)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSensitivityCheck {
    pub as_exact: f64,
    pub depth: usize,
    pub leaf_expectation: f64,
    pub holds: bool,
}

pub fn tree_sensitivity_check(f: &SignFunction, tree: &DecisionTree) -> Result<TreeSensitivityCheck> {
    check_cap("tree sensitivity check", f.n(), ENUMERATION_CAP)?;
    if tree.n != f.n() {
        return Err(crate::PtfError::DimensionMismatch {
            expected: f.n(),
            got: tree.n,
        });
    }
    let as_exact = average_sensitivity_exact(f)?;
    let mut leaf_expectation = 0.0;
    for leaf in tree.leaves() {
        let (q, _) = leaf.polynomial.compact();
        leaf_expectation += leaf.mass() * average_sensitivity_exact(&SignFunction::new(q))?;
    }
    Ok(TreeSensitivityCheck {
        as_exact,
        depth: tree.depth,
        leaf_expectation,
        holds: as_exact <= tree.depth as f64 + leaf_expectation + 1e-9,
    })
}

/// A single-leaf tree holding `p` unchanged.
pub fn trivial_tree(p: &MultilinearPolynomial, config: &RegularityConfig) -> DecisionTree {
    let leaf = make_leaf(p.clone(), Vec::new(), config);
    let bad = if leaf.class == LeafClass::Bad { 1.0 } else { 0.0 };
    DecisionTree {
        n: p.n(),
        depth: 0,
        leaf_count: 1,
        bad_mass: bad,
        success: bad <= config.delta,
        rounds: 0,
        expansions: 0,
        diagnostics: Vec::new(),
        leaves: vec![leaf],
    }
}

/// The depth-one tree splitting on `var`.
pub fn split_once(p: &MultilinearPolynomial, var: usize, config: &RegularityConfig) -> Result<DecisionTree> {
    let mut leaves = Vec::with_capacity(2);
    for value in [-1i8, 1] {
        leaves.push(make_leaf(p.restrict(var, value)?, vec![PathStep { var, value }], config));
    }
    let bad: f64 = leaves.iter().filter(|l| l.class == LeafClass::Bad).map(Leaf::mass).sum();
    Ok(DecisionTree {
        n: p.n(),
        depth: 1,
        leaf_count: 2,
        bad_mass: bad,
        success: bad <= config.delta,
        rounds: 1,
        expansions: 1,
        diagnostics: Vec::new(),
        leaves,
    })
}
