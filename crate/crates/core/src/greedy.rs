//! The greedy tree-growing policies and their iteration traces.
//!
//! All three policies grow one split per iteration and differ only in how
//! they pick the (leaf, feature) pair:
//!
//! * `TopDown` maximizes the reach-weighted entropy gain
//!   `p(l) * (H(q) - (1-tau) H(q0) - tau H(q1))`.
//! * `BestFirst` maximizes the same gain without the `p(l)` factor.
//! * `Id3` expands impure leaves in FIFO creation order, each on its own
//!   max-gain feature.
//!
//! Selection is fully deterministic. Candidates are scanned by leaf
//! creation order ascending, then feature index ascending; a strictly
//! greater score replaces the incumbent, and a score within `GAIN_TOL`
//! counts as a tie, which the later *leaf* wins while ties within a single
//! leaf keep the earlier feature. Growth stops early once the best score
//! drops to the tolerance (every leaf is then constant), and shorter runs
//! stand in for all larger budgets.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::dnf::{ProductDistribution, ReadOnceDnf};
use crate::error::Error;
use crate::tree::{split_gain, DecisionTree, Leaf};
use crate::GAIN_TOL;

/// Which growing policy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    TopDown,
    BestFirst,
    Id3,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::TopDown => "topdown",
            Policy::BestFirst => "bestfirst",
            Policy::Id3 => "id3",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "topdown" => Ok(Policy::TopDown),
            "bestfirst" => Ok(Policy::BestFirst),
            "id3" => Ok(Policy::Id3),
            other => Err(Error::InvalidConfig(format!(
                "unknown policy '{other}' (expected topdown, bestfirst, or id3)"
            ))),
        }
    }
}

/// How ties between equal-score candidates are handled in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieMode {
    /// The deterministic scan-order rule described in this module.
    Documented,
    /// Exhaustive search over every tie choice, reporting per-budget
    /// worst-case errors. Only feasible for tiny instances.
    WorstCase,
}

impl TieMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TieMode::Documented => "documented",
            TieMode::WorstCase => "worst_case",
        }
    }
}

impl fmt::Display for TieMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TieMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "documented" => Ok(TieMode::Documented),
            "worst_case" | "worst-case" => Ok(TieMode::WorstCase),
            other => Err(Error::InvalidConfig(format!(
                "unknown tie mode '{other}' (expected documented or worst_case)"
            ))),
        }
    }
}

/// One growth iteration: the tree state after the split was applied.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub t: usize,
    pub internal_nodes: usize,
    pub error: f64,
    pub leaf_order: usize,
    pub feature: usize,
}

/// Per-iteration record of a single policy run.
#[derive(Debug, Clone)]
pub struct GrowthTrace {
    pub policy: Policy,
    /// Error of the single-leaf tree before any split.
    pub initial_error: f64,
    pub steps: Vec<TraceStep>,
}

impl GrowthTrace {
    /// Iteration at which growth stopped, either at the budget or earlier
    /// once every leaf was constant.
    pub fn terminal_t(&self) -> usize {
        self.steps.last().map_or(0, |s| s.t)
    }

    /// Error of the tree with `t` splits; budgets past the terminal
    /// iteration reuse the terminal tree.
    pub fn error_at(&self, t: usize) -> f64 {
        let idx = t.min(self.steps.len());
        if idx == 0 {
            self.initial_error
        } else {
            self.steps[idx - 1].error
        }
    }

    /// CSV with columns `t,internal_nodes,error,leaf_order,feature`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,internal_nodes,error,leaf_order,feature\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{:.16e},{},{}\n",
                s.t, s.internal_nodes, s.error, s.leaf_order, s.feature
            ));
        }
        out
    }
}

/// Best candidate of a single leaf under the policy's score. Shared with
/// the finite-sample learner so both modes break ties identically.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub(crate) leaf_order: usize,
    pub(crate) feature: usize,
    pub(crate) score: f64,
}

/// Scans every unused feature of `leaf` and reduces to its best candidate.
/// Features absent from the residual formula have exactly zero gain and
/// are skipped; the reduction keeps the earliest feature on ties.
fn leaf_best(
    leaf: &Leaf,
    dist: &ProductDistribution,
    weighted: bool,
    flip_sign: bool,
) -> Option<Candidate> {
    if leaf.is_pure() {
        return None;
    }
    let mut best: Option<Candidate> = None;
    for feature in 0..dist.len() {
        if leaf.used.contains(&feature) || leaf.residual.term_of(feature).is_none() {
            continue;
        }
        let tau = dist.prob(feature);
        let (q0, q1) = leaf
            .residual
            .pos_probs_after_split(dist, feature)
            .expect("leaf residual covered by dist");
        let mut gain = split_gain(leaf.pos_prob, q0, q1, tau);
        if weighted {
            gain *= leaf.reach_prob;
        }
        if gain <= GAIN_TOL {
            continue;
        }
        let score = if flip_sign { -gain } else { gain };
        match best {
            // strictly greater replaces; ties keep the earlier feature
            Some(b) if score <= b.score + GAIN_TOL => {}
            _ => {
                best = Some(Candidate {
                    leaf_order: leaf.creation_order,
                    feature,
                    score,
                })
            }
        }
    }
    best
}

/// Scans per-leaf candidates (already sorted by creation order) and picks
/// the winner: strictly greater replaces, ties go to the later leaf.
pub(crate) fn select(candidates: &[Candidate]) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for &c in candidates {
        match best {
            None => best = Some(c),
            Some(b) if c.score >= b.score - GAIN_TOL => best = Some(c),
            Some(_) => {}
        }
    }
    best
}

pub(crate) fn run_policy_inner(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    policy: Policy,
    t_max: usize,
    flip_sign: bool,
) -> Result<(DecisionTree, GrowthTrace), Error> {
    if t_max == 0 {
        return Err(Error::InvalidConfig("t_max must be at least 1".into()));
    }
    let mut tree = DecisionTree::new(target, dist)?;
    let mut trace = GrowthTrace {
        policy,
        initial_error: tree.error(),
        steps: Vec::new(),
    };

    match policy {
        Policy::TopDown | Policy::BestFirst => {
            let weighted = policy == Policy::TopDown;
            // leaf candidates never change once the leaf exists, so only
            // the two children of each split need fresh scoring
            let mut candidates: Vec<Candidate> = Vec::new();
            if let Some(c) = leaf_best(tree.leaf(0).unwrap(), dist, weighted, flip_sign) {
                candidates.push(c);
            }
            for t in 1..=t_max {
                let Some(best) = select(&candidates) else {
                    break;
                };
                let (lo, hi) = tree.split(best.leaf_order, best.feature, dist)?;
                candidates.retain(|c| c.leaf_order != best.leaf_order);
                for order in [lo, hi] {
                    if let Some(c) =
                        leaf_best(tree.leaf(order).unwrap(), dist, weighted, flip_sign)
                    {
                        candidates.push(c);
                    }
                }
                trace.steps.push(TraceStep {
                    t,
                    internal_nodes: tree.internal_count(),
                    error: tree.error(),
                    leaf_order: best.leaf_order,
                    feature: best.feature,
                });
            }
        }
        Policy::Id3 => {
            let mut queue = VecDeque::new();
            if !tree.leaf(0).unwrap().is_pure() {
                queue.push_back(0);
            }
            let mut t = 0;
            while t < t_max {
                let Some(order) = queue.pop_front() else {
                    break;
                };
                let Some(best) = leaf_best(tree.leaf(order).unwrap(), dist, false, flip_sign)
                else {
                    continue;
                };
                let (lo, hi) = tree.split(order, best.feature, dist)?;
                for child in [lo, hi] {
                    if !tree.leaf(child).unwrap().is_pure() {
                        queue.push_back(child);
                    }
                }
                t += 1;
                trace.steps.push(TraceStep {
                    t,
                    internal_nodes: tree.internal_count(),
                    error: tree.error(),
                    leaf_order: order,
                    feature: best.feature,
                });
            }
        }
    }
    Ok((tree, trace))
}

/// Grows a tree for `target` under `dist` with at most `t_max` splits.
pub fn run_policy(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    policy: Policy,
    t_max: usize,
) -> Result<(DecisionTree, GrowthTrace), Error> {
    run_policy_inner(target, dist, policy, t_max, false)
}

pub fn run_topdown(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    t_max: usize,
) -> Result<(DecisionTree, GrowthTrace), Error> {
    run_policy(target, dist, Policy::TopDown, t_max)
}

pub fn run_bestfirst(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    t_max: usize,
) -> Result<(DecisionTree, GrowthTrace), Error> {
    run_policy(target, dist, Policy::BestFirst, t_max)
}

pub fn run_id3_recursive(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    t_max: usize,
) -> Result<(DecisionTree, GrowthTrace), Error> {
    run_policy(target, dist, Policy::Id3, t_max)
}

/// Every candidate whose score ties the maximum, reduced to one
/// representative per (leaf, term, feature-probability) class; tied
/// features that are symmetric under the distribution lead to isomorphic
/// trees, so exploring one of them is enough.
fn tied_candidates(
    tree: &DecisionTree,
    dist: &ProductDistribution,
    weighted: bool,
) -> Vec<(usize, usize)> {
    let mut scored: Vec<(usize, usize, f64)> = Vec::new();
    let mut max = f64::NEG_INFINITY;
    for leaf in tree.leaves() {
        if leaf.is_pure() {
            continue;
        }
        let mut seen_classes: Vec<(usize, u64)> = Vec::new();
        for feature in 0..dist.len() {
            if leaf.used.contains(&feature) {
                continue;
            }
            let Some(term) = leaf.residual.term_of(feature) else {
                continue;
            };
            let class = (term, dist.prob(feature).to_bits());
            if seen_classes.contains(&class) {
                continue;
            }
            seen_classes.push(class);
            let tau = dist.prob(feature);
            let (q0, q1) = leaf
                .residual
                .pos_probs_after_split(dist, feature)
                .expect("leaf residual covered by dist");
            let mut gain = split_gain(leaf.pos_prob, q0, q1, tau);
            if weighted {
                gain *= leaf.reach_prob;
            }
            if gain <= GAIN_TOL {
                continue;
            }
            max = max.max(gain);
            scored.push((leaf.creation_order, feature, gain));
        }
    }
    scored
        .into_iter()
        .filter(|&(_, _, g)| g >= max - GAIN_TOL)
        .map(|(l, f, _)| (l, f))
        .collect()
}

/// Worst tree error at every budget `0..=t_max` over all runs that respect
/// the policy's score but break ties arbitrarily.
///
/// The search explores every tie branch (up to symmetry) and fails with
/// [`Error::TieExplosion`] once `branch_cap` tree states have been visited.
pub fn worst_case_errors(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    policy: Policy,
    t_max: usize,
    branch_cap: usize,
) -> Result<Vec<f64>, Error> {
    let weighted = match policy {
        Policy::TopDown => true,
        Policy::BestFirst => false,
        Policy::Id3 => {
            return Err(Error::UnsupportedFamily(
                "worst-case tie search covers topdown and bestfirst only".into(),
            ))
        }
    };

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        tree: &DecisionTree,
        t: usize,
        t_max: usize,
        dist: &ProductDistribution,
        weighted: bool,
        worst: &mut Vec<f64>,
        visited: &mut usize,
        cap: usize,
    ) -> Result<(), Error> {
        *visited += 1;
        if *visited > cap {
            return Err(Error::TieExplosion { limit: cap });
        }
        let err = tree.error();
        worst[t] = worst[t].max(err);
        if t == t_max {
            return Ok(());
        }
        let ties = tied_candidates(tree, dist, weighted);
        if ties.is_empty() {
            for w in worst.iter_mut().skip(t + 1) {
                *w = w.max(err);
            }
            return Ok(());
        }
        for (leaf_order, feature) in ties {
            let mut next = tree.clone();
            next.split(leaf_order, feature, dist)?;
            dfs(&next, t + 1, t_max, dist, weighted, worst, visited, cap)?;
        }
        Ok(())
    }

    let tree = DecisionTree::new(target, dist)?;
    let mut worst = vec![f64::NEG_INFINITY; t_max + 1];
    let mut visited = 0;
    dfs(
        &tree, 0, t_max, dist, weighted, &mut worst, &mut visited, branch_cap,
    )?;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{benchmark_tree, two_term_target};

    #[test]
    fn topdown_orders_conjunction_by_probability() {
        let f = ReadOnceDnf::conjunction([0, 1]).unwrap();
        let d = ProductDistribution::new(vec![0.3, 0.5]).unwrap();
        let (tree, trace) = run_topdown(&f, &d, 2).unwrap();
        assert_eq!(tree.shape_string(), "(x0 0 (x1 0 1))");
        assert_eq!(trace.steps[0].feature, 0);
        assert!(trace.error_at(2).abs() < 1e-15);

        let d = ProductDistribution::new(vec![0.5, 0.3]).unwrap();
        let (tree, _) = run_topdown(&f, &d, 2).unwrap();
        assert_eq!(tree.shape_string(), "(x1 0 (x0 0 1))");
    }

    #[test]
    fn topdown_matches_benchmark_at_five_and_finishes_at_eight() {
        let f = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let (t5, _) = run_topdown(&f, &d, 5).unwrap();
        assert!(t5.same_shape(&benchmark_tree(2, 3, 5).unwrap()));
        assert!((t5.error() - 1.0 / 32.0).abs() < 1e-15);

        let (t8, trace) = run_topdown(&f, &d, 12).unwrap();
        assert_eq!(trace.terminal_t(), 8);
        assert!(t8.error().abs() < 1e-15);
        assert!((trace.error_at(12) - trace.error_at(8)).abs() < 1e-15);
    }

    #[test]
    fn bestfirst_takes_the_late_tied_leaf() {
        let f = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let (tree, trace) = run_bestfirst(&f, &d, 5).unwrap();
        // right path x0, x1; the full y-path hangs under x1's low child
        assert_eq!(
            tree.shape_string(),
            "(x0 0 (x1 (x2 0 (x3 0 (x4 0 1))) 1))"
        );
        assert!((tree.error() - 1.0 / 16.0).abs() < 1e-15);
        assert!(!tree.same_shape(&benchmark_tree(2, 3, 5).unwrap()));
        assert!((trace.error_at(5) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn policies_coincide_with_one_impure_leaf() {
        // a conjunction keeps exactly one impure leaf at every step
        let f = ReadOnceDnf::conjunction([0, 1, 2, 3]).unwrap();
        let d = ProductDistribution::uniform(4);
        for t in 1..=4 {
            let (a, _) = run_topdown(&f, &d, t).unwrap();
            let (b, _) = run_bestfirst(&f, &d, t).unwrap();
            let (c, _) = run_id3_recursive(&f, &d, t).unwrap();
            assert!(a.same_shape(&b));
            assert!(a.same_shape(&c));
        }
    }

    #[test]
    fn id3_roots_at_a_minimal_term_and_expands_fifo() {
        let f = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let (tree, trace) = run_id3_recursive(&f, &d, 8).unwrap();
        assert_eq!(trace.steps[0].feature, 0);
        // FIFO order: the low child (order 1) is expanded before the high
        assert_eq!(trace.steps[1].leaf_order, 1);
        assert!(tree.error().abs() < 1e-15);
    }

    #[test]
    fn constant_targets_stop_immediately() {
        let d = ProductDistribution::uniform(2);
        for policy in [Policy::TopDown, Policy::BestFirst, Policy::Id3] {
            let (tree, trace) =
                run_policy(&ReadOnceDnf::Satisfied, &d, policy, 3).unwrap();
            assert_eq!(tree.internal_count(), 0);
            assert_eq!(trace.terminal_t(), 0);
            assert_eq!(trace.error_at(3), 0.0);
        }
    }

    #[test]
    fn trace_errors_never_increase() {
        let f = ReadOnceDnf::from_terms(vec![vec![0], vec![1, 2], vec![3, 4, 5]]).unwrap();
        let d = ProductDistribution::uniform(6);
        for policy in [Policy::TopDown, Policy::BestFirst, Policy::Id3] {
            let (_, trace) = run_policy(&f, &d, policy, 20).unwrap();
            let mut prev = trace.initial_error;
            for s in &trace.steps {
                assert!(s.error <= prev + 1e-15);
                assert_eq!(s.internal_nodes, s.t);
                prev = s.error;
            }
        }
    }

    #[test]
    fn trace_csv_format() {
        let f = ReadOnceDnf::conjunction([0, 1]).unwrap();
        let d = ProductDistribution::uniform(2);
        let (_, trace) = run_topdown(&f, &d, 2).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,internal_nodes,error,leaf_order,feature"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 5);
        assert_eq!(first[0], "1");
        assert!(first[2].contains('e'));
    }

    #[test]
    fn zero_budget_is_rejected() {
        let f = ReadOnceDnf::conjunction([0]).unwrap();
        let d = ProductDistribution::uniform(1);
        assert!(matches!(
            run_topdown(&f, &d, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn worst_case_covers_the_documented_run() {
        let f = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let worst = worst_case_errors(&f, &d, Policy::BestFirst, 5, 100_000).unwrap();
        // the documented run is one of the explored tie branches
        let (_, trace) = run_bestfirst(&f, &d, 5).unwrap();
        for (t, w) in worst.iter().enumerate() {
            assert!(*w >= trace.error_at(t) - 1e-15, "t={t}");
        }
        assert!((worst[5] - 1.0 / 16.0).abs() < 1e-15);

        let tiny_cap = worst_case_errors(&f, &d, Policy::BestFirst, 5, 3);
        assert!(matches!(tiny_cap, Err(Error::TieExplosion { limit: 3 })));
    }

    #[test]
    fn flipped_sign_changes_the_two_term_run() {
        let f = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let (good, _) = run_policy_inner(&f, &d, Policy::TopDown, 5, false).unwrap();
        let (bad, _) = run_policy_inner(&f, &d, Policy::TopDown, 5, true).unwrap();
        assert!(!good.same_shape(&bad));
        assert!(bad.error() >= good.error() - 1e-15);
    }

    #[test]
    fn policy_strings_round_trip() {
        for p in [Policy::TopDown, Policy::BestFirst, Policy::Id3] {
            assert_eq!(p.as_str().parse::<Policy>().unwrap(), p);
        }
        assert!("cart".parse::<Policy>().is_err());
        for m in [TieMode::Documented, TieMode::WorstCase] {
            assert_eq!(m.as_str().parse::<TieMode>().unwrap(), m);
        }
    }
}
