//! Finite-sample mode: labeled datasets drawn from a product
//! distribution, greedy growing with plug-in gain estimates, and the
//! train-size sweep experiment.
//!
//! The learner mirrors the exact policies — same scores, same scan order,
//! same tie rule — with probabilities replaced by counts, plus two
//! support rules the exact mode does not need: a leaf is split only when
//! at least `min_leaf` training points reach it, and only on features
//! that give both children at least one point. Assignments are stored as
//! bit masks, so at most 64 variables are supported (the experiments use
//! 38).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dnf::{entropy, ProductDistribution, ReadOnceDnf};
use crate::error::Error;
use crate::greedy::{select, Candidate, Policy};
use crate::tree::{LeafJson, TreeJson};
use crate::GAIN_TOL;

const MAX_VARS: usize = 64;

/// Labeled boolean examples; bit `i` of a row is the value of variable `i`.
#[derive(Debug, Clone)]
pub struct Dataset {
    n: usize,
    rows: Vec<u64>,
    labels: Vec<bool>,
    seed: u64,
}

impl Dataset {
    /// Wraps pre-built examples (used by tests and exhaustive datasets).
    pub fn from_parts(n: usize, rows: Vec<u64>, labels: Vec<bool>, seed: u64) -> Result<Self, Error> {
        if n > MAX_VARS {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_VARS} variables supported, got {n}"
            )));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} rows vs {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::InvalidConfig("empty dataset".into()));
        }
        Ok(Dataset { n, rows, labels, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn label(&self, i: usize) -> bool {
        self.labels[i]
    }
}

fn eval_bits(target: &ReadOnceDnf, row: u64) -> bool {
    match target {
        ReadOnceDnf::Satisfied => true,
        ReadOnceDnf::Falsified => false,
        ReadOnceDnf::Terms(_) => target
            .terms()
            .iter()
            .any(|t| t.vars().all(|v| row >> v & 1 == 1)),
    }
}

/// Draws `rows` i.i.d. examples from `dist` labeled by exact evaluation
/// of `target`. Deterministic for a fixed seed (ChaCha8 generator).
pub fn sample_dataset(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    rows: usize,
    seed: u64,
) -> Result<Dataset, Error> {
    if rows == 0 {
        return Err(Error::InvalidConfig("dataset needs at least one row".into()));
    }
    let n = dist.len();
    if n > MAX_VARS {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_VARS} variables supported, got {n}"
        )));
    }
    for t in target.terms() {
        for v in t.vars() {
            if v >= n {
                return Err(Error::MissingProbability { var: v, len: n });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = 0u64;
        for i in 0..n {
            if rng.gen::<f64>() < dist.prob(i) {
                row |= 1 << i;
            }
        }
        data.push(row);
        labels.push(eval_bits(target, row));
    }
    Dataset::from_parts(n, data, labels, seed)
}

#[derive(Debug, Clone)]
struct EmpiricalLeaf {
    /// Indices of training rows reaching this leaf.
    rows: Vec<u32>,
    positives: usize,
    creation_order: usize,
    used_mask: u64,
}

impl EmpiricalLeaf {
    fn support(&self) -> usize {
        self.rows.len()
    }

    /// Majority label; exact ties go to 1, as in the exact mode.
    fn label(&self) -> bool {
        2 * self.positives >= self.support()
    }
}

#[derive(Debug, Clone)]
enum ENode {
    Leaf(EmpiricalLeaf),
    Split {
        feature: usize,
        /// Training support of the leaf this split replaced.
        support: usize,
        low: usize,
        high: usize,
    },
}

/// A tree grown from counts rather than exact probabilities.
#[derive(Debug, Clone)]
pub struct EmpiricalTree {
    nodes: Vec<ENode>,
    internal_count: usize,
    train_size: usize,
}

impl EmpiricalTree {
    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn predict_bits(&self, row: u64) -> bool {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                ENode::Leaf(l) => return l.label(),
                ENode::Split { feature, low, high, .. } => {
                    id = if row >> feature & 1 == 1 { *high } else { *low };
                }
            }
        }
    }

    /// Smallest training support among all performed splits, for auditing
    /// the `min_leaf` rule. `None` when the tree is a single leaf.
    pub fn min_split_support(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                ENode::Split { support, .. } => Some(*support),
                ENode::Leaf(_) => None,
            })
            .min()
    }

    /// Serialized shape with plug-in leaf statistics (`p` = fraction of
    /// training rows reaching the leaf, `q` = positive fraction there).
    pub fn to_json(&self) -> TreeJson {
        fn conv(tree: &EmpiricalTree, id: usize) -> TreeJson {
            match &tree.nodes[id] {
                ENode::Leaf(l) => TreeJson::Leaf {
                    leaf: LeafJson {
                        label: l.label(),
                        p: l.support() as f64 / tree.train_size as f64,
                        q: if l.support() == 0 {
                            0.0
                        } else {
                            l.positives as f64 / l.support() as f64
                        },
                    },
                },
                ENode::Split { feature, low, high, .. } => TreeJson::Split {
                    feature: *feature,
                    left: Box::new(conv(tree, *low)),
                    right: Box::new(conv(tree, *high)),
                },
            }
        }
        conv(self, 0)
    }

    /// Exact error of this tree's fixed labels under the generating
    /// distribution; a debugging aid, not part of the experiment outputs.
    pub fn exact_error(
        &self,
        target: &ReadOnceDnf,
        dist: &ProductDistribution,
    ) -> Result<f64, Error> {
        fn walk(
            tree: &EmpiricalTree,
            id: usize,
            residual: &ReadOnceDnf,
            reach: f64,
            dist: &ProductDistribution,
        ) -> Result<f64, Error> {
            match &tree.nodes[id] {
                ENode::Leaf(l) => {
                    let q = residual.satisfy_probability(dist)?;
                    Ok(reach * if l.label() { 1.0 - q } else { q })
                }
                ENode::Split { feature, low, high, .. } => {
                    let tau = dist.prob(*feature);
                    let e0 = walk(
                        tree,
                        *low,
                        &residual.condition(*feature, false),
                        reach * (1.0 - tau),
                        dist,
                    )?;
                    let e1 = walk(
                        tree,
                        *high,
                        &residual.condition(*feature, true),
                        reach * tau,
                        dist,
                    )?;
                    Ok(e0 + e1)
                }
            }
        }
        walk(self, 0, target, 1.0, dist)
    }
}

/// Best eligible candidate of one empirical leaf: support at least
/// `min_leaf`, both children nonempty, positive gain. Same per-leaf
/// reduction as the exact mode (earlier feature wins ties).
fn leaf_best_empirical(
    leaf: &EmpiricalLeaf,
    data: &Dataset,
    weighted: bool,
    min_leaf: usize,
) -> Option<Candidate> {
    let support = leaf.support();
    if support < min_leaf {
        return None;
    }
    let q = leaf.positives as f64 / support as f64;
    let h_parent = entropy(q);
    let mut best: Option<Candidate> = None;
    for feature in 0..data.n() {
        if leaf.used_mask >> feature & 1 == 1 {
            continue;
        }
        let mut n1 = 0usize;
        let mut pos1 = 0usize;
        for &r in &leaf.rows {
            if data.row(r as usize) >> feature & 1 == 1 {
                n1 += 1;
                if data.label(r as usize) {
                    pos1 += 1;
                }
            }
        }
        let n0 = support - n1;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let pos0 = leaf.positives - pos1;
        let tau = n1 as f64 / support as f64;
        let q0 = pos0 as f64 / n0 as f64;
        let q1 = pos1 as f64 / n1 as f64;
        let mut gain = h_parent - (1.0 - tau) * entropy(q0) - tau * entropy(q1);
        if weighted {
            gain *= support as f64 / data.len() as f64;
        }
        if gain <= GAIN_TOL {
            continue;
        }
        match best {
            Some(b) if gain <= b.score + GAIN_TOL => {}
            _ => {
                best = Some(Candidate {
                    leaf_order: leaf.creation_order,
                    feature,
                    score: gain,
                })
            }
        }
    }
    best
}

/// Grows a tree on `data` with plug-in estimates, at most `max_iters`
/// splits, and the `min_leaf` support rule.
pub fn run_empirical(
    policy: Policy,
    data: &Dataset,
    max_iters: usize,
    min_leaf: usize,
) -> Result<EmpiricalTree, Error> {
    let weighted = match policy {
        Policy::TopDown => true,
        Policy::BestFirst => false,
        Policy::Id3 => {
            return Err(Error::InvalidConfig(
                "finite-sample mode supports topdown and bestfirst".into(),
            ))
        }
    };
    if min_leaf == 0 {
        return Err(Error::InvalidConfig("min_leaf must be at least 1".into()));
    }

    let root = EmpiricalLeaf {
        rows: (0..data.len() as u32).collect(),
        positives: (0..data.len()).filter(|&i| data.label(i)).count(),
        creation_order: 0,
        used_mask: 0,
    };
    let mut tree = EmpiricalTree {
        nodes: vec![ENode::Leaf(root)],
        internal_count: 0,
        train_size: data.len(),
    };
    let mut next_order = 1;
    // (arena id, candidate) pairs stay sorted by creation order: children
    // are appended with ever-larger orders, as in the exact mode
    let mut candidates: Vec<(usize, Candidate)> = Vec::new();
    if let ENode::Leaf(l) = &tree.nodes[0] {
        if let Some(c) = leaf_best_empirical(l, data, weighted, min_leaf) {
            candidates.push((0, c));
        }
    }

    for _ in 0..max_iters {
        let Some(best) = select(
            &candidates.iter().map(|&(_, c)| c).collect::<Vec<_>>(),
        ) else {
            break;
        };
        let pos = candidates
            .iter()
            .position(|&(_, c)| c.leaf_order == best.leaf_order)
            .expect("selected candidate present");
        let (id, _) = candidates.remove(pos);
        let leaf = match &tree.nodes[id] {
            ENode::Leaf(l) => l.clone(),
            ENode::Split { .. } => unreachable!("candidate points at a split"),
        };

        let (mut low_rows, mut high_rows) = (Vec::new(), Vec::new());
        let (mut low_pos, mut high_pos) = (0usize, 0usize);
        for &r in &leaf.rows {
            let positive = data.label(r as usize);
            if data.row(r as usize) >> best.feature & 1 == 1 {
                high_rows.push(r);
                high_pos += usize::from(positive);
            } else {
                low_rows.push(r);
                low_pos += usize::from(positive);
            }
        }
        let used = leaf.used_mask | 1 << best.feature;
        let children = [
            EmpiricalLeaf {
                rows: low_rows,
                positives: low_pos,
                creation_order: next_order,
                used_mask: used,
            },
            EmpiricalLeaf {
                rows: high_rows,
                positives: high_pos,
                creation_order: next_order + 1,
                used_mask: used,
            },
        ];
        next_order += 2;

        let mut child_ids = [0usize; 2];
        for (slot, child) in children.into_iter().enumerate() {
            let child_id = tree.nodes.len();
            child_ids[slot] = child_id;
            if let Some(c) = leaf_best_empirical(&child, data, weighted, min_leaf) {
                candidates.push((child_id, c));
            }
            tree.nodes.push(ENode::Leaf(child));
        }
        tree.nodes[id] = ENode::Split {
            feature: best.feature,
            support: leaf.support(),
            low: child_ids[0],
            high: child_ids[1],
        };
        tree.internal_count += 1;
    }
    Ok(tree)
}

/// Fraction of test rows the tree mislabels.
pub fn evaluate(tree: &EmpiricalTree, test: &Dataset) -> f64 {
    let wrong = (0..test.len())
        .filter(|&i| tree.predict_bits(test.row(i)) != test.label(i))
        .count();
    wrong as f64 / test.len() as f64
}

/// Which distribution the experiment samples from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistSpec {
    Uniform,
    /// Half the variables (chosen at random per repeat) get success
    /// probability `p1`, the rest `p2`.
    TwoClass { p1: f64, p2: f64 },
}

/// Full description of a train-size sweep, mirrored by the JSON config
/// files the CLI accepts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub term_sizes: Vec<usize>,
    pub n: usize,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub min_leaf: usize,
    pub max_iters: usize,
    pub repeats: usize,
    pub dist: DistSpec,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let total: usize = self.term_sizes.iter().sum();
        if self.term_sizes.is_empty() || self.term_sizes.contains(&0) {
            return Err(Error::InvalidConfig("term_sizes must be positive".into()));
        }
        if total > self.n {
            return Err(Error::InvalidConfig(format!(
                "term sizes need {total} variables but n = {}",
                self.n
            )));
        }
        if self.n > MAX_VARS {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_VARS} variables supported, got {}",
                self.n
            )));
        }
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return Err(Error::InvalidConfig("train_sizes must be positive".into()));
        }
        if self.test_size == 0 {
            return Err(Error::InvalidConfig("test_size must be positive".into()));
        }
        if self.min_leaf == 0 || self.repeats == 0 || self.max_iters == 0 {
            return Err(Error::InvalidConfig(
                "min_leaf, max_iters, and repeats must be positive".into(),
            ));
        }
        if let DistSpec::TwoClass { p1, p2 } = self.dist {
            for p in [p1, p2] {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidProbability(p));
                }
            }
        }
        Ok(())
    }

    /// The target formula: terms over consecutive variable blocks.
    pub fn target(&self) -> ReadOnceDnf {
        let mut terms = Vec::with_capacity(self.term_sizes.len());
        let mut next = 0;
        for &s in &self.term_sizes {
            terms.push((next..next + s).collect());
            next += s;
        }
        ReadOnceDnf::from_terms(terms).expect("consecutive blocks are disjoint")
    }

    /// The sampling distribution for one repeat. Two-class mode assigns a
    /// random half of the variables to `p1`, derived from the experiment
    /// seed and the repeat index only, so it is shared across train sizes
    /// and both policies.
    pub fn distribution(&self, repeat: usize) -> ProductDistribution {
        match self.dist {
            DistSpec::Uniform => ProductDistribution::uniform(self.n),
            DistSpec::TwoClass { p1, p2 } => {
                let mut order: Vec<usize> = (0..self.n).collect();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(self.seed, u64::MAX, repeat as u64));
                for i in (1..order.len()).rev() {
                    let j = rng.gen_range(0..=i);
                    order.swap(i, j);
                }
                let mut probs = vec![p2; self.n];
                for &v in order.iter().take(self.n / 2) {
                    probs[v] = p1;
                }
                ProductDistribution::new(probs).expect("validated probabilities")
            }
        }
    }
}

/// One (policy, train size, repeat) measurement.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub policy: Policy,
    pub train_size: usize,
    pub repeat: usize,
    /// Seed the training set was sampled with.
    pub seed: u64,
    pub test_error: f64,
    pub internal_nodes: usize,
}

/// Mean and sample standard deviation over repeats.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub policy: Policy,
    pub train_size: usize,
    pub mean_test_error: f64,
    pub std_test_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResults {
    /// CSV with columns
    /// `policy,train_size,repeat,seed,test_error,tree_internal_nodes`.
    pub fn results_csv(&self) -> String {
        let mut out =
            String::from("policy,train_size,repeat,seed,test_error,tree_internal_nodes\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{:.16e},{}\n",
                c.policy, c.train_size, c.repeat, c.seed, c.test_error, c.internal_nodes
            ));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("policy,train_size,mean_test_error,std_test_error\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e}\n",
                s.policy, s.train_size, s.mean_test_error, s.std_test_error
            ));
        }
        out
    }
}

fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the full sweep: for every (train size, repeat), both policies are
/// trained on the same sampled training set and scored on the same test
/// set, making per-repeat comparisons paired. Cells run in parallel;
/// output order and content depend only on the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults, Error> {
    cfg.validate()?;
    let target = cfg.target();

    let mut items = Vec::new();
    for (size_idx, &train_size) in cfg.train_sizes.iter().enumerate() {
        for repeat in 0..cfg.repeats {
            items.push((size_idx, train_size, repeat));
        }
    }

    let cell_pairs: Vec<[CellResult; 2]> = items
        .par_iter()
        .map(|&(size_idx, train_size, repeat)| -> Result<[CellResult; 2], Error> {
            let dist = cfg.distribution(repeat);
            let train_seed = mix_seed(cfg.seed, size_idx as u64, 2 * repeat as u64);
            let test_seed = mix_seed(cfg.seed, size_idx as u64, 2 * repeat as u64 + 1);
            let train = sample_dataset(&target, &dist, train_size, train_seed)?;
            let test = sample_dataset(&target, &dist, cfg.test_size, test_seed)?;
            let mut out = Vec::with_capacity(2);
            for policy in [Policy::TopDown, Policy::BestFirst] {
                let tree = run_empirical(policy, &train, cfg.max_iters, cfg.min_leaf)?;
                out.push(CellResult {
                    policy,
                    train_size,
                    repeat,
                    seed: train_seed,
                    test_error: evaluate(&tree, &test),
                    internal_nodes: tree.internal_count(),
                });
            }
            Ok([out.remove(0), out.remove(0)])
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let cells: Vec<CellResult> = cell_pairs.into_iter().flatten().collect();

    let mut summary = Vec::new();
    for policy in [Policy::TopDown, Policy::BestFirst] {
        for &train_size in &cfg.train_sizes {
            let errs: Vec<f64> = cells
                .iter()
                .filter(|c| c.policy == policy && c.train_size == train_size)
                .map(|c| c.test_error)
                .collect();
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let std = if errs.len() < 2 {
                0.0
            } else {
                let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                    / (errs.len() - 1) as f64;
                var.sqrt()
            };
            summary.push(SummaryRow {
                policy,
                train_size,
                mean_test_error: mean,
                std_test_error: std,
            });
        }
    }
    Ok(ExperimentResults { cells, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::run_topdown;
    use crate::tree::two_term_target;

    fn xy23() -> (ReadOnceDnf, ProductDistribution) {
        (two_term_target(2, 3), ProductDistribution::uniform(5))
    }

    #[test]
    fn sampling_is_seeded_and_labeled() {
        let (f, d) = xy23();
        let a = sample_dataset(&f, &d, 100, 7).unwrap();
        let b = sample_dataset(&f, &d, 100, 7).unwrap();
        let c = sample_dataset(&f, &d, 100, 8).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_ne!(a.rows, c.rows);
        for i in 0..a.len() {
            assert_eq!(a.label(i), eval_bits(&f, a.row(i)));
        }
        assert!(sample_dataset(&f, &d, 0, 1).is_err());
    }

    #[test]
    fn sample_statistics_concentrate() {
        let (f, d) = xy23();
        let data = sample_dataset(&f, &d, 50_000, 42).unwrap();
        for i in 0..5 {
            let mean = (0..data.len())
                .filter(|&r| data.row(r) >> i & 1 == 1)
                .count() as f64
                / data.len() as f64;
            assert!((mean - 0.5).abs() < 0.02, "var {i}: {mean}");
        }
        let pos = (0..data.len()).filter(|&r| data.label(r)).count() as f64
            / data.len() as f64;
        assert!((pos - 11.0 / 32.0).abs() < 0.02, "{pos}");
    }

    #[test]
    fn full_truth_table_reproduces_exact_tree() {
        let f = ReadOnceDnf::from_terms(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let d = ProductDistribution::uniform(4);
        let rows: Vec<u64> = (0..16).collect();
        let labels: Vec<bool> = rows.iter().map(|&r| eval_bits(&f, r)).collect();
        let data = Dataset::from_parts(4, rows, labels, 0).unwrap();

        let (exact, _) = run_topdown(&f, &d, 10).unwrap();
        let empirical = run_empirical(Policy::TopDown, &data, 10, 1).unwrap();
        assert_eq!(empirical.internal_count(), exact.internal_count());
        assert!(tree_jsons_same_shape(&empirical.to_json(), &exact.to_json()));
        for r in 0..16u64 {
            let x: Vec<bool> = (0..4).map(|i| r >> i & 1 == 1).collect();
            assert_eq!(empirical.predict_bits(r), exact.predict(&x));
        }
    }

    fn tree_jsons_same_shape(a: &TreeJson, b: &TreeJson) -> bool {
        match (a, b) {
            (TreeJson::Leaf { .. }, TreeJson::Leaf { .. }) => true,
            (
                TreeJson::Split { feature: fa, left: la, right: ra },
                TreeJson::Split { feature: fb, left: lb, right: rb },
            ) => fa == fb && tree_jsons_same_shape(la, lb) && tree_jsons_same_shape(ra, rb),
            _ => false,
        }
    }

    #[test]
    fn min_leaf_blocks_small_leaves() {
        let (f, d) = xy23();
        let data = sample_dataset(&f, &d, 50, 3).unwrap();
        let tree = run_empirical(Policy::TopDown, &data, 20, 100).unwrap();
        assert_eq!(tree.internal_count(), 0);

        let grown = run_empirical(Policy::TopDown, &data, 20, 10).unwrap();
        if let Some(min) = grown.min_split_support() {
            assert!(min >= 10);
        }
    }

    #[test]
    fn conjunction_converges_with_large_sample() {
        let f = ReadOnceDnf::conjunction([0, 1]).unwrap();
        let d = ProductDistribution::uniform(2);
        for seed in 0..3 {
            let train = sample_dataset(&f, &d, 50_000, 100 + seed).unwrap();
            let test = sample_dataset(&f, &d, 10_000, 900 + seed).unwrap();
            let tree = run_empirical(Policy::TopDown, &train, 2, 20).unwrap();
            assert!(evaluate(&tree, &test) <= 0.01);
        }
    }

    #[test]
    fn exact_error_of_majority_leaf() {
        let (f, d) = xy23();
        let data = sample_dataset(&f, &d, 200, 5).unwrap();
        let stump = run_empirical(Policy::TopDown, &data, 20, 10_000).unwrap();
        // single leaf labeled 0: exact error is Pr[f = 1]
        let err = stump.exact_error(&f, &d).unwrap();
        assert!((err - 11.0 / 32.0).abs() < 1e-12);

        let grown = run_empirical(Policy::TopDown, &data, 20, 20).unwrap();
        let test = sample_dataset(&f, &d, 10_000, 6).unwrap();
        let exact = grown.exact_error(&f, &d).unwrap();
        let sampled = evaluate(&grown, &test);
        assert!((exact - sampled).abs() < 0.02);
    }

    #[test]
    fn experiment_shape_and_determinism() {
        let cfg = ExperimentConfig {
            term_sizes: vec![2, 3],
            n: 5,
            train_sizes: vec![50, 200],
            test_size: 500,
            min_leaf: 20,
            max_iters: 8,
            repeats: 3,
            dist: DistSpec::Uniform,
            seed: 11,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.results_csv(), b.results_csv());
        assert_eq!(a.cells.len(), 2 * 2 * 3);
        assert_eq!(a.summary.len(), 2 * 2);
        assert!(a
            .results_csv()
            .starts_with("policy,train_size,repeat,seed,test_error,tree_internal_nodes\n"));

        // paired: both policies see the same seed per (size, repeat)
        for pair in a.cells.chunks(2) {
            assert_eq!(pair[0].seed, pair[1].seed);
            assert_eq!(pair[0].train_size, pair[1].train_size);
            assert_ne!(pair[0].policy, pair[1].policy);
        }
    }

    #[test]
    fn two_class_assignment_is_balanced_and_stable() {
        let cfg = ExperimentConfig {
            term_sizes: vec![2, 2],
            n: 6,
            train_sizes: vec![50],
            test_size: 100,
            min_leaf: 5,
            max_iters: 4,
            repeats: 2,
            dist: DistSpec::TwoClass { p1: 0.4, p2: 0.6 },
            seed: 3,
        };
        cfg.validate().unwrap();
        let d0 = cfg.distribution(0);
        let d0_again = cfg.distribution(0);
        assert_eq!(d0.probs(), d0_again.probs());
        let low = d0.probs().iter().filter(|&&p| p == 0.4).count();
        assert_eq!(low, 3);
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.cells.len(), 4);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = ExperimentConfig {
            term_sizes: vec![3, 3],
            n: 5,
            train_sizes: vec![10],
            test_size: 10,
            min_leaf: 1,
            max_iters: 5,
            repeats: 1,
            dist: DistSpec::Uniform,
            seed: 0,
        };
        assert!(cfg.validate().is_err()); // 6 literals > 5 vars
        cfg.n = 6;
        cfg.validate().unwrap();
        cfg.min_leaf = 0;
        assert!(cfg.validate().is_err());
        cfg.min_leaf = 1;
        cfg.dist = DistSpec::TwoClass { p1: 0.0, p2: 0.5 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn id3_not_supported_empirically() {
        let (f, d) = xy23();
        let data = sample_dataset(&f, &d, 50, 1).unwrap();
        assert!(run_empirical(Policy::Id3, &data, 5, 1).is_err());
    }
}
