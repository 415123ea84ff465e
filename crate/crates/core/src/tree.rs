//! Decision trees with exact probability bookkeeping.
//!
//! Every leaf carries the residual formula obtained by conditioning the
//! target on the path to it, the probability of reaching the leaf, and the
//! conditional probability that the target is positive there. That is
//! enough to read off the exact misclassification error of the tree (and
//! of any tree obtained by splitting further) without touching samples.
//!
//! Nodes live in an arena; leaves are additionally indexed in creation
//! order, which the greedy drivers use as their deterministic scan order.

use serde::{Deserialize, Serialize};

use crate::dnf::{cost, entropy, ProductDistribution, ReadOnceDnf};
use crate::error::Error;

/// Entropy drop of splitting a node with positive probability `q` into
/// branches with probabilities `q0` (weight `1-tau`) and `q1` (weight `tau`).
pub fn split_gain(q: f64, q0: f64, q1: f64, tau: f64) -> f64 {
    entropy(q) - (1.0 - tau) * entropy(q0) - tau * entropy(q1)
}

/// Misclassification-cost drop of the same split. Summing `reach * drop`
/// over all internal nodes and subtracting from the root cost reproduces
/// the tree error exactly; see [`DecisionTree::error_via_reductions`].
pub fn split_error_reduction(q: f64, q0: f64, q1: f64, tau: f64) -> f64 {
    cost(q) - (1.0 - tau) * cost(q0) - tau * cost(q1)
}

type NodeId = usize;

#[derive(Debug, Clone)]
enum Node {
    Leaf(Leaf),
    Split {
        feature: usize,
        low: NodeId,
        high: NodeId,
    },
}

/// A pending or final leaf of the tree.
#[derive(Debug, Clone)]
pub struct Leaf {
    /// Target conditioned on the path from the root to this leaf.
    pub residual: ReadOnceDnf,
    /// Probability of reaching this leaf.
    pub reach_prob: f64,
    /// Conditional probability that the target is 1 at this leaf.
    pub pos_prob: f64,
    /// Sequence number assigned when the leaf was created; the root is 0
    /// and a split hands out the next two numbers (low branch first).
    pub creation_order: usize,
    /// Features tested on the path to this leaf.
    pub used: Vec<usize>,
}

impl Leaf {
    /// Majority label; exact halves go to 1.
    pub fn label(&self) -> bool {
        self.pos_prob >= 0.5
    }

    /// This leaf's contribution to the tree error.
    pub fn error_contribution(&self) -> f64 {
        self.reach_prob * cost(self.pos_prob)
    }

    pub fn is_pure(&self) -> bool {
        self.residual.is_constant()
    }
}

/// A binary decision tree over boolean features, grown by splitting leaves.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    /// Arena ids of the current leaves, ascending in creation order.
    leaf_ids: Vec<NodeId>,
    internal_count: usize,
    next_order: usize,
}

impl DecisionTree {
    /// The single-leaf tree for `target` under `dist`.
    pub fn new(target: &ReadOnceDnf, dist: &ProductDistribution) -> Result<Self, Error> {
        let q = target.satisfy_probability(dist)?;
        let root = Leaf {
            residual: target.clone(),
            reach_prob: 1.0,
            pos_prob: q,
            creation_order: 0,
            used: Vec::new(),
        };
        Ok(DecisionTree {
            nodes: vec![Node::Leaf(root)],
            leaf_ids: vec![0],
            internal_count: 0,
            next_order: 1,
        })
    }

    pub fn internal_count(&self) -> usize {
        self.internal_count
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_ids.len()
    }

    /// Current leaves in creation order.
    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.leaf_ids.iter().map(|&id| match &self.nodes[id] {
            Node::Leaf(l) => l,
            Node::Split { .. } => unreachable!("leaf_ids points at a split node"),
        })
    }

    pub fn leaf(&self, creation_order: usize) -> Option<&Leaf> {
        self.leaves().find(|l| l.creation_order == creation_order)
    }

    /// Replaces the leaf with the given creation order by an internal node
    /// testing `feature`. Returns the creation orders of the new low and
    /// high leaves.
    ///
    /// Splitting on a feature already tested on the path is rejected: the
    /// product-form probabilities would no longer describe the subtree.
    pub fn split(
        &mut self,
        creation_order: usize,
        feature: usize,
        dist: &ProductDistribution,
    ) -> Result<(usize, usize), Error> {
        if feature >= dist.len() {
            return Err(Error::MissingProbability {
                var: feature,
                len: dist.len(),
            });
        }
        let pos = self
            .leaf_ids
            .iter()
            .position(|&id| match &self.nodes[id] {
                Node::Leaf(l) => l.creation_order == creation_order,
                Node::Split { .. } => false,
            })
            .ok_or(Error::LeafNotFound {
                order: creation_order,
            })?;
        let id = self.leaf_ids[pos];
        let leaf = match &self.nodes[id] {
            Node::Leaf(l) => l.clone(),
            Node::Split { .. } => unreachable!(),
        };
        if leaf.used.contains(&feature) {
            return Err(Error::RepeatedFeature { feature });
        }

        let tau = dist.prob(feature);
        let (q0, q1) = leaf.residual.pos_probs_after_split(dist, feature)?;
        let mut used = leaf.used.clone();
        used.push(feature);
        let low = Leaf {
            residual: leaf.residual.condition(feature, false),
            reach_prob: leaf.reach_prob * (1.0 - tau),
            pos_prob: q0,
            creation_order: self.next_order,
            used: used.clone(),
        };
        let high = Leaf {
            residual: leaf.residual.condition(feature, true),
            reach_prob: leaf.reach_prob * tau,
            pos_prob: q1,
            creation_order: self.next_order + 1,
            used,
        };
        let orders = (low.creation_order, high.creation_order);
        self.next_order += 2;

        let low_id = self.nodes.len();
        self.nodes.push(Node::Leaf(low));
        let high_id = self.nodes.len();
        self.nodes.push(Node::Leaf(high));
        self.nodes[id] = Node::Split {
            feature,
            low: low_id,
            high: high_id,
        };
        // new ids and orders both increase monotonically, so replacing the
        // split leaf by appending keeps leaf_ids sorted by creation order
        self.leaf_ids.remove(pos);
        self.leaf_ids.push(low_id);
        self.leaf_ids.push(high_id);
        self.internal_count += 1;
        Ok(orders)
    }

    /// Exact misclassification error: sum over leaves of
    /// `reach_prob * min(pos_prob, 1 - pos_prob)`.
    pub fn error(&self) -> f64 {
        self.leaves().map(Leaf::error_contribution).sum()
    }

    /// Reach-weighted entropy of the leaves; an upper bound on [`error`].
    ///
    /// [`error`]: DecisionTree::error
    pub fn entropy_sum(&self) -> f64 {
        self.leaves()
            .map(|l| l.reach_prob * entropy(l.pos_prob))
            .sum()
    }

    /// Recomputes the error as the root cost minus the reach-weighted
    /// error reductions of all internal nodes. Equal to [`error`] up to
    /// rounding; exercised by tests as a consistency check.
    ///
    /// [`error`]: DecisionTree::error
    pub fn error_via_reductions(&self, dist: &ProductDistribution) -> f64 {
        fn walk(tree: &DecisionTree, id: NodeId, reach: f64, dist: &ProductDistribution, acc: &mut f64) -> f64 {
            match &tree.nodes[id] {
                Node::Leaf(l) => l.pos_prob,
                Node::Split { feature, low, high } => {
                    let tau = dist.prob(*feature);
                    let q0 = walk(tree, *low, reach * (1.0 - tau), dist, acc);
                    let q1 = walk(tree, *high, reach * tau, dist, acc);
                    let q = (1.0 - tau) * q0 + tau * q1;
                    *acc += reach * split_error_reduction(q, q0, q1, tau);
                    q
                }
            }
        }
        let mut acc = 0.0;
        let root_q = walk(self, 0, 1.0, dist, &mut acc);
        cost(root_q) - acc
    }

    /// Label assigned to the assignment `x` by majority leaves.
    pub fn predict(&self, x: &[bool]) -> bool {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf(l) => return l.label(),
                Node::Split { feature, low, high } => {
                    id = if x[*feature] { *high } else { *low };
                }
            }
        }
    }

    /// True when both trees test the same features in the same arrangement.
    pub fn same_shape(&self, other: &DecisionTree) -> bool {
        self.same_shape_by(other, |f| f)
    }

    /// Shape comparison after mapping each tested feature through `key`;
    /// with the identity map this is exact feature equality, while mapping
    /// features to equivalence classes compares trees up to renaming.
    pub fn same_shape_by<K: PartialEq>(
        &self,
        other: &DecisionTree,
        key: impl Fn(usize) -> K,
    ) -> bool {
        fn eq<K: PartialEq>(
            a: &DecisionTree,
            ai: NodeId,
            b: &DecisionTree,
            bi: NodeId,
            key: &impl Fn(usize) -> K,
        ) -> bool {
            match (&a.nodes[ai], &b.nodes[bi]) {
                (Node::Leaf(_), Node::Leaf(_)) => true,
                (
                    Node::Split { feature: fa, low: la, high: ha },
                    Node::Split { feature: fb, low: lb, high: hb },
                ) => {
                    key(*fa) == key(*fb)
                        && eq(a, *la, b, *lb, key)
                        && eq(a, *ha, b, *hb, key)
                }
                _ => false,
            }
        }
        eq(self, 0, other, 0, &key)
    }

    /// Compact s-expression of the shape, for diagnostics:
    /// `(x0 0 (x1 0 1))` with leaves printed as their labels.
    pub fn shape_string(&self) -> String {
        fn fmt(tree: &DecisionTree, id: NodeId, out: &mut String) {
            match &tree.nodes[id] {
                Node::Leaf(l) => out.push_str(if l.label() { "1" } else { "0" }),
                Node::Split { feature, low, high } => {
                    out.push_str(&format!("(x{feature} "));
                    fmt(tree, *low, out);
                    out.push(' ');
                    fmt(tree, *high, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        fmt(self, 0, &mut s);
        s
    }

    pub fn to_json(&self) -> TreeJson {
        fn conv(tree: &DecisionTree, id: NodeId) -> TreeJson {
            match &tree.nodes[id] {
                Node::Leaf(l) => TreeJson::Leaf {
                    leaf: LeafJson {
                        label: l.label(),
                        p: l.reach_prob,
                        q: l.pos_prob,
                    },
                },
                Node::Split { feature, low, high } => TreeJson::Split {
                    feature: *feature,
                    left: Box::new(conv(tree, *low)),
                    right: Box::new(conv(tree, *high)),
                },
            }
        }
        conv(self, 0)
    }

    /// Rebuilds a tree with fresh bookkeeping from a serialized shape,
    /// ignoring any leaf statistics stored in the JSON.
    pub fn from_structure(
        shape: &TreeJson,
        target: &ReadOnceDnf,
        dist: &ProductDistribution,
    ) -> Result<Self, Error> {
        fn apply(
            tree: &mut DecisionTree,
            order: usize,
            shape: &TreeJson,
            dist: &ProductDistribution,
        ) -> Result<(), Error> {
            match shape {
                TreeJson::Leaf { .. } => Ok(()),
                TreeJson::Split { feature, left, right } => {
                    let (lo, hi) = tree.split(order, *feature, dist)?;
                    apply(tree, lo, left, dist)?;
                    apply(tree, hi, right, dist)
                }
            }
        }
        let mut tree = DecisionTree::new(target, dist)?;
        apply(&mut tree, 0, shape, dist)?;
        Ok(tree)
    }
}

/// Serialized tree: internal nodes as `{"feature": i, "left": .., "right": ..}`
/// (left = feature 0, right = feature 1), leaves as
/// `{"leaf": {"label": .., "p": .., "q": ..}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeJson {
    Split {
        feature: usize,
        left: Box<TreeJson>,
        right: Box<TreeJson>,
    },
    Leaf {
        leaf: LeafJson,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafJson {
    pub label: bool,
    pub p: f64,
    pub q: f64,
}

/// The two-term target `(x_0 .. x_{l-1}) | (x_l .. x_{l+m-1})` used by the
/// benchmark trees and the optimality experiments.
pub fn two_term_target(l: usize, m: usize) -> ReadOnceDnf {
    ReadOnceDnf::from_terms(vec![(0..l).collect(), (l..l + m).collect()])
        .expect("disjoint consecutive ranges")
}

/// The reference tree with `t` internal nodes for [`two_term_target`] under
/// the uniform distribution.
///
/// Shape: a high-going spine of the first-term variables in ascending
/// order (at most `l` of them), and under the low child of each spine node
/// a path of second-term variables, again ascending. Spine-top first: the
/// path under the first spine node is extended to its full length `m`
/// before the next one is started. The budget `t` counts internal nodes;
/// `l + l*m` of them give error zero.
pub fn benchmark_tree(l: usize, m: usize, t: usize) -> Result<DecisionTree, Error> {
    let max = l + l * m;
    if t > max {
        return Err(Error::BudgetOutOfRange { t, max });
    }
    let target = two_term_target(l, m);
    let dist = ProductDistribution::uniform(l + m);
    let mut tree = DecisionTree::new(&target, &dist)?;

    let spine_len = t.min(l);
    let mut spine_leaf = 0;
    let mut low_orders = Vec::with_capacity(spine_len);
    for i in 0..spine_len {
        let (lo, hi) = tree.split(spine_leaf, i, &dist)?;
        low_orders.push(lo);
        spine_leaf = hi;
    }

    let mut remaining = t - spine_len;
    for lo in low_orders {
        if remaining == 0 {
            break;
        }
        let path_len = remaining.min(m);
        let mut at = lo;
        for j in 0..path_len {
            let (_, hi) = tree.split(at, l + j, &dist)?;
            at = hi;
        }
        remaining -= path_len;
    }
    Ok(tree)
}
