//! Exact optimal-tree errors.
//!
//! `OPT(F, t)` is the smallest misclassification error any decision tree
//! with at most `t` internal nodes can achieve for the formula `F`. Under
//! the uniform distribution it depends only on the multiset of term sizes,
//! and under a two-class product distribution only on the per-term counts
//! of class-1 and class-2 variables, so both dynamic programs key their
//! memo tables on those canonical signatures.
//!
//! The recurrence conditions the root on a variable of some term `c`: the
//! low branch loses the whole term, the high branch shrinks it by one
//! literal (a term shrunk to nothing satisfies the formula, contributing
//! zero error), and the remaining budget is split between the branches.
//! Splitting can never hurt (the cost function is concave), so values are
//! non-increasing in `t`.
//!
//! [`brute_force_opt`] exhaustively searches tree space at toy scale and
//! serves as the independent oracle for the dynamic programs.

use std::collections::HashMap;

use crate::dnf::{cost, ProductDistribution, ReadOnceDnf};
use crate::error::Error;
use crate::tree::DecisionTree;

const BRUTE_MAX_LITERALS: usize = 8;
const BRUTE_MAX_T: usize = 5;

/// Canonical key for a formula under the uniform distribution: its term
/// sizes as a sorted multiset. The empty signature is the Falsified
/// formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UniformSignature {
    sizes: Vec<usize>,
}

impl UniformSignature {
    pub fn new(mut sizes: Vec<usize>) -> Result<Self, Error> {
        if sizes.contains(&0) {
            return Err(Error::InvalidDnf("term size 0 in signature".into()));
        }
        sizes.sort_unstable();
        Ok(UniformSignature { sizes })
    }

    pub fn of(dnf: &ReadOnceDnf) -> Self {
        UniformSignature::new(dnf.terms().iter().map(|t| t.len()).collect())
            .expect("terms are nonempty")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total_literals(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// A concrete formula with this signature over consecutive variables,
    /// plus its uniform distribution.
    pub fn materialize(&self) -> (ReadOnceDnf, ProductDistribution) {
        let mut terms = Vec::with_capacity(self.sizes.len());
        let mut next = 0;
        for &s in &self.sizes {
            terms.push((next..next + s).collect());
            next += s;
        }
        let dnf = ReadOnceDnf::from_terms(terms).expect("consecutive blocks are disjoint");
        (dnf, ProductDistribution::uniform(next))
    }

    /// CSV-safe rendering, e.g. `2+3` for the signature {2, 3}.
    pub fn label(&self) -> String {
        self.sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn uniform_satisfy(sizes: &[usize]) -> f64 {
    let mut none = 1.0;
    for &s in sizes {
        none *= 1.0 - 0.5f64.powi(s as i32);
    }
    1.0 - none
}

/// Memoized OPT values for uniform signatures. One table serves any number
/// of queries; signatures reached by conditioning are added on demand.
#[derive(Debug, Default)]
pub struct UniformOptTable {
    memo: HashMap<Vec<usize>, Vec<f64>>,
}

impl UniformOptTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn opt(&mut self, sig: &UniformSignature, t: usize) -> f64 {
        self.opt_key(sig.sizes(), t)
    }

    fn opt_key(&mut self, sizes: &[usize], t: usize) -> f64 {
        if sizes.is_empty() {
            return 0.0;
        }
        if let Some(vals) = self.memo.get(sizes) {
            if t < vals.len() {
                return vals[t];
            }
        }
        let mut vals = self.memo.get(sizes).cloned().unwrap_or_default();
        for tt in vals.len()..=t {
            let v = if tt == 0 {
                cost(uniform_satisfy(sizes))
            } else {
                let mut best = f64::INFINITY;
                let mut prev_size = 0;
                for i in 0..sizes.len() {
                    let s = sizes[i];
                    if s == prev_size {
                        continue; // identical term sizes give identical splits
                    }
                    prev_size = s;
                    let mut low: Vec<usize> = sizes.to_vec();
                    low.remove(i);
                    let high = if s > 1 {
                        let mut h = low.clone();
                        let at = h.partition_point(|&x| x < s - 1);
                        h.insert(at, s - 1);
                        Some(h)
                    } else {
                        None // term satisfied: that branch is constant true
                    };
                    for j in 0..tt {
                        let a = self.opt_key(&low, j);
                        let b = match &high {
                            Some(h) => self.opt_key(h, tt - 1 - j),
                            None => 0.0,
                        };
                        let val = 0.5 * a + 0.5 * b;
                        if val < best {
                            best = val;
                        }
                    }
                }
                best
            };
            vals.push(v);
        }
        let out = vals[t];
        self.memo.insert(sizes.to_vec(), vals);
        out
    }
}

/// One-shot OPT query under the uniform distribution.
pub fn opt_uniform(sig: &UniformSignature, t: usize) -> f64 {
    UniformOptTable::new().opt(sig, t)
}

/// Canonical key for a formula under a two-class product distribution:
/// per term, the pair (class-1 literal count, class-2 literal count),
/// as a sorted multiset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TwoClassSignature {
    profiles: Vec<(usize, usize)>,
}

impl TwoClassSignature {
    pub fn new(mut profiles: Vec<(usize, usize)>) -> Result<Self, Error> {
        if profiles.iter().any(|&(a, b)| a + b == 0) {
            return Err(Error::InvalidDnf("empty profile in signature".into()));
        }
        profiles.sort_unstable();
        Ok(TwoClassSignature { profiles })
    }

    pub fn profiles(&self) -> &[(usize, usize)] {
        &self.profiles
    }

    pub fn total_literals(&self) -> usize {
        self.profiles.iter().map(|&(a, b)| a + b).sum()
    }

    /// A concrete formula over consecutive variables (class-1 literals
    /// first within each term) and the matching product distribution.
    pub fn materialize(&self, p1: f64, p2: f64) -> Result<(ReadOnceDnf, ProductDistribution), Error> {
        let mut terms = Vec::with_capacity(self.profiles.len());
        let mut probs = Vec::new();
        for &(n1, n2) in &self.profiles {
            let start = probs.len();
            probs.extend(std::iter::repeat_n(p1, n1));
            probs.extend(std::iter::repeat_n(p2, n2));
            terms.push((start..probs.len()).collect());
        }
        Ok((ReadOnceDnf::from_terms(terms)?, ProductDistribution::new(probs)?))
    }

    /// CSV-safe rendering, e.g. `1:0+2:1` for profiles {(1,0), (2,1)}.
    pub fn label(&self) -> String {
        self.profiles
            .iter()
            .map(|&(a, b)| format!("{a}:{b}"))
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn two_class_satisfy(profiles: &[(usize, usize)], p1: f64, p2: f64) -> f64 {
    let mut none = 1.0;
    for &(n1, n2) in profiles {
        none *= 1.0 - p1.powi(n1 as i32) * p2.powi(n2 as i32);
    }
    1.0 - none
}

/// Memoized OPT values for two-class signatures at fixed (p1, p2).
#[derive(Debug)]
pub struct TwoClassOptTable {
    p1: f64,
    p2: f64,
    memo: HashMap<Vec<(usize, usize)>, Vec<f64>>,
}

impl TwoClassOptTable {
    pub fn new(p1: f64, p2: f64) -> Result<Self, Error> {
        for p in [p1, p2] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(TwoClassOptTable {
            p1,
            p2,
            memo: HashMap::new(),
        })
    }

    pub fn class_probs(&self) -> (f64, f64) {
        (self.p1, self.p2)
    }

    pub fn opt(&mut self, sig: &TwoClassSignature, t: usize) -> f64 {
        self.opt_key(sig.profiles(), t)
    }

    fn opt_key(&mut self, profiles: &[(usize, usize)], t: usize) -> f64 {
        if profiles.is_empty() {
            return 0.0;
        }
        if let Some(vals) = self.memo.get(profiles) {
            if t < vals.len() {
                return vals[t];
            }
        }
        let mut vals = self.memo.get(profiles).cloned().unwrap_or_default();
        for tt in vals.len()..=t {
            let v = if tt == 0 {
                cost(two_class_satisfy(profiles, self.p1, self.p2))
            } else {
                let mut best = f64::INFINITY;
                let mut prev = None;
                for i in 0..profiles.len() {
                    let (n1, n2) = profiles[i];
                    if prev == Some((n1, n2)) {
                        continue;
                    }
                    prev = Some((n1, n2));
                    let mut low: Vec<(usize, usize)> = profiles.to_vec();
                    low.remove(i);
                    // condition on one variable of either class of this term
                    for (avail, p, shrunk) in [
                        (n1, self.p1, (n1.wrapping_sub(1), n2)),
                        (n2, self.p2, (n1, n2.wrapping_sub(1))),
                    ] {
                        if avail == 0 {
                            continue;
                        }
                        let high = if shrunk.0 + shrunk.1 > 0 {
                            let mut h = low.clone();
                            let at = h.partition_point(|&x| x < shrunk);
                            h.insert(at, shrunk);
                            Some(h)
                        } else {
                            None
                        };
                        for j in 0..tt {
                            let a = self.opt_key(&low, j);
                            let b = match &high {
                                Some(h) => self.opt_key(h, tt - 1 - j),
                                None => 0.0,
                            };
                            let val = (1.0 - p) * a + p * b;
                            if val < best {
                                best = val;
                            }
                        }
                    }
                }
                best
            };
            vals.push(v);
        }
        let out = vals[t];
        self.memo.insert(profiles.to_vec(), vals);
        out
    }
}

/// One-shot OPT query for a two-class distribution.
pub fn opt_two_class(sig: &TwoClassSignature, p1: f64, p2: f64, t: usize) -> Result<f64, Error> {
    Ok(TwoClassOptTable::new(p1, p2)?.opt(sig, t))
}

/// Exact OPT for a single conjunction over variables with the given
/// success probabilities: the best right-skewed tree realizing `t` of
/// them. Works for any product distribution, unlike the signature DPs.
pub fn conjunction_opt(probs: &[f64], t: usize) -> f64 {
    let k = probs.len();
    let pick = t.min(k);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != pick {
            continue;
        }
        let mut reach = 1.0;
        let mut rest = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                reach *= p;
            } else {
                rest *= p;
            }
        }
        let err = reach * cost(rest);
        if err < best {
            best = err;
        }
    }
    best
}

/// Candidate split features at a leaf, one representative per symmetry
/// class: within a term, variables with equal success probability are
/// interchangeable, so only the smallest of each (term, probability)
/// group is explored.
fn representative_features(residual: &ReadOnceDnf, dist: &ProductDistribution) -> Vec<usize> {
    let mut reps = Vec::new();
    for term in residual.terms() {
        let mut seen: Vec<u64> = Vec::new();
        for v in term.vars() {
            let bits = dist.prob(v).to_bits();
            if !seen.contains(&bits) {
                seen.push(bits);
                reps.push(v);
            }
        }
    }
    reps
}

/// Exhaustive minimum of the tree error over all trees with at most `t`
/// internal nodes testing formula variables (no repeats along a path),
/// together with the first witness found.
///
/// The search decides pending leaves depth-first, trying every
/// representative split before leaving the leaf as is, and keeps a
/// strictly better tree only, so the witness is deterministic.
pub fn brute_force_opt(
    target: &ReadOnceDnf,
    dist: &ProductDistribution,
    t: usize,
) -> Result<(f64, DecisionTree), Error> {
    let literals = target.total_literals();
    if literals > BRUTE_MAX_LITERALS || t > BRUTE_MAX_T {
        return Err(Error::SizeGuard {
            literals,
            t,
            max_literals: BRUTE_MAX_LITERALS,
            max_t: BRUTE_MAX_T,
        });
    }

    fn dfs(
        tree: &DecisionTree,
        pending: &[usize],
        budget: usize,
        dist: &ProductDistribution,
        best: &mut Option<(f64, DecisionTree)>,
    ) {
        let Some((&leaf_order, rest)) = pending.split_first() else {
            let err = tree.error();
            match best {
                Some((b, _)) if err >= *b => {}
                _ => *best = Some((err, tree.clone())),
            }
            return;
        };
        if budget > 0 {
            let leaf = tree.leaf(leaf_order).expect("pending leaf exists");
            for feature in representative_features(&leaf.residual, dist) {
                let mut next = tree.clone();
                let (lo, hi) = next
                    .split(leaf_order, feature, dist)
                    .expect("residual variables are unused and covered");
                let mut new_pending = vec![lo, hi];
                new_pending.extend_from_slice(rest);
                dfs(&next, &new_pending, budget - 1, dist, best);
            }
        }
        dfs(tree, rest, budget, dist, best);
    }

    let root = DecisionTree::new(target, dist)?;
    let mut best = None;
    dfs(&root, &[0], t, dist, &mut best);
    Ok(best.expect("at least the unsplit tree is evaluated"))
}

/// Tree equality up to renaming variables within their terms: each tested
/// feature is mapped to the index of the term containing it (features
/// outside the formula only match themselves).
pub fn structural_equal(a: &DecisionTree, b: &DecisionTree, target: &ReadOnceDnf) -> bool {
    a.same_shape_by(b, |f| match target.term_of(f) {
        Some(term) => (0usize, term),
        None => (1usize, f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::{run_bestfirst, run_topdown};
    use crate::tree::{benchmark_tree, two_term_target};

    fn usig(sizes: &[usize]) -> UniformSignature {
        UniformSignature::new(sizes.to_vec()).unwrap()
    }

    #[test]
    fn uniform_base_cases() {
        assert_eq!(opt_uniform(&usig(&[1]), 1), 0.0);
        assert_eq!(opt_uniform(&usig(&[1]), 0), 0.5);
        for s in 1..=6 {
            let expect = 0.5f64.powi(s as i32);
            assert!((opt_uniform(&usig(&[s]), 0) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_two_term_matches_benchmark_trees() {
        let mut table = UniformOptTable::new();
        let sig = usig(&[2, 3]);
        for t in 0..=8 {
            let bench = benchmark_tree(2, 3, t).unwrap().error();
            assert!((table.opt(&sig, t) - bench).abs() < 1e-12, "t={t}");
        }
        assert!((table.opt(&sig, 5) - 1.0 / 32.0).abs() < 1e-15);
        assert_eq!(table.opt(&sig, 8), 0.0);
    }

    #[test]
    fn uniform_monotone_in_budget() {
        let mut table = UniformOptTable::new();
        for sig in [usig(&[1]), usig(&[3]), usig(&[2, 3]), usig(&[1, 2, 2]), usig(&[4, 4])] {
            let mut prev = f64::INFINITY;
            for t in 0..=12 {
                let v = table.opt(&sig, t);
                assert!(v <= prev + 1e-15, "{sig:?} t={t}");
                assert!((0.0..=0.5 + 1e-15).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn uniform_dominated_by_greedy_errors() {
        let mut table = UniformOptTable::new();
        for sizes in [vec![2, 3], vec![1, 1, 2], vec![3, 3]] {
            let sig = usig(&sizes);
            let (f, d) = sig.materialize();
            let (_, td) = run_topdown(&f, &d, 10).unwrap();
            let (_, bf) = run_bestfirst(&f, &d, 10).unwrap();
            for t in 0..=10 {
                let opt = table.opt(&sig, t);
                assert!(opt <= td.error_at(t) + 1e-12);
                assert!(opt <= bf.error_at(t) + 1e-12);
            }
        }
    }

    #[test]
    fn two_class_base_cases() {
        let sig = TwoClassSignature::new(vec![(1, 0)]).unwrap();
        assert!((opt_two_class(&sig, 0.3, 0.7, 0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(opt_two_class(&sig, 0.3, 0.7, 1).unwrap(), 0.0);
        assert_eq!(opt_two_class(&sig, 0.6, 0.7, 1).unwrap(), 0.0);
    }

    #[test]
    fn two_class_collapses_to_uniform_at_half() {
        let mut half = TwoClassOptTable::new(0.5, 0.5).unwrap();
        let mut uni = UniformOptTable::new();
        let cases = [
            vec![(1, 0)],
            vec![(1, 1)],
            vec![(2, 1), (0, 2)],
            vec![(0, 3), (2, 0)],
        ];
        for profiles in cases {
            let sig = TwoClassSignature::new(profiles.clone()).unwrap();
            let sizes: Vec<usize> = profiles.iter().map(|&(a, b)| a + b).collect();
            let flat = usig(&sizes);
            for t in 0..=6 {
                assert!(
                    (half.opt(&sig, t) - uni.opt(&flat, t)).abs() < 1e-12,
                    "{profiles:?} t={t}"
                );
            }
        }
    }

    #[test]
    fn brute_force_witnesses() {
        let single = ReadOnceDnf::conjunction([0]).unwrap();
        let d1 = ProductDistribution::uniform(1);
        let (err, tree) = brute_force_opt(&single, &d1, 1).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(tree.shape_string(), "(x0 0 1)");

        let conj = ReadOnceDnf::conjunction([0, 1]).unwrap();
        let d = ProductDistribution::new(vec![0.3, 0.5]).unwrap();
        let (err, tree) = brute_force_opt(&conj, &d, 1).unwrap();
        assert!((err - 0.15).abs() < 1e-12);
        assert!(tree.shape_string().starts_with("(x0 "));

        let (err5, _) = brute_force_opt(
            &two_term_target(2, 3),
            &ProductDistribution::uniform(5),
            5,
        )
        .unwrap();
        assert!((err5 - 1.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_guard() {
        let wide = ReadOnceDnf::conjunction(0..9).unwrap();
        let d = ProductDistribution::uniform(9);
        assert!(matches!(
            brute_force_opt(&wide, &d, 1),
            Err(Error::SizeGuard { literals: 9, .. })
        ));
        let f = ReadOnceDnf::conjunction([0]).unwrap();
        assert!(matches!(
            brute_force_opt(&f, &ProductDistribution::uniform(1), 6),
            Err(Error::SizeGuard { t: 6, .. })
        ));
    }

    #[test]
    fn dp_agrees_with_brute_force_spot_checks() {
        let mut table = UniformOptTable::new();
        for sizes in [vec![2], vec![1, 2], vec![2, 2], vec![1, 1, 3]] {
            let sig = usig(&sizes);
            let (f, d) = sig.materialize();
            for t in 0..=3 {
                let (brute, _) = brute_force_opt(&f, &d, t).unwrap();
                assert!(
                    (table.opt(&sig, t) - brute).abs() < 1e-12,
                    "{sizes:?} t={t}"
                );
            }
        }

        let mut tc = TwoClassOptTable::new(0.3, 0.7).unwrap();
        for profiles in [vec![(1, 1)], vec![(2, 0), (0, 1)]] {
            let sig = TwoClassSignature::new(profiles.clone()).unwrap();
            let (f, d) = sig.materialize(0.3, 0.7).unwrap();
            for t in 0..=3 {
                let (brute, _) = brute_force_opt(&f, &d, t).unwrap();
                assert!((tc.opt(&sig, t) - brute).abs() < 1e-12, "{profiles:?} t={t}");
            }
        }
    }

    #[test]
    fn conjunction_opt_examples() {
        // uniform k=3, t=1: realize one variable, leaf cost 1/4
        assert!((conjunction_opt(&[0.5, 0.5, 0.5], 1) - 0.125).abs() < 1e-15);
        assert_eq!(conjunction_opt(&[0.5, 0.5], 2), 0.0);
        // matches the exhaustive tree search
        let d = ProductDistribution::new(vec![0.2, 0.6, 0.9]).unwrap();
        let f = ReadOnceDnf::conjunction([0, 1, 2]).unwrap();
        for t in 0..=3 {
            let (brute, _) = brute_force_opt(&f, &d, t).unwrap();
            assert!((conjunction_opt(d.probs(), t) - brute).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn structural_equality_ignores_within_term_names() {
        let target = two_term_target(2, 3);
        let d = ProductDistribution::uniform(5);
        let b5 = benchmark_tree(2, 3, 5).unwrap();
        assert!(structural_equal(&b5, &b5, &target));

        // same shape with the y-path variables permuted: y3,y2,y4
        let mut perm = DecisionTree::new(&target, &d).unwrap();
        let (lo, hi) = perm.split(0, 0, &d).unwrap();
        perm.split(hi, 1, &d).unwrap();
        let (_, h1) = perm.split(lo, 3, &d).unwrap();
        let (_, h2) = perm.split(h1, 2, &d).unwrap();
        perm.split(h2, 4, &d).unwrap();
        assert!(!perm.same_shape(&b5));
        assert!(structural_equal(&perm, &b5, &target));

        let (bf, _) = run_bestfirst(&target, &d, 5).unwrap();
        assert!(!structural_equal(&bf, &b5, &target));
    }

    #[test]
    fn signature_labels_and_materialization() {
        let sig = usig(&[3, 2]);
        assert_eq!(sig.label(), "2+3");
        let (f, d) = sig.materialize();
        assert_eq!(f.terms().len(), 2);
        assert_eq!(d.len(), 5);
        assert_eq!(UniformSignature::of(&f), sig);

        let tc = TwoClassSignature::new(vec![(2, 1), (1, 0)]).unwrap();
        assert_eq!(tc.label(), "1:0+2:1");
        let (f, d) = tc.materialize(0.3, 0.7).unwrap();
        assert_eq!(f.total_literals(), 4);
        assert_eq!(d.probs(), &[0.3, 0.3, 0.3, 0.7]);
    }
}
