//! Read-once DNF formulas, product distributions, and the scalar
//! entropy/cost primitives everything else is built from.
//!
//! Variables are global 0-based indices. A formula is either the constant
//! `Satisfied`, the constant `Falsified`, or a nonempty list of pairwise
//! variable-disjoint terms; the sentinels keep every conditioning branch
//! total (an emptied term never appears as an empty `Term`).
//!
//! Only positive literals are represented. Negated literals are symmetric
//! (flip the variable and its success probability) and intentionally out
//! of scope, as are non-product distributions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::PROB_TOL;

/// Binary entropy in bits, `H(x) = -x log2 x - (1-x) log2 (1-x)`, with the
/// endpoint convention `H(0) = H(1) = 0`.
///
/// Panics if `x` lies outside `[0, 1]` by more than `1e-12`; values within
/// that tolerance are snapped to the nearest endpoint.
pub fn entropy(x: f64) -> f64 {
    let x = snap_unit(x);
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Misclassification cost `C(x) = min(x, 1-x)` of majority-labeling a leaf
/// with positive probability `x`.
///
/// Panics if `x` lies outside `[0, 1]` by more than `1e-12`.
pub fn cost(x: f64) -> f64 {
    let x = snap_unit(x);
    x.min(1.0 - x)
}

fn snap_unit(x: f64) -> f64 {
    assert!(
        (-PROB_TOL..=1.0 + PROB_TOL).contains(&x),
        "probability {x} outside [0,1]"
    );
    x.clamp(0.0, 1.0)
}

/// A conjunction of positive literals, stored as a sorted set of variable
/// indices. Always nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    vars: BTreeSet<usize>,
}

impl Term {
    pub fn new(vars: impl IntoIterator<Item = usize>) -> Result<Self, Error> {
        let vars: BTreeSet<usize> = vars.into_iter().collect();
        if vars.is_empty() {
            return Err(Error::InvalidDnf("empty term".into()));
        }
        Ok(Term { vars })
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    /// Probability that every variable of the term is 1, skipping `skip`.
    fn satisfy_prob_skipping(&self, dist: &ProductDistribution, skip: Option<usize>) -> f64 {
        let mut p = 1.0;
        for &v in &self.vars {
            if Some(v) == skip {
                continue;
            }
            p *= dist.probs[v];
        }
        p
    }
}

/// A read-once DNF: each variable appears at most once across the whole
/// formula, so terms are pairwise variable-disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReadOnceDnf {
    /// Constant true (a term lost its last literal to conditioning).
    Satisfied,
    /// Constant false (no terms remain).
    Falsified,
    /// Disjunction of at least one term.
    Terms(Vec<Term>),
}

impl ReadOnceDnf {
    /// Builds a formula from raw terms, validating the read-once invariant.
    /// An empty term list yields `Falsified`.
    pub fn from_terms(terms: Vec<Vec<usize>>) -> Result<Self, Error> {
        if terms.is_empty() {
            return Ok(ReadOnceDnf::Falsified);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let term = Term::new(t)?;
            for v in term.vars() {
                if !seen.insert(v) {
                    return Err(Error::InvalidDnf(format!(
                        "variable {v} appears in more than one term"
                    )));
                }
            }
            out.push(term);
        }
        Ok(ReadOnceDnf::Terms(out))
    }

    /// A single-term conjunction over the given variables.
    pub fn conjunction(vars: impl IntoIterator<Item = usize>) -> Result<Self, Error> {
        Ok(ReadOnceDnf::Terms(vec![Term::new(vars)?]))
    }

    pub fn terms(&self) -> &[Term] {
        match self {
            ReadOnceDnf::Terms(ts) => ts,
            _ => &[],
        }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self, ReadOnceDnf::Terms(_))
    }

    /// All variables of the formula in ascending order.
    pub fn variables(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.terms().iter().flat_map(|t| t.vars()).collect();
        vs.sort_unstable();
        vs
    }

    pub fn total_literals(&self) -> usize {
        self.terms().iter().map(Term::len).sum()
    }

    /// Index of the term containing `var`, if any.
    pub fn term_of(&self, var: usize) -> Option<usize> {
        self.terms().iter().position(|t| t.contains(var))
    }

    /// Evaluates the formula on an assignment (`x[i]` = value of variable i).
    pub fn evaluate(&self, x: &[bool]) -> bool {
        match self {
            ReadOnceDnf::Satisfied => true,
            ReadOnceDnf::Falsified => false,
            ReadOnceDnf::Terms(ts) => ts.iter().any(|t| t.vars().all(|v| x[v])),
        }
    }

    /// Exact probability that the formula is satisfied under `dist`.
    ///
    /// Terms are variable-disjoint and coordinates independent, so
    /// `Pr[f=1] = 1 - prod_c (1 - prod_{i in c} p_i)`.
    pub fn satisfy_probability(&self, dist: &ProductDistribution) -> Result<f64, Error> {
        match self {
            ReadOnceDnf::Satisfied => Ok(1.0),
            ReadOnceDnf::Falsified => Ok(0.0),
            ReadOnceDnf::Terms(ts) => {
                self.check_covered(dist)?;
                let mut none_sat = 1.0;
                for t in ts {
                    none_sat *= 1.0 - t.satisfy_prob_skipping(dist, None);
                }
                Ok(1.0 - none_sat)
            }
        }
    }

    fn check_covered(&self, dist: &ProductDistribution) -> Result<(), Error> {
        for t in self.terms() {
            for v in t.vars() {
                if v >= dist.len() {
                    return Err(Error::MissingProbability {
                        var: v,
                        len: dist.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The formula conditioned on `var = value`.
    ///
    /// Setting `var = 1` removes the literal from its term; if the term
    /// empties, the whole formula is `Satisfied`. Setting `var = 0` removes
    /// the containing term; if no terms remain the formula is `Falsified`.
    /// A variable that appears in no term leaves the formula unchanged.
    pub fn condition(&self, var: usize, value: bool) -> ReadOnceDnf {
        let ts = match self {
            ReadOnceDnf::Terms(ts) => ts,
            constant => return constant.clone(),
        };
        let Some(idx) = ts.iter().position(|t| t.contains(var)) else {
            return self.clone();
        };
        if value {
            if ts[idx].len() == 1 {
                return ReadOnceDnf::Satisfied;
            }
            let mut out = ts.clone();
            out[idx].vars.remove(&var);
            ReadOnceDnf::Terms(out)
        } else {
            if ts.len() == 1 {
                return ReadOnceDnf::Falsified;
            }
            let mut out = ts.clone();
            out.remove(idx);
            ReadOnceDnf::Terms(out)
        }
    }

    /// Positive probabilities of the two restrictions `var = 0` and
    /// `var = 1`, without materializing the conditioned formulas.
    ///
    /// Matches `condition(var, b).satisfy_probability(dist)` bit for bit:
    /// the same factors are multiplied in the same order.
    pub fn pos_probs_after_split(
        &self,
        dist: &ProductDistribution,
        var: usize,
    ) -> Result<(f64, f64), Error> {
        let ts = match self {
            ReadOnceDnf::Satisfied => return Ok((1.0, 1.0)),
            ReadOnceDnf::Falsified => return Ok((0.0, 0.0)),
            ReadOnceDnf::Terms(ts) => ts,
        };
        self.check_covered(dist)?;
        let Some(idx) = ts.iter().position(|t| t.contains(var)) else {
            let q = self.satisfy_probability(dist)?;
            return Ok((q, q));
        };
        let mut none0 = 1.0; // var = 0: containing term dropped
        let mut none1 = 1.0; // var = 1: literal dropped from its term
        for (i, t) in ts.iter().enumerate() {
            if i == idx {
                none1 *= 1.0 - t.satisfy_prob_skipping(dist, Some(var));
            } else {
                let f = 1.0 - t.satisfy_prob_skipping(dist, None);
                none0 *= f;
                none1 *= f;
            }
        }
        Ok((1.0 - none0, 1.0 - none1))
    }
}

impl fmt::Display for ReadOnceDnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadOnceDnf::Satisfied => write!(f, "true"),
            ReadOnceDnf::Falsified => write!(f, "false"),
            ReadOnceDnf::Terms(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "(")?;
                    for (j, v) in t.vars().enumerate() {
                        if j > 0 {
                            write!(f, "&")?;
                        }
                        write!(f, "x{v}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Per-variable Bernoulli success probabilities, each strictly inside (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistribution {
    probs: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        for &p in &probs {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(ProductDistribution { probs })
    }

    /// The uniform distribution over `n` boolean variables.
    pub fn uniform(n: usize) -> Self {
        ProductDistribution {
            probs: vec![0.5; n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Success probability of variable `i`. Panics when out of range;
    /// formula-level operations validate coverage first.
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// JSON form of a formula: `{"n": 5, "terms": [[0,1],[2,3,4]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DnfJson {
    pub n: usize,
    pub terms: Vec<Vec<usize>>,
}

impl DnfJson {
    pub fn to_dnf(&self) -> Result<ReadOnceDnf, Error> {
        for t in &self.terms {
            for &v in t {
                if v >= self.n {
                    return Err(Error::InvalidDnf(format!(
                        "variable {v} out of range for n={}",
                        self.n
                    )));
                }
            }
        }
        ReadOnceDnf::from_terms(self.terms.clone())
    }

    pub fn from_dnf(dnf: &ReadOnceDnf, n: usize) -> Self {
        DnfJson {
            n,
            terms: dnf.terms().iter().map(|t| t.vars().collect()).collect(),
        }
    }
}

/// JSON form of a distribution. Accepts explicit probabilities, the
/// `{"uniform": n}` shorthand, or the two-class shorthand
/// `{"two_class": {"p1": .., "p2": .., "class": [0,1,...]}}` where class 0
/// maps to `p1` and class 1 to `p2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistJson {
    Probs { probs: Vec<f64> },
    Uniform { uniform: usize },
    TwoClass { two_class: TwoClassDist },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoClassDist {
    pub p1: f64,
    pub p2: f64,
    pub class: Vec<u8>,
}

impl DistJson {
    pub fn to_distribution(&self) -> Result<ProductDistribution, Error> {
        match self {
            DistJson::Probs { probs } => ProductDistribution::new(probs.clone()),
            DistJson::Uniform { uniform } => Ok(ProductDistribution::uniform(*uniform)),
            DistJson::TwoClass { two_class } => {
                let probs = two_class
                    .class
                    .iter()
                    .map(|&c| match c {
                        0 => Ok(two_class.p1),
                        1 => Ok(two_class.p2),
                        other => Err(Error::InvalidConfig(format!(
                            "class entries must be 0 or 1, got {other}"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                ProductDistribution::new(probs)
            }
        }
    }
}
