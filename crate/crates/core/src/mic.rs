//! Optimality-gap metrics and family sweeps.
//!
//! For an algorithm A and formula F, the gap at budget t is
//! `eps_t = error(A's tree with t splits) - OPT(F, t)`, and the mean of
//! `eps_1..eps_t*` summarizes how far A stays from optimal across all
//! practical tree sizes. Sweeps evaluate that mean over whole families of
//! signatures and bin the results into a histogram.

use rayon::prelude::*;
use serde_json::json;

use crate::error::Error;
use crate::greedy::{run_policy, worst_case_errors, Policy, TieMode};
use crate::opt::{TwoClassOptTable, TwoClassSignature, UniformOptTable, UniformSignature};

/// Branch budget for the exhaustive tie search in worst-case mode.
pub const WORST_CASE_BRANCH_CAP: usize = 500_000;

/// Default histogram bin lower edges; the last bin is open-ended, so the
/// headline thresholds 0.01 and 0.05 are directly readable.
pub fn default_bins() -> Vec<f64> {
    vec![0.0, 1e-4, 1e-3, 1e-2, 5e-2]
}

/// Gap series of one algorithm on one formula.
#[derive(Debug, Clone)]
pub struct MicSeries {
    /// `epsilons[i]` is the gap at budget `t = i + 1`.
    pub epsilons: Vec<f64>,
    pub t_star: usize,
    pub mean: f64,
}

/// Arithmetic mean of a nonempty gap series.
pub fn mic_mean(epsilons: &[f64]) -> f64 {
    assert!(!epsilons.is_empty(), "mean of empty gap series");
    epsilons.iter().sum::<f64>() / epsilons.len() as f64
}

/// Assembles a series from per-budget algorithm errors and OPT values,
/// both indexed by `t - 1`.
pub fn mic_series(errors: &[f64], opts: &[f64]) -> MicSeries {
    assert_eq!(errors.len(), opts.len());
    let epsilons: Vec<f64> = errors.iter().zip(opts).map(|(e, o)| e - o).collect();
    let mean = mic_mean(&epsilons);
    MicSeries {
        t_star: epsilons.len(),
        mean,
        epsilons,
    }
}

fn policy_errors(
    target: &crate::dnf::ReadOnceDnf,
    dist: &crate::dnf::ProductDistribution,
    policy: Policy,
    tie_mode: TieMode,
    t_star: usize,
) -> Result<Vec<f64>, Error> {
    match tie_mode {
        TieMode::Documented => {
            let (_, trace) = run_policy(target, dist, policy, t_star)?;
            Ok((1..=t_star).map(|t| trace.error_at(t)).collect())
        }
        TieMode::WorstCase => {
            let worst = worst_case_errors(target, dist, policy, t_star, WORST_CASE_BRANCH_CAP)?;
            Ok(worst[1..].to_vec())
        }
    }
}

/// Gap series under the uniform distribution, with OPT values served from
/// the shared memo table.
pub fn mic_constants_uniform(
    policy: Policy,
    tie_mode: TieMode,
    sig: &UniformSignature,
    t_star: usize,
    table: &mut UniformOptTable,
) -> Result<MicSeries, Error> {
    let (target, dist) = sig.materialize();
    let errors = policy_errors(&target, &dist, policy, tie_mode, t_star)?;
    let opts: Vec<f64> = (1..=t_star).map(|t| table.opt(sig, t)).collect();
    Ok(mic_series(&errors, &opts))
}

/// Gap series under a two-class product distribution.
pub fn mic_constants_two_class(
    policy: Policy,
    tie_mode: TieMode,
    sig: &TwoClassSignature,
    t_star: usize,
    table: &mut TwoClassOptTable,
) -> Result<MicSeries, Error> {
    let (p1, p2) = table.class_probs();
    let (target, dist) = sig.materialize(p1, p2)?;
    let errors = policy_errors(&target, &dist, policy, tie_mode, t_star)?;
    let opts: Vec<f64> = (1..=t_star).map(|t| table.opt(sig, t)).collect();
    Ok(mic_series(&errors, &opts))
}

/// Every sorted multiset of 1..=`max_terms` term sizes drawn from
/// 1..=`max_term_size`, in lexicographic order of the nondecreasing
/// sequence.
pub fn enumerate_uniform_family(max_terms: usize, max_term_size: usize) -> Vec<UniformSignature> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        start: usize,
        max_terms: usize,
        max_size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<UniformSignature>,
    ) {
        for s in start..=max_size {
            cur.push(s);
            out.push(UniformSignature::new(cur.clone()).expect("positive sizes"));
            if cur.len() < max_terms {
                rec(s, max_terms, max_size, cur, out);
            }
            cur.pop();
        }
    }
    rec(1, max_terms, max_term_size, &mut cur, &mut out);
    out
}

/// Every sorted multiset of 1..=`max_terms` class profiles (n1, n2) with
/// 1 <= n1 + n2 <= `max_term_size`.
pub fn enumerate_two_class_family(
    max_terms: usize,
    max_term_size: usize,
) -> Vec<TwoClassSignature> {
    let mut universe = Vec::new();
    for n1 in 0..=max_term_size {
        for n2 in 0..=max_term_size - n1 {
            if n1 + n2 >= 1 {
                universe.push((n1, n2));
            }
        }
    }
    universe.sort_unstable();

    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        start: usize,
        universe: &[(usize, usize)],
        max_terms: usize,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<TwoClassSignature>,
    ) {
        for i in start..universe.len() {
            cur.push(universe[i]);
            out.push(TwoClassSignature::new(cur.clone()).expect("nonzero profiles"));
            if cur.len() < max_terms {
                rec(i, universe, max_terms, cur, out);
            }
            cur.pop();
        }
    }
    rec(0, &universe, max_terms, &mut cur, &mut out);
    out
}

/// A formula family a sweep runs over.
#[derive(Debug, Clone)]
pub enum Family {
    Uniform {
        max_terms: usize,
        max_term_size: usize,
    },
    TwoClass {
        max_terms: usize,
        max_term_size: usize,
        p1: f64,
        p2: f64,
    },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Uniform {
                max_terms,
                max_term_size,
            } => format!("uniform(max_terms={max_terms},max_term_size={max_term_size})"),
            Family::TwoClass {
                max_terms,
                max_term_size,
                p1,
                p2,
            } => format!(
                "two_class(max_terms={max_terms},max_term_size={max_term_size},p1={p1},p2={p2})"
            ),
        }
    }
}

/// One row of a sweep: the MIC mean of `policy` on `signature`.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub signature: String,
    pub policy: Policy,
    pub tie_mode: TieMode,
    pub t_star: usize,
    pub mic_mean: f64,
}

/// All per-signature means of a sweep plus their histogram.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
    /// Histogram bin lower edges; bin `i` covers `[bins[i], bins[i+1])`
    /// and the last bin is unbounded above.
    pub bins: Vec<f64>,
    pub counts: Vec<usize>,
    pub policy: Policy,
    pub family: String,
}

impl SweepReport {
    /// CSV with columns `signature,policy,tie_mode,t_star,mic_mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("signature,policy,tie_mode,t_star,mic_mean\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{:.16e}\n",
                r.signature, r.policy, r.tie_mode, r.t_star, r.mic_mean
            ));
        }
        out
    }

    pub fn histogram_json(&self) -> serde_json::Value {
        json!({
            "bins": self.bins,
            "counts": self.counts,
            "policy": self.policy.as_str(),
            "family": self.family,
        })
    }
}

fn build_histogram(bins: &[f64], means: &[f64]) -> Vec<usize> {
    let mut counts = vec![0usize; bins.len()];
    for &m in means {
        // gap means sit within tolerance of [0, inf); snap tiny negatives
        let m = m.max(0.0);
        let mut idx = 0;
        for (i, &edge) in bins.iter().enumerate() {
            if m >= edge {
                idx = i;
            }
        }
        counts[idx] += 1;
    }
    counts
}

/// Runs `policy` over every signature of `family`, computing the MIC mean
/// at `t_star` for each. Signatures are processed in enumeration order
/// (in parallel when a rayon pool is configured), so output is
/// deterministic for a fixed family and policy.
pub fn sweep(
    policy: Policy,
    tie_mode: TieMode,
    family: &Family,
    t_star: usize,
    bins: &[f64],
) -> Result<SweepReport, Error> {
    if t_star == 0 {
        return Err(Error::InvalidConfig("t_star must be at least 1".into()));
    }
    let records = match family {
        Family::Uniform {
            max_terms,
            max_term_size,
        } => {
            let sigs = enumerate_uniform_family(*max_terms, *max_term_size);
            // fill the shared table serially, then query it read-only
            let mut table = UniformOptTable::new();
            let opts: Vec<Vec<f64>> = sigs
                .iter()
                .map(|sig| (1..=t_star).map(|t| table.opt(sig, t)).collect())
                .collect();
            sigs.par_iter()
                .zip(opts.par_iter())
                .map(|(sig, opt)| {
                    let (target, dist) = sig.materialize();
                    let errors = policy_errors(&target, &dist, policy, tie_mode, t_star)?;
                    let series = mic_series(&errors, opt);
                    Ok(SweepRecord {
                        signature: sig.label(),
                        policy,
                        tie_mode,
                        t_star,
                        mic_mean: series.mean,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?
        }
        Family::TwoClass {
            max_terms,
            max_term_size,
            p1,
            p2,
        } => {
            let sigs = enumerate_two_class_family(*max_terms, *max_term_size);
            let mut table = TwoClassOptTable::new(*p1, *p2)?;
            let opts: Vec<Vec<f64>> = sigs
                .iter()
                .map(|sig| (1..=t_star).map(|t| table.opt(sig, t)).collect())
                .collect();
            sigs.par_iter()
                .zip(opts.par_iter())
                .map(|(sig, opt)| {
                    let (target, dist) = sig.materialize(*p1, *p2)?;
                    let errors = policy_errors(&target, &dist, policy, tie_mode, t_star)?;
                    let series = mic_series(&errors, opt);
                    Ok(SweepRecord {
                        signature: sig.label(),
                        policy,
                        tie_mode,
                        t_star,
                        mic_mean: series.mean,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?
        }
    };
    let means: Vec<f64> = records.iter().map(|r| r.mic_mean).collect();
    Ok(SweepReport {
        counts: build_histogram(bins, &means),
        records,
        bins: bins.to_vec(),
        policy,
        family: family.label(),
    })
}
