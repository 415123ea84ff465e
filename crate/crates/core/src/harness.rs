//! Executable verification of the optimality guarantees, plus run
//! manifests and atomic file output shared by the CLI commands.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dnf::{ProductDistribution, ReadOnceDnf};
use crate::error::Error;
use crate::greedy::{run_policy_inner, Policy, TieMode};
use crate::opt::{conjunction_opt, structural_equal, UniformOptTable, UniformSignature};
use crate::tree::{benchmark_tree, two_term_target};

const VERIFY_TOL: f64 = 1e-12;

/// What the verification run covers. The default mirrors the strongest
/// claims: 200 random conjunction instances with k ≤ 6 over 10 variables,
/// and every two-term shape with 1 ≤ l ≤ m ≤ 5 at every budget up to the
/// zero-error size.
#[derive(Debug, Clone)]
pub struct VerifyScope {
    pub conjunction_cases: usize,
    pub max_k: usize,
    pub n: usize,
    pub max_l: usize,
    pub max_m: usize,
    pub seed: u64,
    /// Test fixture: negate the selection score so the checker itself can
    /// be shown to catch a broken learner.
    pub(crate) flip_gain: bool,
}

impl Default for VerifyScope {
    fn default() -> Self {
        VerifyScope {
            conjunction_cases: 200,
            max_k: 6,
            n: 10,
            max_l: 5,
            max_m: 5,
            seed: 0x5eed_cafe,
            flip_gain: false,
        }
    }
}

impl VerifyScope {
    fn validate(&self) -> Result<(), Error> {
        if self.conjunction_cases > 0 && (self.max_k == 0 || self.max_k > self.n) {
            return Err(Error::InvalidConfig(format!(
                "max_k must be in 1..={} (got {})",
                self.n, self.max_k
            )));
        }
        Ok(())
    }
}

/// One named check with its outcome; `detail` explains a failure.
#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CaseResult {
    fn pass(name: String, detail: String) -> Self {
        CaseResult {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: String, detail: String) -> Self {
        CaseResult {
            name,
            passed: false,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub cases: Vec<CaseResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }

    /// One "PASS name" / "FAIL name: detail" line per case.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for case in &self.cases {
            if case.passed {
                out.push_str(&format!("PASS {}\n", case.name));
            } else {
                out.push_str(&format!("FAIL {}: {}\n", case.name, case.detail));
            }
        }
        out
    }
}

/// Greedy growth on a conjunction is optimal at every budget: for random
/// product distributions and random k-variable conjunctions, the traced
/// error at each t ≤ k must match the subset-minimization optimum.
/// Results are grouped into one case per k.
pub fn conjunction_suite(scope: &VerifyScope) -> Result<Vec<CaseResult>, Error> {
    scope.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scope.seed);
    let mut runs = vec![0usize; scope.max_k + 1];
    let mut fails: Vec<Vec<String>> = vec![Vec::new(); scope.max_k + 1];

    for case in 0..scope.conjunction_cases {
        let k = 1 + case % scope.max_k;
        let probs: Vec<f64> = (0..scope.n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let dist = ProductDistribution::new(probs)?;
        let vars = rand::seq::index::sample(&mut rng, scope.n, k).into_vec();
        let target = ReadOnceDnf::conjunction(vars.iter().copied())?;
        let (_, trace) = run_policy_inner(&target, &dist, Policy::TopDown, k, scope.flip_gain)?;
        let subset: Vec<f64> = vars.iter().map(|&v| dist.prob(v)).collect();
        runs[k] += 1;
        for t in 1..=k {
            let opt = conjunction_opt(&subset, t);
            let eps = trace.error_at(t) - opt;
            if eps.abs() > VERIFY_TOL {
                fails[k].push(format!("case {case}: eps_{t} = {eps:.3e}"));
            }
        }
    }

    let mut cases = Vec::new();
    for k in 1..=scope.max_k {
        if runs[k] == 0 {
            continue;
        }
        let name = format!("conjunction k={k} ({} distributions)", runs[k]);
        cases.push(if fails[k].is_empty() {
            CaseResult::pass(name, String::new())
        } else {
            CaseResult::fail(name, fails[k].join("; "))
        });
    }
    Ok(cases)
}

/// Two-term targets under uniform: at every budget t up to the zero-error
/// size, the grown tree must be structurally the benchmark tree B_t and
/// its error must equal the dynamic-programming optimum. One case per
/// (l, m) shape.
pub fn two_term_suite(scope: &VerifyScope) -> Result<Vec<CaseResult>, Error> {
    let mut table = UniformOptTable::new();
    let mut cases = Vec::new();
    for l in 1..=scope.max_l {
        for m in l..=scope.max_m {
            let target = two_term_target(l, m);
            let dist = ProductDistribution::uniform(l + l * m);
            let sig = UniformSignature::of(&target);
            let t_zero = l + l * m;
            let mut fails = Vec::new();
            for t in 1..=t_zero {
                let (tree, _) =
                    run_policy_inner(&target, &dist, Policy::TopDown, t, scope.flip_gain)?;
                let bench = benchmark_tree(l, m, t)?;
                if !structural_equal(&tree, &bench, &target) {
                    fails.push(format!("t={t}: shape differs from B_t"));
                    continue;
                }
                let gap = tree.error() - table.opt(&sig, t);
                if gap.abs() > VERIFY_TOL {
                    fails.push(format!("t={t}: error off optimum by {gap:.3e}"));
                }
            }
            let name = format!("two-term l={l} m={m} (t 1..={t_zero})");
            cases.push(if fails.is_empty() {
                CaseResult::pass(name, String::new())
            } else {
                CaseResult::fail(name, fails.join("; "))
            });
        }
    }
    Ok(cases)
}

/// Run both suites and collect every case.
pub fn verify_theory(scope: &VerifyScope) -> Result<VerifyReport, Error> {
    let mut cases = conjunction_suite(scope)?;
    cases.extend(two_term_suite(scope)?);
    Ok(VerifyReport { cases })
}

/// Metadata written next to every output file so a run can be reproduced
/// from its own artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub tie_mode: Option<String>,
    pub version: String,
    pub rng: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        seeds: Vec<u64>,
        tie_mode: Option<TieMode>,
        duration_secs: f64,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            seeds,
            tie_mode: tie_mode.map(|m| m.as_str().to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: "chacha8".to_string(),
            duration_secs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Write via a temp file in the same directory plus rename, so a crash
/// mid-write never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "out".into());
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
