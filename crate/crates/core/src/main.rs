//! `mictree` command line: theory verification, OPT tables, optimality
//! sweeps, finite-sample experiments, and single-run growth traces.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mictree::dnf::{DistJson, DnfJson, ProductDistribution};
use mictree::greedy::{run_policy, Policy, TieMode};
use mictree::harness::{verify_theory, write_atomic, RunManifest, VerifyScope};
use mictree::mic::{
    default_bins, enumerate_two_class_family, enumerate_uniform_family, sweep, Family,
};
use mictree::opt::{TwoClassOptTable, UniformOptTable};
use mictree::sample::{run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "mictree",
    version,
    about = "Greedy decision trees on read-once DNFs with exact optimality metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the conjunction and two-term optimality suites; exit 1 on any failure
    VerifyTheory(VerifyArgs),
    /// Tabulate the optimal tree error for every signature in a family
    OptTable(OptTableArgs),
    /// Per-signature optimality gaps and their histogram over a family
    MicSweep(MicSweepArgs),
    /// Train/test experiments with plug-in estimates from sampled data
    FiniteSample(FiniteSampleArgs),
    /// Grow one tree on a given formula and emit its trace and structure
    Trace(TraceArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random conjunction instances
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Largest conjunction width
    #[arg(long, default_value_t = 6)]
    max_k: usize,
    /// Ambient variable count for conjunction sampling
    #[arg(long, default_value_t = 10)]
    vars: usize,
    /// Largest first-term size in the two-term suite
    #[arg(long, default_value_t = 5)]
    max_l: usize,
    /// Largest second-term size in the two-term suite
    #[arg(long, default_value_t = 5)]
    max_m: usize,
    #[arg(long, default_value_t = 0x5eed_cafe)]
    seed: u64,
    /// Also write report.json and manifest.json here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    Uniform,
    TwoClass,
}

#[derive(Args)]
struct FamilyArgs {
    /// Signature family the command enumerates
    #[arg(long, value_enum, default_value_t = FamilyKind::Uniform)]
    family: FamilyKind,
    #[arg(long, default_value_t = 5)]
    max_terms: usize,
    #[arg(long, default_value_t = 5)]
    max_term_size: usize,
    /// First class probability (two-class family only)
    #[arg(long, default_value_t = 0.4)]
    p1: f64,
    /// Second class probability (two-class family only)
    #[arg(long, default_value_t = 0.6)]
    p2: f64,
}

impl FamilyArgs {
    fn to_family(&self) -> Family {
        match self.family {
            FamilyKind::Uniform => Family::Uniform {
                max_terms: self.max_terms,
                max_term_size: self.max_term_size,
            },
            FamilyKind::TwoClass => Family::TwoClass {
                max_terms: self.max_terms,
                max_term_size: self.max_term_size,
                p1: self.p1,
                p2: self.p2,
            },
        }
    }

    fn manifest_json(&self) -> serde_json::Value {
        match self.family {
            FamilyKind::Uniform => serde_json::json!({
                "family": "uniform",
                "max_terms": self.max_terms,
                "max_term_size": self.max_term_size,
            }),
            FamilyKind::TwoClass => serde_json::json!({
                "family": "two-class",
                "max_terms": self.max_terms,
                "max_term_size": self.max_term_size,
                "p1": self.p1,
                "p2": self.p2,
            }),
        }
    }
}

#[derive(Args)]
struct OptTableArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Largest internal-node budget tabulated (from 0)
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    /// Output directory for opt_table.csv and manifest.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MicSweepArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = Policy::TopDown)]
    policy: Policy,
    #[arg(long, default_value_t = TieMode::Documented)]
    tie_mode: TieMode,
    /// Number of iterations the gap series covers
    #[arg(long, default_value_t = 100)]
    t_star: usize,
    /// Histogram bin lower edges, comma separated (last bin open-ended)
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    bins: Option<Vec<f64>>,
    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for sweep.csv, histogram.json, manifest.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FiniteSampleArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for results.csv, summary.csv, manifest.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Formula JSON: {"n": ..., "terms": [[...], ...]}
    #[arg(long)]
    dnf: PathBuf,
    /// Distribution JSON ({"probs": [...]}, {"uniform": n}, or
    /// {"two_class": {...}}); defaults to uniform over the formula's n
    #[arg(long)]
    dist: Option<PathBuf>,
    #[arg(long, default_value_t = Policy::TopDown)]
    policy: Policy,
    /// Split budget
    #[arg(long)]
    t_max: usize,
    /// Output directory for trace.csv, tree.json, manifest.json
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::VerifyTheory(args) => cmd_verify_theory(args),
        Cmd::OptTable(args) => cmd_opt_table(args),
        Cmd::MicSweep(args) => cmd_mic_sweep(args),
        Cmd::FiniteSample(args) => cmd_finite_sample(args),
        Cmd::Trace(args) => cmd_trace(args),
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("build worker pool")?;
    pool.install(f)
}

fn cmd_verify_theory(args: VerifyArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let mut scope = VerifyScope::default();
    scope.conjunction_cases = args.cases;
    scope.max_k = args.max_k;
    scope.n = args.vars;
    scope.max_l = args.max_l;
    scope.max_m = args.max_m;
    scope.seed = args.seed;

    let report = verify_theory(&scope)?;
    print!("{}", report.render());
    let failures = report.failures().count();
    println!(
        "{}: {} cases, {} failures",
        if failures == 0 { "VERIFIED" } else { "FAILED" },
        report.cases.len(),
        failures
    );

    if let Some(out) = &args.out {
        let mut report_json =
            serde_json::to_string_pretty(&report).context("serialize report")?;
        report_json.push('\n');
        let manifest = RunManifest::new(
            "verify-theory",
            serde_json::json!({
                "cases": args.cases,
                "max_k": args.max_k,
                "vars": args.vars,
                "max_l": args.max_l,
                "max_m": args.max_m,
                "seed": args.seed,
            }),
            vec![args.seed],
            None,
            started.elapsed().as_secs_f64(),
        );
        write_atomic(&out.join("report.json"), &report_json)?;
        write_atomic(&out.join("manifest.json"), &manifest.to_json())?;
    }

    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_opt_table(args: OptTableArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let mut csv = String::from("signature,t,opt_error\n");
    match args.family.family {
        FamilyKind::Uniform => {
            let mut table = UniformOptTable::new();
            for sig in enumerate_uniform_family(args.family.max_terms, args.family.max_term_size) {
                for t in 0..=args.t_max {
                    csv.push_str(&format!("{},{},{:.16e}\n", sig.label(), t, table.opt(&sig, t)));
                }
            }
        }
        FamilyKind::TwoClass => {
            let mut table = TwoClassOptTable::new(args.family.p1, args.family.p2)?;
            for sig in enumerate_two_class_family(args.family.max_terms, args.family.max_term_size)
            {
                for t in 0..=args.t_max {
                    csv.push_str(&format!("{},{},{:.16e}\n", sig.label(), t, table.opt(&sig, t)));
                }
            }
        }
    }

    let mut config = args.family.manifest_json();
    config["t_max"] = serde_json::json!(args.t_max);
    let manifest = RunManifest::new(
        "opt-table",
        config,
        Vec::new(),
        None,
        started.elapsed().as_secs_f64(),
    );
    write_atomic(&args.out.join("opt_table.csv"), &csv)?;
    write_atomic(&args.out.join("manifest.json"), &manifest.to_json())?;
    println!("wrote {}", args.out.join("opt_table.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_mic_sweep(args: MicSweepArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let bins = args.bins.clone().unwrap_or_else(default_bins);
    let family = args.family.to_family();
    let report = with_pool(args.workers, || {
        sweep(args.policy, args.tie_mode, &family, args.t_star, &bins).map_err(Into::into)
    })?;

    let mut histogram = serde_json::to_string_pretty(&report.histogram_json())
        .context("serialize histogram")?;
    histogram.push('\n');
    let mut config = args.family.manifest_json();
    config["policy"] = serde_json::json!(args.policy.as_str());
    config["tie_mode"] = serde_json::json!(args.tie_mode.as_str());
    config["t_star"] = serde_json::json!(args.t_star);
    config["bins"] = serde_json::json!(bins);
    config["workers"] = serde_json::json!(args.workers);
    let manifest = RunManifest::new(
        "mic-sweep",
        config,
        Vec::new(),
        Some(args.tie_mode),
        started.elapsed().as_secs_f64(),
    );

    write_atomic(&args.out.join("sweep.csv"), &report.to_csv())?;
    write_atomic(&args.out.join("histogram.json"), &histogram)?;
    write_atomic(&args.out.join("manifest.json"), &manifest.to_json())?;
    println!(
        "swept {} signatures; histogram counts {:?}",
        report.records.len(),
        report.counts
    );
    println!("wrote {}", args.out.join("sweep.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_finite_sample(args: FiniteSampleArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("read config {}", args.config.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parse config {}", args.config.display()))?;
    cfg.validate()?;
    let results = with_pool(args.workers, || run_experiment(&cfg).map_err(Into::into))?;

    let config = serde_json::to_value(&cfg).context("serialize config")?;
    let manifest = RunManifest::new(
        "finite-sample",
        config,
        vec![cfg.seed],
        None,
        started.elapsed().as_secs_f64(),
    );
    write_atomic(&args.out.join("results.csv"), &results.results_csv())?;
    write_atomic(&args.out.join("summary.csv"), &results.summary_csv())?;
    write_atomic(&args.out.join("manifest.json"), &manifest.to_json())?;
    print!("{}", results.summary_csv());
    println!("wrote {}", args.out.join("results.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace(args: TraceArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let dnf_text = fs::read_to_string(&args.dnf)
        .with_context(|| format!("read formula {}", args.dnf.display()))?;
    let dnf_json: DnfJson = serde_json::from_str(&dnf_text)
        .with_context(|| format!("parse formula {}", args.dnf.display()))?;
    let target = dnf_json.to_dnf()?;
    let dist = match &args.dist {
        Some(path) => {
            let dist_text = fs::read_to_string(path)
                .with_context(|| format!("read distribution {}", path.display()))?;
            let dist_json: DistJson = serde_json::from_str(&dist_text)
                .with_context(|| format!("parse distribution {}", path.display()))?;
            dist_json.to_distribution()?
        }
        None => ProductDistribution::uniform(dnf_json.n),
    };

    let (tree, trace) = run_policy(&target, &dist, args.policy, args.t_max)?;
    let mut tree_json =
        serde_json::to_string_pretty(&tree.to_json()).context("serialize tree")?;
    tree_json.push('\n');
    let manifest = RunManifest::new(
        "trace",
        serde_json::json!({
            "dnf": args.dnf.display().to_string(),
            "dist": args.dist.as_ref().map(|p| p.display().to_string()),
            "policy": args.policy.as_str(),
            "t_max": args.t_max,
        }),
        Vec::new(),
        None,
        started.elapsed().as_secs_f64(),
    );
    write_atomic(&args.out.join("trace.csv"), &trace.to_csv())?;
    write_atomic(&args.out.join("tree.json"), &tree_json)?;
    write_atomic(&args.out.join("manifest.json"), &manifest.to_json())?;
    println!(
        "{}: {} internal nodes, error {:.6}",
        args.policy,
        tree.internal_count(),
        tree.error()
    );
    println!("wrote {}", args.out.join("trace.csv").display());
    Ok(ExitCode::SUCCESS)
}
