//! `dpv`: run, verify and inspect discrete-Laplace DP mechanisms.
//!
//! Exit codes: 0 success, 1 a verification verdict failed, 2 bad usage or
//! parameters, 3 a run overspent its ledger.

mod mechanisms;
mod params;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dpv_core::budget::{Credits, Ledger};
use dpv_core::dist::{laplace_pmf, LaplaceParams};
use dpv_core::mechanisms::{adaptive_count, Database, MechanismError, SampledNoise};
use dpv_core::rational::{format_rational, parse_rational, Rational};
use dpv_core::verifier::{
    bind_lifting_suite, choice_composition_suite, post_processing_suite, seq_composition_suite, EnumConfig,
    SuiteSummary,
};
use num_traits::Zero;
use serde_json::json;

use mechanisms::{Mechanism, Setup};
use params::{parse_queries, Params};
use report::{RunReport, SuiteReport, SuiteVerdict, VerifyReport, SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "dpv", version, about = "Discrete-Laplace DP mechanisms and an exhaustive DP verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for sampling and for random suites.
    #[arg(long, global = true, env = "DPV_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for verification (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a mechanism once against a database.
    Run(RunArgs),
    /// Check a mechanism over all adjacent pairs of a small universe, or run a property suite.
    Verify(VerifyArgs),
    /// Tabulate the discrete Laplacian pmf.
    Pmf(PmfArgs),
    /// Adaptive counting behind a privacy filter.
    FilterDemo(FilterArgs),
    /// Run every property suite.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    mechanism: Mechanism,
    /// JSON object of mechanism parameters; `db` is required.
    #[arg(long, default_value = "{}")]
    params: String,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, required_unless_present = "suite", conflicts_with = "suite")]
    mechanism: Option<Mechanism>,
    #[arg(long, value_enum)]
    suite: Option<SuiteName>,
    /// Mechanism parameter, e.g. `1/2` or `0.5`.
    #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
    eps: Option<Rational>,
    /// Privacy level to check against; defaults to the declared budget.
    #[arg(long = "at-eps", value_parser = rational_arg, allow_hyphen_values = true)]
    at_eps: Option<Rational>,
    /// Number of queries taken from the default family.
    #[arg(long)]
    n: Option<usize>,
    /// Truncation radius of every Laplace draw.
    #[arg(long, default_value_t = 20)]
    radius: u64,
    #[arg(long, default_value = "{}")]
    params: String,
    /// Instances per suite.
    #[arg(long, default_value_t = 100)]
    instances: usize,
}

#[derive(Debug, Args)]
struct PmfArgs {
    #[arg(long, value_parser = rational_arg, allow_hyphen_values = true)]
    eps: Rational,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0i64, 1])]
    means: Vec<i64>,
    #[arg(long, allow_negative_numbers = true, default_value_t = -8)]
    lo: i64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 8)]
    hi: i64,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// JSON with `budget`, `eps_coarse`, `eps_precise`, `T`, `queries`, `db`.
    #[arg(long, default_value = "{}")]
    params: String,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 20)]
    radius: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteName {
    ChoiceComposition,
    BindLifting,
    SeqComposition,
    PostProcessing,
}

impl SuiteName {
    fn name(self) -> &'static str {
        match self {
            SuiteName::ChoiceComposition => "choice-composition",
            SuiteName::BindLifting => "bind-lifting",
            SuiteName::SeqComposition => "seq-composition",
            SuiteName::PostProcessing => "post-processing",
        }
    }

    fn run(self, seed: u64, instances: usize, radius: u64) -> Result<SuiteSummary> {
        let cfg = EnumConfig::new(radius);
        Ok(match self {
            SuiteName::ChoiceComposition => choice_composition_suite(seed, instances),
            SuiteName::BindLifting => bind_lifting_suite(seed, instances),
            SuiteName::SeqComposition => seq_composition_suite(seed, instances, &cfg)?,
            SuiteName::PostProcessing => post_processing_suite(seed, instances, &cfg)?,
        })
    }
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run(a) => run(cli, a),
        Command::Verify(a) => match (a.mechanism, a.suite) {
            (Some(m), _) => verify(cli, a, m),
            (None, Some(s)) => suites(cli, &[s], a.instances, a.radius),
            (None, None) => bail!("give --mechanism or --suite"),
        },
        Command::Pmf(a) => pmf(cli, a),
        Command::FilterDemo(a) => filter_demo(cli, a),
        Command::Suite(a) => suites(
            cli,
            &[SuiteName::ChoiceComposition, SuiteName::BindLifting, SuiteName::SeqComposition, SuiteName::PostProcessing],
            a.instances,
            a.radius,
        ),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_only(cli: &Cli) -> Result<()> {
    if cli.format == Some(Format::Csv) {
        bail!("this command only writes JSON");
    }
    Ok(())
}

fn run(cli: &Cli, a: &RunArgs) -> Result<ExitCode> {
    json_only(cli)?;
    let (params, raw) = Params::parse(&a.params)?;
    let setup = Setup::new(a.mechanism, &params, None, None)?;
    let db = Database::new(params.db.clone().context("params \"db\" is required for run")?);
    let budget = Credits::pure(params.ledger.map(|r| r.0).unwrap_or_else(|| setup.declared_budget()));
    let mut ns = SampledNoise::new(cli.seed, budget);
    let outcome = setup.run(&mut ns, &db);
    let (result, error, code) = match outcome {
        Ok(v) => (Some(v), None, ExitCode::SUCCESS),
        Err(e @ MechanismError::Budget(_)) => {
            eprintln!("ledger violation: {e}");
            (None, Some(e.to_string()), ExitCode::from(3))
        }
        Err(e) => bail!(e),
    };
    let report = RunReport {
        schema: SCHEMA,
        command: "run",
        mechanism: a.mechanism.name(),
        params: raw,
        seed: cli.seed,
        result,
        error,
        ledger: ns.ledger().entries(),
        budget,
        spent: ns.ledger().spent(),
    };
    emit(cli.out.as_deref(), &report::to_json(&report))?;
    Ok(code)
}

fn verify(cli: &Cli, a: &VerifyArgs, m: Mechanism) -> Result<ExitCode> {
    let (params, mut raw) = Params::parse(&a.params)?;
    if params.db.is_some() {
        bail!("verify enumerates its own universe; \"db\" is only used by run");
    }
    let setup = Setup::new(m, &params, a.eps, a.n)?;
    let at_eps = a.at_eps.unwrap_or_else(|| setup.declared_budget());
    let (lo, hi) = (params.lo.unwrap_or(0), params.hi.unwrap_or(2));
    if lo > hi {
        bail!("\"lo\" must not exceed \"hi\"");
    }
    let universe = Database::universe(params.max_len.unwrap_or(3), lo, hi, false);
    let pairs = params.adjacency.unwrap_or_default().pairs(&universe);
    let report = setup.check(&pairs, at_eps, &EnumConfig::new(a.radius))?;

    let obj = raw.as_object_mut().context("--params must be a JSON object")?;
    obj.insert("mechanism".into(), json!(m.name()));
    obj.insert("eps".into(), json!(format_rational(&setup.eps)));
    obj.insert("at_eps".into(), json!(format_rational(&at_eps)));
    obj.insert("queries".into(), json!(setup.queries.iter().map(|q| q.key()).collect::<Vec<_>>()));
    obj.insert("radius".into(), json!(a.radius));
    let rendered = VerifyReport::new(raw, &report);
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => report::to_json(&rendered),
        Format::Csv => rendered.to_csv(),
    };
    emit(cli.out.as_deref(), &text)?;
    if !report.passed() {
        let failures: Vec<_> = report.failures().collect();
        for p in failures.iter().take(10) {
            eprintln!("fail {} ~ {}: divergence {:.6}, tail {:.3e}", p.x, p.y, p.divergence, p.tail);
        }
        if failures.len() > 10 {
            eprintln!("... {} more failing pairs", failures.len() - 10);
        }
        if report.ledger_exceeded {
            eprintln!("ledger exceeded: spent eps {}", format_rational(&report.max_spent.eps()));
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn suites(cli: &Cli, names: &[SuiteName], instances: usize, radius: u64) -> Result<ExitCode> {
    json_only(cli)?;
    let summaries: Vec<SuiteSummary> =
        names.iter().map(|s| s.run(cli.seed, instances, radius)).collect::<Result<_>>()?;
    let verdicts: Vec<SuiteVerdict> = names
        .iter()
        .zip(&summaries)
        .map(|(s, summary)| SuiteVerdict { suite: s.name(), pass: summary.passed(), summary })
        .collect();
    let passed = verdicts.iter().all(|v| v.pass);
    for v in &verdicts {
        eprintln!(
            "{} {}: {} checked, {} discarded, {} violations",
            if v.pass { "PASS" } else { "FAIL" },
            v.suite,
            v.summary.checked,
            v.summary.discarded,
            v.summary.violations
        );
    }
    let report = SuiteReport {
        schema: SCHEMA,
        command: "suite",
        params: json!({ "seed": cli.seed, "instances": instances, "radius": radius }),
        verdicts,
        ledger: [],
        passed,
    };
    emit(cli.out.as_deref(), &report::to_json(&report))?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn pmf(cli: &Cli, a: &PmfArgs) -> Result<ExitCode> {
    if a.lo > a.hi {
        bail!("--lo must not exceed --hi");
    }
    let eps = format_rational(&a.eps);
    let mut rows = Vec::new();
    for &mean in &a.means {
        let p = LaplaceParams::new(a.eps, mean);
        // a point mass has a single row
        let vs: Vec<i64> = if p.is_degenerate() { vec![mean] } else { (a.lo..=a.hi).collect() };
        for v in vs {
            rows.push((mean, v, laplace_pmf(p, v).get()));
        }
    }
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("eps,mean,v,pmf\n");
            for (mean, v, p) in &rows {
                s.push_str(&format!("{eps},{mean},{v},{p}\n"));
            }
            s
        }
        Format::Json => report::to_json(&json!({
            "schema": SCHEMA,
            "command": "pmf",
            "eps": eps,
            "rows": rows.iter().map(|(m, v, p)| json!({"mean": m, "v": v, "pmf": p})).collect::<Vec<_>>(),
        })),
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn filter_demo(cli: &Cli, a: &FilterArgs) -> Result<ExitCode> {
    json_only(cli)?;
    let (params, raw) = Params::parse(&a.params)?;
    let budget = params.budget.map(|r| r.0).unwrap_or(Rational::from_integer(1));
    let eps_coarse = params.eps_coarse.map(|r| r.0).unwrap_or(Rational::new(1, 4));
    let eps_precise = params.eps_precise.map(|r| r.0).unwrap_or(Rational::new(1, 2));
    if budget < Rational::zero() {
        bail!("\"budget\" must be nonnegative");
    }
    let specs = params.queries.clone().unwrap_or_else(|| {
        ["ge:1", "ge:3", "even", "eq:0", "count", "odd"].iter().map(|s| s.to_string()).collect()
    });
    let queries = parse_queries(&specs)?;
    let db = Database::new(params.db.clone().unwrap_or_else(|| vec![0, 1, 2, 3, 3, 5]));
    let mut ns = SampledNoise::with_ledger(cli.seed, Ledger::new(Credits::pure(budget)));
    let outcome = adaptive_count(&mut ns, eps_coarse, eps_precise, params.threshold.unwrap_or(2), budget, &queries, &db);
    let (result, error, code) = match outcome {
        Ok(v) => (Some(json!(v)), None, ExitCode::SUCCESS),
        Err(e @ MechanismError::Budget(_)) => {
            eprintln!("ledger violation: {e}");
            (None, Some(e.to_string()), ExitCode::from(3))
        }
        Err(e) => bail!(e),
    };
    let report = RunReport {
        schema: SCHEMA,
        command: "filter-demo",
        mechanism: Mechanism::AdaptiveCount.name(),
        params: raw,
        seed: cli.seed,
        result,
        error,
        ledger: ns.ledger().entries(),
        budget: Credits::pure(budget),
        spent: ns.ledger().spent(),
    };
    emit(cli.out.as_deref(), &report::to_json(&report))?;
    Ok(code)
}
