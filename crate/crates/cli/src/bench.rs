//! The `bench-sbfe` subcommand.

use std::path::PathBuf;

use clap::Args;
use orbitprio_core::bench::{
    evaluate_formula, generate_suite, BenchReport, DEFAULT_MAX_FILTERS, DEFAULT_ORACLE_SAMPLES,
    DEFAULT_SUITE_SIZE, TIME_QUANTUM,
};
use orbitprio_core::error::SolverError;
use orbitprio_core::runtime::Thresholds;
use orbitprio_core::scenario::{build_scenario, union_catalog, ScenarioName};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value_t = DEFAULT_SUITE_SIZE)]
    formulas: usize,
    /// Distinct filters allowed per formula.
    #[arg(long, default_value_t = DEFAULT_MAX_FILTERS)]
    max_filters: usize,
    /// Scenario to draw formulas from; repeat for several. Defaults to all.
    #[arg(long)]
    scenario: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sampled ground truths per formula for the oracle policy.
    #[arg(long, default_value_t = DEFAULT_ORACLE_SAMPLES)]
    oracle_samples: usize,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Output {
    seed: u64,
    max_filters: usize,
    /// Formulas beyond the exact solver's filter or term cap.
    skipped: usize,
    greedy_vs_exact: f64,
    median_gap: f64,
    median_quantum: f64,
    report: BenchReport,
}

pub fn execute(args: BenchArgs) -> Result<(), String> {
    let names: Vec<ScenarioName> = if args.scenario.is_empty() {
        ScenarioName::ALL.to_vec()
    } else {
        args.scenario
            .iter()
            .map(|s| s.parse().map_err(|e| format!("scenario: {e}")))
            .collect::<Result<_, String>>()?
    };
    let th = Thresholds::new(args.beta, args.alpha).map_err(|e| format!("alpha/beta: {e}"))?;
    let specs = names
        .iter()
        .map(|&n| build_scenario(n, args.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let catalog = union_catalog(specs.iter().map(|s| &s.catalog)).map_err(|e| e.to_string())?;
    let suite = generate_suite(&specs, args.max_filters, args.formulas, args.seed)
        .map_err(|e| e.to_string())?;
    let evaluated: Vec<_> = suite
        .par_iter()
        .map(|f| evaluate_formula(f, &catalog, th, args.oracle_samples, args.seed))
        .collect();
    let mut rows = Vec::with_capacity(evaluated.len());
    let mut skipped = 0;
    for r in evaluated {
        match r {
            Ok(row) => rows.push(row),
            Err(SolverError::TooManyFilters { .. } | SolverError::TooManyTerms { .. }) => {
                skipped += 1
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    let report = BenchReport::from_rows(&rows, th);
    let out = Output {
        seed: args.seed,
        max_filters: args.max_filters,
        skipped,
        greedy_vs_exact: report.greedy_gap(),
        median_gap: report.greedy.median - report.exact.median,
        median_quantum: TIME_QUANTUM,
        report,
    };
    let r = &out.report;
    println!("formulas evaluated {} (skipped over solver cap: {})", r.formulas, out.skipped);
    println!("{:<16} {:>10} {:>10}", "policy", "mean s", "median s");
    for (name, p) in [
        ("oracle", r.oracle),
        ("exact", r.exact),
        ("greedy", r.greedy),
        ("static", r.static_baseline),
    ] {
        println!("{name:<16} {:>10.4} {:>10.4}", p.mean, p.median);
    }
    println!("oracle std error {:.4}", r.oracle_sem);
    println!("greedy over exact {:.2}%", 100.0 * out.greedy_vs_exact);
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
        std::fs::write(path, json).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}
