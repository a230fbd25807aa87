//! `orbitprio`: run simulations, formula benchmarks and the reference checks.

mod bench;
mod report;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "orbitprio", version, about = "Onboard image prioritization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a constellation and write latency, energy and trace files.
    Run(run::RunArgs),
    /// Compare filter-ordering policies on a synthetic formula suite.
    BenchSbfe(bench::BenchArgs),
    /// Check the fast algorithms against brute-force references.
    Verify(verify::VerifyArgs),
    /// Print a generated workload as editable JSON.
    Scenario(ScenarioArgs),
    /// Encode a synthetic capture schedule and report its size.
    Codec(CodecArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// urban, disaster or intelligence.
    name: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = orbitprio_core::bench::SYNTHETIC_SLOTS)]
    slots: usize,
    #[arg(long, default_value_t = orbitprio_core::bench::SYNTHETIC_UNIQUE)]
    unique: usize,
}

fn scenario(args: ScenarioArgs) -> Result<(), String> {
    let spec = orbitprio_core::scenario::build_scenario_named(&args.name, args.seed)
        .map_err(|e| e.to_string())?;
    let json = spec.to_json();
    match args.out {
        Some(path) => {
            std::fs::write(&path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn codec(args: CodecArgs) -> Result<(), String> {
    use orbitprio_core::bench::{generate_suite, synthetic_schedule};
    use orbitprio_core::codec::{compression_ratio, decode_schedule, encode_schedule};
    use orbitprio_core::scenario::{build_scenario, ScenarioName};

    let specs = ScenarioName::ALL
        .iter()
        .map(|&n| build_scenario(n, args.seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let pool = generate_suite(&specs, 15, args.unique * 8, args.seed).map_err(|e| e.to_string())?;
    let schedule = synthetic_schedule(&pool, args.slots, args.unique, args.seed);
    let bytes = encode_schedule(&schedule).map_err(|e| e.to_string())?;
    let back = decode_schedule(&bytes).map_err(|e| e.to_string())?;
    if back != schedule {
        return Err("decoded schedule differs from the original".into());
    }
    let ratio = compression_ratio(&schedule).map_err(|e| e.to_string())?;
    println!("slots            {}", schedule.slot_count());
    println!("unique formulas  {}", schedule.unique_formulas().len());
    println!("runs             {}", schedule.entries().len());
    println!("encoded bytes    {}", bytes.len());
    println!("compression      {ratio:.1}x");
    println!("round trip       ok");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run::execute(a),
        Command::BenchSbfe(a) => bench::execute(a),
        Command::Verify(a) => verify::execute(a),
        Command::Scenario(a) => scenario(a),
        Command::Codec(a) => codec(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
