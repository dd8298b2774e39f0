use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfmimo_core::harness::{emit_cdf, run_experiment, summarize, SummaryRow};
use cfmimo_core::{Error, SystemConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cfmimo",
    version,
    about = "Cell-free / user-centric massive MIMO rate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate drops and write rate CDFs plus a summary.
    Run {
        /// JSON scenario file; missing keys take the reference defaults.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        drops: usize,
        /// Fading draws per drop for the upper bounds; 0 skips them.
        #[arg(long = "fading-trials", default_value_t = 50)]
        fading_trials: usize,
        /// Overrides `rng_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the percentile table of a previous run.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn run(
    config: &Path,
    drops: usize,
    trials: usize,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), Error> {
    let text = std::fs::read_to_string(config)?;
    let cfg = SystemConfig::from_json(&text)?;
    let seed = seed.unwrap_or(cfg.rng_seed);
    let result = run_experiment(&cfg, drops, trials, seed)?;
    let files = emit_cdf(&result, out)?;
    println!(
        "{} drops, {} users each, {} files written to {}",
        drops,
        cfg.n_users(),
        files.len(),
        out.display()
    );
    Ok(())
}

fn mbps(x: Option<f64>) -> String {
    x.map(|v| format!("{:.4}", v / 1e6))
        .unwrap_or_else(|| "-".into())
}

fn print_table(rows: &[SummaryRow]) {
    println!(
        "{:<4} {:<3} {:<3} {:>8} {:>12} {:>12} {:>12}  note",
        "pop", "dir", "bnd", "samples", "p5_Mbps", "median_Mbps", "mean_Mbps"
    );
    for r in rows {
        println!(
            "{:<4} {:<3} {:<3} {:>8} {:>12} {:>12} {:>12}  {}",
            r.population,
            r.direction,
            r.bound,
            r.samples,
            mbps(r.p5_bps),
            mbps(r.median_bps),
            mbps(r.mean_bps),
            r.note
        );
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim()),
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            drops,
            fading_trials,
            seed,
            out,
        } => run(&config, drops, fading_trials, seed, &out),
        Command::Summarize { input } => summarize(&input).map(|rows| print_table(&rows)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
