//! `cmi-lab`: run information-measurement experiments from JSON configs.
//!
//! Exit codes: 0 when every audited budget holds, 1 when any verdict fails,
//! 2 on configuration or usage errors. Set `CMI_LAB_THREADS` to cap the
//! worker pool; results are identical at any thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmi_lab_core::class::FiniteClass;
use cmi_lab_core::combinatorics::{growth_count, star_number, vc_dimension, StarNumber};
use cmi_lab_core::error::{Error, Result};
use cmi_lab_core::harness::{
    run_estimate, run_lowerbound_pointfunctions, ExperimentConfig, RunRecord,
};
use cmi_lab_core::oig::{build_graph, orient_deterministic};

#[derive(Parser)]
#[command(name = "cmi-lab", version, about = "Information measurements for learning algorithms under the supersample construction", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and print the estimates table (n,mean_nats,stderr,draws,mode).
    Estimate {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Print the full run record as JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Run a config and print the audit table (name,measured,stderr,bound,slack,verdict).
    Audit {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Print the full run record as JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Audit the version-space lower-bound construction on point functions.
    Lowerbound {
        /// Number of supersample columns (2..=16).
        #[arg(long)]
        n: usize,
        /// Monte-Carlo draws (>= 2).
        #[arg(long)]
        draws: usize,
        /// Root seed; draw i derives its own stream from it.
        #[arg(long)]
        seed: u64,
        /// Print the full run record as JSON instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Build and orient the one-inclusion graph of a class; print it as JSON.
    Oig {
        /// JSON class file ({domain, hypotheses, names?}).
        #[arg(long)]
        class: PathBuf,
        /// Number of domain points to build over (inputs 0..n).
        #[arg(long)]
        n: usize,
    },
    /// Print combinatorial figures of a class (VC dimension, star number, growth).
    Combinatorics {
        /// JSON class file ({domain, hypotheses, names?}).
        #[arg(long)]
        class: PathBuf,
        /// Count realizable labelings on inputs 0..n (defaults to the whole domain).
        #[arg(long)]
        n: Option<usize>,
    },
}

fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("CMI_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| {
            Error::Config(format!(
                "CMI_LAB_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

/// Write to stdout, treating a reader that went away (`cmi-lab ... | head`)
/// as a normal early exit with the verdict-derived code rather than a
/// panic. Any other write failure is a plain I/O error.
fn write_stdout(text: &str, code_if_closed: u8) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let outcome = out.write_all(text.as_bytes()).and_then(|()| out.flush());
    if let Err(e) = outcome {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(code_if_closed as i32);
        }
        eprintln!("error: cannot write to stdout: {e}");
        std::process::exit(2);
    }
}

/// Print a finished record and fold its verdicts into the exit code.
fn emit_record(record: &RunRecord, json: bool, reports_first: bool) -> Result<ExitCode> {
    let code: u8 = if record.all_pass() { 0 } else { 1 };
    let text = if json {
        format!("{}\n", record.to_json()?)
    } else if reports_first {
        record.reports_csv()
    } else {
        record.estimates_csv()
    };
    write_stdout(&text, code);
    Ok(ExitCode::from(code))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Estimate { config, json } => {
            let config = ExperimentConfig::from_json_file(&config)?;
            let record = run_estimate(&config)?;
            emit_record(&record, json, false)
        }
        Command::Audit { config, json } => {
            let config = ExperimentConfig::from_json_file(&config)?;
            let record = run_estimate(&config)?;
            emit_record(&record, json, true)
        }
        Command::Lowerbound { n, draws, seed, json } => {
            let record = run_lowerbound_pointfunctions(n, draws, seed)?;
            emit_record(&record, json, true)
        }
        Command::Oig { class, n } => {
            let class = FiniteClass::from_json_file(&class)?;
            let inputs: Vec<usize> = (0..n).collect();
            let graph = build_graph(&class, &inputs)?;
            let d = vc_dimension(&class);
            let assignment = orient_deterministic(&graph, d)?;
            let heads: Vec<usize> = (0..graph.edge_count())
                .map(|k| {
                    let e = graph.edges()[k];
                    if assignment.share(&graph, k, e.a) == 1.0 {
                        e.a
                    } else {
                        e.b
                    }
                })
                .collect();
            let max_out = assignment
                .loads(&graph)
                .into_iter()
                .fold(0.0f64, f64::max);
            let doc = serde_json::json!({
                "inputs": graph.inputs(),
                "vertices": graph.vertices().iter()
                    .map(|row| row.iter().map(|l| l.as_bit()).collect::<Vec<u8>>())
                    .collect::<Vec<_>>(),
                "edges": graph.edges().iter()
                    .map(|e| serde_json::json!({"a": e.a, "b": e.b, "coord": e.coord}))
                    .collect::<Vec<_>>(),
                "orientation": heads,
                "degree_bound": d,
                "max_out_degree": max_out as usize,
            });
            write_stdout(&format!("{}\n", serde_json::to_string_pretty(&doc)?), 0);
            Ok(ExitCode::SUCCESS)
        }
        Command::Combinatorics { class, n } => {
            let class = FiniteClass::from_json_file(&class)?;
            let vc = vc_dimension(&class);
            let star = star_number(&class, class.domain_size())?;
            let count = n.unwrap_or(class.domain_size());
            let inputs: Vec<usize> = (0..count).collect();
            let growth = growth_count(&class, &inputs)?;
            let star = match star {
                StarNumber::Exact(s) => s.to_string(),
                StarNumber::AtLeast(s) => format!(">={s}"),
            };
            write_stdout(
                &format!(
                    "quantity,value\nhypotheses,{}\ndomain,{}\nvc,{vc}\nstar,{star}\ngrowth[{count}],{growth}\n",
                    class.len(),
                    class.domain_size()
                ),
                0,
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_thread_pool().and_then(|()| run(cli));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
