use clap::{Parser, Subcommand};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use synclab_cli::{compare, run_file, schema};

#[derive(Parser)]
#[command(name = "synclab", version, about = "Synchronization experiments for coupled oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output directory (one scenario) or root directory (several).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Scenarios run concurrently.
        #[arg(long, default_value = "1")]
        jobs: NonZeroUsize,
        /// Default output root.
        #[arg(long, env = "SYNCLAB_OUT", hide = true)]
        out_root: Option<PathBuf>,
    },
    /// Compare two runs (manifests or run directories) or two CSV files column by column.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tol: f64,
    },
    /// Print the JSON schema of scenario files.
    Schema,
}

fn run_all(scenarios: &[PathBuf], out: Option<&Path>, root: Option<&Path>, seed: Option<u64>, jobs: usize) -> i32 {
    let (dir, root) = match (scenarios.len(), out) {
        (1, Some(d)) => (Some(d), root),
        (_, Some(d)) => (None, Some(d)),
        _ => (None, root),
    };
    let next = AtomicUsize::new(0);
    let worst = Mutex::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(scenarios.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = scenarios.get(i) else { break };
                let code = match run_file(path, dir, root, seed) {
                    Ok(m) => {
                        println!("{}: ok ({} files)", path.display(), m.files.len());
                        0
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        e.exit_code()
                    }
                };
                let mut w = worst.lock().expect("poisoned");
                *w = (*w).max(code);
            });
        }
    });
    worst.into_inner().expect("poisoned")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenarios,
            out,
            seed,
            jobs,
            out_root,
        } => run_all(&scenarios, out.as_deref(), out_root.as_deref(), seed, jobs.get()),
        Command::Compare { a, b, tol } => match compare::compare(&a, &b, tol) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                if report.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        },
        Command::Schema => {
            println!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
            0
        }
    };
    ExitCode::from(code as u8)
}
