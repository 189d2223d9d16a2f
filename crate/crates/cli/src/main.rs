//! `gwtree <command> [--key value ...]`: batch driver for the gwtree
//! estimators, verifiers and samplers.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status for configuration errors; runtime failures exit with 1.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "gwtree", version, about = "Spanning-tree entropy of the Erdős–Rényi giant component")]
struct Cli {
    /// Worker threads; GWTREE_THREADS is used when absent, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extinction probability, survival probability and fixed-point residuals.
    Params(Flags),
    /// Lower and upper bounds on f(c) and the lower bound on f'(c).
    Bounds(Flags),
    /// Tail comparison of Q*_λ + Q_β against Q*_μ for (λ, μ) pairs.
    VerifyDomination(Flags),
    /// Sample coupled PGW*(λ) ⊂ PGW*(μ) pairs and audit the embedding.
    Couple(Flags),
    /// Monte Carlo estimate of E Σ_{k≤K} p_k/k over PGW*(c).
    Returns(Flags),
    /// f(c) from the random-walk representation.
    EstimateF(Flags),
    /// f(c) from spanning trees of sampled giant components.
    EmpiricalF(Flags),
    /// Per-k mean return probabilities with a stretched-exponential fit.
    Decay(Flags),
    /// Both f(c) pipelines side by side.
    Crosscheck(Flags),
}

/// Every flag mirrors a config-file key of the same name.
#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated grid of c values.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Longest walk length.
    #[arg(long)]
    k: Option<String>,
    /// Last tail cutoff checked, or first index of the bounds series.
    #[arg(long)]
    kmax: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Vertex count of G(n, c/n).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
}

impl Flags {
    fn given(&self) -> BTreeMap<String, String> {
        let all = [
            ("c", &self.c),
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("beta", &self.beta),
            ("k", &self.k),
            ("kmax", &self.kmax),
            ("depth", &self.depth),
            ("samples", &self.samples),
            ("n", &self.n),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("tolerance", &self.tolerance),
            ("out", &self.out),
            ("format", &self.format),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone())))
            .collect()
    }
}

fn split(cmd: &Command) -> (&'static str, &Flags) {
    match cmd {
        Command::Params(f) => ("params", f),
        Command::Bounds(f) => ("bounds", f),
        Command::VerifyDomination(f) => ("verify-domination", f),
        Command::Couple(f) => ("couple", f),
        Command::Returns(f) => ("returns", f),
        Command::EstimateF(f) => ("estimate-f", f),
        Command::EmpiricalF(f) => ("empirical-f", f),
        Command::Decay(f) => ("decay", f),
        Command::Crosscheck(f) => ("crosscheck", f),
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GWTREE_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| format!("GWTREE_THREADS: cannot parse {v:?}"))?),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err("threads must be positive".into()),
        n => Ok(n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = split(&cli.command);
    let file = match &flags.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => config::parse_config_text(&text),
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => Ok(BTreeMap::new()),
    };
    let resolved = file.and_then(|f| config::resolve(name, f, flags.given()));
    let run = match resolved {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match threads(cli.threads) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = commands::run(&run.plan).and_then(|t| output::render(&run, &t, gwtree::VERSION));
    match result {
        Ok(text) => {
            let written = match &run.out {
                Some(p) => output::write_atomic(Path::new(p), &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
