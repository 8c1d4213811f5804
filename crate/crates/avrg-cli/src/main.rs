//! `avrg`: extract attributed vertex replacement grammars from node-attributed
//! graphs, generate new graphs from them, and evaluate the fidelity of the
//! results.
//!
//! Exit codes: 1 usage, 2 validation (bad inputs/files), 3 internal.

mod commands;
mod errors;
mod util;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "avrg",
    version,
    about = "Attributed vertex replacement grammars: cluster, extract, generate, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a hierarchical-clustering dendrogram and report its Normalized
    /// Dasgupta Cost.
    Cluster {
        /// Edge-list file: one `u<TAB>v` per line, '#' comments ignored.
        #[arg(long)]
        input: PathBuf,
        /// Attribute file: one `node<TAB>label` per line.
        #[arg(long)]
        attrs: PathBuf,
        /// Clustering backend: louvain, conductance-bisection, or label-prop.
        #[arg(long, default_value = "louvain")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dendrogram file (nested-list format).
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing outputs.
        #[arg(long)]
        force: bool,
    },
    /// Extract a grammar (and its derivation log) from a graph.
    Extract {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        attrs: PathBuf,
        /// Pre-built dendrogram file; otherwise one is built with --method.
        #[arg(long)]
        dendrogram: Option<PathBuf>,
        #[arg(long, default_value = "louvain")]
        method: String,
        /// Target rule size.
        #[arg(long, default_value_t = 5)]
        mu: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output grammar document (JSON, format "avrg/1").
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Generate graphs from a grammar file.
    Generate {
        #[arg(long)]
        grammar: PathBuf,
        /// Rewiring policy: random, mixing-matrix, or greedy.
        #[arg(long, default_value = "mixing-matrix")]
        policy: String,
        /// Weight between degree and attribute error (greedy only).
        #[arg(long)]
        beta: Option<f64>,
        /// Grow until at least this many terminal nodes exist.
        #[arg(long)]
        target_nodes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving per-trial edge lists, attribute files, and
        /// growth traces.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Compare generated graphs against the original and write metric rows.
    Evaluate {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        original_attrs: PathBuf,
        /// Directory of generated trials (trial_*.edges / trial_*.attrs).
        #[arg(long)]
        generated_dir: PathBuf,
        /// Output CSV (per-trial rows plus a mean summary row).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Rebuild the extraction input from a grammar's derivation log.
    Replay {
        #[arg(long)]
        grammar: PathBuf,
        #[arg(long)]
        out_edges: PathBuf,
        #[arg(long)]
        out_attrs: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Summarize a grammar file: alphabets, mixing matrix, top rules.
    Inspect {
        #[arg(long)]
        grammar: PathBuf,
        /// How many of the most frequent rules to show.
        #[arg(long, default_value_t = 6)]
        top: usize,
    },
    /// Run cluster -> extract -> generate -> evaluate from one manifest.
    Pipeline {
        /// JSON manifest; see `avrg pipeline --help-manifest`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not usage errors.
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Cluster {
            input,
            attrs,
            method,
            seed,
            out,
            force,
        } => commands::cluster::run(&input, &attrs, &method, seed, &out, force),
        Command::Extract {
            input,
            attrs,
            dendrogram,
            method,
            mu,
            seed,
            out,
            force,
        } => commands::extract::run(&input, &attrs, dendrogram.as_deref(), &method, mu, seed, &out, force),
        Command::Generate {
            grammar,
            policy,
            beta,
            target_nodes,
            trials,
            seed,
            out_dir,
            force,
        } => commands::generate::run(&grammar, &policy, beta, target_nodes, trials, seed, &out_dir, force),
        Command::Evaluate {
            original,
            original_attrs,
            generated_dir,
            out,
            force,
        } => commands::evaluate::run(&original, &original_attrs, &generated_dir, &out, force),
        Command::Replay {
            grammar,
            out_edges,
            out_attrs,
            force,
        } => commands::replay::run(&grammar, &out_edges, &out_attrs, force),
        Command::Inspect { grammar, top } => commands::inspect::run(&grammar, top),
        Command::Pipeline { config, force } => commands::pipeline::run(&config, force),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
