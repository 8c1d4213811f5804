use crate::commands;
use crate::errors::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// End-to-end manifest: all paths, parameters, and the seed for one
/// reproducible run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub edges: PathBuf,
    pub attrs: PathBuf,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_mu")]
    pub mu: u32,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub target_nodes: Option<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn default_method() -> String {
    "louvain".into()
}

fn default_mu() -> u32 {
    5
}

fn default_policy() -> String {
    "mixing-matrix".into()
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool_version: &'static str,
    manifest: &'a Manifest,
    dendrogram_file: PathBuf,
    grammar_file: PathBuf,
    generated_dir: PathBuf,
    report_file: PathBuf,
    trial_seeds: Vec<u64>,
}

fn stage<T>(name: &str, result: Result<T, CliError>) -> Result<T, CliError> {
    result.map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("[{name}] {msg}")),
        CliError::Validation(msg) => CliError::Validation(format!("[{name}] {msg}")),
        CliError::Internal(msg) => CliError::Internal(format!("[{name}] {msg}")),
    })
}

pub fn run(config_path: &Path, force: bool) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", config_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad manifest: {e}")))?;
    if manifest.trials == 0 {
        return Err(CliError::Usage("manifest requires trials >= 1".into()));
    }

    let out = &manifest.out_dir;
    std::fs::create_dir_all(out)?;
    let dendrogram_file = out.join("dendrogram.txt");
    let grammar_file = out.join("grammar.json");
    let generated_dir = out.join("generated");
    let report_file = out.join("report.csv");

    stage(
        "cluster",
        commands::cluster::run(
            &manifest.edges,
            &manifest.attrs,
            &manifest.method,
            manifest.seed,
            &dendrogram_file,
            force,
        ),
    )?;
    stage(
        "extract",
        commands::extract::run(
            &manifest.edges,
            &manifest.attrs,
            Some(&dendrogram_file),
            &manifest.method,
            manifest.mu,
            manifest.seed,
            &grammar_file,
            force,
        ),
    )?;
    stage(
        "generate",
        commands::generate::run(
            &grammar_file,
            &manifest.policy,
            manifest.beta,
            manifest.target_nodes,
            manifest.trials,
            manifest.seed,
            &generated_dir,
            force,
        ),
    )?;
    stage(
        "evaluate",
        commands::evaluate::run(
            &manifest.edges,
            &manifest.attrs,
            &generated_dir,
            &report_file,
            force,
        ),
    )?;

    let run_manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        manifest: &manifest,
        dendrogram_file,
        grammar_file,
        generated_dir,
        report_file,
        trial_seeds: (0..manifest.trials).map(|t| manifest.seed + t as u64).collect(),
    };
    let manifest_out = out.join("run_manifest.json");
    let mut body = serde_json::to_string_pretty(&run_manifest)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    body.push('\n');
    std::fs::write(&manifest_out, body)?;
    println!("pipeline complete; run manifest at {}", manifest_out.display());
    Ok(())
}
