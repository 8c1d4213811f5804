use crate::errors::CliError;
use crate::util::{guard_overwrite, load_graph_files, write_file};
use avrg::hierarchy::{build_dendrogram, ndc, ClusteringMethod};
use std::path::Path;

pub fn run(
    input: &Path,
    attrs: &Path,
    method: &str,
    seed: u64,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    let method: ClusteringMethod = method.parse().map_err(|e: String| {
        CliError::Usage(format!("{e}; expected louvain, conductance-bisection, or label-prop"))
    })?;
    guard_overwrite(out, force)?;
    let graph = load_graph_files(input, attrs)?;
    let dendrogram =
        build_dendrogram(&graph, method, seed).map_err(|e| CliError::Validation(e.to_string()))?;
    if dendrogram.joined_components {
        eprintln!("warning: input is disconnected; components joined under a synthetic root");
    }
    write_file(out, &format!("{}\n", dendrogram.to_nested()))?;
    let cost = ndc(&dendrogram, &graph).map_err(|e| CliError::Validation(e.to_string()))?;
    println!("method={} seed={seed} ndc={cost:.6}", method.name());
    println!("dendrogram written to {}", out.display());
    Ok(())
}
