use crate::errors::CliError;
use crate::util::{guard_overwrite, load_graph_files, write_file};
use avrg::extract::extract_grammar;
use avrg::grammar::{inverse_compression_ratio, save_grammar, InputStats};
use avrg::hierarchy::{build_dendrogram, load_dendrogram, ClusteringMethod};
use std::path::Path;

#[allow(clippy::too_many_arguments)]
pub fn run(
    input: &Path,
    attrs: &Path,
    dendrogram_path: Option<&Path>,
    method: &str,
    mu: u32,
    seed: u64,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    if mu == 0 {
        return Err(CliError::Usage("--mu must be at least 1".into()));
    }
    let method: ClusteringMethod = method.parse().map_err(|e: String| {
        CliError::Usage(format!("{e}; expected louvain, conductance-bisection, or label-prop"))
    })?;
    guard_overwrite(out, force)?;
    let graph = load_graph_files(input, attrs)?;
    if graph.edge_mass() == 0 {
        return Err(CliError::Validation(
            "input graph has no edges; nothing to extract".into(),
        ));
    }

    let dendrogram = match dendrogram_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            load_dendrogram(text.trim_end(), &graph)
                .map_err(|e| CliError::Validation(e.to_string()))?
        }
        None => {
            let d = build_dendrogram(&graph, method, seed)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            if d.joined_components {
                eprintln!(
                    "warning: input is disconnected; components joined under a synthetic root"
                );
            }
            d
        }
    };

    let (grammar, log) =
        extract_grammar(&graph, &dendrogram, mu, seed).map_err(|e| CliError::Validation(e.to_string()))?;

    let stats = InputStats {
        nodes: graph.node_count(),
        edges: graph.edge_mass(),
        rho_deg: graph.degree_assortativity(),
        rho_attr: graph.attribute_assortativity(),
        mixing_matrix: graph
            .mixing_matrix()
            .map_err(|e| CliError::Validation(e.to_string()))?,
    };
    let document = save_grammar(&grammar, Some(&log.steps), Some(stats));
    write_file(out, &document)?;

    let ratio = inverse_compression_ratio(&grammar, &graph);
    println!(
        "rules={} total_frequency={} inverse_compression_ratio={ratio:.6}",
        grammar.rules().len(),
        grammar.total_frequency()
    );
    println!("grammar written to {}", out.display());
    Ok(())
}
