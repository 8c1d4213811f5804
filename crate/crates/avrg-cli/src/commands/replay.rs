use crate::errors::CliError;
use crate::util::{guard_overwrite, write_file};
use avrg::extract::DerivationLog;
use avrg::generate::replay;
use avrg::grammar::load_grammar;
use std::path::Path;

/// Rebuilds the extraction input from the derivation log embedded in a
/// grammar file.
pub fn run(
    grammar_path: &Path,
    out_edges: &Path,
    out_attrs: &Path,
    force: bool,
) -> Result<(), CliError> {
    guard_overwrite(out_edges, force)?;
    guard_overwrite(out_attrs, force)?;
    let text = std::fs::read_to_string(grammar_path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", grammar_path.display())))?;
    let (grammar, doc) = load_grammar(&text).map_err(|e| CliError::Validation(e.to_string()))?;
    let steps = doc.derivation.ok_or_else(|| {
        CliError::Validation(format!(
            "{} carries no derivation log; replay needs one",
            grammar_path.display()
        ))
    })?;
    let graph = replay(&grammar, &DerivationLog { steps })
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut edges = Vec::new();
    let mut attrs = Vec::new();
    graph
        .save(&mut edges, &mut attrs)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(out_edges, &String::from_utf8(edges).expect("edge lists are utf-8"))?;
    write_file(out_attrs, &String::from_utf8(attrs).expect("attribute files are utf-8"))?;
    println!(
        "replayed {} nodes and {} edges to {} / {}",
        graph.node_count(),
        graph.edge_mass(),
        out_edges.display(),
        out_attrs.display()
    );
    Ok(())
}
