use crate::errors::CliError;
use avrg::grammar::load_grammar;
use avrg::graph::NodeKind;
use std::path::Path;

/// Prints a grammar summary: alphabets, size buckets, the stored input
/// mixing matrix, and the top-k rules by frequency in a compact text form.
pub fn run(grammar_path: &Path, top: usize) -> Result<(), CliError> {
    if top == 0 {
        return Err(CliError::Usage("--top must be at least 1".into()));
    }
    let text = std::fs::read_to_string(grammar_path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", grammar_path.display())))?;
    let (grammar, doc) = load_grammar(&text).map_err(|e| CliError::Validation(e.to_string()))?;

    println!("terminal alphabet: {}", grammar.terminal_alphabet().join(", "));
    let sizes: Vec<String> = grammar
        .nonterminal_sizes()
        .iter()
        .map(|s| s.to_string())
        .collect();
    println!("nonterminal sizes: {}", sizes.join(", "));
    println!(
        "rules: {} (total frequency {})",
        grammar.rules().len(),
        grammar.total_frequency()
    );

    if let Some(stats) = &doc.input_stats {
        println!(
            "input: {} nodes, {} edges, rho_deg={}, rho_attr={}",
            stats.nodes,
            stats.edges,
            stats.rho_deg.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into()),
            stats.rho_attr.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into()),
        );
        println!("attribute mixing matrix (edge fractions):");
        let m = &stats.mixing_matrix;
        let width = m.labels.iter().map(|l| l.len()).max().unwrap_or(4).max(6);
        print!("{:>width$}", "");
        for label in &m.labels {
            print!(" {label:>width$}");
        }
        println!();
        for (i, label) in m.labels.iter().enumerate() {
            print!("{label:>width$}");
            for j in 0..m.labels.len() {
                print!(" {:>width$.4}", m.entries[i][j]);
            }
            println!();
        }
    }

    println!("top {top} rules by frequency:");
    for (rank, (rule, f)) in grammar.top_rules(top).iter().enumerate() {
        let nodes: Vec<String> = rule
            .rhs
            .nodes()
            .map(|(_, rec)| {
                let label = match &rec.kind {
                    NodeKind::Terminal { attr } => attr.clone(),
                    NodeKind::Nonterminal { size } => format!("[{size}]"),
                };
                format!("{label}/b{}", rec.boundary.unwrap_or(0))
            })
            .collect();
        let names: std::collections::HashMap<_, _> = rule
            .rhs
            .nodes()
            .enumerate()
            .map(|(pos, (id, _))| (id, pos))
            .collect();
        let edges: Vec<String> = rule
            .rhs
            .edges()
            .map(|(u, v, k)| {
                if k == 1 {
                    format!("{}-{}", names[&u], names[&v])
                } else {
                    format!("{}-{}x{k}", names[&u], names[&v])
                }
            })
            .collect();
        println!(
            "  #{rank}: {f}x  {} -> nodes [{}] edges [{}]",
            rule.lhs_size,
            nodes.join(", "),
            edges.join(", ")
        );
    }
    Ok(())
}
