use crate::errors::CliError;
use avrg::graph::{load_graph, AttributedGraph};
use std::fs;
use std::io::BufReader;
use std::path::Path;

/// Loads an edge-list/attribute-file pair, reporting dropped self-loops on
/// stderr.
pub fn load_graph_files(edges: &Path, attrs: &Path) -> Result<AttributedGraph, CliError> {
    let edge_file = fs::File::open(edges)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", edges.display())))?;
    let attr_file = fs::File::open(attrs)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", attrs.display())))?;
    let (graph, report) = load_graph(BufReader::new(edge_file), BufReader::new(attr_file))
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if report.self_loops_dropped > 0 {
        eprintln!(
            "warning: dropped {} self-loop line(s) from {}",
            report.self_loops_dropped,
            edges.display()
        );
    }
    Ok(graph)
}

/// Refuses to clobber existing outputs unless --force was given.
pub fn guard_overwrite(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Validation(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Worker-pool map over trial indices, capped by AVRG_THREADS (default: one
/// thread per trial up to the machine's parallelism). Results are returned in
/// index order so output is deterministic.
pub fn run_trials<T, F>(trials: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("AVRG_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(hw);
    let workers = cap.min(trials.max(1));

    let mut slots: Vec<Option<Result<T, CliError>>> = (0..trials).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_mutex = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= trials {
                    break;
                }
                let result = f(i);
                let mut guard = slots_mutex.lock().expect("no poisoned workers");
                guard[i] = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("every trial ran"))
        .collect()
}
