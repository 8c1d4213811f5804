use crate::errors::CliError;
use crate::util::{guard_overwrite, load_graph_files, run_trials, write_file};
use avrg::metrics::{evaluate, EvalReport};
use std::path::{Path, PathBuf};

/// Generated trials are edge/attr file pairs sharing a stem.
fn find_trials(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let mut trials = Vec::new();
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().map(|e| e == "edges").unwrap_or(false) {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let attrs = path.with_extension("attrs");
            if !attrs.exists() {
                return Err(CliError::Validation(format!(
                    "{} has no matching .attrs file",
                    path.display()
                )));
            }
            trials.push((stem, path.clone(), attrs));
        }
    }
    trials.sort();
    Ok(trials)
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

pub fn run(
    original: &Path,
    original_attrs: &Path,
    generated_dir: &Path,
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    guard_overwrite(out, force)?;
    let original_graph = load_graph_files(original, original_attrs)?;
    let trials = find_trials(generated_dir)?;
    if trials.is_empty() {
        return Err(CliError::Validation(format!(
            "no generated trials (*.edges) found in {}",
            generated_dir.display()
        )));
    }
    let dataset = original
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();

    let reports: Vec<EvalReport> = run_trials(trials.len(), |i| {
        let (_, edges, attrs) = &trials[i];
        let generated = load_graph_files(edges, attrs)?;
        Ok(evaluate(&original_graph, &generated))
    })?;

    let mut csv = String::from(EvalReport::CSV_HEADER);
    for (i, report) in reports.iter().enumerate() {
        csv.push_str(&report.csv_row(&dataset, "avrg", i));
    }
    let lambda_mean = reports.iter().map(|r| r.lambda_distance).sum::<f64>() / reports.len() as f64;
    let deg_mean = mean_of(&reports.iter().map(|r| r.delta_rho_deg).collect::<Vec<_>>());
    let attr_mean = mean_of(&reports.iter().map(|r| r.delta_rho_attr).collect::<Vec<_>>());
    let r_mean = mean_of(
        &reports
            .iter()
            .map(|r| r.graphlet_inverse_correlation)
            .collect::<Vec<_>>(),
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    csv.push_str(&format!(
        "{dataset},avrg,mean,{lambda_mean},{},{},{}\n",
        opt(deg_mean),
        opt(attr_mean),
        opt(r_mean)
    ));
    write_file(out, &csv)?;

    println!(
        "trials={} mean_lambda={lambda_mean:.6} mean_d_deg={} mean_d_attr={}",
        reports.len(),
        opt(deg_mean),
        opt(attr_mean)
    );
    println!("report written to {}", out.display());
    Ok(())
}
