//! `harbench matrix`: run a directory of configs and build one accuracy grid
//! per (scheme, variant) with datasets as rows and techniques as columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use harbench::evaluation::{run_experiment, write_outputs, EvalReport, ValidationScheme, Variant};
use harbench::WindowTechnique;
use log::{info, warn};
use serde::Serialize;

use crate::config::RunConfigFile;
use crate::{write_file, Failure};

#[derive(Debug, Clone, Serialize)]
struct Entry {
    config: String,
    dataset: String,
    technique: WindowTechnique,
    scheme: ValidationScheme,
    variant: Variant,
    mean_accuracy: Option<f64>,
    valid: bool,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct DatasetRow {
    dataset: String,
    supported: Vec<WindowTechnique>,
}

#[derive(Debug, Serialize)]
struct MatrixSummary {
    datasets: Vec<DatasetRow>,
    entries: Vec<Entry>,
}

pub fn cmd_matrix(config_dir: &Path, out: Option<&Path>, force: bool) -> Result<(), Failure> {
    let configs = list_configs(config_dir)?;
    let files = configs
        .iter()
        .map(|p| RunConfigFile::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let out = out.map_or_else(|| config_dir.join("matrix-results"), Path::to_path_buf);

    let mut datasets: Vec<DatasetRow> = Vec::new();
    let mut entries = Vec::new();
    for (path, file) in configs.iter().zip(&files) {
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let manifest = file.manifest()?;
        if !datasets.iter().any(|d| d.dataset == manifest.name) {
            datasets.push(DatasetRow {
                dataset: manifest.name.clone(),
                supported: manifest.supported_windowing.clone(),
            });
        }
        let cfg = &file.experiment;
        let dir = out.join(&stem);
        let result = match reusable_report(&dir, file).filter(|_| !force) {
            Some(report) => {
                info!("{stem}: reusing {}", dir.join("report.json").display());
                Ok(report)
            }
            None => run_experiment(cfg).and_then(|outcome| {
                write_outputs(&dir, &outcome, file.save_models)?;
                Ok(outcome.report)
            }),
        };
        let entry = Entry {
            config: stem.clone(),
            dataset: manifest.name.clone(),
            technique: cfg.technique,
            scheme: cfg.scheme,
            variant: cfg.variant,
            mean_accuracy: None,
            valid: false,
            error: None,
        };
        entries.push(match result {
            Ok(report) => Entry {
                mean_accuracy: Some(report.mean_accuracy),
                valid: report.valid,
                ..entry
            },
            Err(e) => {
                warn!("{stem}: {e}");
                Entry {
                    error: Some(e.to_string()),
                    ..entry
                }
            }
        });
    }

    let table = render(&datasets, &entries);
    print!("{table}");
    write_file(&out.join("matrix.txt"), &table)?;
    let summary = MatrixSummary { datasets, entries };
    write_file(
        &out.join("matrix.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;

    let failed: Vec<&str> = summary
        .entries
        .iter()
        .filter(|e| !e.valid)
        .map(|e| e.config.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::runtime(format!(
            "{} run(s) failed or were invalid: {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}

fn list_configs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let read = std::fs::read_dir(dir)
        .map_err(|e| Failure::config(format!("cannot read config directory {}: {e}", dir.display())))?;
    let mut configs: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(Failure::config(format!(
            "no run configs (*.toml) in {}",
            dir.display()
        )));
    }
    Ok(configs)
}

/// A report already on disk that was produced by exactly this experiment config.
fn reusable_report(dir: &Path, file: &RunConfigFile) -> Option<EvalReport> {
    let text = std::fs::read_to_string(dir.join("report.json")).ok()?;
    let report: EvalReport = serde_json::from_str(&text).ok()?;
    (report.config == file.experiment).then_some(report)
}

fn render(datasets: &[DatasetRow], entries: &[Entry]) -> String {
    let mut tables: BTreeMap<(&str, &str), Vec<&Entry>> = BTreeMap::new();
    for e in entries {
        let variant = match e.variant {
            Variant::V1 => "v1",
            Variant::V2 => "v2",
        };
        tables.entry((e.scheme.as_str(), variant)).or_default().push(e);
    }
    let width = datasets.iter().map(|d| d.dataset.len()).max().unwrap_or(0).max(7);
    let mut s = String::new();
    for ((scheme, variant), group) in tables {
        let _ = writeln!(s, "Mean accuracy (%), {scheme} validation, {variant}");
        let _ = write!(s, "{:<width$}", "dataset");
        for t in WindowTechnique::ALL {
            let _ = write!(s, "  {:>22}", t.as_str());
        }
        s.push('\n');
        for d in datasets {
            let _ = write!(s, "{:<width$}", d.dataset);
            for t in WindowTechnique::ALL {
                let cell = if !d.supported.contains(&t) {
                    "-".to_string()
                } else {
                    match group.iter().find(|e| e.dataset == d.dataset && e.technique == t) {
                        None => "".to_string(),
                        Some(e) if e.error.is_some() => "error".to_string(),
                        Some(e) if !e.valid => "invalid".to_string(),
                        Some(e) => format!("{:.2}", 100.0 * e.mean_accuracy.unwrap_or(0.0)),
                    }
                };
                let _ = write!(s, "  {cell:>22}");
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}
