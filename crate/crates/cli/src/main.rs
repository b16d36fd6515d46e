//! `harbench`: validate datasets, dump features, run experiments and
//! aggregate results into accuracy grids.
//!
//! Exit codes: 0 success, 1 runtime failure (including a run with an invalid
//! fold), 2 configuration or validation error.

mod config;
mod matrix;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harbench::dataset::{DatasetManifest, LoadError, TrialSet, ValidationReport};
use harbench::evaluation::{run_experiment, write_outputs, EvalError, Seeds};
use harbench::features::{extract_all, write_feature_csv, FeatureLayout};
use harbench::synthetic::SyntheticSpec;
use harbench::windowing::WindowSet;
use harbench::WindowTechnique;
use log::info;

use crate::config::RunConfigFile;

#[derive(Debug, Parser)]
#[command(name = "harbench", version, about = "Windowed-feature HAR benchmark")]
struct Cli {
    /// More log output (-v info, -vv debug). Overrides the config's verbosity.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Worker threads for feature extraction and concurrent folds.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a dataset manifest and its trials and print a validation report.
    Validate {
        manifest: PathBuf,
        /// Also write the report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Window a dataset and write one feature row per window as CSV.
    Features {
        manifest: PathBuf,
        #[arg(long, value_parser = parse_technique)]
        technique: WindowTechnique,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one experiment described by a TOML run config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use this value for the split, init and shuffle seeds.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every config in a directory and tabulate mean accuracies per
    /// dataset and technique.
    Matrix {
        config_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rerun experiments even when a matching report already exists.
        #[arg(long)]
        force: bool,
    },
    /// Write a small labelled synthetic dataset (CSV trials plus manifest.json).
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
    },
}

fn parse_technique(s: &str) -> Result<WindowTechnique, String> {
    WindowTechnique::parse(s).ok_or_else(|| {
        let names: Vec<&str> = WindowTechnique::ALL.iter().map(|t| t.as_str()).collect();
        format!("unknown technique {s:?}; expected one of {}", names.join(", "))
    })
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = if e.is_config_error() { 2 } else { 1 };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(&cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn init_logging(verbose: u8, config_level: Option<&str>) {
    let level = match verbose {
        0 => config_level.unwrap_or("warn"),
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn init_threads(jobs: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::runtime(format!("cannot start thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    init_threads(cli.jobs)?;
    match &cli.command {
        Command::Validate { manifest, out } => {
            init_logging(cli.verbose, None);
            cmd_validate(manifest, out.as_deref())
        }
        Command::Features { manifest, technique, out } => {
            init_logging(cli.verbose, None);
            cmd_features(manifest, *technique, out)
        }
        Command::Run { config, seed, out } => {
            let file = RunConfigFile::load(config)?;
            init_logging(cli.verbose, file.verbosity.as_deref());
            cmd_run(file, *seed, out.as_deref())
        }
        Command::Matrix { config_dir, out, force } => {
            init_logging(cli.verbose, None);
            matrix::cmd_matrix(config_dir, out.as_deref(), *force)
        }
        Command::Synth { dir, seed, subjects, classes } => {
            init_logging(cli.verbose, None);
            cmd_synth(dir, *seed, *subjects, *classes)
        }
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, Failure> {
    let path = config::resolve_input(path, None);
    DatasetManifest::load(&path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn load_trials(manifest: &DatasetManifest) -> Result<TrialSet, Failure> {
    TrialSet::load(manifest).map_err(|e| match e {
        LoadError::Manifest(_) => Failure::config(e.to_string()),
        other => Failure::runtime(other.to_string()),
    })
}

fn cmd_validate(manifest: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let manifest = load_manifest(manifest)?;
    // Bad trial data is a validation failure here, not a runtime one.
    let ts = load_trials(&manifest).map_err(|f| Failure::config(f.message))?;
    let report = ts.validate();
    print!("{}", render_validation(&report));
    if let Some(path) = out {
        write_file(path, &serde_json::to_string_pretty(&report).expect("report serialises"))?;
    }
    Ok(())
}

fn render_validation(r: &ValidationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset: {}", r.dataset);
    let _ = writeln!(
        s,
        "trials: {}  classes: {}  subjects: {}  window: {} samples",
        r.trial_count, r.class_count, r.subject_count, r.window_samples
    );
    let _ = writeln!(
        s,
        "trial length: {}..{} samples",
        r.min_trial_length, r.max_trial_length
    );
    let _ = writeln!(s, "{:>5}  {:>6}  {:>6}  {:>9}", "class", "label", "trials", "samples");
    for c in &r.per_class {
        let _ = writeln!(
            s,
            "{:>5}  {:>6}  {:>6}  {:>9}",
            c.class, c.source_label, c.trials, c.samples
        );
    }
    for t in &r.skipped_trials {
        let _ = writeln!(s, "skipped: {} ({} samples)", t.trial_id, t.length);
    }
    if r.flags.is_empty() {
        let _ = writeln!(s, "flags: none");
    }
    for f in &r.flags {
        let _ = writeln!(s, "flag: {f}");
    }
    s
}

fn cmd_features(manifest: &Path, technique: WindowTechnique, out: &Path) -> Result<(), Failure> {
    let manifest = load_manifest(manifest)?;
    if !manifest.supports(technique) {
        return Err(Failure::config(format!(
            "technique {technique} is not supported for dataset {}",
            manifest.name
        )));
    }
    let ts = load_trials(&manifest)?;
    let ws = WindowSet::generate(&ts, technique, manifest.window_samples())
        .map_err(|e| Failure::config(e.to_string()))?;
    let (features, timing) = extract_all(&ts, &ws).map_err(|e| Failure::runtime(e.to_string()))?;
    let layout = FeatureLayout::for_manifest(&manifest);
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &layout, &ws, &features).map_err(|e| Failure::runtime(e.to_string()))?;
    write_bytes(out, &buf)?;
    println!(
        "{} windows x {} features written to {}",
        ws.len(),
        layout.dim(),
        out.display()
    );
    println!(
        "feature time per window: min {:.6}s mean {:.6}s max {:.6}s",
        timing.min_seconds, timing.mean_seconds, timing.max_seconds
    );
    Ok(())
}

fn cmd_run(file: RunConfigFile, seed: Option<u64>, out: Option<&Path>) -> Result<(), Failure> {
    let mut cfg = file.experiment.clone();
    if let Some(seed) = seed {
        cfg.seeds = Seeds::all(seed);
    }
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| file.default_out_dir());
    let outcome = run_experiment(&cfg)?;
    write_outputs(&out_dir, &outcome, file.save_models)?;
    print!("{}", outcome.report.to_table());
    info!("outputs written to {}", out_dir.display());
    if !outcome.report.valid {
        return Err(Failure::runtime(
            "at least one fold failed its leakage audit; report marked invalid",
        ));
    }
    Ok(())
}

fn cmd_synth(dir: &Path, seed: u64, subjects: usize, classes: usize) -> Result<(), Failure> {
    if subjects == 0 || classes < 2 {
        return Err(Failure::config("need at least 1 subject and 2 classes"));
    }
    let spec = SyntheticSpec {
        seed,
        subjects,
        classes,
        ..SyntheticSpec::default()
    };
    let manifest = spec
        .write_to(dir)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", dir.display())))?;
    println!("{}", manifest.display());
    Ok(())
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}
