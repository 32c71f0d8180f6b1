//! The four pipeline stages. Each reads its inputs from disk and writes
//! its outputs plus a `manifest` naming the configuration hash.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use statdiff::calibrate::{tune, HealthyModel, TuneConfig};
use statdiff::engine::{run_stream, EngineOptions};
use statdiff::evalkit::{build_report, outcome_from_log, DetectionOutcome, EvalReport};
use statdiff::feedersim::{
    apply_comm_delay, healthy_training_set, read_truth, read_waveform_csv, scenario_grid, simulate,
    write_truth, write_waveform_csv, GridSpec,
};
use statdiff::{Error, FaultLabel, Result};

use crate::config::{config_hash, Manifest, RunConfig};

pub const DEFAULT_TRAINING_RECORDS: usize = 20;

fn expand(pattern: &str, what: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern)
        .map_err(|e| Error::Validation(format!("bad {what} pattern `{pattern}`: {e}")))?;
    let mut out: Vec<PathBuf> = paths
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::Validation(format!(
            "no {what} files match `{pattern}`"
        )));
    }
    Ok(out)
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect()
}

/// `dir/foo.csv` → `foo`.
fn record_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.strip_suffix(".csv").unwrap_or(&name).to_string()
}

fn require(value: Option<&str>, flag: &str) -> Result<String> {
    value
        .map(str::to_string)
        .ok_or_else(|| Error::Validation(format!("{flag} is required")))
}

#[derive(Serialize)]
struct SimulateSettings<'a> {
    grid: &'a GridSpec,
    training_records: usize,
}

pub struct SimulateSummary {
    pub scenarios: usize,
    pub training: usize,
    pub config_hash: String,
}

/// Writes `<id>.csv` and `<id>.truth.json` per scenario. Files are staged
/// first, so a failure leaves `out` untouched.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateSummary> {
    let grid = cfg.grid();
    let n_train = cfg.training_records.unwrap_or(DEFAULT_TRAINING_RECORDS);
    let mut scenarios = healthy_training_set(&grid, n_train)?;
    let training = scenarios.len();
    scenarios.extend(scenario_grid(&grid)?);
    let settings = SimulateSettings {
        grid: &grid,
        training_records: n_train,
    };
    let hash = config_hash(&settings)?;

    fs::create_dir_all(out)?;
    let staging = out.join(format!(".staging-{hash}"));
    fs::create_dir_all(&staging)?;
    let written: Result<Vec<[PathBuf; 2]>> = scenarios
        .par_iter()
        .map(|s| {
            let (record, truth) = simulate(s)?;
            let wave = staging.join(format!("{}.csv", s.id));
            let side = staging.join(format!("{}.truth.json", s.id));
            write_waveform_csv(&record, &wave)?;
            write_truth(&truth, &side)?;
            Ok([wave, side])
        })
        .collect();
    let written = match written {
        Ok(w) => w,
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
    };
    let mut names = Vec::with_capacity(2 * written.len());
    for path in written.iter().flatten() {
        let name = path.file_name().expect("staged file has a name");
        fs::rename(path, out.join(name))?;
        names.push(name.to_string_lossy().into_owned());
    }
    fs::remove_dir_all(&staging)?;
    Manifest::new("simulate", &settings, names)?.write(&out.join("manifest.json"))?;
    Ok(SimulateSummary {
        scenarios: scenarios.len() - training,
        training,
        config_hash: hash,
    })
}

#[derive(Serialize)]
struct TuneSettings<'a> {
    tune: &'a TuneConfig,
    inputs: Vec<String>,
}

pub fn cmd_tune(cfg: &RunConfig, out: &Path) -> Result<statdiff::calibrate::TuneReport> {
    let pattern = require(cfg.paths.healthy.as_deref(), "--healthy")?;
    let paths = expand(&pattern, "healthy waveform")?;
    let tcfg = cfg.tune_config()?;
    let records = paths
        .par_iter()
        .map(|p| read_waveform_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let report = tune(&records, &tcfg)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.model.save(out)?;
    let settings = TuneSettings {
        tune: &tcfg,
        inputs: file_names(&paths),
    };
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    Manifest::new("tune", &settings, file_names(&[out.to_path_buf()]))?
        .write(Path::new(&manifest_path))?;
    Ok(report)
}

/// One scored record as printed by `run`.
pub struct RunLine {
    pub stem: String,
    pub tripped: bool,
    pub t_detect: Option<f64>,
    pub label: Option<FaultLabel>,
    pub peak_d_sq: f64,
}

#[derive(Serialize)]
struct RunSettings<'a> {
    model: String,
    engine: EngineOptions,
    delay_ms: f64,
    inputs: &'a [String],
}

/// Scores each waveform. Writes `<stem>.events.csv` and, when a
/// `<stem>.truth.json` sidecar sits next to the waveform, `<stem>.outcome.json`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<Vec<RunLine>> {
    let pattern = require(cfg.paths.waveforms.as_deref(), "--waveform")?;
    let model_path = cfg
        .paths
        .model
        .clone()
        .ok_or_else(|| Error::Validation("--model is required".into()))?;
    let paths = expand(&pattern, "waveform")?;
    let model = HealthyModel::load(&model_path)?;
    let opts = cfg.engine_options();
    let delay = cfg.delay_ms.unwrap_or(0.0);
    if !(delay >= 0.0 && delay.is_finite()) {
        return Err(Error::Validation(format!(
            "delay must be >= 0 ms, got {delay}"
        )));
    }
    fs::create_dir_all(out)?;
    let results: Vec<(RunLine, Vec<String>)> = paths
        .par_iter()
        .map(|path| {
            let mut record = read_waveform_csv(path)?;
            if delay > 0.0 {
                record = apply_comm_delay(&record, delay)?;
            }
            let log = run_stream(&record, &model, opts)?;
            let stem = record_stem(path);
            let events = format!("{stem}.events.csv");
            fs::write(out.join(&events), log.to_csv())?;
            let mut files = vec![events];
            let sidecar = path.with_file_name(format!("{stem}.truth.json"));
            if sidecar.is_file() {
                let truth = read_truth(&sidecar)?;
                let outcome = outcome_from_log(
                    &truth,
                    &log,
                    model.thresholds.tau_det,
                    record.sample_rate_hz,
                );
                let name = format!("{stem}.outcome.json");
                fs::write(
                    out.join(&name),
                    serde_json::to_string_pretty(&outcome)? + "\n",
                )?;
                files.push(name);
            }
            let line = RunLine {
                stem,
                tripped: log.detection.is_some(),
                t_detect: log.detection.map(|d| d.t_detect),
                label: log.label,
                peak_d_sq: log.peak_d_sq(None),
            };
            Ok((line, files))
        })
        .collect::<Result<_>>()?;
    let inputs = file_names(&paths);
    let settings = RunSettings {
        model: model_path.display().to_string(),
        engine: opts,
        delay_ms: delay,
        inputs: &inputs,
    };
    let files: Vec<String> = results.iter().flat_map(|r| r.1.iter().cloned()).collect();
    Manifest::new("run", &settings, files)?.write(&out.join("manifest.json"))?;
    Ok(results.into_iter().map(|r| r.0).collect())
}

#[derive(Serialize)]
struct EvalSettings<'a> {
    inputs: &'a [String],
}

pub fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<EvalReport> {
    let pattern = require(cfg.paths.outcomes.as_deref(), "--outcomes")?;
    let paths = expand(&pattern, "outcome")?;
    let outcomes: Vec<DetectionOutcome> = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
        })
        .collect::<Result<_>>()?;
    let inputs = file_names(&paths);
    let settings = EvalSettings { inputs: &inputs };
    let mut report = build_report(&outcomes)?;
    report.config_hash = Some(config_hash(&settings)?);
    let written = report.write_dir(out)?;
    Manifest::new("eval", &settings, file_names(&written))?.write(&out.join("manifest.json"))?;
    Ok(report)
}
