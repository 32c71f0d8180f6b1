//! Configuration document (TOML) and the effective settings of each command
//! after command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use statdiff::calibrate::{AlphaConfig, FitOptions, TuneConfig, VoteConfig, WindowConfig};
use statdiff::engine::EngineOptions;
use statdiff::feedersim::GridSpec;
use statdiff::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Glob of waveform files scored by `run`.
    pub waveforms: Option<String>,
    /// Glob of healthy waveform files used by `tune`.
    pub healthy: Option<String>,
    pub model: Option<PathBuf>,
    /// Glob of outcome files read by `eval`.
    pub outcomes: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaOverrides {
    pub det: Option<f64>,
    pub cls: Option<f64>,
    pub zero: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoteOverrides {
    pub j: Option<usize>,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowOverrides {
    #[serde(rename = "L")]
    pub length: Option<usize>,
    #[serde(rename = "S")]
    pub hop: Option<usize>,
}

/// Contents of `--config`. Every field is optional; flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub paths: Paths,
    pub grid: Option<GridSpec>,
    /// Noise-free healthy records written next to the grid for calibration.
    pub training_records: Option<usize>,
    pub alpha: AlphaOverrides,
    pub lambda: Option<f64>,
    pub vote: VoteOverrides,
    pub window: WindowOverrides,
    pub budget: Option<usize>,
    pub line_id: Option<String>,
    pub delay_ms: Option<f64>,
    pub confirm_windows: Option<usize>,
    pub label_confirm: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("config {}: {e}", path.display())))
    }

    pub fn alpha(&self) -> Result<AlphaConfig> {
        let d = AlphaConfig::default();
        let a = AlphaConfig {
            det: self.alpha.det.unwrap_or(d.det),
            cls: self.alpha.cls.unwrap_or(d.cls),
            zero: self.alpha.zero.unwrap_or(d.zero),
        };
        a.validate()?;
        Ok(a)
    }

    pub fn vote(&self) -> Result<VoteConfig> {
        let d = VoteConfig::default();
        let v = VoteConfig {
            j: self.vote.j.unwrap_or(d.j),
            m: self.vote.m.unwrap_or(d.m),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn window(&self) -> Result<WindowConfig> {
        let d = WindowConfig::default();
        WindowConfig::new(
            self.window.length.unwrap_or(d.length),
            self.window.hop.unwrap_or(d.hop),
            d.sample_rate_hz,
        )
    }

    pub fn tune_config(&self) -> Result<TuneConfig> {
        let d = TuneConfig::default();
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!(
                    "lambda must be finite and >= 0, got {l}"
                )));
            }
        }
        Ok(TuneConfig {
            window: self.window()?,
            budget: self.budget.unwrap_or(d.budget),
            seed: self.seed.unwrap_or(d.seed),
            fit: FitOptions {
                line_id: self.line_id.clone().unwrap_or(d.fit.line_id.clone()),
                alpha: self.alpha()?,
                lambda: self.lambda,
                vote: self.vote()?,
                ..d.fit.clone()
            },
            ..d
        })
    }

    pub fn grid(&self) -> GridSpec {
        let mut g = self.grid.clone().unwrap_or_default();
        if let Some(s) = self.seed {
            g.seed = s;
        }
        g
    }

    pub fn engine_options(&self) -> EngineOptions {
        let d = EngineOptions::default();
        EngineOptions {
            confirm_windows: self.confirm_windows.unwrap_or(d.confirm_windows),
            label_confirm: self.label_confirm.unwrap_or(d.label_confirm),
        }
    }
}

/// Short SHA-256 digest of a serializable value's JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// Lists a command's output files and the configuration that produced them.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub config_hash: String,
    pub config: &'a C,
    pub files: Vec<String>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'a str, config: &'a C, files: Vec<String>) -> Result<Self> {
        Ok(Self {
            command,
            config_hash: config_hash(config)?,
            config,
            files,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
