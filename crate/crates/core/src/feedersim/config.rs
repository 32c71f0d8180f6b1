use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::FaultLabel;

/// Which sources feed the protected line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceMode {
    Grid,
    Islanded,
}

impl SourceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceMode::Grid => "grid",
            SourceMode::Islanded => "islanded",
        }
    }
}

/// Series impedance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impedance {
    pub r: f64,
    pub x: f64,
}

impl Impedance {
    pub const fn new(r: f64, x: f64) -> Self {
        Self { r, x }
    }
}

/// Electrical parameters of the two-terminal feeder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeederParams {
    pub v_ll_kv: f64,
    pub line: Impedance,
    /// Equivalent source behind the sending terminal, grid-connected.
    pub grid_source: Impedance,
    /// Equivalent source behind the sending terminal, islanded (DER only).
    pub islanded_source: Impedance,
    /// DER equivalent behind the receiving terminal.
    pub remote_source: Impedance,
    pub load_pf: f64,
}

impl Default for FeederParams {
    fn default() -> Self {
        Self {
            v_ll_kv: 22.0,
            line: Impedance::new(1.0, 1.6),
            // ≈ 10 pu bolted current at a 60 A load
            grid_source: Impedance::new(5.1, 20.6),
            islanded_source: Impedance::new(15.0, 58.0),
            remote_source: Impedance::new(15.0, 58.0),
            load_pf: 0.9,
        }
    }
}

/// Operating point and acquisition settings of one simulated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub fundamental_hz: f64,
    pub load_amps_rms: f64,
    /// (time s, multiplicative factor) applied from that time on.
    pub load_steps: Vec<(f64, f64)>,
    pub source_mode: SourceMode,
    /// Inverter current limit as a multiple of the pre-fault load current.
    pub ibr_limit_pu: f64,
    /// Limit of the converter behind the receiving terminal, same units.
    pub remote_ibr_limit_pu: f64,
    /// Rotation applied to the fault component at inception, degrees.
    pub phase_jump_deg: f64,
    /// `None` or `inf` for noise-free output.
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub feeder: FeederParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 0.3,
            sample_rate_hz: 10_000.0,
            fundamental_hz: 50.0,
            load_amps_rms: 60.0,
            load_steps: Vec::new(),
            source_mode: SourceMode::Grid,
            ibr_limit_pu: 1.5,
            remote_ibr_limit_pu: 1.2,
            phase_jump_deg: -30.0,
            snr_db: None,
            seed: 0,
            feeder: FeederParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.fundamental_hz > 0.0) {
            return bad(format!(
                "fundamental must be positive, got {}",
                self.fundamental_hz
            ));
        }
        if !(self.sample_rate_hz > 2.0 * self.fundamental_hz) {
            return bad(format!(
                "sample rate {} Hz must exceed twice the fundamental",
                self.sample_rate_hz
            ));
        }
        if !(self.duration_s * self.fundamental_hz >= 1.0) {
            return bad(format!(
                "duration {} s is shorter than one cycle",
                self.duration_s
            ));
        }
        if !(self.load_amps_rms > 0.0 && self.load_amps_rms.is_finite()) {
            return bad(format!(
                "load current must be positive, got {}",
                self.load_amps_rms
            ));
        }
        if self
            .load_steps
            .iter()
            .any(|&(t, f)| !(t >= 0.0 && f > 0.0 && f.is_finite()))
        {
            return bad("load steps need t >= 0 and a positive factor".into());
        }
        if !(self.ibr_limit_pu >= 1.0 && self.remote_ibr_limit_pu >= 1.0) {
            return bad(format!(
                "IBR limits must be >= 1 pu, got {} and {}",
                self.ibr_limit_pu, self.remote_ibr_limit_pu
            ));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return bad("SNR must not be NaN".into());
            }
        }
        let f = &self.feeder;
        if !(f.v_ll_kv > 0.0) || !(f.load_pf > 0.0 && f.load_pf <= 1.0) {
            return bad("feeder voltage and power factor must be positive (pf <= 1)".into());
        }
        Ok(())
    }
}

/// A shunt fault on or beyond the protected line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub t_f: f64,
    pub label: FaultLabel,
    /// Fault resistance in ohms; `None` means bolted (allowed for ab/ac/bc/abc).
    pub r_f: Option<f64>,
    /// Internal: position along the line from the sending end. External:
    /// distance beyond the receiving bus in line lengths.
    pub location_frac: f64,
    pub internal: bool,
}

impl FaultSpec {
    pub fn validate(&self, cfg: &ScenarioConfig) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.label == FaultLabel::Unknown {
            return bad("fault label must be one of the ten classes".into());
        }
        if !(self.t_f >= 0.0 && self.t_f < cfg.duration_s) {
            return bad(format!("fault time {} s lies outside the record", self.t_f));
        }
        match self.r_f {
            Some(r) if !(0.1..=250.0).contains(&r) => {
                return bad(format!("fault resistance {r} ohm outside [0.1, 250]"));
            }
            None if self.label.is_grounded() => {
                return bad(format!("{} fault needs a fault resistance", self.label));
            }
            _ => {}
        }
        if self.internal && !(self.location_frac > 0.0 && self.location_frac < 1.0) {
            return bad(format!(
                "internal location {} must lie in (0, 1)",
                self.location_frac
            ));
        }
        if !self.internal && !(self.location_frac > 0.0 && self.location_frac.is_finite()) {
            return bad(format!(
                "external distance {} must be positive",
                self.location_frac
            ));
        }
        Ok(())
    }
}
