//! Streaming loop: windows a record, scores each window, trips on the
//! Mahalanobis test and classifies the fault after the trip.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calibrate::model::HealthyModel;
use crate::calibrate::prep::log_transform;
use crate::error::{Error, Result};
use crate::label::FaultLabel;
use crate::record::WaveformRecord;

use super::classify::{instantaneous_flags, map_fault_type, z_scores, FlagSet, PhaseFlags};
use super::score::{detect, score_transformed, GVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Consecutive exceeding windows required before tripping.
    pub confirm_windows: usize,
    /// Consecutive identical votes required to report a label.
    pub label_confirm: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            confirm_windows: 1,
            label_confirm: 3,
        }
    }
}

/// The trip decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub t_detect: f64,
    pub d_sq: f64,
    pub label: Option<FaultLabel>,
    pub z_scores: [f64; 3],
    pub g0: f64,
}

/// Label column state in the event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelState {
    /// No trip yet.
    Idle,
    /// Tripped, vote not yet stable.
    Pending,
    Final(FaultLabel),
}

impl LabelState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelState::Idle => "none",
            LabelState::Pending => "pending",
            LabelState::Final(l) => l.as_str(),
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowEvent {
    pub t_end: f64,
    pub d_sq: f64,
    pub z: [f64; 3],
    pub g0: f64,
    /// Instantaneous flags; all clear before the trip.
    pub flags: FlagSet,
    pub tripped: bool,
    pub label: LabelState,
    pub gv: GVector,
}

/// Online state of one protected line.
#[derive(Debug, Clone)]
pub struct Engine<'m> {
    model: &'m HealthyModel,
    opts: EngineOptions,
    prev: GVector,
    exceed_run: usize,
    flags: PhaseFlags,
    detection: Option<DetectionEvent>,
    candidate: Option<(FaultLabel, usize)>,
    label: Option<FaultLabel>,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m HealthyModel, opts: EngineOptions) -> Self {
        // the first window's jump test compares against the healthy mean
        let prev = GVector {
            g: model.phase_stats.mu_p,
            g0: 0.0,
            t_end: f64::NEG_INFINITY,
        };
        Self {
            model,
            opts,
            prev,
            exceed_run: 0,
            flags: PhaseFlags::new(model.vote.m),
            detection: None,
            candidate: None,
            label: None,
        }
    }

    pub fn detection(&self) -> Option<&DetectionEvent> {
        self.detection.as_ref()
    }

    pub fn label(&self) -> Option<FaultLabel> {
        self.label
    }

    /// Consumes one scored window.
    pub fn step(&mut self, gv: GVector) -> Result<WindowEvent> {
        if gv.t_end <= self.prev.t_end {
            return Err(Error::Validation(format!(
                "window times must increase ({} after {})",
                gv.t_end, self.prev.t_end
            )));
        }
        let (d_sq, exceeds) = detect(&gv, self.model);
        let z = z_scores(&gv, self.model)?;
        self.exceed_run = if exceeds { self.exceed_run + 1 } else { 0 };
        if self.detection.is_none() && self.exceed_run >= self.opts.confirm_windows.max(1) {
            self.detection = Some(DetectionEvent {
                t_detect: gv.t_end,
                d_sq,
                label: None,
                z_scores: z,
                g0: gv.g0,
            });
            self.flags.clear();
        }

        let mut flags = FlagSet::default();
        if self.detection.is_some() {
            flags = instantaneous_flags(&gv, &self.prev, self.model)?;
            self.flags.push(flags);
            if self.label.is_none() {
                self.update_label();
            }
        }
        self.prev = gv;
        let label = match (self.detection.is_some(), self.label) {
            (false, _) => LabelState::Idle,
            (true, None) => LabelState::Pending,
            (true, Some(l)) => LabelState::Final(l),
        };
        Ok(WindowEvent {
            t_end: gv.t_end,
            d_sq,
            z,
            g0: gv.g0,
            flags,
            tripped: self.detection.is_some(),
            label,
            gv,
        })
    }

    fn update_label(&mut self) {
        let vote = self.model.vote;
        if self.flags.len() < vote.j {
            return;
        }
        let voted = map_fault_type(&self.flags.persistent(vote.j));
        if voted == FaultLabel::Unknown {
            self.candidate = None;
            return;
        }
        let run = match self.candidate {
            Some((l, n)) if l == voted => n + 1,
            _ => 1,
        };
        self.candidate = Some((voted, run));
        if run >= self.opts.label_confirm.max(1) {
            self.label = Some(voted);
            if let Some(d) = self.detection.as_mut() {
                d.label = Some(voted);
            }
        }
    }
}

/// Result of running a whole record through an engine.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub windows: Vec<WindowEvent>,
    pub detection: Option<DetectionEvent>,
    pub label: Option<FaultLabel>,
}

impl EventLog {
    pub const CSV_HEADER: &'static str = "t_end_s,d_sq,z_a,z_b,z_c,g0,flags,tripped,label";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.windows.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for w in &self.windows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                w.t_end,
                w.d_sq,
                w.z[0],
                w.z[1],
                w.z[2],
                w.g0,
                w.flags.bits(),
                u8::from(w.tripped),
                w.label.as_str()
            );
        }
        out
    }

    /// Largest D² seen in windows ending at or before `t` (all when `None`).
    pub fn peak_d_sq(&self, until: Option<f64>) -> f64 {
        self.windows
            .iter()
            .filter(|w| until.is_none_or(|t| w.t_end <= t))
            .map(|w| w.d_sq)
            .fold(0.0, f64::max)
    }
}

/// Scores every window of a record and feeds the engine. Windows that
/// start inside the record's hold-off are skipped.
pub fn run_stream(
    record: &WaveformRecord,
    model: &HealthyModel,
    opts: EngineOptions,
) -> Result<EventLog> {
    record.validate()?;
    let cfg = &model.window;
    if (record.sample_rate_hz - cfg.sample_rate_hz).abs() > 1e-9 * cfg.sample_rate_hz {
        return Err(Error::Validation(format!(
            "record sampled at {} Hz, model expects {} Hz",
            record.sample_rate_hz, cfg.sample_rate_hz
        )));
    }
    if record.len() < cfg.length {
        return Err(Error::Degenerate(format!(
            "stream of {} samples is shorter than the window length {}",
            record.len(),
            cfg.length
        )));
    }
    let t: Vec<Vec<f64>> = record
        .channels8()
        .iter()
        .map(|c| log_transform(c))
        .collect();
    let mut engine = Engine::new(model, opts);
    let mut windows = Vec::with_capacity(cfg.count(record.len()));
    let mut start = record.holdoff.div_ceil(cfg.hop) * cfg.hop;
    while start + cfg.length <= record.len() {
        let r = start..start + cfg.length;
        let ch = [
            &t[0][r.clone()],
            &t[1][r.clone()],
            &t[2][r.clone()],
            &t[3][r.clone()],
            &t[4][r.clone()],
            &t[5][r.clone()],
            &t[6][r.clone()],
            &t[7][r.clone()],
        ];
        let t_end = record.t0 + (start + cfg.length) as f64 / record.sample_rate_hz;
        let gv = score_transformed(ch, model, t_end)?;
        windows.push(engine.step(gv)?);
        start += cfg.hop;
    }
    Ok(EventLog {
        windows,
        detection: engine.detection,
        label: engine.label,
    })
}
