use serde::{Deserialize, Serialize};

use crate::engine::EventLog;
use crate::feedersim::GroundTruth;
use crate::label::FaultLabel;

/// Everything the metrics need from one scored record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub scenario_id: String,
    /// Noise condition the record belongs to (`clean`, `snr20`, ...).
    pub condition: String,
    pub tripped: bool,
    pub t_detect: Option<f64>,
    /// Inception of an internal fault; `None` for records the relay must ride through.
    pub t_f: Option<f64>,
    pub predicted: Option<FaultLabel>,
    /// `None` means healthy from the relay's point of view (external faults included).
    pub truth: Option<FaultLabel>,
    /// Record carries a fault beyond the protected line.
    #[serde(default)]
    pub external: bool,
    /// Largest D² over the record; the ROC score.
    pub peak_d_sq: f64,
    /// Windows tagged healthy by the ground truth, and how many exceeded τ_det.
    pub healthy_windows: usize,
    pub healthy_flagged: usize,
    /// Healthy windows that end before any event (internal or external).
    pub quiet_windows: usize,
    pub quiet_flagged: usize,
}

impl DetectionOutcome {
    pub fn is_fault(&self) -> bool {
        self.truth.is_some() && self.t_f.is_some()
    }

    /// A trip at or after the inception of a real fault.
    pub fn is_true_positive(&self) -> bool {
        match (self.is_fault(), self.t_detect, self.t_f) {
            (true, Some(td), Some(tf)) => self.tripped && td >= tf,
            _ => false,
        }
    }

    /// Detection delay in seconds for true positives.
    pub fn delay(&self) -> Option<f64> {
        if self.is_true_positive() {
            Some(self.t_detect? - self.t_f?)
        } else {
            None
        }
    }
}

/// Summarizes an engine run against its ground truth. Windows are judged
/// against `tau_det` individually, so the latch does not hide later exceedances.
pub fn outcome_from_log(
    truth: &GroundTruth,
    log: &EventLog,
    tau_det: f64,
    sample_rate_hz: f64,
) -> DetectionOutcome {
    let event_start = truth.t_f;
    let (mut healthy_windows, mut healthy_flagged, mut quiet_windows, mut quiet_flagged) =
        (0, 0, 0, 0);
    for w in &log.windows {
        if truth.window_is_faulty(w.t_end, sample_rate_hz) {
            continue;
        }
        let flagged = w.d_sq > tau_det;
        healthy_windows += 1;
        healthy_flagged += usize::from(flagged);
        let last_sample = w.t_end - 1.0 / sample_rate_hz;
        if event_start.is_none_or(|t| last_sample < t - 1e-12) {
            quiet_windows += 1;
            quiet_flagged += usize::from(flagged);
        }
    }
    let fault = truth.is_fault();
    DetectionOutcome {
        scenario_id: truth.scenario_id.clone(),
        condition: truth.condition(),
        tripped: log.detection.is_some(),
        t_detect: log.detection.map(|d| d.t_detect),
        t_f: if fault { truth.t_f } else { None },
        predicted: log.label,
        truth: if fault { truth.label } else { None },
        external: truth.t_f.is_some() && !truth.internal,
        peak_d_sq: log.peak_d_sq(None),
        healthy_windows,
        healthy_flagged,
        quiet_windows,
        quiet_flagged,
    }
}
