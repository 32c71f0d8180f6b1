use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::outcome::DetectionOutcome;

/// Detection performance of a set of records. Rates are fractions in [0, 1];
/// a rate is `None` when its denominator is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub n_records: usize,
    pub n_faults: usize,
    pub n_detected: usize,
    /// Scenario-level detection probability.
    pub p_d: Option<f64>,
    /// Window-level false-alarm rate over every healthy-tagged window.
    pub far: Option<f64>,
    /// Same, restricted to windows ending before any event.
    pub far_quiet: Option<f64>,
    pub mean_t_d_ms: Option<f64>,
    pub max_t_d_ms: Option<f64>,
    /// Records without an internal fault that tripped anyway.
    pub false_trips: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn detection_metrics(outcomes: &[DetectionOutcome]) -> Result<DetectionMetrics> {
    if outcomes.is_empty() {
        return Err(Error::Degenerate("no outcomes to evaluate".into()));
    }
    let n_faults = outcomes.iter().filter(|o| o.is_fault()).count();
    let delays: Vec<f64> = outcomes.iter().filter_map(|o| o.delay()).collect();
    let sum = |f: fn(&DetectionOutcome) -> usize| outcomes.iter().map(f).sum::<usize>();
    let mean = (!delays.is_empty()).then(|| 1e3 * delays.iter().sum::<f64>() / delays.len() as f64);
    Ok(DetectionMetrics {
        n_records: outcomes.len(),
        n_faults,
        n_detected: delays.len(),
        p_d: ratio(delays.len(), n_faults),
        far: ratio(sum(|o| o.healthy_flagged), sum(|o| o.healthy_windows)),
        far_quiet: ratio(sum(|o| o.quiet_flagged), sum(|o| o.quiet_windows)),
        mean_t_d_ms: mean,
        max_t_d_ms: delays.iter().copied().reduce(f64::max).map(|d| 1e3 * d),
        false_trips: outcomes
            .iter()
            .filter(|o| !o.is_fault() && o.tripped)
            .count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::FaultLabel;

    pub(crate) fn outcome(id: &str, t_f: Option<f64>, t_detect: Option<f64>) -> DetectionOutcome {
        DetectionOutcome {
            scenario_id: id.into(),
            condition: "clean".into(),
            tripped: t_detect.is_some(),
            t_detect,
            t_f,
            predicted: None,
            truth: t_f.map(|_| FaultLabel::Ag),
            external: false,
            peak_d_sq: 0.0,
            healthy_windows: 10,
            healthy_flagged: 0,
            quiet_windows: 10,
            quiet_flagged: 0,
        }
    }

    #[test]
    fn fig3_delay_is_six_ms() {
        let m = detection_metrics(&[outcome("f", Some(1.0), Some(1.006))]).unwrap();
        assert!((m.mean_t_d_ms.unwrap() - 6.0).abs() < 1e-9);
        assert_eq!(m.p_d, Some(1.0));
        assert_eq!(m.far, Some(0.0));
    }

    #[test]
    fn perfect_run() {
        let set = vec![
            outcome("a", Some(0.2), Some(0.21)),
            outcome("b", Some(0.2), Some(0.205)),
            outcome("h", None, None),
        ];
        let m = detection_metrics(&set).unwrap();
        assert_eq!((m.p_d, m.far, m.false_trips), (Some(1.0), Some(0.0), 0));
        assert!((m.mean_t_d_ms.unwrap() - 7.5).abs() < 1e-9);
        assert!((m.max_t_d_ms.unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn early_trip_is_not_a_detection() {
        let mut early = outcome("e", Some(0.2), Some(0.1));
        early.healthy_flagged = 3;
        let m = detection_metrics(&[early, outcome("m", Some(0.2), None)]).unwrap();
        assert_eq!(m.p_d, Some(0.0));
        assert_eq!(m.mean_t_d_ms, None);
        assert_eq!(m.far, Some(3.0 / 20.0));
    }

    #[test]
    fn healthy_trip_and_empty_set() {
        let m = detection_metrics(&[outcome("h", None, Some(0.1))]).unwrap();
        assert_eq!((m.p_d, m.false_trips), (None, 1));
        assert!(matches!(detection_metrics(&[]), Err(Error::Degenerate(_))));
    }
}
