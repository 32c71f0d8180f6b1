use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::FaultLabel;

use super::confusion::{confusion_and_f1, ConfusionReport};
use super::metrics::{detection_metrics, DetectionMetrics};
use super::outcome::DetectionOutcome;
use super::roc::{roc_curve, RocCurve};

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    /// `clean`, `snr40`, ... or `all`.
    pub condition: String,
    pub title: String,
    pub detection: DetectionMetrics,
    /// Over detected faults; `None` when nothing was detected.
    pub classification: Option<ConfusionReport>,
    /// Scenario-level ROC on peak D²; `None` without both classes.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRoc {
    pub condition: String,
    pub curve: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub conditions: Vec<ConditionSummary>,
    pub overall: ConditionSummary,
    pub roc: Vec<ConditionRoc>,
}

/// Clean first, then decreasing SNR, then anything else alphabetically.
fn condition_key(c: &str) -> (u8, i64, String) {
    match c {
        "clean" => (0, 0, String::new()),
        _ => match c.strip_prefix("snr").and_then(|s| s.parse::<f64>().ok()) {
            Some(db) => (1, -(db * 1000.0).round() as i64, String::new()),
            None => (2, 0, c.to_string()),
        },
    }
}

fn title(c: &str) -> String {
    match c {
        "clean" => "Clean (no noise)".into(),
        "all" => "All conditions".into(),
        _ => match c.strip_prefix("snr") {
            Some(db) => format!("{db} dB SNR"),
            None => c.to_string(),
        },
    }
}

fn summarize(
    condition: &str,
    outcomes: &[&DetectionOutcome],
) -> Result<(ConditionSummary, Option<RocCurve>)> {
    let owned: Vec<DetectionOutcome> = outcomes.iter().map(|o| (*o).clone()).collect();
    let detection = detection_metrics(&owned)?;
    let detected: Vec<&DetectionOutcome> = outcomes
        .iter()
        .copied()
        .filter(|o| o.is_true_positive())
        .collect();
    let classification = if detected.is_empty() {
        None
    } else {
        let pred: Vec<FaultLabel> = detected
            .iter()
            .map(|o| o.predicted.unwrap_or(FaultLabel::Unknown))
            .collect();
        let truth: Vec<FaultLabel> = detected.iter().filter_map(|o| o.truth).collect();
        Some(confusion_and_f1(&pred, &truth)?)
    };
    let scores: Vec<f64> = outcomes.iter().map(|o| o.peak_d_sq).collect();
    let labels: Vec<bool> = outcomes.iter().map(|o| o.is_fault()).collect();
    let curve = match roc_curve(&scores, &labels) {
        Ok(c) => Some(c),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let summary = ConditionSummary {
        condition: condition.to_string(),
        title: title(condition),
        detection,
        classification,
        auc: curve.as_ref().map(|c| c.auc),
    };
    Ok((summary, curve))
}

/// Groups outcomes by noise condition and computes every metric. The
/// result does not depend on the order of `outcomes`.
pub fn build_report(outcomes: &[DetectionOutcome]) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::Degenerate("no outcomes to evaluate".into()));
    }
    let mut sorted: Vec<&DetectionOutcome> = outcomes.iter().collect();
    sorted.sort_by(|a, b| {
        a.scenario_id
            .cmp(&b.scenario_id)
            .then(a.condition.cmp(&b.condition))
    });
    let mut names: Vec<&str> = sorted.iter().map(|o| o.condition.as_str()).collect();
    names.sort_by_key(|c| condition_key(c));
    names.dedup();

    let mut conditions = Vec::new();
    let mut roc = Vec::new();
    for name in names {
        let group: Vec<&DetectionOutcome> = sorted
            .iter()
            .copied()
            .filter(|o| o.condition == name)
            .collect();
        let (summary, curve) = summarize(name, &group)?;
        conditions.push(summary);
        if let Some(curve) = curve {
            roc.push(ConditionRoc {
                condition: name.to_string(),
                curve,
            });
        }
    }
    let (overall, _) = summarize("all", &sorted)?;
    Ok(EvalReport {
        config_hash: None,
        conditions,
        overall,
        roc,
    })
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{:.4}", 100.0 * v)).unwrap_or_default()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

impl EvalReport {
    pub const SUMMARY_HEADER: [&'static str; 11] = [
        "scenario",
        "avg_time_ms",
        "far_pct",
        "far_quiet_pct",
        "p_d_pct",
        "accuracy_pct",
        "macro_f1_pct",
        "auc",
        "n_faults",
        "n_records",
        "false_trips",
    ];

    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::SUMMARY_HEADER).map_err(csv_io)?;
        for s in self.conditions.iter().chain(std::iter::once(&self.overall)) {
            let d = &s.detection;
            let c = s.classification.as_ref();
            w.write_record([
                s.title.clone(),
                opt(d.mean_t_d_ms),
                pct(d.far),
                pct(d.far_quiet),
                pct(d.p_d),
                pct(c.map(|c| c.accuracy)),
                pct(c.map(|c| c.macro_f1)),
                opt(s.auc),
                d.n_faults.to_string(),
                d.n_records.to_string(),
                d.false_trips.to_string(),
            ])
            .map_err(csv_io)?;
        }
        finish(w)
    }

    pub fn roc_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["condition", "fpr", "tpr", "threshold"])
            .map_err(csv_io)?;
        for r in &self.roc {
            for p in &r.curve.points {
                w.write_record([
                    r.condition.clone(),
                    p.fpr.to_string(),
                    p.tpr.to_string(),
                    p.threshold.to_string(),
                ])
                .map_err(csv_io)?;
            }
        }
        finish(w)
    }

    /// Overall confusion matrix, truth by row, with a trailing `unknown` column.
    pub fn confusion_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["truth".to_string()];
        header.extend(FaultLabel::CLASSES.iter().map(|l| l.to_string()));
        header.push("unknown".into());
        w.write_record(&header).map_err(csv_io)?;
        let empty = ConfusionReport {
            matrix: [[0; 10]; 10],
            unknown: [0; 10],
            accuracy: 0.0,
            macro_f1: 0.0,
            per_class_f1: [None; 10],
        };
        let c = self.overall.classification.as_ref().unwrap_or(&empty);
        for (i, label) in FaultLabel::CLASSES.iter().enumerate() {
            let mut row = vec![label.to_string()];
            row.extend(c.matrix[i].iter().map(|n| n.to_string()));
            row.push(c.unknown[i].to_string());
            w.write_record(&row).map_err(csv_io)?;
        }
        finish(w)
    }

    /// Writes `report.json`, `summary.csv`, `roc_points.csv` and
    /// `confusion.csv` into `dir` and returns their paths.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("report.json", serde_json::to_string_pretty(self)? + "\n"),
            ("summary.csv", self.summary_csv()?),
            ("roc_points.csv", self.roc_csv()?),
            ("confusion.csv", self.confusion_csv()?),
        ];
        let mut out = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(
        id: &str,
        cond: &str,
        fault: Option<FaultLabel>,
        detect: Option<f64>,
        pred: Option<FaultLabel>,
        peak: f64,
    ) -> DetectionOutcome {
        DetectionOutcome {
            scenario_id: id.into(),
            condition: cond.into(),
            tripped: detect.is_some(),
            t_detect: detect,
            t_f: fault.map(|_| 0.2),
            predicted: pred,
            truth: fault,
            external: false,
            peak_d_sq: peak,
            healthy_windows: 50,
            healthy_flagged: 0,
            quiet_windows: 50,
            quiet_flagged: 0,
        }
    }

    fn sample() -> Vec<DetectionOutcome> {
        use FaultLabel::*;
        vec![
            o("f1", "snr20", Some(Ag), Some(0.21), Some(Ag), 500.0),
            o("f2", "clean", Some(Bc), Some(0.205), Some(Bc), 800.0),
            o("f3", "clean", Some(Abg), Some(0.206), None, 300.0),
            o("h1", "clean", None, None, None, 15.0),
            o("h2", "snr20", None, None, None, 30.0),
        ]
    }

    #[test]
    fn groups_in_table_order() {
        let r = build_report(&sample()).unwrap();
        let names: Vec<&str> = r.conditions.iter().map(|c| c.condition.as_str()).collect();
        assert_eq!(names, ["clean", "snr20"]);
        assert_eq!(r.conditions[1].title, "20 dB SNR");
        let clean = &r.conditions[0];
        assert_eq!(clean.detection.p_d, Some(1.0));
        let cls = clean.classification.as_ref().unwrap();
        assert_eq!(cls.unknown[6], 1);
        assert_eq!(cls.accuracy, 0.5);
        assert_eq!(clean.auc, Some(1.0));
        assert_eq!(r.overall.detection.n_records, 5);
    }

    #[test]
    fn report_ignores_input_order() {
        let a = build_report(&sample()).unwrap();
        let mut rev = sample();
        rev.reverse();
        let b = build_report(&rev).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.summary_csv().unwrap(), b.summary_csv().unwrap());
    }

    #[test]
    fn csv_shapes() {
        let r = build_report(&sample()).unwrap();
        let summary = r.summary_csv().unwrap();
        assert!(summary.starts_with("scenario,avg_time_ms,far_pct"));
        assert_eq!(summary.lines().count(), 4);
        assert!(summary.contains("Clean (no noise)"));
        let confusion = r.confusion_csv().unwrap();
        assert_eq!(confusion.lines().count(), 11);
        assert!(confusion.lines().next().unwrap().ends_with("abc,unknown"));
        let roc = r.roc_csv().unwrap();
        assert!(roc.starts_with("condition,fpr,tpr,threshold"));
    }

    #[test]
    fn writes_four_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = build_report(&sample())
            .unwrap()
            .write_dir(dir.path())
            .unwrap();
        assert_eq!(files.len(), 4);
        assert!(files.iter().all(|f| f.exists()));
        assert!(matches!(build_report(&[]), Err(Error::Degenerate(_))));
    }
}
