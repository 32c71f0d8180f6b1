use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::FaultLabel;

/// Rows are truth, columns prediction, both in [`FaultLabel::CLASSES`]
/// order. Predictions of `Unknown` are kept apart in `unknown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub matrix: [[usize; 10]; 10],
    pub unknown: [usize; 10],
    pub accuracy: f64,
    /// Unweighted mean of per-class F1 over classes present in the truth.
    pub macro_f1: f64,
    /// `None` for classes absent from the truth.
    pub per_class_f1: [Option<f64>; 10],
}

impl ConfusionReport {
    pub fn total(&self) -> usize {
        self.matrix.iter().flatten().sum::<usize>() + self.unknown.iter().sum::<usize>()
    }

    /// Off-diagonal cells as (truth, predicted, count), unknown excluded.
    pub fn confusions(&self) -> Vec<(FaultLabel, FaultLabel, usize)> {
        let mut out = Vec::new();
        for (t, row) in self.matrix.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                if t != p && n > 0 {
                    out.push((FaultLabel::CLASSES[t], FaultLabel::CLASSES[p], n));
                }
            }
        }
        out
    }
}

pub fn confusion_and_f1(predicted: &[FaultLabel], truth: &[FaultLabel]) -> Result<ConfusionReport> {
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Degenerate("no labelled records".into()));
    }
    let mut matrix = [[0usize; 10]; 10];
    let mut unknown = [0usize; 10];
    for (&p, &t) in predicted.iter().zip(truth) {
        let ti = t.class_index().ok_or_else(|| {
            Error::Validation("truth labels must be one of the ten classes".into())
        })?;
        match p.class_index() {
            Some(pi) => matrix[ti][pi] += 1,
            None => unknown[ti] += 1,
        }
    }
    let correct: usize = (0..10).map(|i| matrix[i][i]).sum();
    let mut per_class_f1 = [None; 10];
    for c in 0..10 {
        let support = matrix[c].iter().sum::<usize>() + unknown[c];
        if support == 0 {
            continue;
        }
        let tp = matrix[c][c] as f64;
        let called = (0..10).map(|r| matrix[r][c]).sum::<usize>() as f64;
        let f1 = if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (called + support as f64)
        };
        per_class_f1[c] = Some(f1);
    }
    let present: Vec<f64> = per_class_f1.iter().flatten().copied().collect();
    Ok(ConfusionReport {
        matrix,
        unknown,
        accuracy: correct as f64 / truth.len() as f64,
        macro_f1: present.iter().sum::<f64>() / present.len() as f64,
        per_class_f1,
    })
}
