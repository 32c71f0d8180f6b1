//! Per-window G-vector scoring and the Mahalanobis detection test.

use serde::{Deserialize, Serialize};

use crate::calibrate::binning::window_gstat;
use crate::calibrate::model::HealthyModel;
use crate::calibrate::prep::log_transform;
use crate::error::{Error, Result};
use crate::statcore::mahalanobis_sq;

/// Bartlett-corrected statistics of one window: phases a, b, c and the
/// zero-sequence pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GVector {
    pub g: [f64; 3],
    pub g0: f64,
    pub t_end: f64,
}

/// Scores eight log-transformed channel windows, ordered
/// Ia_s, Ib_s, Ic_s, Ia_r, Ib_r, Ic_r, I0_s, I0_r.
pub fn score_transformed(
    channels: [&[f64]; 8],
    model: &HealthyModel,
    t_end: f64,
) -> Result<GVector> {
    let l = model.window.length;
    if let Some(bad) = channels.iter().find(|c| c.len() != l) {
        return Err(Error::Shape(format!(
            "window has {} samples, model expects {l}",
            bad.len()
        )));
    }
    let mut g = [0.0; 3];
    for (p, slot) in g.iter_mut().enumerate() {
        *slot = window_gstat(channels[p], channels[3 + p], model.edges.phase(p))?.g_star;
    }
    let g0 = window_gstat(channels[6], channels[7], &model.edges.zero)?.g_star;
    Ok(GVector { g, g0, t_end })
}

/// Scores one raw 8-channel window (log transform applied here).
pub fn score_window(window8: &[&[f64]], model: &HealthyModel, t_end: f64) -> Result<GVector> {
    if window8.len() != 8 {
        return Err(Error::Shape(format!(
            "expected 8 channels, got {}",
            window8.len()
        )));
    }
    let t: Vec<Vec<f64>> = window8.iter().map(|c| log_transform(c)).collect();
    score_transformed(
        [&t[0], &t[1], &t[2], &t[3], &t[4], &t[5], &t[6], &t[7]],
        model,
        t_end,
    )
}

/// Squared Mahalanobis distance of the phase statistics and the strict
/// threshold decision.
pub fn detect(gv: &GVector, model: &HealthyModel) -> (f64, bool) {
    let d_sq = mahalanobis_sq(&gv.g, model.covariance());
    (d_sq, d_sq > model.thresholds.tau_det)
}
