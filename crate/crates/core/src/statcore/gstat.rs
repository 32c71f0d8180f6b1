//! Two-sample G-statistic on histogram counts and its Bartlett correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-bin sample counts of one terminal signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramCounts {
    counts: Vec<u32>,
}

impl HistogramCounts {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Shape("histogram needs at least one bin".into()));
        }
        Ok(Self { counts })
    }

    pub fn zeros(n_bins: usize) -> Self {
        Self {
            counts: vec![0; n_bins.max(1)],
        }
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub(crate) fn counts_mut(&mut self) -> &mut [u32] {
        &mut self.counts
    }
}

/// Raw and corrected G-statistic together with the populated-bin count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GStatResult {
    pub g: f64,
    pub g_star: f64,
    pub k_eff: usize,
}

#[inline]
fn xlogx_over(n: u32, e: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        let n = n as f64;
        n * (n / e).ln()
    }
}

/// G = 2 Σ over populated bins of `n_s ln(n_s/e) + n_r ln(n_r/e)` with
/// `e = (n_s + n_r)/2`. Returns `g_star = g` (uncorrected); see
/// [`g_statistic_corrected`] for the Bartlett-adjusted value.
pub fn g_statistic(sending: &HistogramCounts, receiving: &HistogramCounts) -> Result<GStatResult> {
    let (g, k_eff) = g_raw(sending.counts(), receiving.counts())?;
    Ok(GStatResult {
        g,
        g_star: g,
        k_eff,
    })
}

/// G-statistic followed by the Bartlett correction for windows of `window_len` samples.
pub fn g_statistic_corrected(
    sending: &HistogramCounts,
    receiving: &HistogramCounts,
    window_len: usize,
) -> Result<GStatResult> {
    let (g, k_eff) = g_raw(sending.counts(), receiving.counts())?;
    let g_star = bartlett_correct(g, k_eff, window_len)?;
    Ok(GStatResult { g, g_star, k_eff })
}

pub(crate) fn g_raw(s: &[u32], r: &[u32]) -> Result<(f64, usize)> {
    if s.len() != r.len() {
        return Err(Error::Shape(format!(
            "histograms differ in bin count ({} vs {})",
            s.len(),
            r.len()
        )));
    }
    let mut sum = 0.0;
    let mut k_eff = 0;
    for (&ns, &nr) in s.iter().zip(r) {
        if ns == 0 && nr == 0 {
            continue;
        }
        k_eff += 1;
        if ns == nr {
            continue;
        }
        let e = 0.5 * (ns as f64 + nr as f64);
        sum += xlogx_over(ns, e) + xlogx_over(nr, e);
    }
    if k_eff == 0 {
        return Err(Error::Degenerate("both histograms are empty".into()));
    }
    Ok(((2.0 * sum).max(0.0), k_eff))
}

/// Bartlett factor `1 / (1 + (k_eff + 1) / (6 (2L − 1)))` applied to `g`.
pub fn bartlett_correct(g: f64, k_eff: usize, window_len: usize) -> Result<f64> {
    if window_len == 0 {
        return Err(Error::Domain("window length must be >= 1".into()));
    }
    if g < 0.0 || g.is_nan() {
        return Err(Error::Domain(format!(
            "G-statistic must be non-negative, got {g}"
        )));
    }
    let denom = 6.0 * (2.0 * window_len as f64 - 1.0);
    Ok(g / (1.0 + (k_eff as f64 + 1.0) / denom))
}
