//! Signal preparation: noise augmentation, log transform, zero sequence,
//! and overlapping windows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window length `L`, hop `S` (both in samples) and sampling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "S")]
    pub hop: usize,
    #[serde(rename = "rate_hz")]
    pub sample_rate_hz: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            length: 200,
            hop: 20,
            sample_rate_hz: 10_000.0,
        }
    }
}

impl WindowConfig {
    pub fn new(length: usize, hop: usize, sample_rate_hz: f64) -> Result<Self> {
        let cfg = Self {
            length,
            hop,
            sample_rate_hz,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.hop == 0 || self.hop > self.length {
            return Err(Error::Validation(format!(
                "window requires 1 <= S <= L (L={}, S={})",
                self.length, self.hop
            )));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Validation(
                "window sample rate must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of complete windows in `n` samples.
    pub fn count(&self, n: usize) -> usize {
        if n < self.length {
            0
        } else {
            (n - self.length) / self.hop + 1
        }
    }
}

/// Position of one analysis window inside a sample stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpan {
    pub index: usize,
    pub start: usize,
    pub len: usize,
    /// Actionable time: the instant the last sample of the window is complete.
    pub t_end: f64,
}

impl WindowSpan {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A window borrowed from a single signal.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub span: WindowSpan,
    pub samples: &'a [f64],
}

/// Spans of all windows over `n` samples starting at time `t0`.
pub fn window_spans(n: usize, cfg: &WindowConfig, t0: f64) -> Result<Vec<WindowSpan>> {
    cfg.validate()?;
    if n < cfg.length {
        return Err(Error::Degenerate(format!(
            "signal of {n} samples is shorter than the window length {}",
            cfg.length
        )));
    }
    Ok((0..cfg.count(n))
        .map(|m| {
            let start = m * cfg.hop;
            WindowSpan {
                index: m,
                start,
                len: cfg.length,
                t_end: t0 + (start + cfg.length) as f64 / cfg.sample_rate_hz,
            }
        })
        .collect())
}

/// Overlapping windows `w_m` starting at `m·S`, each `L` samples long.
pub fn make_windows<'a>(signal: &'a [f64], cfg: &WindowConfig) -> Result<Vec<Window<'a>>> {
    Ok(window_spans(signal.len(), cfg, 0.0)?
        .into_iter()
        .map(|span| Window {
            span,
            samples: &signal[span.range()],
        })
        .collect())
}

/// Root mean square of a signal.
pub fn rms(signal: &[f64]) -> f64 {
    if signal.is_empty() {
        return 0.0;
    }
    (signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64).sqrt()
}

/// Noise standard deviation giving `snr_db = 10 log10(I_rms² / σ²)`.
pub fn noise_sigma(reference_rms: f64, snr_db: f64) -> f64 {
    reference_rms / 10f64.powf(snr_db / 20.0)
}

/// Adds i.i.d. zero-mean Gaussian noise at the requested SNR.
///
/// The noise power is referred to `reference_rms` when given, otherwise to
/// the rms of the whole signal. An infinite SNR returns the input unchanged.
pub fn augment_noise(
    signal: &[f64],
    snr_db: f64,
    seed: u64,
    reference_rms: Option<f64>,
) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::Degenerate("cannot augment an empty signal".into()));
    }
    if snr_db.is_nan() {
        return Err(Error::Domain("SNR must not be NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(signal.to_vec());
    }
    let reference = reference_rms.unwrap_or_else(|| rms(signal));
    if !(reference > 0.0) {
        return Err(Error::Degenerate("reference rms is zero".into()));
    }
    let sigma = noise_sigma(reference, snr_db);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(signal.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

/// Elementwise `ln(1 + |x|)`.
pub fn log_transform(signal: &[f64]) -> Vec<f64> {
    signal.iter().map(|v| v.abs().ln_1p()).collect()
}

/// Elementwise sum of three aligned phase signals.
pub fn zero_sequence(ia: &[f64], ib: &[f64], ic: &[f64]) -> Result<Vec<f64>> {
    if ia.len() != ib.len() || ia.len() != ic.len() {
        return Err(Error::Shape(format!(
            "phase lengths differ ({}, {}, {})",
            ia.len(),
            ib.len(),
            ic.len()
        )));
    }
    Ok(ia
        .iter()
        .zip(ib)
        .zip(ic)
        .map(|((a, b), c)| a + b + c)
        .collect())
}
