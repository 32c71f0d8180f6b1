use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-terminal three-phase current samples on a common time base.
///
/// Phase order is a, b, c. Zero-sequence channels are derived on demand.
/// `holdoff` counts leading samples that carry padding rather than
/// measurements (for instance after a channel skew); windows touching them
/// are not scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformRecord {
    pub sample_rate_hz: f64,
    pub t0: f64,
    pub sending: [Vec<f64>; 3],
    pub receiving: [Vec<f64>; 3],
    #[serde(default)]
    pub holdoff: usize,
}

impl WaveformRecord {
    pub fn new(
        sample_rate_hz: f64,
        sending: [Vec<f64>; 3],
        receiving: [Vec<f64>; 3],
    ) -> Result<Self> {
        let rec = Self {
            sample_rate_hz,
            t0: 0.0,
            sending,
            receiving,
            holdoff: 0,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::Validation(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        let n = self.sending[0].len();
        if self
            .sending
            .iter()
            .chain(&self.receiving)
            .any(|c| c.len() != n)
        {
            return Err(Error::Shape(
                "all six channels must have equal length".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sending[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_of(&self, sample: usize) -> f64 {
        self.t0 + sample as f64 / self.sample_rate_hz
    }

    pub fn zero_sequence_sending(&self) -> Vec<f64> {
        sum3(&self.sending)
    }

    pub fn zero_sequence_receiving(&self) -> Vec<f64> {
        sum3(&self.receiving)
    }

    /// All eight channels in scoring order:
    /// Ia_s, Ib_s, Ic_s, Ia_r, Ib_r, Ic_r, I0_s, I0_r.
    pub fn channels8(&self) -> [Vec<f64>; 8] {
        [
            self.sending[0].clone(),
            self.sending[1].clone(),
            self.sending[2].clone(),
            self.receiving[0].clone(),
            self.receiving[1].clone(),
            self.receiving[2].clone(),
            self.zero_sequence_sending(),
            self.zero_sequence_receiving(),
        ]
    }
}

fn sum3(ch: &[Vec<f64>; 3]) -> Vec<f64> {
    ch[0]
        .iter()
        .zip(&ch[1])
        .zip(&ch[2])
        .map(|((a, b), c)| a + b + c)
        .collect()
}
