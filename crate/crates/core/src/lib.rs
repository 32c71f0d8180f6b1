//! Statistically adaptive differential protection for two-terminal
//! three-phase lines.
//!
//! The offline side ([`calibrate`]) learns histogram edges and a healthy
//! distribution of per-phase G-statistics; the online side ([`engine`])
//! scores sliding windows, trips on a Mahalanobis test and classifies the
//! fault. [`feedersim`] generates synthetic feeder waveforms and
//! [`evalkit`] computes detection and classification metrics.

pub mod calibrate;
pub mod engine;
pub mod error;
pub mod evalkit;
pub mod feedersim;
pub mod label;
pub mod record;
pub mod seed;
pub mod statcore;

pub use error::{Error, Result};
pub use label::FaultLabel;
pub use record::WaveformRecord;
