//! End-to-end offline tuning: noise augmentation, binning search per
//! channel, healthy-model fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::GVector;
use crate::error::{Error, Result};
use crate::record::WaveformRecord;
use crate::seed::derive_seed;

use super::binning::{BinningSpec, DEFAULT_ZONE_QUANTILES};
use super::model::{fit_healthy_model, ChannelEdges, FitOptions, HealthyModel};
use super::objective::{channel_fit, ChannelFit, ChannelSet, QuantileCache};
use super::optimize::{optimize_spec, OptimizerConfig, SearchSpace};
use super::prep::{augment_noise, log_transform, rms, WindowConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub window: WindowConfig,
    /// Each healthy record is replicated once per SNR; `inf` keeps a clean copy.
    pub training_snr_db: Vec<f64>,
    pub zone_quantiles: (f64, f64),
    pub space: SearchSpace,
    /// Candidate evaluations per channel.
    pub budget: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            training_snr_db: vec![20.0, 30.0, 40.0],
            zone_quantiles: DEFAULT_ZONE_QUANTILES,
            space: SearchSpace::default(),
            budget: 40,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

/// Result of [`tune`]: the model plus the diagnostics printed by the CLI.
#[derive(Debug, Clone)]
pub struct TuneReport {
    pub model: HealthyModel,
    /// Mean of the three phase ρ² values.
    pub objective: f64,
    pub phase_rho_sq: [f64; 3],
    pub zero_rho_sq: f64,
    /// Phase a, b, c and zero-sequence specs.
    pub specs: [BinningSpec; 4],
    pub modal_k_eff: [usize; 4],
    pub n_windows: usize,
}

/// Log-transformed (sending, receiving) pairs for the eight scoring
/// channels of one noisy copy: phases a, b, c and zero sequence.
type Prepared = [(Vec<f64>, Vec<f64>, usize); 4];

fn prepare(
    record: &WaveformRecord,
    snr_db: f64,
    seed: u64,
    window: &WindowConfig,
) -> Result<Prepared> {
    let head = window.length.min(record.len());
    let noisy = |signal: &[f64], ch: u64| -> Result<Vec<f64>> {
        let reference = rms(&signal[..head]);
        augment_noise(signal, snr_db, derive_seed(seed, &[ch]), Some(reference))
    };
    let mut s = Vec::with_capacity(3);
    let mut r = Vec::with_capacity(3);
    for p in 0..3 {
        s.push(noisy(&record.sending[p], p as u64)?);
        r.push(noisy(&record.receiving[p], 3 + p as u64)?);
    }
    let sum = |ch: &[Vec<f64>]| -> Vec<f64> {
        (0..ch[0].len())
            .map(|i| ch[0][i] + ch[1][i] + ch[2][i])
            .collect()
    };
    let h = record.holdoff;
    Ok([
        (log_transform(&s[0]), log_transform(&r[0]), h),
        (log_transform(&s[1]), log_transform(&r[1]), h),
        (log_transform(&s[2]), log_transform(&r[2]), h),
        (log_transform(&sum(&s)), log_transform(&sum(&r)), h),
    ])
}

/// Builds the four calibration channel sets from healthy records.
pub fn training_sets(records: &[WaveformRecord], cfg: &TuneConfig) -> Result<[ChannelSet; 4]> {
    if records.is_empty() {
        return Err(Error::Degenerate("no healthy records supplied".into()));
    }
    if cfg.training_snr_db.is_empty() {
        return Err(Error::Validation(
            "at least one training SNR is required".into(),
        ));
    }
    for rec in records {
        rec.validate()?;
        if (rec.sample_rate_hz - cfg.window.sample_rate_hz).abs() > 1e-9 * cfg.window.sample_rate_hz
        {
            return Err(Error::Validation(format!(
                "record sampled at {} Hz, window expects {} Hz",
                rec.sample_rate_hz, cfg.window.sample_rate_hz
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..records.len())
        .flat_map(|i| (0..cfg.training_snr_db.len()).map(move |j| (i, j)))
        .collect();
    let prepared: Vec<Prepared> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let seed = derive_seed(cfg.seed, &[0xA116, i as u64, j as u64]);
            prepare(&records[i], cfg.training_snr_db[j], seed, &cfg.window)
        })
        .collect::<Result<_>>()?;
    let mut per_channel: [Vec<(Vec<f64>, Vec<f64>, usize)>; 4] = Default::default();
    for copy in prepared {
        for (ch, pair) in copy.into_iter().enumerate() {
            per_channel[ch].push(pair);
        }
    }
    let [a, b, c, z] = per_channel;
    Ok([
        ChannelSet::with_holdoff(cfg.window, a)?,
        ChannelSet::with_holdoff(cfg.window, b)?,
        ChannelSet::with_holdoff(cfg.window, c)?,
        ChannelSet::with_holdoff(cfg.window, z)?,
    ])
}

/// Searches the binning of each channel independently; the phase objective
/// is separable, so maximizing each ρ_p² maximizes their mean.
pub fn tune(records: &[WaveformRecord], cfg: &TuneConfig) -> Result<TuneReport> {
    cfg.window.validate()?;
    let sets = training_sets(records, cfg)?;
    let cache = QuantileCache::default();
    let fits: Vec<(BinningSpec, ChannelFit)> = (0..4)
        .into_par_iter()
        .map(|ch| {
            let set = &sets[ch];
            let opt = OptimizerConfig {
                budget: cfg.budget,
                seed: derive_seed(cfg.seed, &[0x0B7, ch as u64]),
                ..OptimizerConfig::default()
            };
            let res = optimize_spec(&cfg.space, &opt, |spec| {
                channel_fit(set, spec, cfg.zone_quantiles, &cache).map(|f| f.rho_sq)
            })?;
            let fit = channel_fit(set, &res.best.spec, cfg.zone_quantiles, &cache)?;
            Ok((res.best.spec, fit))
        })
        .collect::<Result<_>>()?;

    let stats: Vec<_> = fits
        .par_iter()
        .zip(sets.par_iter())
        .map(|((_, fit), set)| set.gstats(&fit.edges))
        .collect::<Result<_>>()?;
    let n = stats[0].len();
    let vectors: Vec<GVector> = (0..n)
        .map(|w| GVector {
            g: [stats[0][w].g_star, stats[1][w].g_star, stats[2][w].g_star],
            g0: stats[3][w].g_star,
            t_end: 0.0,
        })
        .collect();

    let phase_rho_sq = [fits[0].1.rho_sq, fits[1].1.rho_sq, fits[2].1.rho_sq];
    let objective = phase_rho_sq.iter().sum::<f64>() / 3.0;
    let edges = ChannelEdges {
        a: fits[0].1.edges.clone(),
        b: fits[1].1.edges.clone(),
        c: fits[2].1.edges.clone(),
        zero: fits[3].1.edges.clone(),
    };
    let model = fit_healthy_model(&vectors, edges, cfg.window, objective, &cfg.fit)?;
    Ok(TuneReport {
        model,
        objective,
        phase_rho_sq,
        zero_rho_sq: fits[3].1.rho_sq,
        specs: [fits[0].0, fits[1].0, fits[2].0, fits[3].0],
        modal_k_eff: [0, 1, 2, 3].map(|i| fits[i].1.modal_k_eff),
        n_windows: n,
    })
}
