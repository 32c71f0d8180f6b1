//! Time-domain waveform synthesis, ground truth, channel skew and the
//! scenario grid.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibrate::prep::augment_noise;
use crate::error::{Error, Result};
use crate::label::FaultLabel;
use crate::record::WaveformRecord;
use crate::seed::{derive_seed, stable_hash};

use super::config::{FaultSpec, ScenarioConfig, SourceMode};
use super::phasor::{faulted_currents, load_currents};

/// What actually happened in a simulated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Inception time; `None` for healthy records.
    pub t_f: Option<f64>,
    pub label: Option<FaultLabel>,
    /// True only for faults on the protected line.
    pub internal: bool,
    pub scenario_id: String,
    pub seed: u64,
    /// Measurement noise; absent for noise-free records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_mode: Option<SourceMode>,
}

impl GroundTruth {
    /// True for records that the relay must trip on.
    pub fn is_fault(&self) -> bool {
        self.internal && self.t_f.is_some()
    }

    /// A window is faulty iff its last sample falls at or after an internal
    /// fault's inception.
    pub fn window_is_faulty(&self, t_end: f64, sample_rate_hz: f64) -> bool {
        match (self.internal, self.t_f) {
            (true, Some(t_f)) => t_end - 1.0 / sample_rate_hz >= t_f - 1e-12,
            _ => false,
        }
    }

    /// Noise condition tag: `clean` or `snr<dB>`.
    pub fn condition(&self) -> String {
        match self.snr_db {
            Some(s) => format!("snr{s}"),
            None => "clean".into(),
        }
    }
}

/// One entry of a scenario grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub config: ScenarioConfig,
    pub fault: Option<FaultSpec>,
}

fn load_factor(cfg: &ScenarioConfig, t: f64) -> f64 {
    cfg.load_steps
        .iter()
        .filter(|(ts, _)| t >= *ts)
        .map(|(_, f)| f)
        .product()
}

fn sample(i: C, wt: f64) -> f64 {
    // rms phasor → instantaneous value
    std::f64::consts::SQRT_2 * (i * C::from_polar(1.0, wt)).re
}

/// Generates one record. Noise (if any) is added last, per channel, with
/// σ referred to the pre-fault rms of that channel.
pub fn simulate(scenario: &Scenario) -> Result<(WaveformRecord, GroundTruth)> {
    let cfg = &scenario.config;
    cfg.validate()?;
    if let Some(f) = &scenario.fault {
        f.validate(cfg)?;
    }
    let n = cfg.n_samples();
    let fs = cfg.sample_rate_hz;
    let w = 2.0 * PI * cfg.fundamental_hz;
    let base = load_currents(cfg, 1.0);
    let fault_start = scenario.fault.map(|f| (f.t_f * fs).ceil() as usize);
    let faulted = scenario.fault.map(|f| {
        let at = load_factor(cfg, f.t_f);
        let load = base.map(|x| x * at);
        let out = faulted_currents(cfg, &f, &load);
        // fault-driven change relative to the load flowing at inception
        (
            [0, 1, 2].map(|p| out.sending[p] - load[p]),
            [0, 1, 2].map(|p| out.receiving[p] - load[p]),
        )
    });

    let mut sending: [Vec<f64>; 3] = Default::default();
    let mut receiving: [Vec<f64>; 3] = Default::default();
    for ch in sending.iter_mut().chain(receiving.iter_mut()) {
        ch.reserve_exact(n);
    }
    for k in 0..n {
        let t = k as f64 / fs;
        let wt = w * t;
        let lf = load_factor(cfg, t);
        let on = fault_start.is_some_and(|s| k >= s);
        for p in 0..3 {
            let load = base[p] * lf;
            let (ds, dr) = match (on, &faulted) {
                (true, Some((ds, dr))) => (ds[p], dr[p]),
                _ => (C::new(0.0, 0.0), C::new(0.0, 0.0)),
            };
            sending[p].push(sample(load + ds, wt));
            receiving[p].push(sample(load + dr, wt));
        }
    }

    if let Some(snr) = cfg.snr_db.filter(|s| s.is_finite()) {
        let reference = cfg.load_amps_rms * load_factor(cfg, 0.0);
        for (ch, signal) in sending.iter_mut().chain(receiving.iter_mut()).enumerate() {
            *signal = augment_noise(
                signal,
                snr,
                derive_seed(cfg.seed, &[0x401, ch as u64]),
                Some(reference),
            )?;
        }
    }

    let record = WaveformRecord::new(fs, sending, receiving)?;
    let truth = GroundTruth {
        t_f: scenario.fault.map(|f| f.t_f),
        label: scenario.fault.map(|f| f.label),
        internal: scenario.fault.is_some_and(|f| f.internal),
        scenario_id: scenario.id.clone(),
        seed: cfg.seed,
        snr_db: cfg.snr_db.filter(|s| s.is_finite()),
        source_mode: Some(cfg.source_mode),
    };
    Ok((record, truth))
}

/// [`simulate`] without an identifier.
pub fn simulate_scenario(
    cfg: &ScenarioConfig,
    fault: Option<FaultSpec>,
) -> Result<(WaveformRecord, GroundTruth)> {
    simulate(&Scenario {
        id: "scenario".into(),
        config: cfg.clone(),
        fault,
    })
}

/// Delays the receiving channels by `round(delay · rate)` samples, holding
/// the first value over the gap. The gap is marked as hold-off.
pub fn apply_comm_delay(record: &WaveformRecord, delay_ms: f64) -> Result<WaveformRecord> {
    if !(delay_ms >= 0.0 && delay_ms.is_finite()) {
        return Err(Error::Validation(format!(
            "delay must be >= 0 ms, got {delay_ms}"
        )));
    }
    let d = (delay_ms * 1e-3 * record.sample_rate_hz).round() as usize;
    if d >= record.len() && d > 0 {
        return Err(Error::Validation(format!(
            "delay of {d} samples exceeds the record length {}",
            record.len()
        )));
    }
    let mut out = record.clone();
    if d == 0 {
        return Ok(out);
    }
    for ch in out.receiving.iter_mut() {
        let first = ch[0];
        let shifted: Vec<f64> = std::iter::repeat_n(first, d)
            .chain(ch[..ch.len() - d].iter().copied())
            .collect();
        *ch = shifted;
    }
    out.holdoff = out.holdoff.max(d);
    Ok(out)
}

/// Description of a Cartesian scenario grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub fault_types: Vec<FaultLabel>,
    pub locations: Vec<f64>,
    pub r_f: Vec<f64>,
    pub modes: Vec<SourceMode>,
    /// `inf` (or any non-finite value) means no noise.
    pub snr_db: Vec<f64>,
    /// Healthy records (with load steps) per (mode, SNR) block.
    pub healthy_per_block: usize,
    /// External faults: distances beyond the remote bus, in line lengths.
    pub external_locations: Vec<f64>,
    pub external_r_f: Vec<f64>,
    pub duration_s: f64,
    /// Nominal inception time; each scenario adds a jitter of up to one cycle.
    pub t_f: f64,
    pub load_amps_range: (f64, f64),
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            fault_types: FaultLabel::CLASSES.to_vec(),
            locations: vec![0.2, 0.5, 0.7],
            r_f: vec![0.1, 50.0, 100.0, 150.0, 250.0],
            modes: vec![SourceMode::Grid, SourceMode::Islanded],
            snr_db: vec![f64::INFINITY, 40.0, 30.0, 20.0],
            healthy_per_block: 10,
            external_locations: vec![0.01, 0.5],
            external_r_f: vec![0.1, 50.0],
            duration_s: 0.3,
            t_f: 0.2,
            load_amps_range: (45.0, 75.0),
            seed: 0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.fault_types.contains(&FaultLabel::Unknown) {
            return bad("grid fault types must be real classes");
        }
        if self.locations.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return bad("internal locations must lie in (0, 1)");
        }
        if self
            .r_f
            .iter()
            .chain(&self.external_r_f)
            .any(|r| !(0.1..=250.0).contains(r))
        {
            return bad("fault resistances must lie in [0.1, 250] ohm");
        }
        if self
            .external_locations
            .iter()
            .any(|l| !(*l > 0.0 && l.is_finite()))
        {
            return bad("external distances must be positive");
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("SNR values must not be NaN");
        }
        if self.modes.is_empty() || self.snr_db.is_empty() {
            return bad("grid needs at least one mode and one SNR");
        }
        let (lo, hi) = self.load_amps_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad("load range must be positive and ordered");
        }
        if !(self.t_f > 0.0 && self.t_f + 0.02 < self.duration_s) {
            return bad("inception time plus one cycle must fit in the duration");
        }
        Ok(())
    }
}

fn snr_tag(snr: f64) -> String {
    if snr.is_finite() {
        format!("snr{snr}")
    } else {
        "clean".into()
    }
}

fn base_config(spec: &GridSpec, mode: SourceMode, snr: f64, seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x10AD]));
    let (lo, hi) = spec.load_amps_range;
    ScenarioConfig {
        duration_s: spec.duration_s,
        load_amps_rms: lo + (hi - lo) * rng.random::<f64>(),
        source_mode: mode,
        snr_db: snr.is_finite().then_some(snr),
        seed,
        ..ScenarioConfig::default()
    }
}

fn jittered_tf(spec: &GridSpec, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7F]));
    // whole samples at 10 kHz within one cycle
    spec.t_f + (rng.random_range(0..200u32) as f64) * 1e-4
}

/// Spreads healthy and external scenarios evenly between the internal ones.
fn interleave(
    internal: Vec<Scenario>,
    healthy: Vec<Scenario>,
    external: Vec<Scenario>,
) -> Vec<Scenario> {
    let slots = healthy.len() + 1;
    let int_chunk = internal.len().div_ceil(slots).max(1);
    let ext_chunk = external.len().div_ceil(slots).max(1);
    let mut out = Vec::with_capacity(internal.len() + healthy.len() + external.len());
    let (mut int, mut hel, mut ext) = (
        internal.into_iter(),
        healthy.into_iter(),
        external.into_iter(),
    );
    loop {
        let before = out.len();
        out.extend(int.by_ref().take(int_chunk));
        out.extend(ext.by_ref().take(ext_chunk));
        out.extend(hel.next());
        if out.len() == before {
            return out;
        }
    }
}

/// Expands a grid: for each (mode, SNR) block, internal faults over types ×
/// locations × resistances, interleaved with healthy and external-fault
/// records. Ordering and seeds are deterministic.
pub fn scenario_grid(spec: &GridSpec) -> Result<Vec<Scenario>> {
    spec.validate()?;
    let mut all = Vec::new();
    for &mode in &spec.modes {
        for &snr in &spec.snr_db {
            let block = format!("{}-{}", mode.as_str(), snr_tag(snr));
            let seed_of = |id: &str| derive_seed(spec.seed, &[stable_hash(id)]);
            let mut internal = Vec::new();
            for &label in &spec.fault_types {
                for &loc in &spec.locations {
                    for &r in &spec.r_f {
                        let id = format!("{block}-int-{label}-l{}-r{r}", (loc * 100.0).round());
                        let seed = seed_of(&id);
                        let config = base_config(spec, mode, snr, seed);
                        let fault = FaultSpec {
                            t_f: jittered_tf(spec, seed),
                            label,
                            r_f: Some(r),
                            location_frac: loc,
                            internal: true,
                        };
                        internal.push(Scenario {
                            id,
                            config,
                            fault: Some(fault),
                        });
                    }
                }
            }
            let mut healthy = Vec::new();
            for h in 0..spec.healthy_per_block {
                let id = format!("{block}-healthy-{h}");
                let seed = seed_of(&id);
                let mut config = base_config(spec, mode, snr, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x57E9]));
                if h % 2 == 1 || spec.healthy_per_block == 1 {
                    let t = 0.05 + (spec.duration_s - 0.1) * rng.random::<f64>();
                    let factor = 0.5 + rng.random::<f64>();
                    config.load_steps = vec![(t, factor)];
                }
                healthy.push(Scenario {
                    id,
                    config,
                    fault: None,
                });
            }
            let mut external = Vec::new();
            for &label in &spec.fault_types {
                for &d in &spec.external_locations {
                    for &r in &spec.external_r_f {
                        let id = format!("{block}-ext-{label}-d{}-r{r}", (d * 100.0).round());
                        let seed = seed_of(&id);
                        let config = base_config(spec, mode, snr, seed);
                        let fault = FaultSpec {
                            t_f: jittered_tf(spec, seed),
                            label,
                            r_f: Some(r),
                            location_frac: d,
                            internal: false,
                        };
                        external.push(Scenario {
                            id,
                            config,
                            fault: Some(fault),
                        });
                    }
                }
            }
            all.extend(interleave(internal, healthy, external));
        }
    }
    Ok(all)
}

/// Noise-free healthy records for calibration: alternating source modes,
/// loads drawn from the grid's range and a load step on every other record.
pub fn healthy_training_set(spec: &GridSpec, n: usize) -> Result<Vec<Scenario>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(n);
    for h in 0..n {
        let mode = spec.modes[h % spec.modes.len()];
        let id = format!("train-{}-healthy-{h}", mode.as_str());
        let seed = derive_seed(spec.seed, &[0x7AA1, stable_hash(&id)]);
        let mut config = base_config(spec, mode, f64::INFINITY, seed);
        if h % 2 == 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x57E9]));
            let t = 0.05 + (spec.duration_s - 0.1) * rng.random::<f64>();
            config.load_steps = vec![(t, 0.5 + rng.random::<f64>())];
        }
        out.push(Scenario {
            id,
            config,
            fault: None,
        });
    }
    Ok(out)
}
