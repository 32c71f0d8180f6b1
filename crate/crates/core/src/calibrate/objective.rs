//! Q-Q alignment objective: how closely the windowed, Bartlett-corrected
//! G-statistics of healthy data follow a χ² law under a given binning.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::statcore::{chi2_plotting_quantiles, qq_correlation_with, GStatResult};

use super::binning::{quantile_edges_sorted, window_gstat, BinningSpec, HistogramEdges};
use super::prep::WindowConfig;

/// Minimum number of healthy windows for a meaningful Q-Q fit.
pub const MIN_WINDOWS: usize = 30;

/// Log-transformed healthy signals of one channel pair (one phase, or the
/// zero-sequence pair) across several records.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    window: WindowConfig,
    /// (sending, receiving, first window start) per record
    records: Vec<(Vec<f64>, Vec<f64>, usize)>,
    pooled_sorted: Vec<f64>,
}

impl ChannelSet {
    /// `records` holds already log-transformed (sending, receiving) pairs;
    /// windows starting before `holdoff` samples are skipped.
    pub fn new(window: WindowConfig, records: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        Self::with_holdoff(
            window,
            records.into_iter().map(|(s, r)| (s, r, 0)).collect(),
        )
    }

    pub fn with_holdoff(
        window: WindowConfig,
        records: Vec<(Vec<f64>, Vec<f64>, usize)>,
    ) -> Result<Self> {
        window.validate()?;
        let mut pooled = Vec::new();
        for (s, r, _) in &records {
            if s.len() != r.len() {
                return Err(Error::Shape(format!(
                    "terminal signals differ in length ({} vs {})",
                    s.len(),
                    r.len()
                )));
            }
            pooled.extend(s.iter().chain(r).copied().filter(|v| v.is_finite()));
        }
        pooled.sort_by(f64::total_cmp);
        let records = records
            .into_iter()
            .map(|(s, r, h)| {
                // round the holdoff up to the next hop boundary
                let first = h.div_ceil(window.hop) * window.hop;
                (s, r, first)
            })
            .collect();
        Ok(Self {
            window,
            records,
            pooled_sorted: pooled,
        })
    }

    pub fn window(&self) -> &WindowConfig {
        &self.window
    }

    pub fn pooled_sorted(&self) -> &[f64] {
        &self.pooled_sorted
    }

    pub fn n_windows(&self) -> usize {
        self.records
            .iter()
            .map(|(s, _, first)| self.window.count(s.len().saturating_sub(*first)))
            .sum()
    }

    /// G-statistics of every window under fixed edges, record by record.
    pub fn gstats(&self, edges: &HistogramEdges) -> Result<Vec<GStatResult>> {
        let (l, hop) = (self.window.length, self.window.hop);
        let mut out = Vec::with_capacity(self.n_windows());
        for (s, r, first) in &self.records {
            let mut start = *first;
            while start + l <= s.len() {
                out.push(window_gstat(
                    &s[start..start + l],
                    &r[start..start + l],
                    edges,
                )?);
                start += hop;
            }
        }
        Ok(out)
    }

    pub fn edges_for(
        &self,
        spec: &BinningSpec,
        zone_quantiles: (f64, f64),
    ) -> Result<HistogramEdges> {
        quantile_edges_sorted(&self.pooled_sorted, spec, zone_quantiles)
    }
}

/// Fit quality of one channel under one binning.
#[derive(Debug, Clone)]
pub struct ChannelFit {
    pub rho: f64,
    pub rho_sq: f64,
    pub modal_k_eff: usize,
    pub edges: HistogramEdges,
}

/// Most frequent value; ties go to the smaller one.
pub fn modal_k_eff(stats: &[GStatResult]) -> Option<usize> {
    let mut freq: HashMap<usize, usize> = HashMap::new();
    for s in stats {
        *freq.entry(s.k_eff).or_default() += 1;
    }
    freq.into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
}

/// Shared cache of χ² plotting-position quantiles keyed by (n, dof).
#[derive(Debug, Default)]
pub struct QuantileCache {
    inner: Mutex<HashMap<(usize, u32), Arc<Vec<f64>>>>,
}

impl QuantileCache {
    pub fn get(&self, n: usize, dof: u32) -> Result<Arc<Vec<f64>>> {
        if let Some(q) = self
            .inner
            .lock()
            .expect("quantile cache poisoned")
            .get(&(n, dof))
        {
            return Ok(q.clone());
        }
        let q = Arc::new(chi2_plotting_quantiles(n, dof)?);
        self.inner
            .lock()
            .expect("quantile cache poisoned")
            .insert((n, dof), q.clone());
        Ok(q)
    }
}

/// ρ between the sorted g* samples and χ² quantiles with `modal k_eff − 1` dof.
pub fn g_star_alignment(stats: &[GStatResult], cache: &QuantileCache) -> Result<(f64, usize)> {
    if stats.len() < MIN_WINDOWS {
        return Err(Error::Degenerate(format!(
            "calibration needs at least {MIN_WINDOWS} healthy windows, got {}",
            stats.len()
        )));
    }
    let k_mode = modal_k_eff(stats).unwrap_or(0);
    if k_mode < 2 {
        return Err(Error::Degenerate(format!(
            "modal populated-bin count {k_mode} leaves no degrees of freedom"
        )));
    }
    let g: Vec<f64> = stats.iter().map(|s| s.g_star).collect();
    let q = cache.get(g.len(), (k_mode - 1) as u32)?;
    Ok((qq_correlation_with(&g, &q)?, k_mode))
}

/// Q-Q fit of one channel for a candidate binning.
pub fn channel_fit(
    set: &ChannelSet,
    spec: &BinningSpec,
    zone_quantiles: (f64, f64),
    cache: &QuantileCache,
) -> Result<ChannelFit> {
    let edges = set.edges_for(spec, zone_quantiles)?;
    let stats = set.gstats(&edges)?;
    let (rho, modal_k_eff) = g_star_alignment(&stats, cache)?;
    Ok(ChannelFit {
        rho,
        rho_sq: rho * rho,
        modal_k_eff,
        edges,
    })
}

/// Mean of the per-phase squared Q-Q correlations.
pub fn calibration_objective(
    phases: &[ChannelSet; 3],
    specs: &[BinningSpec; 3],
    zone_quantiles: (f64, f64),
) -> Result<f64> {
    let cache = QuantileCache::default();
    let mut rhos = [0.0; 3];
    for (slot, (set, spec)) in rhos.iter_mut().zip(phases.iter().zip(specs)) {
        *slot = channel_fit(set, spec, zone_quantiles, &cache)?.rho;
    }
    Ok(objective_from_rhos(&rhos))
}

/// Mean squared correlation; the sign of each ρ does not matter.
pub fn objective_from_rhos(rhos: &[f64]) -> f64 {
    rhos.iter().map(|r| r * r).sum::<f64>() / rhos.len().max(1) as f64
}
