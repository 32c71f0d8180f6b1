//! Quantile-based adaptive histogram edges with three zones (lower tail,
//! centre, upper tail) and the histogram/G-statistic of one window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statcore::{g_statistic_corrected, GStatResult, HistogramCounts};

const MIN_EDGE_SEPARATION: f64 = 1e-12;

/// Default zone boundaries: lower tail below the 10 % quantile, upper tail
/// above the 90 % quantile.
pub const DEFAULT_ZONE_QUANTILES: (f64, f64) = (0.10, 0.90);

/// Total bin count and the share of bins given to each zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub k: usize,
    pub ratios: [f64; 3],
}

impl BinningSpec {
    pub fn new(k: usize, ratios: [f64; 3]) -> Result<Self> {
        let spec = Self { k, ratios };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 4 {
            return Err(Error::Validation(format!(
                "bin count must be >= 4, got {}",
                self.k
            )));
        }
        if self.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Validation(format!(
                "zone ratios must be positive: {:?}",
                self.ratios
            )));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "zone ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// Bins per zone after rounding; every zone keeps at least one bin.
    pub fn zone_bins(&self) -> [usize; 3] {
        let k = self.k;
        let mut lo = ((k as f64 * self.ratios[0]).round() as usize).max(1);
        let mut mid = ((k as f64 * self.ratios[1]).round() as usize).max(1);
        while lo + mid > k - 1 {
            if lo >= mid && lo > 1 {
                lo -= 1;
            } else {
                mid -= 1;
            }
        }
        [lo, mid, k - lo - mid]
    }
}

/// Strictly increasing bin edges; the first and last bins are open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistogramEdges {
    edges: Vec<f64>,
}

impl HistogramEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Validation("need at least two edges".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Validation("edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation(
                "edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { edges })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn interior(&self) -> &[f64] {
        &self.edges[1..self.edges.len() - 1]
    }

    /// Bin of `x`; values equal to an interior edge fall in the lower bin.
    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        self.interior().partition_point(|&e| e < x)
    }
}

/// Empirical quantile (linear interpolation between order statistics) of
/// an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Quantile levels of the `k + 1` edges for a spec and zone boundaries.
pub fn edge_levels(spec: &BinningSpec, zone_quantiles: (f64, f64)) -> Vec<f64> {
    let [n1, n2, n3] = spec.zone_bins();
    let (q_lo, q_hi) = zone_quantiles;
    let mut levels = Vec::with_capacity(spec.k + 1);
    levels.extend((0..=n1).map(|i| q_lo * i as f64 / n1 as f64));
    levels.extend((1..=n2).map(|i| q_lo + (q_hi - q_lo) * i as f64 / n2 as f64));
    levels.extend((1..=n3).map(|i| q_hi + (1.0 - q_hi) * i as f64 / n3 as f64));
    levels
}

/// Edges at the empirical quantiles of healthy data.
pub fn quantile_edges(
    healthy_values: &[f64],
    spec: &BinningSpec,
    zone_quantiles: (f64, f64),
) -> Result<HistogramEdges> {
    let mut sorted: Vec<f64> = healthy_values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    sorted.sort_by(f64::total_cmp);
    quantile_edges_sorted(&sorted, spec, zone_quantiles)
}

/// [`quantile_edges`] over data that is already sorted ascending.
pub fn quantile_edges_sorted(
    sorted: &[f64],
    spec: &BinningSpec,
    zone_quantiles: (f64, f64),
) -> Result<HistogramEdges> {
    spec.validate()?;
    let (q_lo, q_hi) = zone_quantiles;
    if !(0.0 < q_lo && q_lo < q_hi && q_hi < 1.0) {
        return Err(Error::Validation(format!(
            "zone quantiles must satisfy 0 < q_lo < q_hi < 1, got ({q_lo}, {q_hi})"
        )));
    }
    let distinct = 1 + sorted.windows(2).filter(|w| w[1] > w[0]).count();
    if sorted.is_empty() || distinct < spec.k + 1 {
        return Err(Error::Degenerate(format!(
            "{} bins need at least {} distinct values, found {}",
            spec.k,
            spec.k + 1,
            if sorted.is_empty() { 0 } else { distinct }
        )));
    }
    let mut edges: Vec<f64> = edge_levels(spec, zone_quantiles)
        .into_iter()
        .map(|q| quantile_sorted(sorted, q))
        .collect();
    for i in 1..edges.len() {
        if edges[i] < edges[i - 1] + MIN_EDGE_SEPARATION {
            edges[i] = edges[i - 1] + MIN_EDGE_SEPARATION;
        }
    }
    HistogramEdges::new(edges)
}

/// Counts of `values` per bin (open-ended tails).
pub fn histogram_counts(values: &[f64], edges: &HistogramEdges) -> HistogramCounts {
    let mut counts = HistogramCounts::zeros(edges.n_bins());
    let slots = counts.counts_mut();
    for &v in values {
        slots[edges.bin_of(v)] += 1;
    }
    counts
}

/// Bartlett-corrected G-statistic between the two terminals of one window.
/// Inputs are already log-transformed.
pub fn window_gstat(
    sending: &[f64],
    receiving: &[f64],
    edges: &HistogramEdges,
) -> Result<GStatResult> {
    if sending.len() != receiving.len() {
        return Err(Error::Shape(format!(
            "terminal windows differ in length ({} vs {})",
            sending.len(),
            receiving.len()
        )));
    }
    let hs = histogram_counts(sending, edges);
    let hr = histogram_counts(receiving, edges);
    g_statistic_corrected(&hs, &hr, sending.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zone_allocation() {
        assert_eq!(
            BinningSpec::new(4, [0.25, 0.5, 0.25]).unwrap().zone_bins(),
            [1, 2, 1]
        );
        assert_eq!(
            BinningSpec::new(19, [0.21, 0.35, 0.44])
                .unwrap()
                .zone_bins(),
            [4, 7, 8]
        );
        let tight = BinningSpec::new(4, [0.45, 0.45, 0.10]).unwrap().zone_bins();
        assert_eq!(tight.iter().sum::<usize>(), 4);
        assert!(tight.iter().all(|&n| n >= 1));
        assert!(BinningSpec::new(3, [0.3, 0.4, 0.3]).is_err());
        assert!(BinningSpec::new(10, [0.3, 0.4, 0.4]).is_err());
    }

    #[test]
    fn uniform_quantile_edges() {
        // dense uniform grid on [0, 1] – the empirical quantiles are exact
        let values: Vec<f64> = (0..=10_000).map(|i| i as f64 / 10_000.0).collect();
        let spec = BinningSpec::new(4, [0.25, 0.5, 0.25]).unwrap();
        let edges = quantile_edges(&values, &spec, (0.25, 0.75)).unwrap();
        for (got, want) in edges.as_slice().iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn identical_values_are_degenerate() {
        let spec = BinningSpec::new(4, [0.25, 0.5, 0.25]).unwrap();
        assert!(matches!(
            quantile_edges(&[1.0; 100], &spec, DEFAULT_ZONE_QUANTILES),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn nineteen_bins_give_twenty_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..5000).map(|_| rng.random::<f64>().exp()).collect();
        let spec = BinningSpec::new(19, [0.21, 0.35, 0.44]).unwrap();
        let edges = quantile_edges(&values, &spec, DEFAULT_ZONE_QUANTILES).unwrap();
        assert_eq!(edges.as_slice().len(), 20);
        assert!(edges.as_slice().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tie_rule_and_tails() {
        let edges = HistogramEdges::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let c = histogram_counts(&[-5.0, 1.0, 1.5, 2.0, 2.5, 99.0], &edges);
        // 1.0 sits on an interior edge and falls in the lower bin, as does 2.0
        assert_eq!(c.counts(), &[2, 2, 2]);
        assert_eq!(histogram_counts(&[], &edges).counts(), &[0, 0, 0]);
    }

    #[test]
    fn equal_probability_bins_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let edges = HistogramEdges::new(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let values: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let c = histogram_counts(&values, &edges);
        // Pearson χ² against 50 per bin; 3 dof, 1 % critical value 11.34
        let chi2: f64 = c
            .counts()
            .iter()
            .map(|&n| (n as f64 - 50.0).powi(2) / 50.0)
            .sum();
        assert!(chi2 < 11.34, "{:?}", c.counts());
    }

    proptest! {
        #[test]
        fn edges_strictly_increasing(
            raw in prop::collection::vec(-50.0f64..50.0, 60..400),
            dup in prop::collection::vec(0usize..20, 0..200),
            k in 4usize..30,
            r1 in 0.05f64..0.6,
            r2 in 0.05f64..0.6,
        ) {
            prop_assume!(r1 + r2 < 0.95);
            let mut values = raw.clone();
            values.extend(dup.iter().map(|&i| raw[i % raw.len()]));
            let spec = BinningSpec::new(k, [r1, r2, 1.0 - r1 - r2]).unwrap();
            if let Ok(edges) = quantile_edges(&values, &spec, DEFAULT_ZONE_QUANTILES) {
                prop_assert_eq!(edges.n_bins(), k);
                prop_assert!(edges.as_slice().windows(2).all(|w| w[1] > w[0]));
            }
        }

        #[test]
        fn histogram_conserves_mass(
            values in prop::collection::vec(-10.0f64..10.0, 0..500),
            mut cuts in prop::collection::vec(-12.0f64..12.0, 2..20),
        ) {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            prop_assume!(cuts.len() >= 2);
            let edges = HistogramEdges::new(cuts).unwrap();
            let c = histogram_counts(&values, &edges);
            prop_assert_eq!(c.total(), values.len() as u64);
        }
    }
}
