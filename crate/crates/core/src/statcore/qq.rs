//! Q-Q correlation of sample statistics against χ² quantiles.

use crate::error::{Error, Result};

use super::special::chi2_inv_cdf;

/// χ²_dof quantiles at plotting positions `(i − 0.5)/n`, i = 1..n.
pub fn chi2_plotting_quantiles(n: usize, dof: u32) -> Result<Vec<f64>> {
    let nf = n as f64;
    (1..=n)
        .map(|i| chi2_inv_cdf((i as f64 - 0.5) / nf, dof))
        .collect()
}

/// Pearson correlation of two equal-length vectors.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!(
            "pearson: lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between the sorted samples and the matching χ²_dof quantiles.
pub fn qq_correlation(samples: &[f64], dof: u32) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Degenerate(format!(
            "Q-Q correlation needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let quantiles = chi2_plotting_quantiles(samples.len(), dof)?;
    qq_correlation_with(samples, &quantiles)
}

/// Same as [`qq_correlation`] with precomputed reference quantiles.
pub fn qq_correlation_with(samples: &[f64], quantiles: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Degenerate(
            "Q-Q correlation needs at least 3 samples".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    pearson(&sorted, quantiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{ChiSquared, Distribution};

    #[test]
    fn exact_quantiles_correlate_perfectly() {
        let q = chi2_plotting_quantiles(50, 4).unwrap();
        let mut shuffled = q.clone();
        shuffled.reverse();
        assert!((qq_correlation(&shuffled, 4).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_quantiles_anti_correlate() {
        let q = chi2_plotting_quantiles(50, 4).unwrap();
        // an affine, decreasing image of the quantiles is perfectly anti-aligned
        let rev: Vec<f64> = q.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((pearson(&rev, &q).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_chi2_draws_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dist = ChiSquared::new(5.0).unwrap();
        let draws: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
        let rho = qq_correlation(&draws, 5).unwrap();
        assert!(rho * rho >= 0.99, "rho^2 = {}", rho * rho);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            qq_correlation(&[1.0, 1.0, 1.0, 1.0], 3),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            qq_correlation(&[1.0, 2.0], 3),
            Err(Error::Degenerate(_))
        ));
    }
}
