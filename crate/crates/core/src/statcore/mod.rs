//! Core statistics: special functions, G-statistic, Mahalanobis distance
//! and Q-Q goodness of fit.

pub mod gstat;
pub mod mahal;
pub mod qq;
pub mod special;

pub use gstat::{
    bartlett_correct, g_statistic, g_statistic_corrected, GStatResult, HistogramCounts,
};
pub use mahal::{mahalanobis_sq, regularized_inverse, CovarianceModel, Mat3, Vec3};
pub use qq::{chi2_plotting_quantiles, pearson, qq_correlation, qq_correlation_with};
pub use special::{chi2_cdf, chi2_inv_cdf, gamma_pq, ln_gamma, normal_cdf, normal_inv_cdf};
