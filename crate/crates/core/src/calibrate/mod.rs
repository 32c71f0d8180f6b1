//! Offline calibration: signal preparation, adaptive binning, the Q-Q
//! objective and its optimizer, and the healthy-model fit.

pub mod binning;
pub mod model;
pub mod objective;
pub mod optimize;
pub mod prep;
pub mod tune;

pub use binning::{
    histogram_counts, quantile_edges, window_gstat, BinningSpec, HistogramEdges,
    DEFAULT_ZONE_QUANTILES,
};
pub use model::{
    fit_healthy_model, AlphaConfig, ChannelEdges, FitOptions, HealthyModel, PhaseStats, Thresholds,
    VoteConfig,
};
pub use objective::{calibration_objective, channel_fit, ChannelFit, ChannelSet, QuantileCache};
pub use optimize::{optimize_spec, OptimizeResult, OptimizerConfig, SearchSpace, Trial};
pub use prep::{
    augment_noise, log_transform, make_windows, noise_sigma, rms, window_spans, zero_sequence,
    Window, WindowConfig, WindowSpan,
};
pub use tune::{training_sets, tune, TuneConfig, TuneReport};
