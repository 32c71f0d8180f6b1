//! The calibrated healthy-state model of one protected line and its JSON
//! document form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::GVector;
use crate::error::{Error, Result};
use crate::statcore::{chi2_inv_cdf, normal_inv_cdf, CovarianceModel, Mat3, Vec3};

use super::binning::HistogramEdges;
use super::prep::WindowConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Significance levels behind the detection and classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaConfig {
    pub det: f64,
    pub cls: f64,
    pub zero: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            det: 1e-8,
            cls: 1e-8,
            zero: 1e-8,
        }
    }
}

impl AlphaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("det", self.det), ("cls", self.cls), ("zero", self.zero)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Validation(format!(
                    "alpha.{name} must lie in (0, 1), got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// j-of-m persistence vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteConfig {
    pub j: usize,
    pub m: usize,
}

impl Default for VoteConfig {
    fn default() -> Self {
        Self { j: 2, m: 3 }
    }
}

impl VoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j == 0 || self.j > self.m {
            return Err(Error::Validation(format!(
                "vote requires 1 <= j <= m, got j={} m={}",
                self.j, self.m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau_det: f64,
    pub z_cls: f64,
    pub tau0_cls: f64,
    pub dg_cls: f64,
    pub dg0_cls: f64,
    pub alpha: AlphaConfig,
}

impl Thresholds {
    /// χ²₃ detection threshold, two-sided normal phase threshold and
    /// χ²_{k0−1} ground threshold for the given levels.
    pub fn derive(alpha: AlphaConfig, k0: usize, dg_cls: f64, dg0_cls: f64) -> Result<Self> {
        alpha.validate()?;
        if k0 < 2 {
            return Err(Error::Validation(format!(
                "zero-sequence bin count must be >= 2, got {k0}"
            )));
        }
        if !(dg_cls >= 0.0 && dg0_cls >= 0.0) {
            return Err(Error::Validation("jump gates must be non-negative".into()));
        }
        Ok(Self {
            tau_det: chi2_inv_cdf(1.0 - alpha.det, 3)?,
            z_cls: normal_inv_cdf(1.0 - alpha.cls / 2.0)?,
            tau0_cls: chi2_inv_cdf(1.0 - alpha.zero, (k0 - 1) as u32)?,
            dg_cls,
            dg0_cls,
            alpha,
        })
    }
}

/// Frozen histogram edges for the three phases and the zero-sequence pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEdges {
    pub a: HistogramEdges,
    pub b: HistogramEdges,
    pub c: HistogramEdges,
    pub zero: HistogramEdges,
}

impl ChannelEdges {
    pub fn phase(&self, p: usize) -> &HistogramEdges {
        match p {
            0 => &self.a,
            1 => &self.b,
            _ => &self.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub mu_p: [f64; 3],
    pub sigma_p: [f64; 3],
}

/// Everything the online engine needs for one line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct HealthyModel {
    pub line_id: String,
    pub window: WindowConfig,
    pub edges: ChannelEdges,
    covariance: CovarianceModel,
    pub phase_stats: PhaseStats,
    pub k0: usize,
    pub thresholds: Thresholds,
    pub vote: VoteConfig,
    pub rho_sq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    line_id: String,
    window: WindowConfig,
    edges: ChannelEdges,
    mu: Vec3,
    gamma: Mat3,
    lambda: f64,
    phase_stats: PhaseStats,
    k0: usize,
    thresholds: Thresholds,
    vote: VoteConfig,
    rho_sq: f64,
}

impl From<HealthyModel> for ModelDocument {
    fn from(m: HealthyModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            line_id: m.line_id,
            window: m.window,
            edges: m.edges,
            mu: *m.covariance.mu(),
            gamma: *m.covariance.gamma(),
            lambda: m.covariance.lambda(),
            phase_stats: m.phase_stats,
            k0: m.k0,
            thresholds: m.thresholds,
            vote: m.vote,
            rho_sq: m.rho_sq,
        }
    }
}

impl TryFrom<ModelDocument> for HealthyModel {
    type Error = Error;

    fn try_from(d: ModelDocument) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported model schema version {} (expected {SCHEMA_VERSION})",
                d.schema_version
            )));
        }
        d.window.validate()?;
        d.vote.validate()?;
        d.thresholds.alpha.validate()?;
        if d.edges.zero.n_bins() != d.k0 {
            return Err(Error::Validation(format!(
                "k0 = {} disagrees with {} zero-sequence bins",
                d.k0,
                d.edges.zero.n_bins()
            )));
        }
        if !(0.0..=1.0).contains(&d.rho_sq) {
            return Err(Error::Validation(format!(
                "rho_sq must lie in [0, 1], got {}",
                d.rho_sq
            )));
        }
        let covariance = CovarianceModel::new(d.mu, d.gamma, d.lambda)?;
        Ok(Self {
            line_id: d.line_id,
            window: d.window,
            edges: d.edges,
            covariance,
            phase_stats: d.phase_stats,
            k0: d.k0,
            thresholds: d.thresholds,
            vote: d.vote,
            rho_sq: d.rho_sq,
        })
    }
}

impl HealthyModel {
    /// Builds a model from explicit parts; thresholds follow from `alpha`,
    /// the zero-sequence bin count and the jump gates.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        line_id: &str,
        window: WindowConfig,
        edges: ChannelEdges,
        covariance: CovarianceModel,
        phase_stats: PhaseStats,
        alpha: AlphaConfig,
        gates: (f64, f64),
        vote: VoteConfig,
    ) -> Result<Self> {
        window.validate()?;
        vote.validate()?;
        let k0 = edges.zero.n_bins();
        let thresholds = Thresholds::derive(alpha, k0, gates.0, gates.1)?;
        Ok(Self {
            line_id: line_id.to_string(),
            window,
            edges,
            covariance,
            phase_stats,
            k0,
            thresholds,
            vote,
            rho_sq: 0.0,
        })
    }

    pub fn covariance(&self) -> &CovarianceModel {
        &self.covariance
    }

    /// Recomputes every threshold for new significance levels.
    pub fn with_alpha(mut self, alpha: AlphaConfig) -> Result<Self> {
        self.thresholds = Thresholds::derive(
            alpha,
            self.k0,
            self.thresholds.dg_cls,
            self.thresholds.dg0_cls,
        )?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Settings for [`fit_healthy_model`] that do not come from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub line_id: String,
    pub alpha: AlphaConfig,
    /// `None` selects `1e-6 · trace(Γ) / 3`.
    pub lambda: Option<f64>,
    pub dg_cls: f64,
    pub dg0_cls: f64,
    pub vote: VoteConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            line_id: "line".into(),
            alpha: AlphaConfig::default(),
            lambda: None,
            dg_cls: 5.0,
            dg0_cls: 5.0,
            vote: VoteConfig::default(),
        }
    }
}

/// Sample mean and covariance (denominator n − 1) of 3-vectors.
pub fn mean_and_covariance(xs: &[Vec3]) -> Result<(Vec3, Mat3)> {
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!(
            "covariance needs at least 2 vectors, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mut mu = [0.0; 3];
    for x in xs {
        for i in 0..3 {
            mu[i] += x[i];
        }
    }
    mu.iter_mut().for_each(|m| *m /= n);
    let mut gamma = [[0.0; 3]; 3];
    for x in xs {
        let d = [x[0] - mu[0], x[1] - mu[1], x[2] - mu[2]];
        for i in 0..3 {
            for j in i..3 {
                gamma[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            gamma[i][j] /= n - 1.0;
            gamma[j][i] = gamma[i][j];
        }
    }
    Ok((mu, gamma))
}

/// Fits μ, Γ and the per-phase (μ_p, σ_p) from healthy G-vectors and
/// derives all thresholds.
pub fn fit_healthy_model(
    vectors: &[GVector],
    edges: ChannelEdges,
    window: WindowConfig,
    rho_sq: f64,
    opts: &FitOptions,
) -> Result<HealthyModel> {
    window.validate()?;
    opts.vote.validate()?;
    let xs: Vec<Vec3> = vectors.iter().map(|v| v.g).collect();
    let (mu, gamma) = mean_and_covariance(&xs)?;
    let lambda = match opts.lambda {
        Some(l) if l >= 0.0 && l.is_finite() => l,
        Some(l) => return Err(Error::Validation(format!("lambda must be >= 0, got {l}"))),
        None => 1e-6 * (gamma[0][0] + gamma[1][1] + gamma[2][2]) / 3.0,
    };
    let covariance = CovarianceModel::new(mu, gamma, lambda)?;
    let phase_stats = PhaseStats {
        mu_p: mu,
        sigma_p: [0, 1, 2].map(|p| gamma[p][p].sqrt()),
    };
    let k0 = edges.zero.n_bins();
    let thresholds = Thresholds::derive(opts.alpha, k0, opts.dg_cls, opts.dg0_cls)?;
    Ok(HealthyModel {
        line_id: opts.line_id.clone(),
        window,
        edges,
        covariance,
        phase_stats,
        k0,
        thresholds,
        vote: opts.vote,
        rho_sq: rho_sq.clamp(0.0, 1.0),
    })
}
