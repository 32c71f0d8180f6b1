//! Derivative-free search over binning specs: Latin-hypercube seeding
//! followed by local refinement around the incumbent.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::binning::BinningSpec;

/// Smallest evaluation budget accepted by [`optimize_spec`].
pub const MIN_BUDGET: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub k_min: usize,
    pub k_max: usize,
    /// Lower bound on every zone ratio.
    pub min_ratio: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            k_min: 8,
            k_max: 40,
            min_ratio: 0.10,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 4 || self.k_max < self.k_min {
            return Err(Error::Validation(format!(
                "bin range [{}, {}] is invalid (need 4 <= k_min <= k_max)",
                self.k_min, self.k_max
            )));
        }
        if !(self.min_ratio > 0.0 && self.min_ratio < 1.0 / 3.0) {
            return Err(Error::Validation(format!(
                "min zone ratio must lie in (0, 1/3), got {}",
                self.min_ratio
            )));
        }
        Ok(())
    }

    /// Map a point of the unit cube onto a spec.
    fn decode(&self, u: [f64; 3]) -> BinningSpec {
        let span = (self.k_max - self.k_min + 1) as f64;
        let k = (self.k_min + (u[0] * span).floor() as usize).min(self.k_max);
        // stick-breaking on sorted uniforms gives a uniform point on the simplex
        let (lo, hi) = if u[1] <= u[2] {
            (u[1], u[2])
        } else {
            (u[2], u[1])
        };
        let free = 1.0 - 3.0 * self.min_ratio;
        let r1 = self.min_ratio + free * lo;
        let r2 = self.min_ratio + free * (hi - lo);
        BinningSpec {
            k,
            ratios: [r1, r2, 1.0 - r1 - r2],
        }
    }

    /// Clamp a perturbed spec back into the space.
    fn project(&self, k: i64, r: [f64; 3]) -> BinningSpec {
        let k = k.clamp(self.k_min as i64, self.k_max as i64) as usize;
        let clipped = r.map(|v| v.max(self.min_ratio));
        let excess: f64 = clipped.iter().sum::<f64>() - 1.0;
        let slack: Vec<f64> = clipped.iter().map(|v| v - self.min_ratio).collect();
        let slack_sum: f64 = slack.iter().sum();
        let mut ratios = clipped;
        if slack_sum > 0.0 {
            for i in 0..3 {
                ratios[i] -= excess * slack[i] / slack_sum;
            }
        }
        let sum: f64 = ratios.iter().sum();
        ratios.iter_mut().for_each(|v| *v /= sum);
        ratios[2] = 1.0 - ratios[0] - ratios[1];
        BinningSpec { k, ratios }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of distinct candidates evaluated.
    pub budget: usize,
    pub seed: u64,
    /// Share of the budget spent on space-filling seeding.
    pub seed_fraction: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            budget: 60,
            seed: 0,
            seed_fraction: 0.4,
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub spec: BinningSpec,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: Trial,
    /// Every distinct candidate in evaluation order.
    pub trials: Vec<Trial>,
    /// Best score among the seeding candidates only.
    pub best_seeded: f64,
}

fn zone_key(spec: &BinningSpec) -> [usize; 3] {
    spec.zone_bins()
}

struct Search<'a, F> {
    objective: &'a F,
    seen: HashMap<[usize; 3], usize>,
    trials: Vec<Trial>,
}

impl<F> Search<'_, F>
where
    F: Fn(&BinningSpec) -> Result<f64> + Sync,
{
    /// Evaluates the not-yet-seen candidates in parallel, in input order.
    fn evaluate(&mut self, candidates: Vec<BinningSpec>, limit: usize) {
        let mut fresh = Vec::new();
        for spec in candidates {
            if fresh.len() >= limit {
                break;
            }
            let key = zone_key(&spec);
            if !self.seen.contains_key(&key) {
                self.seen.insert(key, usize::MAX);
                fresh.push(spec);
            }
        }
        let objective = self.objective;
        let scores: Vec<f64> = fresh
            .par_iter()
            .map(|spec| match objective(spec) {
                Ok(v) if v.is_finite() => v,
                _ => f64::NEG_INFINITY,
            })
            .collect();
        for (spec, score) in fresh.into_iter().zip(scores) {
            self.seen.insert(zone_key(&spec), self.trials.len());
            self.trials.push(Trial { spec, score });
        }
    }

    fn best(&self) -> Option<Trial> {
        // first maximum wins so ties resolve deterministically
        self.trials
            .iter()
            .copied()
            .fold(None, |acc: Option<Trial>, t| match acc {
                Some(b) if b.score >= t.score => Some(b),
                _ => Some(t),
            })
    }
}

fn latin_hypercube(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let columns: Vec<Vec<f64>> = (0..3)
        .map(|_| {
            let mut strata: Vec<f64> = (0..n)
                .map(|i| (i as f64 + rng.random::<f64>()) / n as f64)
                .collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                strata.swap(i, j);
            }
            strata
        })
        .collect();
    (0..n)
        .map(|i| [columns[0][i], columns[1][i], columns[2][i]])
        .collect()
}

/// Maximizes `objective` over `space`. Candidates whose evaluation fails
/// score −∞. Deterministic for a given seed regardless of thread count.
pub fn optimize_spec<F>(
    space: &SearchSpace,
    cfg: &OptimizerConfig,
    objective: F,
) -> Result<OptimizeResult>
where
    F: Fn(&BinningSpec) -> Result<f64> + Sync,
{
    space.validate()?;
    if cfg.budget < MIN_BUDGET {
        return Err(Error::Validation(format!(
            "optimizer budget must be >= {MIN_BUDGET}, got {}",
            cfg.budget
        )));
    }
    if !(cfg.seed_fraction > 0.0 && cfg.seed_fraction <= 1.0) {
        return Err(Error::Validation("seed fraction must lie in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut search = Search {
        objective: &objective,
        seen: HashMap::new(),
        trials: Vec::new(),
    };

    let n_seed = ((cfg.budget as f64 * cfg.seed_fraction).round() as usize).clamp(1, cfg.budget);
    let seeds: Vec<BinningSpec> = latin_hypercube(n_seed, &mut rng)
        .into_iter()
        .map(|u| space.decode(u))
        .collect();
    search.evaluate(seeds, n_seed);
    let best_seeded = search.best().map_or(f64::NEG_INFINITY, |t| t.score);

    let k_span = (space.k_max - space.k_min) as f64;
    let mut k_radius = (k_span / 4.0).max(1.0);
    let mut r_radius = 0.15;
    let batch = rayon::current_num_threads().clamp(4, 8);
    let mut stale_rounds = 0;
    while search.trials.len() < cfg.budget && stale_rounds < 50 {
        let Some(incumbent) = search.best() else {
            break;
        };
        let before = search.trials.len();
        let proposals: Vec<BinningSpec> = (0..batch * 4)
            .map(|_| {
                let dk = (rng.random::<f64>() * 2.0 - 1.0) * k_radius;
                let dk = if dk.abs() < 1.0 && rng.random::<bool>() {
                    dk.signum()
                } else {
                    dk.round()
                };
                let mut r = incumbent.spec.ratios;
                for v in r.iter_mut() {
                    *v += (rng.random::<f64>() * 2.0 - 1.0) * r_radius;
                }
                space.project(incumbent.spec.k as i64 + dk as i64, r)
            })
            .collect();
        let room = (cfg.budget - search.trials.len()).min(batch);
        search.evaluate(proposals, room);
        let improved = search.best().is_some_and(|b| b.score > incumbent.score);
        if search.trials.len() == before {
            stale_rounds += 1;
        }
        if !improved {
            k_radius = (k_radius * 0.7).max(1.0);
            r_radius = (r_radius * 0.7).max(0.01);
        }
    }

    let best = search
        .best()
        .filter(|t| t.score.is_finite())
        .ok_or_else(|| Error::Convergence("no candidate binning could be evaluated".into()))?;
    Ok(OptimizeResult {
        best,
        trials: search.trials,
        best_seeded,
    })
}
