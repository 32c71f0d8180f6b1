//! Phase and ground flagging, persistence voting and the flag-to-class map.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::calibrate::model::HealthyModel;
use crate::error::{Error, Result};
use crate::label::FaultLabel;

use super::score::GVector;

/// One boolean per phase plus ground.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagSet {
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub ground: bool,
}

impl FlagSet {
    pub fn from_array(f: [bool; 4]) -> Self {
        Self {
            a: f[0],
            b: f[1],
            c: f[2],
            ground: f[3],
        }
    }

    pub fn to_array(self) -> [bool; 4] {
        [self.a, self.b, self.c, self.ground]
    }

    /// Four characters `abcg`, `1` for a raised flag.
    pub fn bits(self) -> String {
        self.to_array()
            .iter()
            .map(|&f| if f { '1' } else { '0' })
            .collect()
    }
}

/// Latest instantaneous flags with a bounded history per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFlags {
    pub current: FlagSet,
    history: [VecDeque<bool>; 4],
    m: usize,
}

impl PhaseFlags {
    pub fn new(m: usize) -> Self {
        let m = m.max(1);
        Self {
            current: FlagSet::default(),
            history: Default::default(),
            m,
        }
    }

    pub fn push(&mut self, flags: FlagSet) {
        self.current = flags;
        for (h, f) in self.history.iter_mut().zip(flags.to_array()) {
            if h.len() == self.m {
                h.pop_front();
            }
            h.push_back(f);
        }
    }

    /// History of channel `ch` (0..3 phases, 3 ground), oldest first.
    pub fn history(&self, ch: usize) -> &VecDeque<bool> {
        &self.history[ch]
    }

    pub fn len(&self) -> usize {
        self.history[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.current = FlagSet::default();
        self.history.iter_mut().for_each(VecDeque::clear);
    }

    /// Channels that pass the j-of-m vote.
    pub fn persistent(&self, j: usize) -> FlagSet {
        let v = |ch: usize| persistence_vote(self.history[ch].iter().copied(), j, self.m);
        FlagSet {
            a: v(0),
            b: v(1),
            c: v(2),
            ground: v(3),
        }
    }
}

/// True when at least `j` of the last `m` flags are raised. With fewer than
/// `m` entries the vote runs over what is available.
pub fn persistence_vote<I>(history: I, j: usize, m: usize) -> bool
where
    I: IntoIterator<Item = bool>,
    I::IntoIter: DoubleEndedIterator,
{
    history.into_iter().rev().take(m).filter(|&f| f).count() >= j
}

/// Per-phase z-scores `(g_p − μ_p) / σ_p`.
pub fn z_scores(gv: &GVector, model: &HealthyModel) -> Result<[f64; 3]> {
    let ps = &model.phase_stats;
    let mut z = [0.0; 3];
    for p in 0..3 {
        if !(ps.sigma_p[p] > 0.0) {
            return Err(Error::Conditioning(format!(
                "sigma of phase {p} is {}",
                ps.sigma_p[p]
            )));
        }
        z[p] = (gv.g[p] - ps.mu_p[p]) / ps.sigma_p[p];
    }
    Ok(z)
}

/// Instantaneous flags: absolute z test or jump against the previous window
/// for each phase; ground by the χ² gate on g0 or its jump.
pub fn instantaneous_flags(gv: &GVector, prev: &GVector, model: &HealthyModel) -> Result<FlagSet> {
    let th = &model.thresholds;
    let z = z_scores(gv, model)?;
    let phase = |p: usize| z[p].abs() > th.z_cls || (gv.g[p] - prev.g[p]).abs() > th.dg_cls;
    Ok(FlagSet {
        a: phase(0),
        b: phase(1),
        c: phase(2),
        ground: gv.g0 > th.tau0_cls || (gv.g0 - prev.g0).abs() > th.dg0_cls,
    })
}

/// One classification step: computes the flags and appends them to `state`.
pub fn classify_step(
    gv: &GVector,
    prev: &GVector,
    model: &HealthyModel,
    mut state: PhaseFlags,
) -> Result<PhaseFlags> {
    let flags = instantaneous_flags(gv, prev, model)?;
    state.push(flags);
    Ok(state)
}

/// Deterministic map from persistent flags to a fault class.
pub fn map_fault_type(persistent: &FlagSet) -> FaultLabel {
    FaultLabel::from_flags(persistent.a, persistent.b, persistent.c, persistent.ground)
}
