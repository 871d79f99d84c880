//! Expert advice over query strategies.
//!
//! Each strategy is an expert whose advice is its vote. The combiner samples a
//! strategy in proportion to its weight and follows its vote. After a query,
//! the change in the MT ensemble's regret `dR` becomes a loss for every
//! strategy:
//!
//! ```text
//! full feedback:  yes-voters dR,          no-voters 1 - dR          (dR in [0, 1])
//! bandit:         yes-voters (dR + 1)/2,  no-voters (1 - dR)/2      (dR in [-1, 1])
//! ```
//!
//! and the weights take an exponential step `log w_k -= eta_s * loss_k` with
//! `eta_s = sqrt(8 ln K / T)`.

use std::fmt;
use std::str::FromStr;

use crate::ensemble::{learning_rate, shift_to_max_zero, softmax, RegretSnapshot};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::strategies::{StrategyConfig, StrategyKind};

/// How strategy votes become a query decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CombinerMode {
    /// Every strategy except Baseline.
    All,
    /// All minus the density family.
    NoDensity,
    /// All minus the density family and TDiff.
    NoDensityTDiff,
    /// One strategy, its vote used directly.
    Single(StrategyKind),
    /// Query every segment.
    Baseline,
}

impl CombinerMode {
    /// Strategies that take part in this mode, in roster order.
    pub fn members(self) -> Vec<StrategyKind> {
        let combined = StrategyKind::ALL.into_iter().filter(|k| *k != StrategyKind::Baseline);
        match self {
            CombinerMode::All => combined.collect(),
            CombinerMode::NoDensity => combined.filter(|k| !k.is_density()).collect(),
            CombinerMode::NoDensityTDiff => combined
                .filter(|k| !k.is_density() && *k != StrategyKind::TDiff)
                .collect(),
            CombinerMode::Single(k) => vec![k],
            CombinerMode::Baseline => vec![StrategyKind::Baseline],
        }
    }

    pub fn is_combined(self) -> bool {
        matches!(self, CombinerMode::All | CombinerMode::NoDensity | CombinerMode::NoDensityTDiff)
    }

    pub fn name(self) -> String {
        match self {
            CombinerMode::All => "onception".into(),
            CombinerMode::NoDensity => "onception-no-density".into(),
            CombinerMode::NoDensityTDiff => "onception-no-density-tdiff".into(),
            CombinerMode::Single(k) => k.name().into(),
            CombinerMode::Baseline => "baseline".into(),
        }
    }
}

impl fmt::Display for CombinerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CombinerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onception" | "all" => Ok(CombinerMode::All),
            "onception-no-density" => Ok(CombinerMode::NoDensity),
            "onception-no-density-tdiff" => Ok(CombinerMode::NoDensityTDiff),
            "baseline" => Ok(CombinerMode::Baseline),
            _ => s.parse().map(CombinerMode::Single),
        }
    }
}

/// Losses for each strategy given its vote and the regret change.
pub fn strategy_losses(votes: &[bool], delta_r: f64, bandit: bool) -> Result<Vec<f64>> {
    let (min, max) = if bandit { (-1.0, 1.0) } else { (0.0, 1.0) };
    if !(min..=max).contains(&delta_r) {
        return Err(Error::RegretDeltaOutOfRange { value: delta_r, min, max });
    }
    let yes = if bandit { (delta_r + 1.0) / 2.0 } else { delta_r };
    Ok(votes.iter().map(|&v| if v { yes } else { 1.0 - yes }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyEnsembleState {
    members: Vec<StrategyConfig>,
    log_weights: Vec<f64>,
    eta: f64,
    last_regret: f64,
    update_count: u64,
    bandit: bool,
}

impl StrategyEnsembleState {
    /// Uniform weights over `members` for a stream of `horizon` segments.
    /// `bandit` selects the loss law matching an EXP3 ensemble.
    pub fn new(members: Vec<StrategyConfig>, horizon: usize, bandit: bool) -> Result<Self> {
        let k = members.len();
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 strategies, got {k}")));
        }
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(Self {
            log_weights: vec![0.0; k],
            eta: learning_rate(k, horizon),
            last_regret: 0.0,
            update_count: 0,
            bandit,
            members,
        })
    }

    pub fn members(&self) -> &[StrategyConfig] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn last_regret(&self) -> f64 {
        self.last_regret
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn is_bandit(&self) -> bool {
        self.bandit
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weight_shares(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }

    /// Follows the vote of a strategy drawn in proportion to its weight.
    pub fn combined_vote(&self, votes: &[bool], rng: &mut SimRng) -> Result<(bool, usize)> {
        if votes.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: votes.len(),
                right: self.len(),
            });
        }
        let chosen = rng.categorical(&self.weight_shares());
        Ok((votes[chosen], chosen))
    }

    /// Applies the regret-driven update. Leaves the state untouched when the
    /// segment was not queried.
    pub fn update(&mut self, votes: &[bool], regret_now: RegretSnapshot, queried: bool) -> Result<()> {
        if !queried {
            return Ok(());
        }
        if votes.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: votes.len(),
                right: self.len(),
            });
        }
        let (min, max) = if self.bandit { (-1.0, 1.0) } else { (0.0, 1.0) };
        let delta = (regret_now.value - self.last_regret).clamp(min, max);
        let losses = strategy_losses(votes, delta, self.bandit)?;
        for (lw, l) in self.log_weights.iter_mut().zip(&losses) {
            *lw -= self.eta * l;
        }
        shift_to_max_zero(&mut self.log_weights);
        self.last_regret = regret_now.value;
        self.update_count += 1;
        Ok(())
    }
}
