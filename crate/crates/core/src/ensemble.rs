//! Online weighting of translation systems.
//!
//! Two learners share one state type:
//!
//! - **EWAF** (full feedback): every system receives a loss each update and
//!   all weights are multiplied by `exp(-eta * loss)`, with
//!   `eta = sqrt(8 ln J / T)`.
//! - **EXP3** (bandit feedback): only the sampled system is scored. Selection
//!   mixes the weight distribution with uniform exploration,
//!   `p_j = (1 - gamma) w_j / sum(w) + gamma / J`, and the chosen arm's
//!   log-weight grows by `(gamma / J) * reward / p_f` with `reward = 1 - loss`.
//!
//! Weights are kept as log-weights shifted so the maximum is zero after every
//! update; probabilities and weight ratios are invariant under that shift.

use std::fmt;
use std::str::FromStr;

use crate::datamodel::UnitScore;
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const DEFAULT_EXP3_GAMMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ewaf,
    Exp3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ewaf => "EWAF",
            Algorithm::Exp3 => "EXP3",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ewaf" => Ok(Algorithm::Ewaf),
            "exp3" => Ok(Algorithm::Exp3),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// `sqrt(8 ln k / horizon)`.
pub fn learning_rate(k: usize, horizon: usize) -> f64 {
    (8.0 * (k as f64).ln() / horizon as f64).sqrt()
}

/// Normalizes log-weights into a probability vector.
pub(crate) fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub(crate) fn shift_to_max_zero(log_weights: &mut [f64]) {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        log_weights.iter_mut().for_each(|l| *l -= max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretSnapshot {
    pub value: f64,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    algo: Algorithm,
    log_weights: Vec<f64>,
    eta: f64,
    gamma: f64,
    cum_loss: Vec<f64>,
    play_count: Vec<u64>,
    forecaster_cum_loss: f64,
    forecaster_avg_loss_num: f64,
    forecaster_avg_loss_den: f64,
    optimal_cum_loss: f64,
    t: u64,
}

impl EnsembleState {
    /// Uniform weights over `j` systems for a run of `horizon` updates.
    pub fn new(j: usize, horizon: usize, algo: Algorithm, gamma: f64) -> Result<Self> {
        if j < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 systems, got {j}")));
        }
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if algo == Algorithm::Exp3 && !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("EXP3 gamma {gamma} outside (0, 1]")));
        }
        Ok(Self {
            algo,
            log_weights: vec![0.0; j],
            eta: learning_rate(j, horizon),
            gamma,
            cum_loss: vec![0.0; j],
            play_count: vec![0; j],
            forecaster_cum_loss: 0.0,
            forecaster_avg_loss_num: 0.0,
            forecaster_avg_loss_den: 0.0,
            optimal_cum_loss: 0.0,
            t: 0,
        })
    }

    pub fn algo(&self) -> Algorithm {
        self.algo
    }

    pub fn num_systems(&self) -> usize {
        self.log_weights.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn updates(&self) -> u64 {
        self.t
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn cum_loss(&self) -> &[f64] {
        &self.cum_loss
    }

    pub fn play_count(&self) -> &[u64] {
        &self.play_count
    }

    pub fn forecaster_cum_loss(&self) -> f64 {
        self.forecaster_cum_loss
    }

    pub fn optimal_cum_loss(&self) -> f64 {
        self.optimal_cum_loss
    }

    /// `w_j / sum(w)`, ignoring EXP3 exploration.
    pub fn weight_shares(&self) -> Vec<f64> {
        softmax(&self.log_weights)
    }

    /// The distribution translations are sampled from.
    pub fn probabilities(&self) -> Vec<f64> {
        let shares = self.weight_shares();
        match self.algo {
            Algorithm::Ewaf => shares,
            Algorithm::Exp3 => {
                let uniform = self.gamma / self.num_systems() as f64;
                shares.into_iter().map(|s| (1.0 - self.gamma) * s + uniform).collect()
            }
        }
    }

    pub fn select_translation(&self, rng: &mut SimRng) -> usize {
        rng.categorical(&self.probabilities())
    }

    /// Full-feedback update with one loss per system.
    pub fn ewaf_update(&mut self, losses: &[f64]) -> Result<()> {
        if self.algo != Algorithm::Ewaf {
            return Err(Error::InvalidParameter("ewaf_update on an EXP3 ensemble".into()));
        }
        if losses.len() != self.num_systems() {
            return Err(Error::DimensionMismatch {
                left: losses.len(),
                right: self.num_systems(),
            });
        }
        if let Some(&bad) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::LossOutOfRange(bad));
        }
        let probs = self.probabilities();
        let expected: f64 = probs.iter().zip(losses).map(|(p, l)| p * l).sum();
        let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
        self.forecaster_cum_loss += expected;
        self.optimal_cum_loss += best;
        for ((lw, cl), &l) in self.log_weights.iter_mut().zip(&mut self.cum_loss).zip(losses) {
            *lw -= self.eta * l;
            *cl += l;
        }
        shift_to_max_zero(&mut self.log_weights);
        self.t += 1;
        Ok(())
    }

    /// Bandit update for the arm that was played.
    pub fn exp3_update(&mut self, chosen: usize, loss: f64) -> Result<()> {
        if self.algo != Algorithm::Exp3 {
            return Err(Error::InvalidParameter("exp3_update on an EWAF ensemble".into()));
        }
        let j = self.num_systems();
        if chosen >= j {
            return Err(Error::IndexOutOfRange { index: chosen, len: j });
        }
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::LossOutOfRange(loss));
        }
        let p = self.probabilities()[chosen];
        let reward = 1.0 - loss;
        self.log_weights[chosen] += (self.gamma / j as f64) * reward / p;
        shift_to_max_zero(&mut self.log_weights);
        self.cum_loss[chosen] += loss;
        self.play_count[chosen] += 1;
        self.forecaster_avg_loss_num += loss;
        self.forecaster_avg_loss_den += 1.0;
        self.t += 1;
        Ok(())
    }

    /// Expected forecaster loss minus the sum of per-update minimum losses.
    pub fn dynamic_regret_full(&self) -> RegretSnapshot {
        RegretSnapshot {
            value: self.forecaster_cum_loss - self.optimal_cum_loss,
            t: self.t,
        }
    }

    /// Forecaster average loss minus the lowest per-arm average loss.
    ///
    /// An arm never played would otherwise look perfect; its average is taken
    /// as the midpoint between zero and the highest average among played arms
    /// (zero when nothing has been played).
    pub fn regret_bandit(&self) -> RegretSnapshot {
        let forecaster = if self.forecaster_avg_loss_den > 0.0 {
            self.forecaster_avg_loss_num / self.forecaster_avg_loss_den
        } else {
            0.0
        };
        let arm_avgs: Vec<Option<f64>> = self
            .cum_loss
            .iter()
            .zip(&self.play_count)
            .map(|(&l, &n)| (n > 0).then(|| l / n as f64))
            .collect();
        RegretSnapshot {
            value: bandit_regret(forecaster, &arm_avgs),
            t: self.t,
        }
    }

    /// The regret tracker matching this ensemble's algorithm.
    pub fn regret(&self) -> RegretSnapshot {
        match self.algo {
            Algorithm::Ewaf => self.dynamic_regret_full(),
            Algorithm::Exp3 => self.regret_bandit(),
        }
    }

    /// Indices of the `n` heaviest systems; ties go to the lower index.
    pub fn top_n(&self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_systems()).collect();
        order.sort_by(|&a, &b| {
            self.log_weights[b]
                .partial_cmp(&self.log_weights[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order.truncate(n);
        order
    }

    /// Every system, heaviest first.
    pub fn ranking(&self) -> Vec<usize> {
        self.top_n(self.num_systems())
    }
}

/// Bandit regret from a forecaster average and per-arm averages (`None` for
/// arms that were never played).
pub fn bandit_regret(forecaster_avg: f64, arm_avgs: &[Option<f64>]) -> f64 {
    let max_played = arm_avgs.iter().flatten().copied().fold(None, |m: Option<f64>, x| {
        Some(m.map_or(x, |m| m.max(x)))
    });
    let imputed = max_played.map_or(0.0, |m| m / 2.0);
    let best = arm_avgs
        .iter()
        .map(|a| a.unwrap_or(imputed))
        .fold(f64::INFINITY, f64::min);
    (forecaster_avg - best).clamp(-1.0, 1.0)
}

/// `1 - score`.
pub fn loss_from_score(s: UnitScore) -> f64 {
    f64::from(100 - s.hundredths()) / 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn learning_rate_examples() {
        // sqrt(8 ln 8 / 2000) and sqrt(8 ln 2), evaluated with mpmath at 30 digits.
        assert_abs_diff_eq!(learning_rate(8, 2000), 0.0912017881772026645, epsilon = 1e-12);
        assert_abs_diff_eq!(learning_rate(8, 2000), 0.09121, epsilon = 1e-5);
        assert_abs_diff_eq!(learning_rate(2, 1), 2.354820045030949, epsilon = 1e-12);
    }

    #[test]
    fn starts_uniform() {
        for algo in [Algorithm::Ewaf, Algorithm::Exp3] {
            let st = EnsembleState::new(5, 100, algo, 0.1).unwrap();
            for p in st.probabilities() {
                assert_abs_diff_eq!(p, 0.2, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn init_rejects_bad_parameters() {
        assert!(EnsembleState::new(1, 10, Algorithm::Ewaf, 0.1).is_err());
        assert!(EnsembleState::new(3, 0, Algorithm::Ewaf, 0.1).is_err());
        assert!(EnsembleState::new(3, 10, Algorithm::Exp3, 0.0).is_err());
        assert!(EnsembleState::new(3, 10, Algorithm::Exp3, 1.5).is_err());
        assert!(EnsembleState::new(3, 10, Algorithm::Ewaf, 0.0).is_ok());
    }

    #[test]
    fn loss_map() {
        assert_eq!(loss_from_score(UnitScore::ONE), 0.0);
        assert_eq!(loss_from_score(UnitScore::ZERO), 1.0);
        assert_abs_diff_eq!(loss_from_score(UnitScore::quantize(0.90)), 0.10, epsilon = 1e-15);
    }

    #[test]
    fn ewaf_zero_losses_keep_weights() {
        let mut st = EnsembleState::new(3, 10, Algorithm::Ewaf, 0.0).unwrap();
        st.ewaf_update(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(st.log_weights(), &[0.0, 0.0, 0.0]);
        assert_eq!(st.updates(), 1);
    }

    #[test]
    fn ewaf_single_step_factor() {
        let mut st = EnsembleState::new(2, 1, Algorithm::Ewaf, 0.0).unwrap();
        st.eta = 0.5;
        st.ewaf_update(&[1.0, 0.0]).unwrap();
        let w = st.weight_shares();
        // w0 / w1 = e^{-0.5}
        assert_abs_diff_eq!(w[0] / w[1], 0.6065306597126334, epsilon = 1e-12);
    }

    #[test]
    fn ewaf_ratio_after_repeats() {
        let mut st = EnsembleState::new(2, 50, Algorithm::Ewaf, 0.0).unwrap();
        for t in 1..=20 {
            st.ewaf_update(&[0.0, 1.0]).unwrap();
            let w = st.weight_shares();
            assert_abs_diff_eq!((w[0] / w[1]).ln(), st.eta() * t as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn ewaf_rejects_bad_losses() {
        let mut st = EnsembleState::new(2, 5, Algorithm::Ewaf, 0.0).unwrap();
        assert!(matches!(st.ewaf_update(&[0.5, 1.5]), Err(Error::LossOutOfRange(_))));
        assert!(st.ewaf_update(&[0.5]).is_err());
        assert!(st.exp3_update(0, 0.5).is_err());
    }

    #[test]
    fn exp3_zero_reward_is_noop_on_weights() {
        let mut st = EnsembleState::new(3, 10, Algorithm::Exp3, 0.1).unwrap();
        st.exp3_update(1, 1.0).unwrap();
        assert_eq!(st.log_weights(), &[0.0, 0.0, 0.0]);
        assert_eq!(st.play_count(), &[0, 1, 0]);
    }

    #[test]
    fn exp3_first_increment() {
        let mut st = EnsembleState::new(2, 10, Algorithm::Exp3, 0.1).unwrap();
        st.exp3_update(0, 0.0).unwrap();
        let lw = st.log_weights();
        assert_abs_diff_eq!(lw[0] - lw[1], 0.1, epsilon = 1e-15);
        assert!(st.exp3_update(2, 0.0).is_err());
        assert!(st.exp3_update(0, -0.1).is_err());
    }

    #[test]
    fn exp3_gamma_one_is_uniform() {
        let mut st = EnsembleState::new(4, 10, Algorithm::Exp3, 1.0).unwrap();
        st.exp3_update(0, 0.0).unwrap();
        st.exp3_update(0, 0.0).unwrap();
        for p in st.probabilities() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn dynamic_regret_examples() {
        let st = EnsembleState::new(2, 10, Algorithm::Ewaf, 0.0).unwrap();
        assert_eq!(st.dynamic_regret_full().value, 0.0);

        // eta = 0 keeps the weights uniform.
        let mut st = EnsembleState::new(2, 10, Algorithm::Ewaf, 0.0).unwrap();
        st.eta = 0.0;
        st.ewaf_update(&[0.0, 1.0]).unwrap();
        st.ewaf_update(&[0.2, 0.8]).unwrap();
        assert_abs_diff_eq!(st.dynamic_regret_full().value, 0.8, epsilon = 1e-15);

        let mut st = EnsembleState::new(3, 10, Algorithm::Ewaf, 0.0).unwrap();
        for _ in 0..5 {
            st.ewaf_update(&[0.3, 0.3, 0.3]).unwrap();
        }
        assert_abs_diff_eq!(st.dynamic_regret_full().value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bandit_regret_examples() {
        assert_abs_diff_eq!(bandit_regret(0.6, &[Some(0.4), Some(0.7)]), 0.2, epsilon = 1e-15);
        // Never-played arm imputed at 0.8 / 2 = 0.4.
        assert_abs_diff_eq!(bandit_regret(0.6, &[None, Some(0.8)]), 0.2, epsilon = 1e-15);
        assert_eq!(bandit_regret(0.0, &[None, None]), 0.0);

        let mut st = EnsembleState::new(3, 10, Algorithm::Exp3, 0.1).unwrap();
        for arm in [0, 1, 2, 0, 1] {
            st.exp3_update(arm, 0.5).unwrap();
        }
        assert_abs_diff_eq!(st.regret_bandit().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn top_n_examples() {
        let mut st = EnsembleState::new(3, 10, Algorithm::Ewaf, 0.0).unwrap();
        assert_eq!(st.top_n(2), vec![0, 1]);
        st.log_weights = vec![3f64.ln(), 1f64.ln(), 2f64.ln()];
        assert_eq!(st.top_n(2), vec![0, 2]);
        assert_eq!(st.top_n(3), vec![0, 2, 1]);
    }

    #[test]
    fn select_degenerate_distribution() {
        let mut st = EnsembleState::new(3, 10, Algorithm::Ewaf, 0.0).unwrap();
        st.log_weights = vec![-1000.0, 0.0, -1000.0];
        let mut rng = SimRng::new(1);
        let hits = (0..10_000).filter(|_| st.select_translation(&mut rng) == 1).count();
        assert!(hits as f64 / 10_000.0 >= 0.999);
    }
}
