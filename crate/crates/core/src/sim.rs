//! The experiment loop: stream segments, vote, query, learn, measure.

use crate::config::RunConfig;
use crate::datamodel::{load_dataset, load_feature_store, make_stream, Dataset, FeatureStore};
use crate::ensemble::{loss_from_score, Algorithm, EnsembleState};
use crate::error::{Error, Result};
use crate::feedback::{resolve_score, FeedbackState};
use crate::metrics::{kendall_tau_b, overlap_top_n};
use crate::onception::{CombinerMode, StrategyEnsembleState};
use crate::rng::{streams, SimRng};
use crate::strategies::{record_outcome, vote, ScoredSets, StrategyConfig, StrategyContext, StrategyKind};

/// One processed segment.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub segment: usize,
    /// Query events so far, this one included.
    pub iteration: usize,
    pub queried: bool,
    pub overlap_top_n: f64,
    pub kendall_tau: f64,
    pub queries_cum: usize,
    /// Translation shown for this segment.
    pub chosen: usize,
    pub ensemble_shares: Vec<f64>,
    /// Empty when no combiner is in use.
    pub strategy_shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub systems: Vec<String>,
    /// Strategies that received weights; empty for single-strategy runs.
    pub strategies: Vec<StrategyKind>,
    pub initial_strategy_shares: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub top_n: usize,
    /// Selection probabilities of the ensemble after the last segment.
    pub final_probabilities: Vec<f64>,
}

impl RunOutput {
    pub fn queries(&self) -> usize {
        self.records.last().map_or(0, |r| r.queries_cum)
    }
}

/// Loads the dataset and features named in `cfg` and runs the simulation.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let fs = cfg
        .features
        .as_ref()
        .map(|p| load_feature_store(p, &ds))
        .transpose()?;
    simulate(&ds, fs.as_ref(), cfg)
}

enum Decider {
    Combined(StrategyEnsembleState),
    Single,
    Always,
}

fn check_features(ds: &Dataset, fs: Option<&FeatureStore>, cfg: &RunConfig, members: &[StrategyConfig]) -> Result<()> {
    let has = |f: fn(&FeatureStore) -> bool| fs.is_some_and(f);
    for m in members {
        let missing = if m.kind.needs_src_emb() && !has(FeatureStore::has_src_emb) {
            Some("source embeddings")
        } else if m.kind.needs_tr_emb() && !has(FeatureStore::has_tr_emb) {
            Some("translation embeddings")
        } else if m.kind.needs_qe() && !has(FeatureStore::has_qe) {
            Some("quality-estimation scores")
        } else {
            None
        };
        if let Some(what) = missing {
            return Err(Error::Config(format!("{} needs {what} in the feature file", m.kind)));
        }
    }
    if cfg.fallback == crate::feedback::FallbackMode::Oracle && !has(FeatureStore::has_oracle) {
        return Err(Error::Config("oracle fallback needs oracle scores in the feature file".into()));
    }
    if cfg.top_n > ds.gold_ranking.len() {
        return Err(Error::Config(format!(
            "top-n {} exceeds the gold ranking length {}",
            cfg.top_n,
            ds.gold_ranking.len()
        )));
    }
    Ok(())
}

/// Runs the loop over an in-memory dataset.
pub fn simulate(ds: &Dataset, fs: Option<&FeatureStore>, cfg: &RunConfig) -> Result<RunOutput> {
    ds.check()?;
    let members = cfg.strategy_configs()?;
    check_features(ds, fs, cfg, &members)?;
    let j = ds.num_systems();
    let horizon = ds.num_segments();

    let mut ensemble = EnsembleState::new(j, horizon, cfg.algo, cfg.exp3_gamma)?;
    let mut decider = match cfg.combiner {
        m if m.is_combined() => Decider::Combined(StrategyEnsembleState::new(
            members.clone(),
            horizon,
            cfg.algo == Algorithm::Exp3,
        )?),
        CombinerMode::Baseline => Decider::Always,
        _ => Decider::Single,
    };
    let strategy_shares = |d: &Decider| match d {
        Decider::Combined(st) => st.weight_shares(),
        _ => Vec::new(),
    };
    let initial_strategy_shares = strategy_shares(&decider);

    let mut forecaster_rng = SimRng::stream(cfg.seed, streams::FORECASTER);
    let mut strategies_rng = SimRng::stream(cfg.seed, streams::STRATEGIES);
    let mut combiner_rng = SimRng::stream(cfg.seed, streams::COMBINER);

    let mut feedback = FeedbackState::new(j);
    let mut sets = ScoredSets::new(cfg.max_n);
    let gold: Vec<usize> = ds
        .gold_ranking
        .iter()
        .map(|g| ds.system_index(g).expect("checked dataset"))
        .collect();
    let gold_y: Vec<f64> = (0..gold.len()).map(|r| -(r as f64)).collect();

    let order = make_stream(ds, cfg.seed);
    let mut records = Vec::with_capacity(horizon);
    let mut queries = 0;

    for &seg in &order.permutation {
        let segment = &ds.segments[seg];
        let chosen = ensemble.select_translation(&mut forecaster_rng);

        let prepared = sets.prepare(seg, &segment.source, &segment.translations, fs.and_then(|f| f.src_emb(seg)));
        let tr_emb: Option<Vec<&[f64]>> = fs
            .filter(|f| f.has_tr_emb())
            .map(|f| (0..j).filter_map(|s| f.tr_emb(seg, s)).collect());
        let ctx = StrategyContext {
            prepared: &prepared,
            sets: &sets,
            tr_emb: tr_emb.as_deref(),
            qe: fs.and_then(|f| f.qe_scores(seg)),
        };
        let votes = members
            .iter()
            .map(|m| vote(m, &ctx, &mut strategies_rng).map(|v| v.select))
            .collect::<Result<Vec<bool>>>()
            .map_err(|e| e.at(seg, "vote"))?;

        let queried = match &decider {
            Decider::Combined(st) => st.combined_vote(&votes, &mut combiner_rng).map_err(|e| e.at(seg, "combine"))?.0,
            Decider::Single => votes[0],
            Decider::Always => true,
        };

        if queried {
            queries += 1;
            match cfg.algo {
                Algorithm::Ewaf => {
                    let losses = (0..j)
                        .map(|s| resolve_score(ds, fs, &mut feedback, seg, s, cfg.fallback).map(loss_from_score))
                        .collect::<Result<Vec<f64>>>()
                        .map_err(|e| e.at(seg, "feedback"))?;
                    ensemble.ewaf_update(&losses).map_err(|e| e.at(seg, "ensemble"))?;
                }
                Algorithm::Exp3 => {
                    let score = resolve_score(ds, fs, &mut feedback, seg, chosen, cfg.fallback)
                        .map_err(|e| e.at(seg, "feedback"))?;
                    ensemble
                        .exp3_update(chosen, loss_from_score(score))
                        .map_err(|e| e.at(seg, "ensemble"))?;
                }
            }
            if let Decider::Combined(st) = &mut decider {
                st.update(&votes, ensemble.regret(), true).map_err(|e| e.at(seg, "strategies"))?;
            }
        }
        record_outcome(&mut sets, &prepared, queried).map_err(|e| e.at(seg, "bookkeeping"))?;

        let ranking = ensemble.ranking();
        let overlap = overlap_top_n(&ranking, &gold, cfg.top_n).map_err(|e| e.at(seg, "metrics"))?;
        let gold_x: Vec<f64> = gold.iter().map(|&g| ensemble.log_weights()[g]).collect();
        let tau = if gold.len() >= 2 {
            kendall_tau_b(&gold_x, &gold_y).map_err(|e| e.at(seg, "metrics"))?
        } else {
            0.0
        };
        records.push(IterationRecord {
            segment: seg,
            iteration: queries,
            queried,
            overlap_top_n: overlap,
            kendall_tau: tau,
            queries_cum: queries,
            chosen,
            ensemble_shares: ensemble.weight_shares(),
            strategy_shares: strategy_shares(&decider),
        });
    }

    Ok(RunOutput {
        systems: ds.systems.clone(),
        strategies: match &decider {
            Decider::Combined(st) => st.members().iter().map(|m| m.kind).collect(),
            _ => Vec::new(),
        },
        initial_strategy_shares,
        records,
        top_n: cfg.top_n,
        final_probabilities: ensemble.probabilities(),
    })
}
