//! Run configuration and the bundled per-language-pair tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::ensemble::{Algorithm, DEFAULT_EXP3_GAMMA};
use crate::error::{Error, Result};
use crate::feedback::FallbackMode;
use crate::onception::CombinerMode;
use crate::strategies::{StrategyConfig, StrategyKind, DEFAULT_LAMBDA, DEFAULT_MAX_N, DEFAULT_P_RANDOM};

/// Per-strategy thresholds for each language pair and algorithm.
pub const BUNDLED_THRESHOLDS: &str = include_str!("../fixtures/thresholds.csv");
/// Fallback mode used for each language pair and algorithm.
pub const BUNDLED_FALLBACKS: &str = include_str!("../fixtures/fallbacks.csv");
/// Official top-3 systems per language pair.
pub const BUNDLED_GOLD_TOP3: &str = include_str!("../fixtures/gold_top3.csv");

pub const DEFAULT_TOP_N: usize = 3;

#[derive(Debug, Deserialize)]
struct ThresholdRow {
    strategy: String,
    lang_pair: String,
    algo: String,
    threshold: f64,
}

#[derive(Debug, Deserialize)]
struct FallbackRow {
    lang_pair: String,
    algo: String,
    fallback: String,
}

#[derive(Debug, Deserialize)]
struct GoldRow {
    lang_pair: String,
    rank: usize,
    system: String,
}

fn read_rows<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(origin, Some(i + 2), e.to_string())))
        .collect()
}

/// Thresholds keyed by strategy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thresholds(pub BTreeMap<StrategyKind, f64>);

impl Thresholds {
    /// Rows of a threshold table matching `lang_pair` and `algo`.
    pub fn from_table(text: &str, origin: &Path, lang_pair: &str, algo: Algorithm) -> Result<Self> {
        let mut map = BTreeMap::new();
        for row in read_rows::<ThresholdRow>(text, origin)? {
            if row.lang_pair == lang_pair && row.algo.eq_ignore_ascii_case(algo.name()) {
                map.insert(row.strategy.parse()?, row.threshold);
            }
        }
        Ok(Self(map))
    }

    pub fn bundled(lang_pair: &str, algo: Algorithm) -> Result<Self> {
        Self::from_table(BUNDLED_THRESHOLDS, Path::new("thresholds.csv"), lang_pair, algo)
    }

    pub fn load(path: &Path, lang_pair: &str, algo: Algorithm) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_table(&text, path, lang_pair, algo)
    }

    pub fn get(&self, kind: StrategyKind) -> Option<f64> {
        self.0.get(&kind).copied()
    }

    pub fn set(&mut self, kind: StrategyKind, value: f64) {
        self.0.insert(kind, value);
    }
}

/// Parses `Kind=value`.
pub fn parse_threshold_override(s: &str) -> Result<(StrategyKind, f64)> {
    let (kind, value) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("threshold override {s:?} is not Kind=value")))?;
    let value = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("threshold override {s:?} has a bad number")))?;
    Ok((kind.trim().parse()?, value))
}

/// The fallback mode bundled for a language pair and algorithm.
pub fn bundled_fallback(lang_pair: &str, algo: Algorithm) -> Result<Option<FallbackMode>> {
    read_rows::<FallbackRow>(BUNDLED_FALLBACKS, Path::new("fallbacks.csv"))?
        .into_iter()
        .find(|r| r.lang_pair == lang_pair && r.algo.eq_ignore_ascii_case(algo.name()))
        .map(|r| r.fallback.parse())
        .transpose()
}

/// The bundled official top-3 for a language pair, best first.
pub fn bundled_gold_top3(lang_pair: &str) -> Result<Option<Vec<String>>> {
    let mut rows: Vec<GoldRow> = read_rows::<GoldRow>(BUNDLED_GOLD_TOP3, Path::new("gold_top3.csv"))?
        .into_iter()
        .filter(|r| r.lang_pair == lang_pair)
        .collect();
    if rows.is_empty() {
        return Ok(None);
    }
    rows.sort_by_key(|r| r.rank);
    Ok(Some(rows.into_iter().map(|r| r.system).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub algo: Algorithm,
    pub fallback: FallbackMode,
    pub combiner: CombinerMode,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub exp3_gamma: f64,
    pub max_n: usize,
    pub lambda: f64,
    pub p_random: f64,
    pub top_n: usize,
}

impl RunConfig {
    pub fn new(dataset: impl Into<PathBuf>, algo: Algorithm, fallback: FallbackMode, combiner: CombinerMode) -> Self {
        Self {
            dataset: dataset.into(),
            features: None,
            out: None,
            algo,
            fallback,
            combiner,
            thresholds: Thresholds::default(),
            seed: 0,
            exp3_gamma: DEFAULT_EXP3_GAMMA,
            max_n: DEFAULT_MAX_N,
            lambda: DEFAULT_LAMBDA,
            p_random: DEFAULT_P_RANDOM,
            top_n: DEFAULT_TOP_N,
        }
    }

    /// Strategy configurations for the combiner's members.
    pub fn strategy_configs(&self) -> Result<Vec<StrategyConfig>> {
        self.combiner
            .members()
            .into_iter()
            .map(|kind| {
                let threshold = if kind.uses_threshold() {
                    self.thresholds
                        .get(kind)
                        .ok_or_else(|| Error::Config(format!("no threshold for {kind}")))?
                } else {
                    0.0
                };
                let cfg = StrategyConfig {
                    kind,
                    threshold,
                    max_n: self.max_n,
                    lambda: self.lambda,
                    p_random: self.p_random,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }

    /// Checks that do not need the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::Config("top-n must be at least 1".into()));
        }
        if self.algo == Algorithm::Exp3 && !(self.exp3_gamma > 0.0 && self.exp3_gamma <= 1.0) {
            return Err(Error::Config(format!("EXP3 gamma {} outside (0, 1]", self.exp3_gamma)));
        }
        let configs = self.strategy_configs()?;
        if self.features.is_none() {
            if self.fallback == FallbackMode::Oracle {
                return Err(Error::Config("oracle fallback needs a feature file".into()));
            }
            if let Some(c) = configs
                .iter()
                .find(|c| c.kind.needs_src_emb() || c.kind.needs_tr_emb() || c.kind.needs_qe())
            {
                return Err(Error::Config(format!("{} needs a feature file", c.kind)));
            }
        }
        Ok(())
    }
}
