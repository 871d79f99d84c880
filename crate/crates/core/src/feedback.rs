//! Simulated human feedback with fallbacks for translations that were never rated.

use std::fmt;
use std::str::FromStr;

use crate::datamodel::{normalize_raw_score, Dataset, FeatureStore, UnitScore};
use crate::error::{Error, Result};

/// What to return when a translation has no recorded human score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FallbackMode {
    /// Score 0.
    Zero,
    /// Mean of the real scores the system has received so far.
    Avg,
    /// Precomputed reference-based metric score from the feature store.
    Oracle,
}

impl FallbackMode {
    pub fn name(self) -> &'static str {
        match self {
            FallbackMode::Zero => "zero",
            FallbackMode::Avg => "avg",
            FallbackMode::Oracle => "oracle",
        }
    }
}

impl fmt::Display for FallbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FallbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "human-zero" => Ok(FallbackMode::Zero),
            "avg" | "human-avg" => Ok(FallbackMode::Avg),
            "oracle" | "comet" | "human-comet" => Ok(FallbackMode::Oracle),
            other => Err(Error::Config(format!("unknown fallback mode {other:?}"))),
        }
    }
}

/// Real scores returned so far, per system. Fallback values never enter.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeedbackState {
    history: Vec<Vec<UnitScore>>,
}

impl FeedbackState {
    pub fn new(systems: usize) -> Self {
        Self {
            history: vec![Vec::new(); systems],
        }
    }

    pub fn history(&self, sys: usize) -> &[UnitScore] {
        &self.history[sys]
    }

    /// Mean of the history in hundredths, rounded half up; 0.00 when empty.
    pub fn average(&self, sys: usize) -> UnitScore {
        let h = &self.history[sys];
        if h.is_empty() {
            return UnitScore::ZERO;
        }
        let sum: u64 = h.iter().map(|s| u64::from(s.hundredths())).sum();
        let len = h.len() as u64;
        let rounded = (2 * sum + len) / (2 * len);
        UnitScore::from_hundredths(rounded as u8).expect("mean of scores stays in range")
    }
}

pub fn resolve_score(
    ds: &Dataset,
    fs: Option<&FeatureStore>,
    st: &mut FeedbackState,
    seg: usize,
    sys: usize,
    mode: FallbackMode,
) -> Result<UnitScore> {
    let segment = ds.segments.get(seg).ok_or(Error::IndexOutOfRange {
        index: seg,
        len: ds.num_segments(),
    })?;
    let raw = segment.raw_scores.get(sys).ok_or(Error::IndexOutOfRange {
        index: sys,
        len: ds.num_systems(),
    })?;
    if let Some(raw) = *raw {
        let score = normalize_raw_score(raw)?;
        st.history[sys].push(score);
        return Ok(score);
    }
    match mode {
        FallbackMode::Zero => Ok(UnitScore::ZERO),
        FallbackMode::Avg => Ok(st.average(sys)),
        FallbackMode::Oracle => fs
            .and_then(|f| f.oracle_score(seg, sys))
            .map(UnitScore::quantize)
            .ok_or(Error::MissingFeature {
                strategy: "oracle fallback",
                what: "oracle scores",
            }),
    }
}
