//! Stream-based query strategies.
//!
//! Each strategy turns the incoming segment into a raw value and votes to
//! request a human rating when that value falls on its side of a fixed
//! threshold. Strategies that compare against history read the human-scored
//! set L and the discarded set U kept in [`ScoredSets`].
//!
//! | kind                  | raw value                                    | query when |
//! |-----------------------|----------------------------------------------|------------|
//! | DivJac, DivBERT       | mean similarity of the source to L           | raw < thr  |
//! | DenJac, DenBERT       | mean similarity of the source to U           | raw > thr  |
//! | TDisJac/BERT/BLEU     | mean pairwise agreement of the translations  | raw < thr  |
//! | TDiff                 | mean QE score of the translations            | raw < thr  |
//! | DivNgram              | fraction of source n-grams unseen in L       | raw > thr  |
//! | DenNgram              | U-frequency of source n-grams, decayed by L  | raw > thr  |
//! | Random                | uniform draw                                 | raw < p    |
//! | Baseline              | 1                                            | always     |

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::textsim::{bleu_from_stats, cosine, jaccard_sorted, preprocess, BleuStats, NgramBag};

pub const DEFAULT_MAX_N: usize = 3;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_P_RANDOM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    DivJac,
    DivBert,
    DenJac,
    DenBert,
    TDisJac,
    TDisBert,
    TDisBleu,
    TDiff,
    DivNgram,
    DenNgram,
    Random,
    Baseline,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 12] = [
        StrategyKind::DivJac,
        StrategyKind::DivBert,
        StrategyKind::DenJac,
        StrategyKind::DenBert,
        StrategyKind::TDisJac,
        StrategyKind::TDisBert,
        StrategyKind::TDisBleu,
        StrategyKind::TDiff,
        StrategyKind::DivNgram,
        StrategyKind::DenNgram,
        StrategyKind::Random,
        StrategyKind::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::DivJac => "DivJac",
            StrategyKind::DivBert => "DivBERT",
            StrategyKind::DenJac => "DenJac",
            StrategyKind::DenBert => "DenBERT",
            StrategyKind::TDisJac => "TDisJac",
            StrategyKind::TDisBert => "TDisBERT",
            StrategyKind::TDisBleu => "TDisBLEU",
            StrategyKind::TDiff => "TDiff",
            StrategyKind::DivNgram => "DivNgram",
            StrategyKind::DenNgram => "DenNgram",
            StrategyKind::Random => "Random",
            StrategyKind::Baseline => "Baseline",
        }
    }

    pub fn is_density(self) -> bool {
        matches!(self, StrategyKind::DenJac | StrategyKind::DenBert | StrategyKind::DenNgram)
    }

    /// Whether a fixed threshold gates this strategy's vote.
    pub fn uses_threshold(self) -> bool {
        !matches!(self, StrategyKind::Random | StrategyKind::Baseline)
    }

    pub fn needs_src_emb(self) -> bool {
        matches!(self, StrategyKind::DivBert | StrategyKind::DenBert)
    }

    pub fn needs_tr_emb(self) -> bool {
        self == StrategyKind::TDisBert
    }

    pub fn needs_qe(self) -> bool {
        self == StrategyKind::TDiff
    }

    /// True when a raw value above the threshold triggers a query.
    fn queries_above(self) -> bool {
        matches!(
            self,
            StrategyKind::DenJac | StrategyKind::DenBert | StrategyKind::DenNgram | StrategyKind::DivNgram
        )
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub threshold: f64,
    /// Highest n-gram order for DivNgram / DenNgram.
    pub max_n: usize,
    /// Decay applied to n-grams already seen in L (DenNgram).
    pub lambda: f64,
    /// Firing probability of the Random strategy.
    pub p_random: f64,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, threshold: f64) -> Self {
        Self {
            kind,
            threshold,
            max_n: DEFAULT_MAX_N,
            lambda: DEFAULT_LAMBDA,
            p_random: DEFAULT_P_RANDOM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() {
            return Err(Error::Config(format!("{}: threshold must be finite", self.kind)));
        }
        if self.max_n < 1 {
            return Err(Error::Config(format!("{}: n-gram order must be at least 1", self.kind)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("{}: lambda must be non-negative", self.kind)));
        }
        if !(0.0..=1.0).contains(&self.p_random) {
            return Err(Error::Config(format!("{}: p_random outside [0, 1]", self.kind)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Jaccard,
    Cosine,
    SentBleu,
}

/// Token interner; strategies compare token ids instead of strings.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn id(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.ids.len() as u32;
        self.ids.insert(token.to_owned(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn encode(&mut self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

fn sorted_set(mut ids: Vec<u32>) -> Vec<u32> {
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// A segment after preprocessing, ready for voting and bookkeeping.
#[derive(Debug, Clone)]
pub struct PreparedSegment {
    pub segment: usize,
    /// Punctuation-stripped source tokens, as a sorted id set.
    pub source_set: Vec<u32>,
    /// N-grams of the punctuation-stripped, lowercased source.
    pub source_ngrams: NgramBag<u32>,
    /// Punctuation-stripped translation tokens, in order.
    pub translations: Vec<Vec<u32>>,
    pub src_emb: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct Member {
    segment: usize,
    tokens: Vec<u32>,
    embedding: Option<Vec<f64>>,
}

/// The human-scored set L and the discarded set U.
#[derive(Debug, Clone)]
pub struct ScoredSets {
    vocab: Vocabulary,
    max_n: usize,
    labeled: Vec<Member>,
    discarded: Vec<Member>,
    labeled_ngrams: NgramBag<u32>,
    discarded_ngrams: NgramBag<u32>,
    seen: HashSet<usize>,
}

impl ScoredSets {
    pub fn new(max_n: usize) -> Self {
        Self {
            vocab: Vocabulary::default(),
            max_n,
            labeled: Vec::new(),
            discarded: Vec::new(),
            labeled_ngrams: NgramBag::new(max_n),
            discarded_ngrams: NgramBag::new(max_n),
            seen: HashSet::new(),
        }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn labeled_len(&self) -> usize {
        self.labeled.len()
    }

    pub fn discarded_len(&self) -> usize {
        self.discarded.len()
    }

    pub fn labeled_segments(&self) -> impl Iterator<Item = usize> + '_ {
        self.labeled.iter().map(|m| m.segment)
    }

    pub fn discarded_segments(&self) -> impl Iterator<Item = usize> + '_ {
        self.discarded.iter().map(|m| m.segment)
    }

    /// Aggregated n-gram bag of L.
    pub fn labeled_ngrams(&self) -> &NgramBag<u32> {
        &self.labeled_ngrams
    }

    /// Aggregated n-gram bag of U.
    pub fn discarded_ngrams(&self) -> &NgramBag<u32> {
        &self.discarded_ngrams
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Preprocesses a segment: punctuation removal for everything, plus
    /// lowercasing for the n-gram view of the source.
    /// Token ids come from this set's vocabulary and mean nothing elsewhere.
    pub fn prepare(
        &mut self,
        segment: usize,
        source: &str,
        translations: &[impl AsRef<str>],
        src_emb: Option<&[f64]>,
    ) -> PreparedSegment {
        let cased = preprocess(source, false);
        let lower = preprocess(source, true);
        let source_set = sorted_set(self.vocab.encode(cased.tokens()));
        let lower_ids = self.vocab.encode(lower.tokens());
        let translations = translations
            .iter()
            .map(|t| self.vocab.encode(preprocess(t.as_ref(), false).tokens()))
            .collect();
        PreparedSegment {
            segment,
            source_set,
            source_ngrams: NgramBag::from_tokens(&lower_ids, self.max_n),
            translations,
            src_emb: src_emb.map(<[f64]>::to_vec),
        }
    }
}

/// Everything a strategy may read when voting on one segment.
#[derive(Debug, Clone, Copy)]
pub struct StrategyContext<'a> {
    pub prepared: &'a PreparedSegment,
    pub sets: &'a ScoredSets,
    /// One embedding per translation, when available.
    pub tr_emb: Option<&'a [&'a [f64]]>,
    pub qe: Option<&'a [f64]>,
}

impl<'a> StrategyContext<'a> {
    pub fn new(prepared: &'a PreparedSegment, sets: &'a ScoredSets) -> Self {
        Self {
            prepared,
            sets,
            tr_emb: None,
            qe: None,
        }
    }
}

/// Mean of `f` over all unordered pairs of `items`.
pub fn mean_pairwise<T>(items: &[T], mut f: impl FnMut(&T, &T) -> Result<f64>) -> Result<f64> {
    let j = items.len();
    if j < 2 {
        return Err(Error::InvalidParameter(format!("agreement needs at least 2 translations, got {j}")));
    }
    let mut sum = 0.0;
    for a in 1..j {
        for b in 0..a {
            sum += f(&items[a], &items[b])?;
        }
    }
    Ok(sum / (j * (j - 1) / 2) as f64)
}

/// Average pairwise agreement among a segment's translations.
pub fn avg_agreement(ctx: &StrategyContext<'_>, measure: Measure) -> Result<f64> {
    let translations = &ctx.prepared.translations;
    match measure {
        Measure::Jaccard => {
            let sets: Vec<Vec<u32>> = translations.iter().cloned().map(sorted_set).collect();
            mean_pairwise(&sets, |a, b| Ok(jaccard_sorted(a, b)))
        }
        Measure::Cosine => {
            let embs = ctx.tr_emb.ok_or(Error::MissingFeature {
                strategy: "TDisBERT",
                what: "translation embeddings",
            })?;
            if embs.len() != translations.len() {
                return Err(Error::DimensionMismatch {
                    left: embs.len(),
                    right: translations.len(),
                });
            }
            mean_pairwise(embs, |a, b| cosine(a, b))
        }
        Measure::SentBleu => {
            let stats: Vec<BleuStats<u32>> = translations.iter().map(|t| BleuStats::new(t)).collect();
            mean_pairwise(&stats, |a, b| Ok((bleu_from_stats(a, b) + bleu_from_stats(b, a)) / 2.0))
        }
    }
}

/// Mean quality-estimation score of a segment's translations.
pub fn avg_quality(qe_scores: &[f64]) -> Result<f64> {
    if qe_scores.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "quality needs scores for at least 2 translations, got {}",
            qe_scores.len()
        )));
    }
    Ok(qe_scores.iter().sum::<f64>() / qe_scores.len() as f64)
}

fn mean_similarity(ctx: &StrategyContext<'_>, members: &[Member], measure: Measure, strategy: &'static str) -> Result<f64> {
    if members.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    match measure {
        Measure::Jaccard => {
            for m in members {
                sum += jaccard_sorted(&ctx.prepared.source_set, &m.tokens);
            }
        }
        Measure::Cosine => {
            let missing = Error::MissingFeature {
                strategy,
                what: "source embeddings",
            };
            let src = ctx.prepared.src_emb.as_deref().ok_or(missing)?;
            for m in members {
                let emb = m.embedding.as_deref().ok_or(Error::MissingFeature {
                    strategy,
                    what: "source embeddings",
                })?;
                sum += cosine(src, emb)?;
            }
        }
        Measure::SentBleu => {
            return Err(Error::InvalidParameter("source similarity supports Jaccard or cosine".into()))
        }
    }
    Ok(sum / members.len() as f64)
}

/// Mean similarity between the source and every member of L; 0 when L is empty.
pub fn diversity_value(ctx: &StrategyContext<'_>, measure: Measure) -> Result<f64> {
    mean_similarity(ctx, &ctx.sets.labeled, measure, "DivBERT")
}

/// Mean similarity between the source and every member of U; 0 when U is empty.
pub fn density_value(ctx: &StrategyContext<'_>, measure: Measure) -> Result<f64> {
    mean_similarity(ctx, &ctx.sets.discarded, measure, "DenBERT")
}

/// Fraction of the source's distinct n-grams that never occur in L.
pub fn div_ngram(ctx: &StrategyContext<'_>) -> f64 {
    let src = &ctx.prepared.source_ngrams;
    if src.distinct() == 0 {
        return 0.0;
    }
    let unseen = src.iter().filter(|(g, _)| !ctx.sets.labeled_ngrams.contains(g)).count();
    unseen as f64 / src.distinct() as f64
}

/// `sum_s #(s|U) exp(-lambda #(s|L)) / (|ngram(src)| |ngram(U)|)`, with the
/// source n-grams and both sizes counted with multiplicity. 0 when U is empty.
pub fn den_ngram(ctx: &StrategyContext<'_>, lambda: f64) -> f64 {
    let src = &ctx.prepared.source_ngrams;
    let u = &ctx.sets.discarded_ngrams;
    let l = &ctx.sets.labeled_ngrams;
    if u.total() == 0 || src.total() == 0 {
        return 0.0;
    }
    let sum: f64 = src
        .iter()
        .map(|(g, c)| c as f64 * u.count(g) as f64 * (-lambda * l.count(g) as f64).exp())
        .sum();
    sum / (src.total() as f64 * u.total() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vote {
    pub raw: f64,
    pub select: bool,
}

/// The raw value a strategy computes for this segment. Random draws from `rng`.
pub fn raw_value(cfg: &StrategyConfig, ctx: &StrategyContext<'_>, rng: &mut SimRng) -> Result<f64> {
    use StrategyKind::*;
    match cfg.kind {
        DivJac => diversity_value(ctx, Measure::Jaccard),
        DivBert => diversity_value(ctx, Measure::Cosine),
        DenJac => density_value(ctx, Measure::Jaccard),
        DenBert => density_value(ctx, Measure::Cosine),
        TDisJac => avg_agreement(ctx, Measure::Jaccard),
        TDisBert => avg_agreement(ctx, Measure::Cosine),
        TDisBleu => avg_agreement(ctx, Measure::SentBleu),
        TDiff => avg_quality(ctx.qe.ok_or(Error::MissingFeature {
            strategy: "TDiff",
            what: "quality-estimation scores",
        })?),
        DivNgram => Ok(div_ngram(ctx)),
        DenNgram => Ok(den_ngram(ctx, cfg.lambda)),
        Random => Ok(rng.uniform()),
        Baseline => Ok(1.0),
    }
}

pub fn vote(cfg: &StrategyConfig, ctx: &StrategyContext<'_>, rng: &mut SimRng) -> Result<Vote> {
    let raw = raw_value(cfg, ctx, rng)?;
    let select = match cfg.kind {
        StrategyKind::Baseline => true,
        StrategyKind::Random => raw < cfg.p_random,
        k if k.queries_above() => raw > cfg.threshold,
        _ => raw < cfg.threshold,
    };
    Ok(Vote { raw, select })
}

/// Files the segment under L when it was queried, otherwise under U.
pub fn record_outcome(sets: &mut ScoredSets, prepared: &PreparedSegment, selected: bool) -> Result<()> {
    if !sets.seen.insert(prepared.segment) {
        return Err(Error::DuplicateSegment(prepared.segment));
    }
    let member = Member {
        segment: prepared.segment,
        tokens: prepared.source_set.clone(),
        embedding: prepared.src_emb.clone(),
    };
    if selected {
        sets.labeled.push(member);
        sets.labeled_ngrams.absorb(&prepared.source_ngrams);
    } else {
        sets.discarded.push(member);
        sets.discarded_ngrams.absorb(&prepared.source_ngrams);
    }
    Ok(())
}
