//! Text preprocessing and similarity primitives shared by the query strategies.

use std::collections::BTreeMap;

use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

/// Highest n-gram order used by sentence BLEU.
pub const BLEU_MAX_ORDER: usize = 4;

/// A preprocessed segment. Never contains empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Splits on Unicode whitespace, dropping empty tokens.
    pub fn from_text(text: &str) -> Self {
        TokenSequence(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Distinct tokens in sorted order.
    pub fn to_set(&self) -> Vec<&str> {
        let mut set: Vec<&str> = self.0.iter().map(String::as_str).collect();
        set.sort_unstable();
        set.dedup();
        set
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence(iter.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect())
    }
}

pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        // ASCII symbols ($ + < = > ^ ` | ~) are category S, not P.
        return c.is_ascii_punctuation() && !matches!(c, '$' | '+' | '<' | '=' | '>' | '^' | '`' | '|' | '~');
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Removes general-category P codepoints, optionally lowercases, and splits
/// on whitespace.
pub fn preprocess(text: &str, lowercase: bool) -> TokenSequence {
    let stripped: String = text.chars().filter(|&c| !is_punctuation(c)).collect();
    if lowercase {
        TokenSequence::from_text(&stripped.to_lowercase())
    } else {
        TokenSequence::from_text(&stripped)
    }
}

/// Jaccard index of two sorted, deduplicated slices.
/// Two empty sets are identical (1.0).
pub fn jaccard_sorted<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Jaccard index over the token sets of two sequences.
pub fn jaccard(a: &TokenSequence, b: &TokenSequence) -> f64 {
    jaccard_sorted(&a.to_set(), &b.to_set())
}

/// Cosine similarity; 0.0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&x, &y) in u.iter().zip(v) {
        dot += x * y;
        nu += x * x;
        nv += y * y;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Multiset of contiguous n-grams of orders `1..=max_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramBag<T = String> {
    counts: BTreeMap<Vec<T>, usize>,
    max_n: usize,
    total: usize,
}

impl<T: Ord + Clone> NgramBag<T> {
    pub fn new(max_n: usize) -> Self {
        assert!(max_n >= 1, "max_n must be at least 1");
        Self {
            counts: BTreeMap::new(),
            max_n,
            total: 0,
        }
    }

    pub fn from_tokens(tokens: &[T], max_n: usize) -> Self {
        let mut bag = Self::new(max_n);
        for n in 1..=max_n.min(tokens.len()) {
            for gram in tokens.windows(n) {
                *bag.counts.entry(gram.to_vec()).or_insert(0) += 1;
                bag.total += 1;
            }
        }
        bag
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Multiplicity of `gram`, zero if absent.
    pub fn count(&self, gram: &[T]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    pub fn contains(&self, gram: &[T]) -> bool {
        self.counts.contains_key(gram)
    }

    /// Number of n-grams counted with multiplicity.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], usize)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Adds every n-gram of `other` with its multiplicity.
    pub fn absorb(&mut self, other: &NgramBag<T>) {
        for (gram, c) in other.iter() {
            *self.counts.entry(gram.to_vec()).or_insert(0) += c;
        }
        self.total += other.total;
    }
}

pub fn ngrams(t: &TokenSequence, max_n: usize) -> NgramBag<String> {
    NgramBag::from_tokens(t.tokens(), max_n)
}

/// Sentence-level 4-gram BLEU over arbitrary token types.
///
/// Unigram precision is unsmoothed; orders 2..4 use add-one smoothing on both
/// the clipped match count and the candidate n-gram count. The brevity
/// penalty is `exp(1 - r/c)` when the hypothesis is not longer than the
/// reference. An empty hypothesis scores 0.
pub fn bleu<T: Ord + Clone>(hyp: &[T], reference: &[T]) -> f64 {
    bleu_from_stats(&BleuStats::new(hyp), &BleuStats::new(reference))
}

/// Length and n-gram counts of one side of a BLEU comparison, reusable
/// across many pairs.
#[derive(Debug, Clone)]
pub struct BleuStats<T> {
    len: usize,
    bag: NgramBag<T>,
}

impl<T: Ord + Clone> BleuStats<T> {
    pub fn new(tokens: &[T]) -> Self {
        Self {
            len: tokens.len(),
            bag: NgramBag::from_tokens(tokens, BLEU_MAX_ORDER),
        }
    }
}

pub fn bleu_from_stats<T: Ord + Clone>(hyp: &BleuStats<T>, reference: &BleuStats<T>) -> f64 {
    if hyp.len == 0 {
        return 0.0;
    }
    let mut matches = [0usize; BLEU_MAX_ORDER];
    for (gram, c) in hyp.bag.iter() {
        matches[gram.len() - 1] += c.min(reference.bag.count(gram));
    }
    if matches[0] == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (i, &m) in matches.iter().enumerate() {
        let n = i + 1;
        let candidates = hyp.len.saturating_sub(n - 1);
        let p = if n == 1 {
            m as f64 / candidates as f64
        } else {
            (m as f64 + 1.0) / (candidates as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let (c, r) = (hyp.len as f64, reference.len as f64);
    let log_bp = if c > r { 0.0 } else { 1.0 - r / c };
    (log_bp + log_sum / BLEU_MAX_ORDER as f64).exp().min(1.0)
}

pub fn sentence_bleu(hyp: &TokenSequence, reference: &TokenSequence) -> f64 {
    bleu(hyp.tokens(), reference.tokens())
}
