//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's math; inputs are restricted to ASCII
//! so punctuation handling reduces to `char::is_ascii_punctuation`.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use onception::rng::SimRng;
use onception::strategies::{
    avg_agreement, den_ngram, density_value, diversity_value, div_ngram, record_outcome, Measure, ScoredSets,
    StrategyContext,
};

/// Straight transcription of the published xoshiro256++ and SplitMix64 code.
pub struct RefXoshiro {
    s: [u64; 4],
}

impl RefXoshiro {
    pub fn seed(seed: u64) -> Self {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let s = [next(), next(), next(), next()];
        Self { s }
    }

    pub fn next(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    pub fn jump(&mut self) {
        const JUMP: [u64; 4] = [0x180ec6d33cfd0aba, 0xd5a61266f0c9392c, 0xa9582618e03fc9aa, 0x39abdc4529b1661c];
        let mut acc = [0u64; 4];
        for word in JUMP {
            for b in 0..64 {
                if word & (1u64 << b) != 0 {
                    for i in 0..4 {
                        acc[i] ^= self.s[i];
                    }
                }
                self.next();
            }
        }
        self.s = acc;
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: u64) -> u64 {
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = u128::from(self.next()) * u128::from(n);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

pub fn tokens(text: &str, lowercase: bool) -> Vec<String> {
    let stripped: String = text.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let stripped = if lowercase { stripped.to_lowercase() } else { stripped };
    stripped.split_whitespace().map(str::to_owned).collect()
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&String> = a.iter().collect();
    let b: HashSet<&String> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

/// Every n-gram of orders 1..=max_n, with repeats.
pub fn ngram_list(t: &[String], max_n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        if t.len() >= n {
            for w in t.windows(n) {
                out.push(w.to_vec());
            }
        }
    }
    out
}

fn counts(grams: Vec<Vec<String>>) -> HashMap<Vec<String>, usize> {
    let mut m = HashMap::new();
    for g in grams {
        *m.entry(g).or_insert(0) += 1;
    }
    m
}

pub fn bleu(hyp: &[String], reference: &[String]) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let mut log_p = 0.0;
    for n in 1..=4 {
        let h: Vec<Vec<String>> = if hyp.len() >= n { hyp.windows(n).map(<[String]>::to_vec).collect() } else { vec![] };
        let r: Vec<Vec<String>> =
            if reference.len() >= n { reference.windows(n).map(<[String]>::to_vec).collect() } else { vec![] };
        let total = h.len();
        let hc = counts(h);
        let rc = counts(r);
        let m: usize = hc.iter().map(|(g, c)| (*c).min(*rc.get(g).unwrap_or(&0))).sum();
        if n == 1 && m == 0 {
            return 0.0;
        }
        let p = if n == 1 { m as f64 / total as f64 } else { (m as f64 + 1.0) / (total as f64 + 1.0) };
        log_p += p.ln() / 4.0;
    }
    let (c, r) = (hyp.len() as f64, reference.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * log_p.exp()
}

pub fn mean_pairs(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0;
    for a in 0..n {
        for b in a + 1..n {
            sum += f(a, b);
            count += 1;
        }
    }
    sum / count as f64
}

pub fn mean_over(items: &[usize], f: impl Fn(usize) -> f64) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    items.iter().map(|&i| f(i)).sum::<f64>() / items.len() as f64
}

pub fn div_ngram_ref(src: &str, labeled: &[&str], max_n: usize) -> f64 {
    let grams: HashSet<Vec<String>> = ngram_list(&tokens(src, true), max_n).into_iter().collect();
    if grams.is_empty() {
        return 0.0;
    }
    let seen: HashSet<Vec<String>> = labeled
        .iter()
        .flat_map(|l| ngram_list(&tokens(l, true), max_n))
        .collect();
    grams.iter().filter(|g| !seen.contains(*g)).count() as f64 / grams.len() as f64
}

pub fn den_ngram_ref(src: &str, labeled: &[&str], discarded: &[&str], max_n: usize, lambda: f64) -> f64 {
    let src_grams = ngram_list(&tokens(src, true), max_n);
    let u: Vec<Vec<String>> = discarded.iter().flat_map(|d| ngram_list(&tokens(d, true), max_n)).collect();
    let l: Vec<Vec<String>> = labeled.iter().flat_map(|d| ngram_list(&tokens(d, true), max_n)).collect();
    if u.is_empty() || src_grams.is_empty() {
        return 0.0;
    }
    let freq = |bag: &[Vec<String>], g: &Vec<String>| bag.iter().filter(|x| *x == g).count() as f64;
    let sum: f64 = src_grams.iter().map(|g| freq(&u, g) * (-lambda * freq(&l, g)).exp()).sum();
    sum / (src_grams.len() as f64 * u.len() as f64)
}

pub fn tau_b_ref(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tx += 1;
                ty += 1;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = (((n0 - tx) * (n0 - ty)) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (conc - disc) as f64 / denom
    }
}

pub fn overlap_ref<T: PartialEq>(pred: &[T], gold: &[T], n: usize) -> f64 {
    let hits = pred[..n].iter().filter(|p| gold[..n].contains(p)).count();
    hits as f64 / n as f64
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// A random stream of segments with embeddings and query decisions.
#[derive(Debug, Clone)]
pub struct MicroCorpus {
    pub sources: Vec<String>,
    pub translations: Vec<Vec<String>>,
    pub src_emb: Vec<Vec<f64>>,
    pub tr_emb: Vec<Vec<Vec<f64>>>,
    pub queried: Vec<bool>,
    pub max_n: usize,
    pub lambda: f64,
}

fn random_text(rng: &mut SimRng, vocab: usize, max_len: usize) -> String {
    let len = rng.below(max_len as u64 + 1) as usize;
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        let w = rng.below(vocab as u64);
        let mut word = match rng.below(4) {
            0 => format!("W{w}"),
            _ => format!("w{w}"),
        };
        if rng.below(6) == 0 {
            word.push([',', '!', '.', '?'][rng.below(4) as usize]);
        }
        words.push(word);
    }
    words.join(" ")
}

impl MicroCorpus {
    pub fn random(rng: &mut SimRng) -> Self {
        let n = 1 + rng.below(10) as usize;
        let j = 2 + rng.below(3) as usize;
        let vocab = 1 + rng.below(20) as usize;
        let dim = 1 + rng.below(4) as usize;
        let vec = |rng: &mut SimRng| (0..dim).map(|_| rng.uniform() * 2.0 - 1.0).collect::<Vec<f64>>();
        let mut c = MicroCorpus {
            sources: vec![],
            translations: vec![],
            src_emb: vec![],
            tr_emb: vec![],
            queried: vec![],
            max_n: 1 + rng.below(4) as usize,
            lambda: rng.uniform() * 2.0,
        };
        for _ in 0..n {
            c.sources.push(random_text(rng, vocab, 8));
            c.translations.push((0..j).map(|_| random_text(rng, vocab, 8)).collect());
            c.src_emb.push(vec(rng));
            c.tr_emb.push((0..j).map(|_| vec(rng)).collect());
            c.queried.push(rng.bernoulli(0.5));
        }
        c
    }

    /// Largest absolute gap between the library and the oracles over every
    /// segment and every measure.
    pub fn max_error(&self) -> f64 {
        let mut sets = ScoredSets::new(self.max_n);
        let mut labeled: Vec<usize> = vec![];
        let mut discarded: Vec<usize> = vec![];
        let mut worst: f64 = 0.0;
        for t in 0..self.sources.len() {
            let prepared = sets.prepare(t, &self.sources[t], &self.translations[t], Some(&self.src_emb[t]));
            let tr: Vec<&[f64]> = self.tr_emb[t].iter().map(Vec::as_slice).collect();
            let ctx = StrategyContext {
                prepared: &prepared,
                sets: &sets,
                tr_emb: Some(&tr),
                qe: None,
            };
            let src = tokens(&self.sources[t], false);
            let trs: Vec<Vec<String>> = self.translations[t].iter().map(|x| tokens(x, false)).collect();
            let src_tok = |i: usize| tokens(&self.sources[i], false);
            let text = |ids: &[usize]| ids.iter().map(|&i| self.sources[i].as_str()).collect::<Vec<_>>();

            let pairs = [
                (
                    avg_agreement(&ctx, Measure::Jaccard).unwrap(),
                    mean_pairs(trs.len(), |a, b| jaccard(&trs[a], &trs[b])),
                ),
                (
                    avg_agreement(&ctx, Measure::Cosine).unwrap(),
                    mean_pairs(trs.len(), |a, b| cosine(&tr[a], &tr[b])),
                ),
                (
                    avg_agreement(&ctx, Measure::SentBleu).unwrap(),
                    mean_pairs(trs.len(), |a, b| (bleu(&trs[a], &trs[b]) + bleu(&trs[b], &trs[a])) / 2.0),
                ),
                (
                    diversity_value(&ctx, Measure::Jaccard).unwrap(),
                    mean_over(&labeled, |i| jaccard(&src, &src_tok(i))),
                ),
                (
                    diversity_value(&ctx, Measure::Cosine).unwrap(),
                    mean_over(&labeled, |i| cosine(&self.src_emb[t], &self.src_emb[i])),
                ),
                (
                    density_value(&ctx, Measure::Jaccard).unwrap(),
                    mean_over(&discarded, |i| jaccard(&src, &src_tok(i))),
                ),
                (
                    density_value(&ctx, Measure::Cosine).unwrap(),
                    mean_over(&discarded, |i| cosine(&self.src_emb[t], &self.src_emb[i])),
                ),
                (div_ngram(&ctx), div_ngram_ref(&self.sources[t], &text(&labeled), self.max_n)),
                (
                    den_ngram(&ctx, self.lambda),
                    den_ngram_ref(&self.sources[t], &text(&labeled), &text(&discarded), self.max_n, self.lambda),
                ),
            ];
            for (lib, oracle) in pairs {
                worst = worst.max((lib - oracle).abs());
            }
            record_outcome(&mut sets, &prepared, self.queried[t]).unwrap();
            if self.queried[t] {
                labeled.push(t);
            } else {
                discarded.push(t);
            }
        }
        worst
    }
}
