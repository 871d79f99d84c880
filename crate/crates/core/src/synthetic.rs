//! Synthetic datasets with known system quality.
//!
//! Each system's human score on a segment is 100 with probability equal to its
//! mean quality and 0 otherwise, so the official ranking is the order of the
//! means. Sources are drawn from a few topics with Zipfian word choice, which
//! gives the lexical strategies a non-trivial similarity structure.

use crate::datamodel::{Dataset, FeatureKind, FeatureRecord, FeatureStore, Segment};
use crate::error::{Error, Result};
use crate::rng::{streams, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub lang_pair: String,
    /// Mean quality per system, best first.
    pub means: Vec<f64>,
    pub segments: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub emb_dim: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Five systems with means 0.9, 0.8, 0.5, 0.3, 0.2.
    pub fn five_systems(segments: usize, seed: u64) -> Self {
        Self {
            lang_pair: "syn-syn".into(),
            means: vec![0.9, 0.8, 0.5, 0.3, 0.2],
            segments,
            topics: 8,
            words_per_topic: 60,
            min_len: 6,
            max_len: 18,
            emb_dim: 8,
            seed,
        }
    }

    pub fn system_names(&self) -> Vec<String> {
        (0..self.means.len()).map(|i| format!("sys{i}")).collect()
    }
}

/// Inverse-CDF sampler over ranks weighted `1 / r`.
struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    fn new(n: usize) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n)
            .map(|r| {
                acc += 1.0 / r as f64;
                acc
            })
            .collect();
        cdf.iter_mut().for_each(|c| *c /= acc);
        Self { cdf }
    }

    fn sample(&self, rng: &mut SimRng) -> usize {
        let u = rng.uniform();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

fn gaussian_ish(rng: &mut SimRng) -> f64 {
    // Irwin-Hall with 12 terms, centered.
    (0..12).map(|_| rng.uniform()).sum::<f64>() - 6.0
}

pub struct Synthetic {
    pub dataset: Dataset,
    pub features: FeatureStore,
}

pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    let j = spec.means.len();
    if j < 2 || spec.segments == 0 || spec.topics == 0 || spec.words_per_topic == 0 {
        return Err(Error::InvalidParameter("synthetic spec needs 2 systems, 1 segment, 1 topic, 1 word".into()));
    }
    if spec.min_len == 0 || spec.min_len > spec.max_len || spec.emb_dim == 0 {
        return Err(Error::InvalidParameter("synthetic spec has bad lengths".into()));
    }
    if let Some(&m) = spec.means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(Error::InvalidParameter(format!("system mean {m} outside [0, 1]")));
    }
    let mut rng = SimRng::stream(spec.seed, streams::SYNTHETIC);
    let zipf = Zipf::new(spec.words_per_topic);
    let topic_centers: Vec<Vec<f64>> = (0..spec.topics)
        .map(|_| (0..spec.emb_dim).map(|_| gaussian_ish(&mut rng)).collect())
        .collect();

    let systems = spec.system_names();
    let mut segments = Vec::with_capacity(spec.segments);
    let mut records = Vec::new();
    let mut push = |seg, kind, system, vec, value| {
        records.push((0, FeatureRecord { seg, kind, system, vec, value }));
    };
    for seg in 0..spec.segments {
        let topic = rng.below(spec.topics as u64) as usize;
        let len = spec.min_len + rng.below((spec.max_len - spec.min_len + 1) as u64) as usize;
        let words: Vec<String> = (0..len)
            .map(|_| format!("w{topic}x{}", zipf.sample(&mut rng)))
            .collect();
        let source = format!("{}.", words.join(" "));
        let mut translations = Vec::with_capacity(j);
        let mut raw = Vec::with_capacity(j);
        let mut qe = Vec::with_capacity(j);
        for (sys, &mean) in spec.means.iter().enumerate() {
            let good = rng.bernoulli(mean);
            let tokens: Vec<String> = words
                .iter()
                .map(|w| {
                    if rng.bernoulli(mean) {
                        format!("t{}", &w[1..])
                    } else {
                        format!("e{sys}x{}", rng.below(50))
                    }
                })
                .collect();
            translations.push(tokens.join(" "));
            raw.push(Some(if good { 100.0 } else { 0.0 }));
            qe.push(-(1.0 - mean) * 4.0 + 0.25 * gaussian_ish(&mut rng));
            push(seg, FeatureKind::Oracle, Some(sys), None, Some(mean));
        }
        let src_emb: Vec<f64> = topic_centers[topic]
            .iter()
            .map(|c| c + 0.3 * gaussian_ish(&mut rng))
            .collect();
        for (sys, q) in qe.into_iter().enumerate() {
            let tr: Vec<f64> = src_emb.iter().map(|c| c + 0.2 * gaussian_ish(&mut rng)).collect();
            push(seg, FeatureKind::TrEmb, Some(sys), Some(tr), None);
            push(seg, FeatureKind::Qe, Some(sys), None, Some(q));
        }
        push(seg, FeatureKind::SrcEmb, None, Some(src_emb), None);

        let mut segment = Segment::new(seg, source, translations);
        segment.raw_scores = raw;
        segment.n_evaluators = vec![Some(1); j];
        segments.push(segment);
    }

    let mut gold: Vec<usize> = (0..j).collect();
    gold.sort_by(|&a, &b| spec.means[b].total_cmp(&spec.means[a]).then(a.cmp(&b)));
    let dataset = Dataset {
        lang_pair: spec.lang_pair.clone(),
        gold_ranking: gold.iter().map(|&i| systems[i].clone()).collect(),
        systems,
        segments,
        references: None,
    };
    dataset.check()?;
    let features = FeatureStore::from_records(records, spec.segments, j)?;
    Ok(Synthetic { dataset, features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::validate_dataset;

    #[test]
    fn shape_and_coverage() {
        let syn = generate(&SyntheticSpec::five_systems(50, 1)).unwrap();
        let ds = &syn.dataset;
        assert_eq!((ds.num_segments(), ds.num_systems()), (50, 5));
        assert_eq!(ds.gold_ranking, ["sys0", "sys1", "sys2", "sys3", "sys4"]);
        assert_eq!(validate_dataset(ds).fraction(), 1.0);
        assert!(syn.features.has_qe() && syn.features.has_oracle() && syn.features.has_tr_emb());
        assert_eq!(syn.features.dim(), Some(8));
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&SyntheticSpec::five_systems(20, 9)).unwrap();
        let b = generate(&SyntheticSpec::five_systems(20, 9)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.features, b.features);
        let c = generate(&SyntheticSpec::five_systems(20, 10)).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn score_rates_follow_means() {
        let syn = generate(&SyntheticSpec::five_systems(2000, 3)).unwrap();
        for (sys, mean) in [0.9, 0.8, 0.5, 0.3, 0.2].into_iter().enumerate() {
            let hits = syn
                .dataset
                .segments
                .iter()
                .filter(|s| s.raw_scores[sys] == Some(100.0))
                .count();
            assert!((hits as f64 / 2000.0 - mean).abs() < 0.04, "sys{sys}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = SyntheticSpec::five_systems(10, 0);
        spec.means = vec![0.5];
        assert!(generate(&spec).is_err());
        let mut spec = SyntheticSpec::five_systems(10, 0);
        spec.means[0] = 1.5;
        assert!(generate(&spec).is_err());
    }
}
