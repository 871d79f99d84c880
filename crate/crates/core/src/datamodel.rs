//! Datasets, feature stores, stream order and score normalization.
//!
//! On-disk dataset layout:
//!
//! ```text
//! <dir>/meta.json          {"lang_pair": "en-de", "systems": [...], "gold_ranking": [...]}
//! <dir>/sources.txt        one source segment per line
//! <dir>/references.txt     optional, line-aligned with sources
//! <dir>/systems/<name>.txt line-aligned translations, one file per system
//! <dir>/scores.csv         segment,system,raw,z,n_evaluators (empty field = absent)
//! ```
//!
//! Feature files are JSON lines, one record per feature:
//! `{"seg":i,"kind":"src_emb"|"tr_emb"|"qe"|"oracle","system":j,"vec":[...],"value":x}`.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{streams, SimRng};

pub const META_FILE: &str = "meta.json";
pub const SOURCES_FILE: &str = "sources.txt";
pub const REFERENCES_FILE: &str = "references.txt";
pub const SYSTEMS_DIR: &str = "systems";
pub const SCORES_FILE: &str = "scores.csv";
const SCORES_HEADER: [&str; 5] = ["segment", "system", "raw", "z", "n_evaluators"];

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub source: String,
    pub translations: Vec<String>,
    /// Human direct-assessment scores in `[0, 100]`.
    pub raw_scores: Vec<Option<f64>>,
    /// Kept for provenance only; learning never reads them.
    pub z_scores: Vec<Option<f64>>,
    pub n_evaluators: Vec<Option<u32>>,
}

impl Segment {
    pub fn new(index: usize, source: impl Into<String>, translations: Vec<String>) -> Self {
        let j = translations.len();
        Self {
            index,
            source: source.into(),
            translations,
            raw_scores: vec![None; j],
            z_scores: vec![None; j],
            n_evaluators: vec![None; j],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub lang_pair: String,
    pub systems: Vec<String>,
    pub segments: Vec<Segment>,
    /// Official ranking, best first. Covers a subset of `systems`.
    pub gold_ranking: Vec<String>,
    pub references: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Meta {
    pub lang_pair: String,
    pub systems: Vec<String>,
    pub gold_ranking: Vec<String>,
}

/// Reads only the manifest of a dataset directory.
pub fn load_meta(dir: impl AsRef<Path>) -> Result<Meta> {
    let meta_path = dir.as_ref().join(META_FILE);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    serde_json::from_str(&meta_text).map_err(|e| Error::parse(&meta_path, Some(e.line()), e.to_string()))
}

impl Dataset {
    pub fn num_systems(&self) -> usize {
        self.systems.len()
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn system_index(&self, name: &str) -> Option<usize> {
        self.systems.iter().position(|s| s == name)
    }

    /// Checks every structural invariant of a dataset.
    pub fn check(&self) -> Result<()> {
        let j = self.systems.len();
        if j < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 systems, found {j}")));
        }
        let mut seen = HashSet::new();
        for name in &self.systems {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(Error::InvalidDataset(format!("invalid system name {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate system {name:?}")));
            }
        }
        if self.segments.is_empty() {
            return Err(Error::InvalidDataset("no segments".into()));
        }
        let min_gold = j.min(3);
        if self.gold_ranking.len() < min_gold {
            return Err(Error::InvalidDataset(format!(
                "gold ranking lists {} systems, need at least {min_gold}",
                self.gold_ranking.len()
            )));
        }
        let mut gold_seen = HashSet::new();
        for name in &self.gold_ranking {
            if !seen.contains(name.as_str()) {
                return Err(Error::InvalidDataset(format!("gold ranking names unknown system {name:?}")));
            }
            if !gold_seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("gold ranking repeats {name:?}")));
            }
        }
        if let Some(refs) = &self.references {
            if refs.len() != self.segments.len() {
                return Err(Error::InvalidDataset(format!(
                    "{} references for {} segments",
                    refs.len(),
                    self.segments.len()
                )));
            }
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.index != i {
                return Err(Error::InvalidDataset(format!("segment {i} carries index {}", seg.index)));
            }
            if seg.translations.len() != j
                || seg.raw_scores.len() != j
                || seg.z_scores.len() != j
                || seg.n_evaluators.len() != j
            {
                return Err(Error::InvalidDataset(format!("segment {i} is not aligned to {j} systems")));
            }
            for raw in seg.raw_scores.iter().flatten() {
                if !(0.0..=100.0).contains(raw) {
                    return Err(Error::ScoreOutOfRange(*raw));
                }
            }
        }
        Ok(())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn parse_opt<T: std::str::FromStr>(field: &str, path: &Path, line: usize, what: &str) -> Result<Option<T>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::parse(path, Some(line), format!("invalid {what} {field:?}")))
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let meta = load_meta(dir)?;

    let sources_path = dir.join(SOURCES_FILE);
    let sources = read_lines(&sources_path)?;
    let n = sources.len();

    let check_len = |path: &Path, lines: &[String]| -> Result<()> {
        if lines.len() != n {
            return Err(Error::LineCountMismatch {
                path: path.to_path_buf(),
                expected: n,
                found: lines.len(),
            });
        }
        Ok(())
    };

    let refs_path = dir.join(REFERENCES_FILE);
    let references = if refs_path.exists() {
        let refs = read_lines(&refs_path)?;
        check_len(&refs_path, &refs)?;
        Some(refs)
    } else {
        None
    };

    let mut per_system = Vec::with_capacity(meta.systems.len());
    for name in &meta.systems {
        let path = dir.join(SYSTEMS_DIR).join(format!("{name}.txt"));
        let lines = read_lines(&path)?;
        check_len(&path, &lines)?;
        per_system.push(lines);
    }

    let j = meta.systems.len();
    let mut segments: Vec<Segment> = sources
        .into_iter()
        .enumerate()
        .map(|(i, src)| {
            let translations = per_system.iter().map(|lines| lines[i].clone()).collect();
            Segment::new(i, src, translations)
        })
        .collect();
    // Segments may be built for fewer than two systems; check() reports that.
    debug_assert!(segments.iter().all(|s| s.translations.len() == j));

    let scores_path = dir.join(SCORES_FILE);
    if scores_path.exists() {
        read_scores(&scores_path, &meta.systems, &mut segments)?;
    }

    let ds = Dataset {
        lang_pair: meta.lang_pair,
        systems: meta.systems,
        segments,
        gold_ranking: meta.gold_ranking,
        references,
    };
    ds.check()?;
    Ok(ds)
}

fn read_scores(path: &Path, systems: &[String], segments: &mut [Segment]) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::parse(path, None, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, Some(1), e.to_string()))?
        .clone();
    if header.iter().map(str::trim).ne(SCORES_HEADER.iter().copied()) {
        return Err(Error::parse(
            path,
            Some(1),
            format!("expected header {}", SCORES_HEADER.join(",")),
        ));
    }
    let mut filled = HashSet::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::parse(path, Some(line), e.to_string()))?;
        let seg: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, Some(line), format!("invalid segment {:?}", &record[0])))?;
        if seg >= segments.len() {
            return Err(Error::parse(
                path,
                Some(line),
                format!("segment {seg} out of range ({} segments)", segments.len()),
            ));
        }
        let name = record[1].trim();
        let sys = systems
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::parse(path, Some(line), format!("unknown system {name:?}")))?;
        if !filled.insert((seg, sys)) {
            return Err(Error::parse(path, Some(line), format!("duplicate score for ({seg}, {name})")));
        }
        let raw: Option<f64> = parse_opt(&record[2], path, line, "raw score")?;
        if let Some(r) = raw {
            if !(0.0..=100.0).contains(&r) {
                return Err(Error::parse(path, Some(line), format!("raw score {r} outside [0, 100]")));
            }
        }
        let z = parse_opt(&record[3], path, line, "z-score")?;
        let n_eval = parse_opt(&record[4], path, line, "evaluator count")?;
        let segment = &mut segments[seg];
        segment.raw_scores[sys] = raw;
        segment.z_scores[sys] = z;
        segment.n_evaluators[sys] = n_eval;
    }
    Ok(())
}

/// Writes `ds` in the on-disk layout read by [`load_dataset`].
pub fn write_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ds.check()?;
    let sys_dir = dir.join(SYSTEMS_DIR);
    fs::create_dir_all(&sys_dir).map_err(|e| Error::io(&sys_dir, e))?;

    let meta = Meta {
        lang_pair: ds.lang_pair.clone(),
        systems: ds.systems.clone(),
        gold_ranking: ds.gold_ranking.clone(),
    };
    let meta_path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;

    write_lines(&dir.join(SOURCES_FILE), ds.segments.iter().map(|s| s.source.as_str()))?;
    if let Some(refs) = &ds.references {
        write_lines(&dir.join(REFERENCES_FILE), refs.iter().map(String::as_str))?;
    }
    for (j, name) in ds.systems.iter().enumerate() {
        write_lines(
            &sys_dir.join(format!("{name}.txt")),
            ds.segments.iter().map(|s| s.translations[j].as_str()),
        )?;
    }

    let scores_path = dir.join(SCORES_FILE);
    let mut w = csv::Writer::from_path(&scores_path).map_err(|e| Error::parse(&scores_path, None, e.to_string()))?;
    let csv_err = |e: csv::Error| Error::parse(&scores_path, None, e.to_string());
    w.write_record(SCORES_HEADER).map_err(csv_err)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for seg in &ds.segments {
        for (j, name) in ds.systems.iter().enumerate() {
            let (raw, z, n) = (seg.raw_scores[j], seg.z_scores[j], seg.n_evaluators[j]);
            if raw.is_none() && z.is_none() && n.is_none() {
                continue;
            }
            w.write_record([
                seg.index.to_string(),
                name.clone(),
                fmt(raw),
                fmt(z),
                n.map(|x| x.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(&scores_path, e))?;
    Ok(())
}

fn write_lines<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fraction of (segment, system) pairs that carry a human raw score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageReport {
    pub segments: usize,
    pub systems: usize,
    pub scored_pairs: usize,
}

impl CoverageReport {
    pub fn total_pairs(&self) -> usize {
        self.segments * self.systems
    }

    pub fn fraction(&self) -> f64 {
        self.scored_pairs as f64 / self.total_pairs() as f64
    }

    /// Coverage as a percentage with two decimals, e.g. `"86.80%"`.
    pub fn percent(&self) -> String {
        format!("{:.2}%", 100.0 * self.fraction())
    }
}

pub fn validate_dataset(ds: &Dataset) -> CoverageReport {
    let scored_pairs = ds
        .segments
        .iter()
        .map(|s| s.raw_scores.iter().filter(|r| r.is_some()).count())
        .sum();
    CoverageReport {
        segments: ds.num_segments(),
        systems: ds.num_systems(),
        scored_pairs,
    }
}

/// A score in `[0, 1]` with exactly two decimals, stored in hundredths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct UnitScore(u8);

impl UnitScore {
    pub const ZERO: UnitScore = UnitScore(0);
    pub const ONE: UnitScore = UnitScore(100);

    pub fn from_hundredths(h: u8) -> Option<Self> {
        (h <= 100).then_some(UnitScore(h))
    }

    /// Rounds half away from zero to two decimals, clamping into `[0, 1]`.
    pub fn quantize(x: f64) -> Self {
        if x.is_nan() {
            return UnitScore::ZERO;
        }
        let h = (x * 100.0).round().clamp(0.0, 100.0);
        UnitScore(h as u8)
    }

    pub fn hundredths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 100.0
    }
}

impl std::fmt::Display for UnitScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}

/// Maps a raw `[0, 100]` score to `[0, 1]`, rounded half away from zero to
/// two decimals. `round(raw / 100, 2) == round(raw) / 100`, so the rounding is
/// done on `raw` directly to avoid binary fractions such as 0.775.
pub fn normalize_raw_score(raw: f64) -> Result<UnitScore> {
    if !(0.0..=100.0).contains(&raw) {
        return Err(Error::ScoreOutOfRange(raw));
    }
    Ok(UnitScore(raw.round() as u8))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamOrder {
    pub permutation: Vec<usize>,
    pub seed: u64,
}

impl StreamOrder {
    /// Fisher-Yates shuffle of `0..n` on the shuffle stream of `seed`:
    /// for `i` from `n-1` down to 1, swap `i` with `below(i + 1)`.
    pub fn shuffle(n: usize, seed: u64) -> Self {
        let mut rng = SimRng::stream(seed, streams::SHUFFLE);
        let mut permutation: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            permutation.swap(i, j);
        }
        Self { permutation, seed }
    }
}

pub fn make_stream(ds: &Dataset, seed: u64) -> StreamOrder {
    StreamOrder::shuffle(ds.num_segments(), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    SrcEmb,
    TrEmb,
    Qe,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub seg: usize,
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vec: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// Externally computed per-segment signals, dense over the dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureStore {
    dim: Option<usize>,
    src_emb: Vec<Option<Vec<f64>>>,
    tr_emb: Vec<Vec<Option<Vec<f64>>>>,
    qe: Option<Vec<Vec<f64>>>,
    oracle: Option<Vec<Vec<f64>>>,
}

impl FeatureStore {
    /// An empty store for a dataset of `segments` x `systems`.
    pub fn empty(segments: usize, systems: usize) -> Self {
        Self {
            dim: None,
            src_emb: vec![None; segments],
            tr_emb: vec![vec![None; systems]; segments],
            qe: None,
            oracle: None,
        }
    }

    /// Builds a store from records, enforcing every store invariant.
    pub fn from_records(
        records: impl IntoIterator<Item = (usize, FeatureRecord)>,
        segments: usize,
        systems: usize,
    ) -> Result<Self> {
        let mut store = Self::empty(segments, systems);
        let mut qe: Vec<Vec<Option<f64>>> = vec![vec![None; systems]; segments];
        let mut oracle = qe.clone();
        let (mut qe_count, mut oracle_count) = (0usize, 0usize);

        for (line, rec) in records {
            let ctx = |msg: String| Error::InvalidFeatures(format!("record {line}: {msg}"));
            if rec.seg >= segments {
                return Err(ctx(format!("unknown segment index {}", rec.seg)));
            }
            let system = match (rec.kind, rec.system) {
                (FeatureKind::SrcEmb, _) => None,
                (_, Some(j)) if j < systems => Some(j),
                (_, Some(j)) => return Err(ctx(format!("unknown system index {j}"))),
                (kind, None) => return Err(ctx(format!("{kind:?} record without system"))),
            };
            match rec.kind {
                FeatureKind::SrcEmb | FeatureKind::TrEmb => {
                    let v = rec.vec.ok_or_else(|| ctx("embedding record without vec".into()))?;
                    if v.is_empty() {
                        return Err(ctx("empty embedding".into()));
                    }
                    match store.dim {
                        None => store.dim = Some(v.len()),
                        Some(d) if d != v.len() => {
                            return Err(ctx(format!("dimension mismatch: {} vs {d}", v.len())))
                        }
                        Some(_) => {}
                    }
                    let slot = match system {
                        None => &mut store.src_emb[rec.seg],
                        Some(j) => &mut store.tr_emb[rec.seg][j],
                    };
                    if slot.is_some() {
                        return Err(ctx("duplicate record".into()));
                    }
                    *slot = Some(v);
                }
                FeatureKind::Qe | FeatureKind::Oracle => {
                    let x = rec.value.ok_or_else(|| ctx("score record without value".into()))?;
                    if !x.is_finite() {
                        return Err(ctx(format!("non-finite value {x}")));
                    }
                    let j = system.expect("checked above");
                    let (table, count) = if rec.kind == FeatureKind::Qe {
                        (&mut qe, &mut qe_count)
                    } else {
                        (&mut oracle, &mut oracle_count)
                    };
                    if table[rec.seg][j].replace(x).is_some() {
                        return Err(ctx("duplicate record".into()));
                    }
                    *count += 1;
                }
            }
        }

        let total = segments * systems;
        let finish = |table: Vec<Vec<Option<f64>>>, count: usize, kind: &str| -> Result<Option<Vec<Vec<f64>>>> {
            match count {
                0 => Ok(None),
                c if c == total => Ok(Some(
                    table
                        .into_iter()
                        .map(|row| row.into_iter().map(|x| x.expect("full coverage")).collect())
                        .collect(),
                )),
                c => Err(Error::InvalidFeatures(format!(
                    "partial {kind} coverage: {c} of {total} (segment, system) pairs"
                ))),
            }
        };
        store.qe = finish(qe, qe_count, "qe")?;
        store.oracle = finish(oracle, oracle_count, "oracle")?;
        Ok(store)
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn src_emb(&self, seg: usize) -> Option<&[f64]> {
        self.src_emb.get(seg)?.as_deref()
    }

    pub fn tr_emb(&self, seg: usize, sys: usize) -> Option<&[f64]> {
        self.tr_emb.get(seg)?.get(sys)?.as_deref()
    }

    pub fn qe_scores(&self, seg: usize) -> Option<&[f64]> {
        Some(self.qe.as_ref()?.get(seg)?.as_slice())
    }

    pub fn oracle_score(&self, seg: usize, sys: usize) -> Option<f64> {
        self.oracle.as_ref()?.get(seg)?.get(sys).copied()
    }

    pub fn has_qe(&self) -> bool {
        self.qe.is_some()
    }

    pub fn has_oracle(&self) -> bool {
        self.oracle.is_some()
    }

    pub fn has_src_emb(&self) -> bool {
        self.src_emb.iter().any(Option::is_some)
    }

    pub fn has_tr_emb(&self) -> bool {
        self.tr_emb.iter().flatten().any(Option::is_some)
    }

    /// All records, in segment-major order (src_emb, then per system tr_emb, qe, oracle).
    pub fn records(&self) -> Vec<FeatureRecord> {
        let mut out = Vec::new();
        for (seg, src) in self.src_emb.iter().enumerate() {
            if let Some(v) = src {
                out.push(FeatureRecord { seg, kind: FeatureKind::SrcEmb, system: None, vec: Some(v.clone()), value: None });
            }
            for (j, tr) in self.tr_emb[seg].iter().enumerate() {
                if let Some(v) = tr {
                    out.push(FeatureRecord { seg, kind: FeatureKind::TrEmb, system: Some(j), vec: Some(v.clone()), value: None });
                }
                if let Some(qe) = &self.qe {
                    out.push(FeatureRecord { seg, kind: FeatureKind::Qe, system: Some(j), vec: None, value: Some(qe[seg][j]) });
                }
                if let Some(or) = &self.oracle {
                    out.push(FeatureRecord { seg, kind: FeatureKind::Oracle, system: Some(j), vec: None, value: Some(or[seg][j]) });
                }
            }
        }
        out
    }
}

pub fn load_feature_store(path: impl AsRef<Path>, ds: &Dataset) -> Result<FeatureStore> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, Some(i + 1), e.to_string()))?;
        records.push((i + 1, rec));
    }
    FeatureStore::from_records(records, ds.num_segments(), ds.num_systems()).map_err(|e| match e {
        Error::InvalidFeatures(msg) => Error::InvalidFeatures(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_feature_store(store: &FeatureStore, path: impl AsRef<Path>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for rec in store.records() {
        let line = serde_json::to_string(&rec).expect("record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_raw_score(90.3).unwrap(), UnitScore(90));
        assert_eq!(normalize_raw_score(0.0).unwrap(), UnitScore::ZERO);
        assert_eq!(normalize_raw_score(77.5).unwrap().to_string(), "0.78");
        assert_eq!(normalize_raw_score(100.0).unwrap(), UnitScore::ONE);
        assert!(matches!(normalize_raw_score(100.5), Err(Error::ScoreOutOfRange(_))));
        assert!(normalize_raw_score(-0.1).is_err());
        assert!(normalize_raw_score(f64::NAN).is_err());
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(UnitScore::quantize(0.125).hundredths(), 13);
        assert_eq!(UnitScore::quantize(1.07), UnitScore::ONE);
        assert_eq!(UnitScore::quantize(-0.2), UnitScore::ZERO);
    }

    #[test]
    fn stream_of_one_segment() {
        assert_eq!(StreamOrder::shuffle(1, 999).permutation, vec![0]);
        assert!(StreamOrder::shuffle(0, 1).permutation.is_empty());
    }

    #[test]
    fn stream_is_deterministic() {
        assert_eq!(StreamOrder::shuffle(5, 42), StreamOrder::shuffle(5, 42));
    }

    fn emb(seg: usize, system: Option<usize>, d: usize) -> FeatureRecord {
        FeatureRecord {
            seg,
            kind: if system.is_some() { FeatureKind::TrEmb } else { FeatureKind::SrcEmb },
            system,
            vec: Some(vec![0.5; d]),
            value: None,
        }
    }

    #[test]
    fn feature_dimension_mismatch() {
        let (n, j) = (3, 2);
        let recs = vec![(1, emb(0, None, 8)), (2, emb(1, None, 16))];
        let err = FeatureStore::from_records(recs, n, j).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");
    }

    #[test]
    fn feature_store_with_d8() {
        let (n, j) = (3, 2);
        let mut recs = Vec::new();
        for s in 0..n {
            recs.push((recs.len() + 1, emb(s, None, 8)));
            for t in 0..j {
                recs.push((recs.len() + 1, emb(s, Some(t), 8)));
            }
        }
        let store = FeatureStore::from_records(recs, n, j).unwrap();
        assert_eq!(store.dim(), Some(8));
        assert_eq!(store.tr_emb(2, 1).unwrap().len(), 8);
        assert!(!store.has_qe());
    }

    #[test]
    fn partial_qe_coverage_rejected() {
        let (n, j) = (3, 2);
        let recs: Vec<_> = (0..n)
            .map(|s| {
                (s + 1, FeatureRecord { seg: s, kind: FeatureKind::Qe, system: Some(0), vec: None, value: Some(-1.0) })
            })
            .collect();
        let err = FeatureStore::from_records(recs, n, j).unwrap_err();
        assert!(err.to_string().contains("partial qe coverage"), "{err}");
    }

    #[test]
    fn unknown_indices_and_duplicates_rejected() {
        let bad_seg = vec![(1, emb(3, None, 2))];
        assert!(FeatureStore::from_records(bad_seg, 3, 2).is_err());
        let bad_sys = vec![(1, emb(0, Some(2), 2))];
        assert!(FeatureStore::from_records(bad_sys, 3, 2).is_err());
        let dup = vec![(1, emb(0, None, 2)), (2, emb(0, None, 2))];
        assert!(FeatureStore::from_records(dup, 3, 2).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn record_json_shape() {
        let rec: FeatureRecord = serde_json::from_str(r#"{"seg":2,"kind":"qe","system":1,"value":-0.5}"#).unwrap();
        assert_eq!(rec.kind, FeatureKind::Qe);
        assert_eq!(rec.system, Some(1));
        let out = serde_json::to_string(&emb(0, None, 1)).unwrap();
        assert_eq!(out, r#"{"seg":0,"kind":"src_emb","vec":[0.5]}"#);
    }

    #[test]
    fn gold_ranking_must_cover_three_when_possible() {
        let mut ds = Dataset {
            lang_pair: "x-y".into(),
            systems: vec!["a".into(), "b".into(), "c".into()],
            segments: vec![Segment::new(0, "s", vec!["1".into(), "2".into(), "3".into()])],
            gold_ranking: vec!["a".into(), "b".into()],
            references: None,
        };
        assert!(ds.check().is_err());
        ds.gold_ranking.push("c".into());
        ds.check().unwrap();
        ds.gold_ranking[2] = "zz".into();
        assert!(ds.check().is_err());
    }
}
