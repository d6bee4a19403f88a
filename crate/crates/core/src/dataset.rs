//! Labeled feature corpora: CSV storage, train/test splitting, min-max
//! normalization and a synthetic generator for experiments without real pages.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureGroups, FeatureVector, FEATURES, FEATURE_COUNT};
use crate::metrics::Label;
use crate::trainers::{Pattern, TrainError, TrainingSet};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing header row (expected feature names followed by `label`)")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} columns, found {found}")]
    WrongColumnCount { line: u64, expected: usize, found: usize },
    #[error("line {line}: unknown label `{token}` (expected spam or ham)")]
    UnknownLabel { line: u64, token: String },
    #[error("line {line}: column `{column}`: cannot parse `{value}` as a number")]
    BadNumber { line: u64, column: String, value: String },
    #[error("rows mix feature schemas {0} and {1}")]
    MixedSchema(FeatureGroups, FeatureGroups),
    #[error("feature schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: FeatureGroups, found: FeatureGroups },
    #[error("feature groups {requested} are not all present in corpus schema {available}")]
    MissingGroups { requested: FeatureGroups, available: FeatureGroups },
    #[error("cannot split: {0}")]
    Split(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: FeatureVector,
    pub label: Label,
    pub source_id: String,
}

/// Rows sharing one feature schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    groups: FeatureGroups,
    rows: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub total: usize,
    pub spam: usize,
    pub ham: usize,
}

impl Balance {
    pub fn spam_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.spam as f64 / self.total as f64
        }
    }
}

impl fmt::Display for Balance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rows: {} spam ({:.1}% spam), {} ham",
            self.total,
            self.spam,
            100.0 * self.spam_fraction(),
            self.ham
        )
    }
}

impl Corpus {
    pub fn new(groups: FeatureGroups, rows: Vec<Sample>) -> Result<Self, DatasetError> {
        if let Some(r) = rows.iter().find(|r| r.features.groups != groups) {
            return Err(DatasetError::MixedSchema(groups, r.features.groups));
        }
        Ok(Corpus { groups, rows })
    }

    pub fn empty(groups: FeatureGroups) -> Self {
        Corpus { groups, rows: Vec::new() }
    }

    pub fn groups(&self) -> FeatureGroups {
        self.groups
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), DatasetError> {
        if sample.features.groups != self.groups {
            return Err(DatasetError::MixedSchema(self.groups, sample.features.groups));
        }
        self.rows.push(sample);
        Ok(())
    }

    pub fn balance(&self) -> Balance {
        let spam = self.rows.iter().filter(|r| r.label == Label::Spam).count();
        Balance { total: self.rows.len(), spam, ham: self.rows.len() - spam }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Selected feature values of every row, in canonical order.
    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.selected(self.groups)).collect()
    }

    /// Restricts the schema to `groups`, which must be available.
    pub fn project(&self, groups: FeatureGroups) -> Result<Corpus, DatasetError> {
        if !groups.is_subset_of(self.groups) {
            return Err(DatasetError::MissingGroups { requested: groups, available: self.groups });
        }
        let keep = groups.indices();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut fv = FeatureVector::new(groups);
                for &i in &keep {
                    fv.values[i] = r.features.values[i];
                }
                Sample { features: fv, label: r.label, source_id: r.source_id.clone() }
            })
            .collect();
        Ok(Corpus { groups, rows })
    }

    /// Patterns with the selected features as input and `+1` (spam) or `-1`
    /// (ham) as target.
    pub fn to_training_set(&self) -> Result<TrainingSet, TrainError> {
        TrainingSet::new(
            self.rows.iter().map(|r| Pattern::new(r.features.selected(self.groups), vec![r.label.target()])).collect(),
        )
    }

    fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus { groups: self.groups, rows: indices.iter().map(|&i| self.rows[i].clone()).collect() }
    }
}

fn header_for(groups: FeatureGroups) -> Vec<&'static str> {
    let mut h = vec!["id"];
    h.extend(groups.indices().into_iter().map(|i| FEATURES[i].name));
    h.push("label");
    h
}

fn parse_header(fields: &[String]) -> Result<(bool, FeatureGroups), DatasetError> {
    if fields.last().map(|s| s.trim()) != Some("label") {
        if fields.iter().any(|f| f.trim() == "label") {
            return Err(DatasetError::BadHeader("`label` must be the last column".into()));
        }
        return Err(DatasetError::MissingHeader);
    }
    let has_id = fields.first().map(|s| s.trim()) == Some("id");
    let names: Vec<&str> = fields[usize::from(has_id)..fields.len() - 1].iter().map(|s| s.trim()).collect();
    FeatureGroups::GRID
        .into_iter()
        .find(|g| g.indices().into_iter().map(|i| FEATURES[i].name).eq(names.iter().copied()))
        .map(|g| (has_id, g))
        .ok_or_else(|| {
            DatasetError::BadHeader("feature columns must be whole feature groups in canonical order".into())
        })
}

/// Reads a corpus CSV: optional `id` column, the feature columns of one or
/// more whole groups in canonical order, then `label`.
pub fn read_corpus<R: Read>(reader: R) -> Result<Corpus, DatasetError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = csv.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r?.iter().map(str::to_string).collect(),
        None => return Err(DatasetError::MissingHeader),
    };
    let (has_id, groups) = parse_header(&header)?;
    let indices = groups.indices();
    let mut corpus = Corpus::empty(groups);
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(DatasetError::WrongColumnCount { line, expected: header.len(), found: record.len() });
        }
        let offset = usize::from(has_id);
        let mut fv = FeatureVector::new(groups);
        for (k, &i) in indices.iter().enumerate() {
            let raw = record[offset + k].trim();
            fv.values[i] = raw.parse().map_err(|_| DatasetError::BadNumber {
                line,
                column: FEATURES[i].name.to_string(),
                value: raw.to_string(),
            })?;
        }
        let token = record[record.len() - 1].trim();
        let label =
            token.parse::<Label>().map_err(|_| DatasetError::UnknownLabel { line, token: token.to_string() })?;
        let source_id = if has_id { record[0].to_string() } else { format!("row-{line}") };
        corpus.rows.push(Sample { features: fv, label, source_id });
    }
    Ok(corpus)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, writer: W) -> Result<(), DatasetError> {
    let mut csv = csv::WriterBuilder::new().from_writer(writer);
    csv.write_record(header_for(corpus.groups))?;
    let indices = corpus.groups.indices();
    for row in &corpus.rows {
        let mut rec = Vec::with_capacity(indices.len() + 2);
        rec.push(row.source_id.clone());
        // `{}` on f64 prints the shortest string that parses back exactly
        rec.extend(indices.iter().map(|&i| format!("{}", row.features.values[i])));
        rec.push(row.label.as_str().to_string());
        csv.write_record(&rec)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, DatasetError> {
    read_corpus(std::fs::File::open(path)?)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    write_corpus(corpus, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec { seed, ..Default::default() }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Randomly partitions the corpus. Stratified splits take
/// `round(n_c * train_fraction)` rows of each class (at least one and at
/// most `n_c - 1`); row order within each side follows the corpus.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus), DatasetError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DatasetError::Invalid(format!("train_fraction {} outside (0, 1)", spec.train_fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let balance = corpus.balance();
    if spec.stratified {
        for label in [Label::Spam, Label::Ham] {
            let mut idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.rows[i].label == label).collect();
            if idx.len() < 2 {
                return Err(DatasetError::Split(format!(
                    "{} has {} row(s); each class needs at least 2 ({balance})",
                    label,
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let k = train_count(idx.len(), spec.train_fraction);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    } else {
        if corpus.len() < 4 {
            return Err(DatasetError::Split(format!("only {} rows", corpus.len())));
        }
        let mut idx: Vec<usize> = (0..corpus.len()).collect();
        idx.shuffle(&mut rng);
        let k = train_count(idx.len(), spec.train_fraction);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    let (train, test) = (corpus.subset(&train), corpus.subset(&test));
    for (side, part) in [("train", &train), ("test", &test)] {
        let b = part.balance();
        if b.spam == 0 || b.ham == 0 {
            return Err(DatasetError::Split(format!("{side} side lacks a class ({b}); try another seed")));
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `[min, max]` of the training rows mapped onto `[-1, 1]`.
    MinMax,
}

impl Scheme {
    pub fn tag(self) -> &'static str {
        match self {
            Scheme::MinMax => "minmax",
        }
    }
}

/// Per-feature scaling fitted on training rows, one entry per selected
/// feature of `groups` in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub scheme: Scheme,
    pub groups: FeatureGroups,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationStats {
    pub fn fit(train: &Corpus) -> Result<Self, DatasetError> {
        if train.is_empty() {
            return Err(DatasetError::Invalid("cannot fit normalization on an empty corpus".into()));
        }
        let k = train.groups.feature_count();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for x in train.inputs() {
            for (j, v) in x.into_iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(NormalizationStats { scheme: Scheme::MinMax, groups: train.groups, min, max })
    }

    /// Scales one selected-feature vector, clamping into `[-1, 1]`. Returns
    /// the number of clamped components.
    pub fn scale(&self, x: &mut [f64]) -> usize {
        let mut clamped = 0;
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.min).zip(&self.max) {
            let s = if hi > lo { 2.0 * (*v - lo) / (hi - lo) - 1.0 } else { 0.0 };
            if !(-1.0..=1.0).contains(&s) {
                clamped += 1;
            }
            *v = s.clamp(-1.0, 1.0);
        }
        clamped
    }

    /// Normalized copy of `corpus` and the number of clamped values.
    pub fn apply(&self, corpus: &Corpus) -> Result<(Corpus, usize), DatasetError> {
        if corpus.groups != self.groups {
            return Err(DatasetError::SchemaMismatch { expected: self.groups, found: corpus.groups });
        }
        let indices = self.groups.indices();
        let mut out = corpus.clone();
        let mut clamped = 0;
        for row in &mut out.rows {
            let mut x = row.features.selected(self.groups);
            clamped += self.scale(&mut x);
            for (&i, v) in indices.iter().zip(x) {
                row.features.values[i] = v;
            }
        }
        Ok((out, clamped))
    }
}

/// Two Gaussian classes over all 31 features with unit within-class
/// variance. Ham is centred at the origin; spam is shifted by
/// `separation / sqrt(31)` on every feature, so the full feature set has
/// class-mean distance `separation` standard deviations and any subset of
/// `k` features has `separation * sqrt(k / 31)`.
///
/// Values are raw Gaussians and ignore the per-feature kinds.
pub fn generate_synthetic(n: usize, spam_fraction: f64, separation: f64, seed: u64) -> Result<Corpus, DatasetError> {
    if n < 10 {
        return Err(DatasetError::Invalid(format!("synthetic corpus needs n >= 10, got {n}")));
    }
    if !(spam_fraction > 0.0 && spam_fraction < 1.0) {
        return Err(DatasetError::Invalid(format!("spam_fraction {spam_fraction} outside (0, 1)")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(DatasetError::Invalid(format!("separation {separation} must be >= 0")));
    }
    let spam = ((n as f64 * spam_fraction).round() as usize).clamp(1, n - 1);
    let shift = separation / (FEATURE_COUNT as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<Label> = (0..n).map(|i| if i < spam { Label::Spam } else { Label::Ham }).collect();
    labels.shuffle(&mut rng);
    let rows = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let mut fv = FeatureVector::new(FeatureGroups::ALL);
            let mean = if label == Label::Spam { shift } else { 0.0 };
            for v in fv.values.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = mean + z;
            }
            Sample { features: fv, label, source_id: format!("syn-{i:04}") }
        })
        .collect();
    Ok(Corpus { groups: FeatureGroups::ALL, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(n_spam: usize, n_ham: usize) -> Corpus {
        let rows = (0..n_spam + n_ham)
            .map(|i| {
                let mut fv = FeatureVector::new(FeatureGroups::ALL);
                fv.values[0] = i as f64;
                fv.values[1] = (i * 7 % 11) as f64 + 0.125;
                let label = if i < n_spam { Label::Spam } else { Label::Ham };
                Sample { features: fv, label, source_id: format!("r{i}") }
            })
            .collect();
        Corpus::new(FeatureGroups::ALL, rows).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let c = generate_synthetic(40, 0.3, 2.0, 9).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let back = read_corpus(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn header_determines_schema() {
        let url = generate_synthetic(12, 0.5, 1.0, 1).unwrap().project(FeatureGroups::URL).unwrap();
        let mut buf = Vec::new();
        write_corpus(&url, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 12);
        assert_eq!(read_corpus(buf.as_slice()).unwrap().groups(), FeatureGroups::URL);
    }

    #[test]
    fn short_row_names_its_line() {
        let c = labelled(2, 2);
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        // drop the first feature of the third data row (line 4)
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut parts: Vec<&str> = lines[3].split(',').collect();
        parts.remove(1);
        let broken = parts.join(",");
        text = lines.iter().enumerate().map(|(i, l)| if i == 3 { broken.clone() } else { l.clone() } + "\n").collect();
        match read_corpus(text.as_bytes()) {
            Err(DatasetError::WrongColumnCount { line: 4, expected: 33, found: 32 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_and_label_errors() {
        assert!(matches!(read_corpus("".as_bytes()), Err(DatasetError::MissingHeader)));
        assert!(matches!(read_corpus("1,2,3\n".as_bytes()), Err(DatasetError::MissingHeader)));
        let names: Vec<&str> = FEATURES.iter().map(|f| f.name).collect();
        let header = format!("{},label\n", names.join(","));
        let row = format!("{},maybe\n", vec!["0"; 31].join(","));
        match read_corpus(format!("{header}{row}").as_bytes()) {
            Err(DatasetError::UnknownLabel { line: 2, token }) => assert_eq!(token, "maybe"),
            other => panic!("{other:?}"),
        }
        let row = format!("x,{},spam\n", vec!["0"; 30].join(","));
        assert!(matches!(
            read_corpus(format!("{header}{row}").as_bytes()),
            Err(DatasetError::BadNumber { line: 2, .. })
        ));
        let ok = format!("{},spam\n", vec!["0.5"; 31].join(","));
        let c = read_corpus(format!("{header}{ok}").as_bytes()).unwrap();
        assert_eq!(c.rows()[0].source_id, "row-2");
    }

    #[test]
    fn balance_report() {
        let c = labelled(110, 258);
        let b = c.balance();
        assert_eq!((b.total, b.spam, b.ham), (368, 110, 258));
        assert!(b.to_string().contains("29.9% spam"), "{b}");
    }

    #[test]
    fn stratified_split_counts() {
        let c = labelled(30, 70);
        let (train, test) = split(&c, &SplitSpec::default()).unwrap();
        assert_eq!((train.balance().spam, train.balance().ham), (24, 56));
        assert_eq!((test.balance().spam, test.balance().ham), (6, 14));
    }

    #[test]
    fn split_is_seeded() {
        let c = labelled(30, 70);
        let ids = |c: &Corpus| c.rows().iter().map(|r| r.source_id.clone()).collect::<Vec<_>>();
        let a = split(&c, &SplitSpec::with_seed(1)).unwrap();
        let b = split(&c, &SplitSpec::with_seed(1)).unwrap();
        let d = split(&c, &SplitSpec::with_seed(2)).unwrap();
        assert_eq!(ids(&a.0), ids(&b.0));
        assert_ne!(ids(&a.0), ids(&d.0));
    }

    #[test]
    fn split_rejects_tiny_classes() {
        assert!(matches!(split(&labelled(1, 20), &SplitSpec::default()), Err(DatasetError::Split(_))));
        let bad = SplitSpec { train_fraction: 1.0, ..Default::default() };
        assert!(matches!(split(&labelled(5, 5), &bad), Err(DatasetError::Invalid(_))));
    }

    #[test]
    fn normalization_rules() {
        let mut c = labelled(3, 3);
        for (i, r) in c.rows.iter_mut().enumerate() {
            r.features.values[2] = 7.0;
            r.features.values[0] = 2.0 * i as f64; // 0..10
        }
        let stats = NormalizationStats::fit(&c).unwrap();
        let (n, clamped) = stats.apply(&c).unwrap();
        assert_eq!(clamped, 0);
        assert!(n.rows().iter().all(|r| r.features.values[2] == 0.0));
        let mut x = c.rows()[0].features.selected(FeatureGroups::ALL);
        x[0] = 5.0;
        stats.scale(&mut x);
        assert_eq!(x[0], 0.0);
        let mut far = c.rows()[0].features.selected(FeatureGroups::ALL);
        far[0] = 25.0;
        assert_eq!(stats.scale(&mut far), 1);
        assert_eq!(far[0], 1.0);
    }

    #[test]
    fn synthetic_rounding() {
        let c = generate_synthetic(368, 0.3, 3.0, 4).unwrap();
        assert!(matches!(c.balance().spam, 110 | 111));
        assert_eq!(c, generate_synthetic(368, 0.3, 3.0, 4).unwrap());
        assert!(generate_synthetic(9, 0.3, 3.0, 4).is_err());
    }
}
