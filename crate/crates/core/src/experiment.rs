//! The experiment grid: feature subsets x algorithms x hidden sizes, each
//! cell averaged over several (split, initialize, train, evaluate) readings.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{generate_synthetic, split, Corpus, DatasetError, NormalizationStats, SplitSpec};
use crate::features::FeatureGroups;
use crate::metrics::{derive, tally, Label, MetricsReport};
use crate::network::{Activation, Network};
use crate::trainers::{train, Algorithm, TrainerConfig};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "WEBSPAM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReadingMode {
    /// Every reading draws a new split and a new initialization.
    #[default]
    Resplit,
    /// One split (reading 0's) shared by all readings; only the
    /// initialization changes.
    Reinit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub spam_fraction: f64,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { n: 368, spam_fraction: 0.3, separation: 3.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentPlan {
    pub subsets: Vec<FeatureGroups>,
    pub algorithms: Vec<Algorithm>,
    /// Hidden sizes run for every subset.
    pub hidden: Vec<usize>,
    /// Extra hidden sizes run only for `wide_subsets`.
    pub wide_hidden: Vec<usize>,
    pub wide_subsets: Vec<FeatureGroups>,
    pub readings: usize,
    pub seed: u64,
    pub mode: ReadingMode,
    pub train_fraction: f64,
    pub stratified: bool,
    pub steepness: f64,
    /// Base trainer settings; `algorithm` and `seed` are set per cell.
    pub trainer: TrainerConfig,
    pub corpus: Option<PathBuf>,
    /// Used when no corpus path is given.
    pub synthetic: Option<SyntheticSpec>,
    pub workers: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            subsets: FeatureGroups::GRID.to_vec(),
            algorithms: Algorithm::ALL.to_vec(),
            hidden: vec![10],
            wide_hidden: vec![20],
            wide_subsets: vec![FeatureGroups::URL.union(FeatureGroups::CONTENT), FeatureGroups::ALL],
            readings: 10,
            seed: 0,
            mode: ReadingMode::Resplit,
            train_fraction: 0.8,
            stratified: true,
            steepness: 2.0,
            trainer: TrainerConfig::default(),
            corpus: None,
            synthetic: None,
            workers: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("cannot parse plan: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("plan names neither a corpus nor a synthetic corpus")]
    NoCorpus,
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let plan: ExperimentPlan = toml::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Plan(m.to_string()));
        if self.subsets.is_empty() {
            return bad("at least one feature subset is required");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if self.hidden.is_empty() || self.hidden.iter().chain(&self.wide_hidden).any(|&h| h == 0) {
            return bad("hidden sizes must be non-empty and positive");
        }
        if self.readings == 0 {
            return bad("readings must be >= 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1");
        }
        Activation::bipolar(self.steepness).map_err(|e| ExperimentError::Plan(e.to_string()))?;
        self.trainer.validate().map_err(|e| ExperimentError::Plan(e.to_string()))?;
        Ok(())
    }

    /// Hidden sizes of the blocks of one subset's table.
    pub fn hidden_for(&self, subset: FeatureGroups) -> Vec<usize> {
        let mut h = self.hidden.clone();
        if self.wide_subsets.contains(&subset) {
            h.extend(self.wide_hidden.iter().filter(|w| !self.hidden.contains(w)));
        }
        h
    }

    /// Loads the corpus named by the plan or generates the synthetic one.
    pub fn load_corpus(&self) -> Result<Corpus, ExperimentError> {
        match (&self.corpus, &self.synthetic) {
            (Some(path), _) => Ok(crate::dataset::load_corpus(path)?),
            (None, Some(s)) => Ok(generate_synthetic(s.n, s.spam_fraction, s.separation, s.seed)?),
            (None, None) => Err(ExperimentError::NoCorpus),
        }
    }

    fn worker_count(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// One (split, initialize, train, evaluate) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub metrics: MetricsReport,
    pub training_seconds: f64,
    pub final_error: f64,
    pub clamped: usize,
}

/// Means over a cell's readings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowValues {
    pub sensitivity: f64,
    pub specificity: f64,
    pub efficiency: f64,
    pub accuracy: f64,
    pub training_seconds: f64,
}

impl RowValues {
    pub fn mean(readings: &[Reading]) -> Self {
        let n = readings.len() as f64;
        let avg = |f: &dyn Fn(&Reading) -> f64| readings.iter().map(f).sum::<f64>() / n;
        RowValues {
            sensitivity: avg(&|r| r.metrics.sensitivity),
            specificity: avg(&|r| r.metrics.specificity),
            efficiency: avg(&|r| r.metrics.efficiency),
            accuracy: avg(&|r| r.metrics.accuracy),
            training_seconds: avg(&|r| r.training_seconds),
        }
    }

    fn column(&self, c: usize) -> f64 {
        [self.sensitivity, self.specificity, self.efficiency, self.accuracy, self.training_seconds][c]
    }
}

pub const COLUMNS: [&str; 5] = ["Sensitivity", "Specificity", "Efficiency", "Accuracy", "Training Time (s)"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub algorithm: Algorithm,
    pub hidden: usize,
    pub values: Option<RowValues>,
    pub error: Option<String>,
    pub readings: Vec<Reading>,
    /// Per column: whether this row holds the block's best value.
    pub best: [bool; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub groups: FeatureGroups,
    /// Blocks in plan order, one per hidden size.
    pub blocks: Vec<(usize, Vec<TableRow>)>,
}

impl ResultTable {
    pub fn caption(&self) -> String {
        format!("{} features ({})", self.groups.title(), self.groups.feature_count())
    }

    pub fn rows(&self) -> impl Iterator<Item = &TableRow> {
        self.blocks.iter().flat_map(|(_, rows)| rows)
    }

    fn mark_best(rows: &mut [TableRow]) {
        for c in 0..COLUMNS.len() {
            let vals: Vec<Option<f64>> = rows.iter().map(|r| r.values.map(|v| v.column(c))).collect();
            let best = vals.iter().flatten().copied().fold(None, |acc: Option<f64>, v| {
                Some(match acc {
                    None => v,
                    // time: smaller is better
                    Some(a) if c == 4 => a.min(v),
                    Some(a) => a.max(v),
                })
            });
            for (row, v) in rows.iter_mut().zip(vals) {
                row.best[c] = v.is_some() && v == best;
            }
        }
    }
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn split_seed(plan: &ExperimentPlan, reading: usize) -> u64 {
    let r = if plan.mode == ReadingMode::Reinit { 0 } else { reading };
    mix(plan.seed ^ mix(r as u64))
}

/// Shared by every algorithm of a reading so their comparison is paired.
fn init_seed(plan: &ExperimentPlan, subset: FeatureGroups, hidden: usize, reading: usize) -> u64 {
    mix(plan.seed ^ mix((reading as u64) << 32 ^ (hidden as u64) << 8 ^ subset.indices().len() as u64 ^ 0xa5))
}

/// Runs one reading of one cell. The corpus is already projected onto the
/// subset.
pub fn run_reading(
    plan: &ExperimentPlan,
    corpus: &Corpus,
    algorithm: Algorithm,
    hidden: usize,
    reading: usize,
) -> Result<Reading, String> {
    let spec =
        SplitSpec { train_fraction: plan.train_fraction, seed: split_seed(plan, reading), stratified: plan.stratified };
    let (train_rows, test_rows) = split(corpus, &spec).map_err(|e| e.to_string())?;
    let stats = NormalizationStats::fit(&train_rows).map_err(|e| e.to_string())?;
    let (train_rows, _) = stats.apply(&train_rows).map_err(|e| e.to_string())?;
    let (test_rows, clamped) = stats.apply(&test_rows).map_err(|e| e.to_string())?;
    let data = train_rows.to_training_set().map_err(|e| e.to_string())?;
    let activation = Activation::bipolar(plan.steepness).map_err(|e| e.to_string())?;
    let k = corpus.groups().feature_count();
    let mut net = Network::initialize(&[k, hidden, 1], activation, init_seed(plan, corpus.groups(), hidden, reading))
        .map_err(|e| e.to_string())?;
    let config = TrainerConfig { algorithm, ..plan.trainer.clone() };
    let start = Instant::now();
    let report = train(&mut net, &data, &config).map_err(|e| e.to_string())?;
    let training_seconds = start.elapsed().as_secs_f64();
    let predictions = test_rows
        .inputs()
        .iter()
        .map(|x| net.predict(x).map(|o| Label::from_output(o[0])))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let cm = tally(&predictions, &test_rows.labels()).map_err(|e| e.to_string())?;
    let metrics = derive(&cm).map_err(|e| e.to_string())?;
    Ok(Reading { metrics, training_seconds, final_error: report.final_error, clamped })
}

#[derive(Debug, Clone, Copy)]
struct Job {
    subset: usize,
    hidden: usize,
    algorithm: Algorithm,
    reading: usize,
}

/// Runs the whole grid and returns one table per subset, in plan order.
/// Failed cells carry their error message and are never marked best.
pub fn run_experiment(plan: &ExperimentPlan, corpus: &Corpus) -> Result<Vec<ResultTable>, ExperimentError> {
    plan.validate()?;
    let projected = plan.subsets.iter().map(|&g| corpus.project(g)).collect::<Result<Vec<_>, _>>()?;
    let mut jobs = Vec::new();
    for (s, &g) in plan.subsets.iter().enumerate() {
        for hidden in plan.hidden_for(g) {
            for &algorithm in &plan.algorithms {
                for reading in 0..plan.readings {
                    jobs.push(Job { subset: s, hidden, algorithm, reading });
                }
            }
        }
    }
    let results: Mutex<Vec<Option<Result<Reading, String>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = plan.worker_count().clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = run_reading(plan, &projected[job.subset], job.algorithm, job.hidden, job.reading);
                results.lock().expect("result store poisoned")[i] = Some(r);
            });
        }
    });
    let mut results = results.into_inner().expect("result store poisoned").into_iter();

    let mut tables = Vec::new();
    for &g in &plan.subsets {
        let mut blocks = Vec::new();
        for hidden in plan.hidden_for(g) {
            let mut rows = Vec::new();
            for &algorithm in &plan.algorithms {
                let mut readings = Vec::new();
                let mut error = None;
                for _ in 0..plan.readings {
                    match results.next().flatten() {
                        Some(Ok(r)) => readings.push(r),
                        Some(Err(e)) => {
                            error.get_or_insert(e);
                        }
                        None => {
                            error.get_or_insert_with(|| "reading did not run".to_string());
                        }
                    }
                }
                let values = error.is_none().then(|| RowValues::mean(&readings));
                rows.push(TableRow { algorithm, hidden, values, error, readings, best: [false; 5] });
            }
            ResultTable::mark_best(&mut rows);
            blocks.push((hidden, rows));
        }
        tables.push(ResultTable { groups: g, blocks });
    }
    Ok(tables)
}

/// Markdown rendering; best values per block are bold.
pub fn render_markdown(tables: &[ResultTable]) -> String {
    let mut out = String::new();
    for t in tables {
        let _ = writeln!(out, "### {}\n", t.caption());
        for (hidden, rows) in &t.blocks {
            if t.blocks.len() > 1 {
                let _ = writeln!(out, "Hidden layer: {hidden} neurons\n");
            }
            let _ = writeln!(out, "| Algorithm | {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|---|{}", "---:|".repeat(COLUMNS.len()));
            for row in rows {
                let _ = write!(out, "| {} |", row.algorithm.table_label());
                match &row.values {
                    Some(v) => {
                        for c in 0..COLUMNS.len() {
                            let cell =
                                if c == 4 { format!("{:.3}", v.column(c)) } else { format!("{:.4}", v.column(c)) };
                            if row.best[c] {
                                let _ = write!(out, " **{cell}** |");
                            } else {
                                let _ = write!(out, " {cell} |");
                            }
                        }
                    }
                    None => {
                        let msg = row.error.as_deref().unwrap_or("failed").replace('|', "/");
                        let _ = write!(out, " failed: {msg} |{}", " |".repeat(COLUMNS.len() - 1));
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

/// One CSV line per row at full precision.
pub fn render_csv(tables: &[ResultTable]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "subset",
        "features",
        "hidden",
        "algorithm",
        "sensitivity",
        "specificity",
        "efficiency",
        "accuracy",
        "training_seconds",
        "best",
        "error",
    ]);
    for t in tables {
        for row in t.rows() {
            let best: Vec<&str> = ["sensitivity", "specificity", "efficiency", "accuracy", "training_seconds"]
                .iter()
                .zip(row.best)
                .filter(|(_, b)| *b)
                .map(|(n, _)| *n)
                .collect();
            let vals: Vec<String> = match &row.values {
                Some(v) => (0..5).map(|c| v.column(c).to_string()).collect(),
                None => vec![String::new(); 5],
            };
            let mut rec = vec![
                t.groups.to_string(),
                t.groups.feature_count().to_string(),
                row.hidden.to_string(),
                row.algorithm.table_label().to_string(),
            ];
            rec.extend(vals);
            rec.push(best.join(";"));
            rec.push(row.error.clone().unwrap_or_default());
            let _ = w.write_record(&rec);
        }
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_shape() {
        let p = ExperimentPlan::default();
        p.validate().unwrap();
        assert_eq!(p.subsets.len(), 7);
        let wide: Vec<usize> =
            p.subsets.iter().filter(|g| p.hidden_for(**g).len() == 2).map(|g| g.feature_count()).collect();
        assert_eq!(wide, vec![26, 31]);
    }

    #[test]
    fn toml_plan() {
        let p = ExperimentPlan::from_toml(
            r#"
            subsets = ["url", "url+links"]
            algorithms = ["cg", "lm-br"]
            readings = 3
            [trainer]
            max_iterations = 20
            [synthetic]
            n = 50
            spam_fraction = 0.3
            separation = 2.0
            seed = 1
            "#,
        )
        .unwrap();
        assert_eq!(p.subsets[1], FeatureGroups::URL.union(FeatureGroups::LINKS));
        assert_eq!(p.algorithms, vec![Algorithm::Cg, Algorithm::LmBr]);
        assert_eq!(p.trainer.max_iterations, 20);
        assert_eq!(p.hidden, vec![10]);
        assert!(ExperimentPlan::from_toml("readings = 0").is_err());
        assert!(ExperimentPlan::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn single_cell_table() {
        let plan = ExperimentPlan {
            subsets: vec![FeatureGroups::URL],
            algorithms: vec![Algorithm::Cg],
            readings: 1,
            trainer: TrainerConfig::default().with_iterations(10),
            ..Default::default()
        };
        let corpus = generate_synthetic(60, 0.3, 3.0, 2).unwrap();
        let tables = run_experiment(&plan, &corpus).unwrap();
        assert_eq!(tables.len(), 1);
        let rows: Vec<_> = tables[0].rows().collect();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].values.is_some());
        assert_eq!(rows[0].best, [true; 5]);
        let md = render_markdown(&tables);
        assert!(md.contains("### URL features (10)"));
        assert_eq!(render_csv(&tables).lines().count(), 2);
    }

    #[test]
    fn failed_cell_is_recorded() {
        let plan = ExperimentPlan {
            subsets: vec![FeatureGroups::URL],
            algorithms: vec![Algorithm::Cg, Algorithm::Lm],
            hidden: vec![3000],
            readings: 1,
            trainer: TrainerConfig::default().with_iterations(1),
            ..Default::default()
        };
        let corpus = generate_synthetic(30, 0.3, 3.0, 2).unwrap();
        let tables = run_experiment(&plan, &corpus).unwrap();
        let rows: Vec<_> = tables[0].rows().collect();
        assert!(rows[0].values.is_some());
        assert!(rows[1].values.is_none() && rows[1].error.as_deref().unwrap().contains("parameters"));
        assert!(!rows[1].best.iter().any(|b| *b));
        assert!(render_markdown(&tables).contains("failed:"));
    }

    #[test]
    fn best_marking() {
        let r = |sens: f64, time: f64| TableRow {
            algorithm: Algorithm::Cg,
            hidden: 10,
            values: Some(RowValues {
                sensitivity: sens,
                specificity: 0.5,
                efficiency: 0.5,
                accuracy: 0.5,
                training_seconds: time,
            }),
            error: None,
            readings: vec![],
            best: [false; 5],
        };
        let mut rows = vec![r(0.9, 2.0), r(0.8, 1.0)];
        ResultTable::mark_best(&mut rows);
        assert_eq!(rows[0].best, [true, true, true, true, false]);
        assert_eq!(rows[1].best, [false, true, true, true, true]);
    }
}
