//! Command-line front end: `extract`, `train`, `evaluate`, `experiment`.

use std::ffi::OsStr;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::dataset::{load_corpus, save_corpus, Corpus, DatasetError, NormalizationStats, Sample};
use crate::experiment::{
    render_csv, render_markdown, run_experiment, ExperimentError, ExperimentPlan, ReadingMode, ResultTable,
    SyntheticSpec,
};
use crate::features::{extract, FeatureGroups, LexiconError, Lexicons, PageRecord};
use crate::metrics::{derive, tally, Label, MetricsError, MetricsReport};
use crate::model_file::{load_model, save_model, Model, ModelError};
use crate::network::{Activation, Network, NetworkError};
use crate::trainers::{train, Algorithm, TrainError, TrainerConfig, TrainingReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("no extractable records in {0}")]
    NothingExtracted(PathBuf),
    #[error("{failed} of {total} experiment cells failed")]
    CellsFailed { failed: usize, total: usize },
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => e.code(),
            CliError::CellsFailed { .. } => 3,
            CliError::Dataset(DatasetError::SchemaMismatch { .. }) => 15,
            _ => 1,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "webspam", version, about = "Web spam classification with small MLPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract feature vectors from a directory of `<id>.url`/`<id>.html` pairs.
    Extract(ExtractArgs),
    /// Train a network on a corpus CSV and write a model file.
    Train(TrainArgs),
    /// Evaluate a model file on a corpus CSV.
    Evaluate(EvaluateArgs),
    /// Run the feature-subset x algorithm experiment grid.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory of `<id>.url`, `<id>.html` and optional `<id>.label` / `<id>.headers` files.
    #[arg(long)]
    pub pages: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Feature groups, e.g. `all`, `url+links`.
    #[arg(long, default_value = "all")]
    pub groups: FeatureGroups,
    /// Directory overriding the bundled word lists.
    #[arg(long)]
    pub lexicons: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "rprop")]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 10)]
    pub hidden: usize,
    /// Iteration budget.
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long)]
    pub target_error: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub steepness: f64,
    #[arg(long)]
    pub model: PathBuf,
    /// Training log path; defaults to the model path with `.log` appended.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment plan; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Generate a synthetic corpus (368 rows, 30% spam, separation 3) instead of reading one.
    #[arg(long, conflicts_with = "corpus")]
    pub synthetic: bool,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub readings: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Writes `results.md` and `results.csv` here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub rows: usize,
    /// `(record id, reason)` for every skipped record.
    pub failures: Failures,
}

type Failures = Vec<(String, String)>;

fn read_page_dir(dir: &Path) -> Result<(Vec<PageRecord>, Failures), CliError> {
    let mut ids: Vec<String> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension() == Some(OsStr::new("url")))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for id in ids {
        let file = |ext: &str| dir.join(format!("{id}.{ext}"));
        let url = match fs::read_to_string(file("url")) {
            Ok(u) => u.trim().to_string(),
            Err(e) => {
                failures.push((id, format!("unreadable url file: {e}")));
                continue;
            }
        };
        let html = match fs::read(file("html")) {
            Ok(h) => h,
            Err(e) => {
                failures.push((id, format!("missing or unreadable html file: {e}")));
                continue;
            }
        };
        let label = match fs::read_to_string(file("label")) {
            Ok(l) => match l.trim().to_ascii_lowercase().parse::<Label>() {
                Ok(l) => Some(l),
                Err(t) => {
                    failures.push((id, format!("unknown label `{t}`")));
                    continue;
                }
            },
            Err(_) => None,
        };
        let headers = fs::read_to_string(file("headers"))
            .map(|h| {
                h.lines()
                    .filter_map(|l| l.split_once(':'))
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .collect()
            })
            .unwrap_or_default();
        let mut rec = PageRecord::new(id, url, html);
        rec.headers = headers;
        rec.label = label;
        records.push(rec);
    }
    Ok((records, failures))
}

/// Extracts every page pair under `pages_dir` into a corpus CSV. Records
/// without a `.label` file, with an unparseable URL or missing HTML are
/// reported and skipped.
pub fn cmd_extract(
    pages_dir: &Path,
    out_csv: &Path,
    groups: FeatureGroups,
    lexicons: &Lexicons,
) -> Result<ExtractSummary, CliError> {
    let (records, mut failures) = read_page_dir(pages_dir)?;
    let mut corpus = Corpus::empty(groups);
    for rec in &records {
        let Some(label) = rec.label else {
            failures.push((rec.id.clone(), "no label file".to_string()));
            continue;
        };
        match extract(rec, groups, lexicons) {
            Ok(features) => corpus.push(Sample { features, label, source_id: rec.id.clone() })?,
            Err(e) => failures.push((rec.id.clone(), e.to_string())),
        }
    }
    failures.sort();
    if corpus.is_empty() {
        return Err(CliError::NothingExtracted(pages_dir.to_path_buf()));
    }
    save_corpus(&corpus, out_csv)?;
    Ok(ExtractSummary { rows: corpus.len(), failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub algorithm: Algorithm,
    pub hidden: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub target_error: Option<f64>,
    pub seed: u64,
    pub steepness: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            algorithm: Algorithm::Rprop,
            hidden: 10,
            iterations: 100,
            learning_rate: 0.1,
            target_error: None,
            seed: 0,
            steepness: 2.0,
        }
    }
}

/// Fits min-max normalization on `corpus`, trains a `[k, hidden, 1]`
/// network on all of it and returns the model with the training report.
pub fn cmd_train(corpus: &Corpus, opts: &TrainOptions) -> Result<(Model, TrainingReport), CliError> {
    let stats = NormalizationStats::fit(corpus)?;
    let (scaled, _) = stats.apply(corpus)?;
    let data = scaled.to_training_set()?;
    let k = corpus.groups().feature_count();
    let mut network = Network::initialize(&[k, opts.hidden, 1], Activation::bipolar(opts.steepness)?, opts.seed)?;
    let config = TrainerConfig {
        algorithm: opts.algorithm,
        max_iterations: opts.iterations,
        learning_rate: opts.learning_rate,
        target_error: opts.target_error,
        seed: opts.seed,
        ..Default::default()
    };
    let report = train(&mut network, &data, &config)?;
    Ok((Model { network, groups: corpus.groups(), normalization: Some(stats) }, report))
}

/// Classifies every row (output >= 0 is spam) and derives the metrics.
/// The corpus must have exactly the model's feature schema.
pub fn cmd_evaluate(model: &Model, corpus: &Corpus) -> Result<MetricsReport, CliError> {
    if corpus.groups() != model.groups {
        return Err(ModelError::Schema { model: model.groups, input: corpus.groups() }.into());
    }
    let predictions = corpus.rows().iter().map(|r| model.classify(&r.features)).collect::<Result<Vec<_>, _>>()?;
    Ok(derive(&tally(&predictions, &corpus.labels())?)?)
}

pub fn cmd_experiment(plan: &ExperimentPlan) -> Result<Vec<ResultTable>, CliError> {
    let corpus = plan.load_corpus()?;
    Ok(run_experiment(plan, &corpus)?)
}

pub fn format_report(m: &MetricsReport) -> String {
    format!(
        "sensitivity {:.4}\nspecificity {:.4}\nefficiency  {:.4}\naccuracy    {:.4}\n",
        m.sensitivity, m.specificity, m.efficiency, m.accuracy
    )
}

fn build_plan(args: &ExperimentArgs) -> Result<ExperimentPlan, CliError> {
    let mut plan = match &args.config {
        Some(p) => ExperimentPlan::from_toml(&fs::read_to_string(p).map_err(|e| io_err(p, e))?)?,
        None => ExperimentPlan::default(),
    };
    if let Some(c) = &args.corpus {
        plan.corpus = Some(c.clone());
        plan.synthetic = None;
    }
    if args.synthetic || args.separation.is_some() {
        plan.corpus = None;
        let mut s = plan.synthetic.unwrap_or_default();
        if let Some(sep) = args.separation {
            s.separation = sep;
        }
        plan.synthetic = Some(s);
    }
    if plan.corpus.is_none() && plan.synthetic.is_none() && args.config.is_none() {
        plan.synthetic = Some(SyntheticSpec::default());
    }
    if let Some(r) = args.readings {
        plan.readings = r;
    }
    if let Some(i) = args.iterations {
        plan.trainer.max_iterations = i;
    }
    if let Some(s) = args.seed {
        plan.seed = s;
    }
    if let Some(m) = &args.mode {
        plan.mode = match m.as_str() {
            "resplit" => ReadingMode::Resplit,
            "reinit" => ReadingMode::Reinit,
            other => return Err(ExperimentError::Plan(format!("unknown mode `{other}` (resplit or reinit)")).into()),
        };
    }
    if args.workers.is_some() {
        plan.workers = args.workers;
    }
    plan.validate()?;
    Ok(plan)
}

/// Runs one parsed command, writing human output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(|e| CliError::Io(e.to_string()));
    match cli.command {
        Command::Extract(a) => {
            let lexicons = match &a.lexicons {
                Some(dir) => Lexicons::load_dir(dir)?,
                None => Lexicons::bundled(),
            };
            let summary = cmd_extract(&a.pages, &a.out, a.groups, &lexicons)?;
            for (id, reason) in &summary.failures {
                eprintln!("skipped {id}: {reason}");
            }
            w(out, &format!("wrote {} rows to {}\n", summary.rows, a.out.display()))?;
        }
        Command::Train(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let opts = TrainOptions {
                algorithm: a.algorithm,
                hidden: a.hidden,
                iterations: a.iterations,
                learning_rate: a.learning_rate,
                target_error: a.target_error,
                seed: a.seed,
                steepness: a.steepness,
            };
            let (model, report) = cmd_train(&corpus, &opts)?;
            save_model(&model, &a.model)?;
            let log = a.log.unwrap_or_else(|| {
                let mut p = a.model.clone().into_os_string();
                p.push(".log");
                PathBuf::from(p)
            });
            fs::write(&log, report.to_log()).map_err(|e| io_err(&log, e))?;
            let json = serde_json::to_string(&report.summary()).map_err(|e| CliError::Io(e.to_string()))?;
            w(out, &format!("{json}\n"))?;
        }
        Command::Evaluate(a) => {
            let model = load_model(&a.model)?;
            let corpus = load_corpus(&a.corpus)?;
            let report = cmd_evaluate(&model, &corpus)?;
            if a.json {
                let json = serde_json::to_string(&report).map_err(|e| CliError::Io(e.to_string()))?;
                w(out, &format!("{json}\n"))?;
            } else {
                w(out, &format_report(&report))?;
            }
        }
        Command::Experiment(a) => {
            let plan = build_plan(&a)?;
            let tables = cmd_experiment(&plan)?;
            let md = render_markdown(&tables);
            if let Some(dir) = &a.out_dir {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                let (mdp, csvp) = (dir.join("results.md"), dir.join("results.csv"));
                fs::write(&mdp, &md).map_err(|e| io_err(&mdp, e))?;
                fs::write(&csvp, render_csv(&tables)).map_err(|e| io_err(&csvp, e))?;
            }
            w(out, &md)?;
            let total = tables.iter().map(|t| t.rows().count()).sum();
            let failed = tables.iter().flat_map(|t| t.rows()).filter(|r| r.values.is_none()).count();
            if failed > 0 {
                return Err(CliError::CellsFailed { failed, total });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;

    #[test]
    fn zero_weights_classify_everything_as_spam() {
        let corpus = generate_synthetic(20, 0.3, 1.0, 0).unwrap().project(FeatureGroups::LINKS).unwrap();
        let model = Model {
            network: Network::zeros(&[5, 3, 1], Activation::default()).unwrap(),
            groups: FeatureGroups::LINKS,
            normalization: None,
        };
        let m = cmd_evaluate(&model, &corpus).unwrap();
        assert_eq!(m.counts.tp + m.counts.fn_, 6);
        assert_eq!((m.sensitivity, m.specificity), (1.0, 0.0));
        assert_eq!(m.counts.tn, 0);
    }

    #[test]
    fn zero_iterations_keep_initialization() {
        let corpus = generate_synthetic(30, 0.3, 2.0, 1).unwrap().project(FeatureGroups::URL).unwrap();
        let opts = TrainOptions { iterations: 0, seed: 5, ..Default::default() };
        let (model, report) = cmd_train(&corpus, &opts).unwrap();
        assert_eq!(report.iterations(), 0);
        assert_eq!(model.network, Network::initialize(&[10, 10, 1], Activation::default(), 5).unwrap());
    }

    #[test]
    fn schema_mismatch_is_an_error() {
        let all = generate_synthetic(30, 0.3, 2.0, 1).unwrap();
        let (model, _) =
            cmd_train(&all.project(FeatureGroups::URL).unwrap(), &TrainOptions { iterations: 2, ..Default::default() })
                .unwrap();
        let err = cmd_evaluate(&model, &all).unwrap_err();
        assert!(matches!(err, CliError::Model(ModelError::Schema { .. })));
        assert_eq!(err.exit_code(), 15);
    }

    #[test]
    fn parses_subcommands() {
        let cli =
            Cli::try_parse_from(["webspam", "train", "--corpus", "c.csv", "--model", "m.txt", "--algorithm", "lm-br"])
                .unwrap();
        match cli.command {
            Command::Train(a) => {
                assert_eq!(a.algorithm, Algorithm::LmBr);
                assert_eq!((a.hidden, a.iterations, a.learning_rate), (10, 100, 0.1));
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["webspam", "extract", "--pages", "p", "--out", "o", "--groups", "bogus"]).is_err());
        assert!(Cli::try_parse_from(["webspam", "experiment", "--synthetic", "--corpus", "x"]).is_err());
    }
}
