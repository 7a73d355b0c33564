//! File-backed pipeline stages driven by a TOML config.
//!
//! Each stage reads its inputs from disk and writes one artifact, so any stage can be
//! rerun from the artifacts of the previous ones. `pipeline` is exactly the stages run
//! in order.
//!
//! When labels are configured, the stages use the contamination-free split drawn from
//! `seed`: discovery and fitting see only the training normals, scoring covers the
//! test rows. Without labels every row is used for both.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discovery::{discover_pc, PcOptions};
use crate::error::{Error, Result};
use crate::eval::{compare_report, load_labels, split, ExperimentOptions, GridConfig, LabeledTable, SplitSpec};
use crate::factor::{load_factor_model, parse_factor_defs, FactorMapping};
use crate::graph::{load_graph, save_graph};
use crate::ordering::{enumerate_top_k, project, EnumerateOptions, OrderingSet, PreferenceMatrix};
use crate::scoring::{
    compute_weights, export_sequences, fit, import_external_nll, score_table, ColumnWeights, FitOptions, ScoreReport,
    SurrogateScorer,
};
use crate::table::{load_schema, load_table, Header, LoadOptions, Table};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub table: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Column of `table` holding 0/1 labels, as an alternative to `labels`.
    pub label_column: Option<String>,
    pub factor_defs: Option<PathBuf>,
    pub factor_values: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub preference: Option<PathBuf>,
    pub orderings: Option<PathBuf>,
    pub scorer: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub breakdown: Option<PathBuf>,
    pub sequences: Option<PathBuf>,
    /// NLLs from an external model; when set, `score` aggregates these instead of the surrogate's.
    pub external_nll: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub report_table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub delimiter: char,
    pub header: bool,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            delimiter: ',',
            header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub alpha: f64,
    pub max_cond: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        let d = PcOptions::default();
        Self {
            alpha: d.alpha,
            max_cond: d.max_cond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderingConfig {
    pub k: usize,
    pub threshold_ratio: f64,
    pub solution_cap: usize,
}

impl Default for OrderingConfig {
    fn default() -> Self {
        let d = EnumerateOptions::default();
        Self {
            k: d.k,
            threshold_ratio: d.threshold_ratio,
            solution_cap: d.cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub bins: usize,
    pub smoothing: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            bins: d.bins,
            smoothing: d.smoothing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Seeds for the comparison grid; defaults to the top-level seed alone.
    pub seeds: Option<Vec<u64>>,
    pub train_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seeds: None,
            train_fraction: crate::eval::DEFAULT_TRAIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub input: InputConfig,
    pub discovery: DiscoveryConfig,
    pub ordering: OrderingConfig,
    pub scorer: ScorerConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Discover,
    Project,
    Order,
    Fit,
    Score,
    Export,
    Eval,
    Pipeline,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] = [
        Stage::Discover,
        Stage::Project,
        Stage::Order,
        Stage::Fit,
        Stage::Score,
        Stage::Eval,
    ];
}

impl PipelineConfig {
    /// Parses TOML; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))?;
        config.paths.rebase(base);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let ratio_ok = |r: f64| r > 0.0 && r <= 1.0;
        if !ratio_ok(self.ordering.threshold_ratio) {
            return Err(Error::Usage("ordering.threshold_ratio must lie in (0, 1]".into()));
        }
        if !(self.eval.train_fraction > 0.0 && self.eval.train_fraction < 1.0) {
            return Err(Error::Usage("eval.train_fraction must lie in (0, 1)".into()));
        }
        if !(self.discovery.alpha > 0.0 && self.discovery.alpha < 1.0) {
            return Err(Error::Usage("discovery.alpha must lie in (0, 1)".into()));
        }
        if self.ordering.k == 0 {
            return Err(Error::Usage("ordering.k must be at least 1".into()));
        }
        if self.scorer.bins == 0 || !(self.scorer.smoothing > 0.0) {
            return Err(Error::Usage("scorer.bins must be >= 1 and scorer.smoothing > 0".into()));
        }
        if self.paths.labels.is_some() && self.paths.label_column.is_some() {
            return Err(Error::Usage("set either paths.labels or paths.label_column, not both".into()));
        }
        if !self.input.delimiter.is_ascii() {
            return Err(Error::Usage("input.delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    pub fn experiment_options(&self) -> ExperimentOptions {
        ExperimentOptions {
            pc: PcOptions {
                alpha: self.discovery.alpha,
                max_cond: self.discovery.max_cond,
            },
            enumerate: EnumerateOptions {
                k: self.ordering.k,
                threshold_ratio: self.ordering.threshold_ratio,
                cap: self.ordering.solution_cap,
            },
            fit: FitOptions {
                bins: self.scorer.bins,
                smoothing: self.scorer.smoothing,
            },
            train_fraction: self.eval.train_fraction,
        }
    }

    pub fn eval_seeds(&self) -> Vec<u64> {
        self.eval.seeds.clone().unwrap_or_else(|| vec![self.seed])
    }

    fn delimiter(&self) -> u8 {
        self.input.delimiter as u8
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        for p in [
            &mut self.table,
            &mut self.schema,
            &mut self.labels,
            &mut self.factor_defs,
            &mut self.factor_values,
            &mut self.graph,
            &mut self.preference,
            &mut self.orderings,
            &mut self.scorer,
            &mut self.scores,
            &mut self.breakdown,
            &mut self.sequences,
            &mut self.external_nll,
            &mut self.report,
            &mut self.report_table,
        ] {
            fix(p);
        }
    }
}

fn input<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    let path = path
        .as_deref()
        .ok_or_else(|| Error::Usage(format!("paths.{key} is required for this stage")))?;
    if !path.exists() {
        return Err(Error::Usage(format!("paths.{key}: {} does not exist", path.display())));
    }
    Ok(path)
}

fn output<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    let path = path
        .as_deref()
        .ok_or_else(|| Error::Usage(format!("paths.{key} is required for this stage")))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(path)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// The input table and, if configured, its labels.
pub struct Dataset {
    pub table: Table,
    pub labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let schema = match &config.paths.schema {
            Some(_) => Some(load_schema(input(&config.paths.schema, "schema")?)?),
            None => None,
        };
        let options = LoadOptions {
            delimiter: config.delimiter(),
            header: if config.input.header { Header::Present } else { Header::Absent },
            schema,
        };
        let table = load_table(input(&config.paths.table, "table")?, &options)?;
        if let Some(col) = &config.paths.label_column {
            let lt = LabeledTable::from_label_column(&table, col)?;
            return Ok(Self {
                table: lt.table,
                labels: Some(lt.labels),
            });
        }
        let labels = match &config.paths.labels {
            Some(_) => Some(load_labels(input(&config.paths.labels, "labels")?)?),
            None => None,
        };
        if let Some(l) = &labels {
            LabeledTable::new(table.clone(), l.clone())?;
        }
        Ok(Self { table, labels })
    }

    /// `(train rows, scored rows)` for the stage commands.
    pub fn rows(&self, config: &PipelineConfig) -> Result<(Vec<usize>, Vec<usize>)> {
        match &self.labels {
            Some(labels) => {
                let sp = split(
                    &LabeledTable::new(self.table.clone(), labels.clone())?,
                    SplitSpec {
                        seed: config.seed,
                        train_fraction_of_normals: config.eval.train_fraction,
                    },
                )?;
                Ok((sp.train_rows, sp.test_rows))
            }
            None => {
                let all: Vec<usize> = (0..self.table.n_rows()).collect();
                Ok((all.clone(), all))
            }
        }
    }

    pub fn labeled(&self) -> Result<LabeledTable> {
        let labels = self
            .labels
            .clone()
            .ok_or_else(|| Error::Usage("labels are required (paths.labels or paths.label_column)".into()))?;
        LabeledTable::new(self.table.clone(), labels)
    }
}

fn load_mapping(config: &PipelineConfig, table: &Table) -> Result<FactorMapping> {
    let path = input(&config.paths.factor_defs, "factor_defs")?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let defs = parse_factor_defs(&text).map_err(|e| Error::json(path, e))?;
    FactorMapping::from_defs(&defs, &table.column_names())
}

fn load_factors(config: &PipelineConfig, table: &Table) -> Result<crate::factor::FactorModel> {
    load_factor_model(
        input(&config.paths.factor_defs, "factor_defs")?,
        input(&config.paths.factor_values, "factor_values")?,
        table,
        config.delimiter(),
    )
}

/// Outcome of one stage, for logging.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSummary {
    pub stage: Stage,
    pub artifact: PathBuf,
    pub detail: String,
}

pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<Vec<StageSummary>> {
    config.validate()?;
    match stage {
        Stage::Pipeline => {
            let mut out = Vec::new();
            for s in Stage::PIPELINE {
                out.extend(run_stage(s, config)?);
            }
            Ok(out)
        }
        Stage::Discover => discover(config).map(|s| vec![s]),
        Stage::Project => project_stage(config).map(|s| vec![s]),
        Stage::Order => order(config).map(|s| vec![s]),
        Stage::Fit => fit_stage(config).map(|s| vec![s]),
        Stage::Score => score_stage(config),
        Stage::Export => export(config).map(|s| vec![s]),
        Stage::Eval => eval_stage(config),
    }
}

fn discover(config: &PipelineConfig) -> Result<StageSummary> {
    input(&config.paths.factor_values, "factor_values")?;
    let data = Dataset::load(config)?;
    let factors = load_factors(config, &data.table)?;
    let (train, _) = data.rows(config)?;
    let discovery = discover_pc(
        &factors.values.select_rows(&train),
        config.experiment_options().pc,
    )?;
    let out = output(&config.paths.graph, "graph")?;
    save_graph(&discovery.graph, out)?;
    let mut detail = format!(
        "{} edges over {} factors from {} rows ({} tests)",
        discovery.graph.edges().len(),
        discovery.graph.factors().len(),
        train.len(),
        discovery.tests_run
    );
    if !discovery.excluded.is_empty() {
        detail.push_str(&format!("; excluded constant factors {:?}", discovery.excluded));
    }
    Ok(StageSummary {
        stage: Stage::Discover,
        artifact: out.to_owned(),
        detail,
    })
}

fn project_stage(config: &PipelineConfig) -> Result<StageSummary> {
    let graph = load_graph(input(&config.paths.graph, "graph")?)?;
    let data = Dataset::load(config)?;
    let mapping = load_mapping(config, &data.table)?;
    let w = project(&graph, &mapping)?;
    let out = output(&config.paths.preference, "preference")?;
    std::fs::write(out, w.to_json() + "\n").map_err(|e| Error::io(out, e))?;
    Ok(StageSummary {
        stage: Stage::Project,
        artifact: out.to_owned(),
        detail: format!("{0}x{0} preference matrix, total weight {1}", w.dim(), w.total_mass()),
    })
}

fn order(config: &PipelineConfig) -> Result<StageSummary> {
    let path = input(&config.paths.preference, "preference")?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let w = PreferenceMatrix::from_json(&text)?;
    let set = enumerate_top_k(&w, config.experiment_options().enumerate)?;
    let out = output(&config.paths.orderings, "orderings")?;
    set.save(out)?;
    Ok(StageSummary {
        stage: Stage::Order,
        artifact: out.to_owned(),
        detail: format!(
            "optimum {}, threshold {}, kept {} orderings",
            set.optimum,
            set.threshold,
            set.len()
        ),
    })
}

fn fit_stage(config: &PipelineConfig) -> Result<StageSummary> {
    let orderings = OrderingSet::load(input(&config.paths.orderings, "orderings")?)?;
    let data = Dataset::load(config)?;
    let (train, _) = data.rows(config)?;
    let scorer = fit(&data.table.select_rows(&train), &orderings, config.experiment_options().fit)?;
    let out = output(&config.paths.scorer, "scorer")?;
    scorer.save(out)?;
    Ok(StageSummary {
        stage: Stage::Fit,
        artifact: out.to_owned(),
        detail: format!("fitted {} orderings on {} rows", orderings.len(), train.len()),
    })
}

fn stage_weights(config: &PipelineConfig, table: &Table) -> Result<ColumnWeights> {
    match &config.paths.factor_defs {
        Some(_) => Ok(compute_weights(&load_mapping(config, table)?)),
        None => Ok(ColumnWeights::uniform(table.n_columns())),
    }
}

fn score_stage(config: &PipelineConfig) -> Result<Vec<StageSummary>> {
    let orderings = OrderingSet::load(input(&config.paths.orderings, "orderings")?)?;
    let data = Dataset::load(config)?;
    let (_, scored) = data.rows(config)?;
    let weights = stage_weights(config, &data.table)?;
    let table = data.table.select_rows(&scored);

    let report = match &config.paths.external_nll {
        Some(_) => {
            let path = input(&config.paths.external_nll, "external_nll")?;
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let nll = import_external_nll(file, &scored, orderings.len(), table.n_columns())?;
            ScoreReport::from_nll(
                table.column_names().into_iter().map(str::to_owned).collect(),
                weights,
                &scored,
                nll,
            )?
        }
        None => {
            let scorer = SurrogateScorer::load(input(&config.paths.scorer, "scorer")?)?;
            score_table(&scorer, &table, &scored, &orderings, &weights)?
        }
    };
    for col in &report.ignored_columns {
        log::warn!("column {col:?} has weight 0 and does not affect scores");
    }

    let out = output(&config.paths.scores, "scores")?;
    report.write_scores(create(out)?)?;
    let mut summaries = vec![StageSummary {
        stage: Stage::Score,
        artifact: out.to_owned(),
        detail: format!("scored {} rows", report.samples.len()),
    }];
    if config.paths.breakdown.is_some() {
        let out = output(&config.paths.breakdown, "breakdown")?;
        report.write_breakdown(create(out)?)?;
        summaries.push(StageSummary {
            stage: Stage::Score,
            artifact: out.to_owned(),
            detail: "per-column breakdown".into(),
        });
    }
    Ok(summaries)
}

fn export(config: &PipelineConfig) -> Result<StageSummary> {
    let orderings = OrderingSet::load(input(&config.paths.orderings, "orderings")?)?;
    let data = Dataset::load(config)?;
    let (_, scored) = data.rows(config)?;
    let out = output(&config.paths.sequences, "sequences")?;
    let n = export_sequences(&data.table.select_rows(&scored), &scored, &orderings, create(out)?)?;
    Ok(StageSummary {
        stage: Stage::Export,
        artifact: out.to_owned(),
        detail: format!("{n} sequence records"),
    })
}

fn eval_stage(config: &PipelineConfig) -> Result<Vec<StageSummary>> {
    let data = Dataset::load(config)?;
    let labeled = data.labeled()?;
    let factors = load_factors(config, &labeled.table)?;
    let report = compare_report(
        &labeled,
        &factors,
        &GridConfig::full_grid(),
        &config.eval_seeds(),
        &config.experiment_options(),
    )?;
    let out = output(&config.paths.report, "report")?;
    std::fs::write(out, report.to_json() + "\n").map_err(|e| Error::io(out, e))?;
    let detail = report
        .cells
        .iter()
        .map(|c| format!("{}: AUC {:.4}, F1 {:.4}", c.config, c.mean_auc, c.mean_f1))
        .collect::<Vec<_>>()
        .join("; ");
    let mut summaries = vec![StageSummary {
        stage: Stage::Eval,
        artifact: out.to_owned(),
        detail,
    }];
    if config.paths.report_table.is_some() {
        let out = output(&config.paths.report_table, "report_table")?;
        report.write_csv(create(out)?)?;
        summaries.push(StageSummary {
            stage: Stage::Eval,
            artifact: out.to_owned(),
            detail: "flat (config, seed, auc, f1) table".into(),
        });
    }
    Ok(summaries)
}
