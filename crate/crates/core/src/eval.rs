//! Contamination-free evaluation: half of the normal rows train the scorer, the rest
//! of the normals plus every anomaly form the test set.
//!
//! F1 is measured at the top-n threshold, where n is the number of true anomalies in
//! the test set. Absolute F1 values depend on that rule.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discovery::{discover_pc, PcOptions};
use crate::error::{Error, Result};
use crate::factor::FactorModel;
use crate::ordering::{enumerate_top_k, project, EnumerateOptions, OrderingSet};
use crate::scoring::{compute_weights, fit, score_table, ColumnWeights, FitOptions, ScoreReport};
use crate::table::{Cell, Ordering, Table};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.5;

/// Mixed into the seed for random orderings so they do not reuse the split's stream.
const ORDERING_STREAM: u64 = 0x6f72_6465_7269_6e67;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub table: Table,
    /// 1 marks an anomaly.
    pub labels: Vec<u8>,
}

impl LabeledTable {
    pub fn new(table: Table, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != table.n_rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                table.n_rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Domain(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self { table, labels })
    }

    /// Splits a 0/1 column out of `table` and uses it as the labels.
    pub fn from_label_column(table: &Table, column: &str) -> Result<Self> {
        let (table, cells) = table.take_column(column)?;
        let labels = cells
            .iter()
            .enumerate()
            .map(|(r, cell)| match cell {
                Cell::Number(x) if *x == 0.0 || *x == 1.0 => Ok(*x as u8),
                Cell::Category(s) if s == "0" || s == "1" => Ok(u8::from(s == "1")),
                other => Err(Error::Domain(format!("row {r}: label {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(table, labels)
    }

    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }
}

/// One 0/1 label per line; a non-numeric first line is taken as a header.
pub fn read_labels<R: std::io::BufRead>(reader: R) -> Result<Vec<u8>> {
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<labels>", e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" | "0.0" => labels.push(0),
            "1" | "1.0" => labels.push(1),
            _ if i == 0 && t.parse::<f64>().is_err() => {}
            _ => return Err(Error::Domain(format!("line {}: label {t:?} is not 0 or 1", i + 1))),
        }
    }
    Ok(labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraction_of_normals: f64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            train_fraction_of_normals: DEFAULT_TRAIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Table,
    pub test: LabeledTable,
    /// Source row of each training row.
    pub train_rows: Vec<usize>,
    /// Source row of each test row.
    pub test_rows: Vec<usize>,
}

pub fn split(data: &LabeledTable, spec: SplitSpec) -> Result<Split> {
    let f = spec.train_fraction_of_normals;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Usage(format!("train fraction must lie in (0, 1), got {f}")));
    }
    let mut normals: Vec<usize> = (0..data.labels.len()).filter(|&i| data.labels[i] == 0).collect();
    let anomalies = data.labels.len() - normals.len();
    if normals.len() < 2 || anomalies == 0 {
        return Err(Error::Data(format!(
            "split needs at least 2 normal rows and 1 anomaly, found {} and {anomalies}",
            normals.len()
        )));
    }
    let n_train = ((f * normals.len() as f64).round() as usize).clamp(1, normals.len() - 1);
    normals.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut train_rows = normals[..n_train].to_vec();
    train_rows.sort_unstable();
    let mut in_train = vec![false; data.labels.len()];
    for &r in &train_rows {
        in_train[r] = true;
    }
    let test_rows: Vec<usize> = (0..data.labels.len()).filter(|&r| !in_train[r]).collect();
    Ok(Split {
        train: data.table.select_rows(&train_rows),
        test: LabeledTable {
            table: data.table.select_rows(&test_rows),
            labels: test_rows.iter().map(|&r| data.labels[r]).collect(),
        },
        train_rows,
        test_rows,
    })
}

fn check_metric_input(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::Metric("labels must be 0 or 1".into()));
    }
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// Probability that a random anomaly outscores a random normal, ties counting half.
/// Computed from mid-ranks.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_metric_input(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share their mean.
        let mid = (start + end + 1) as f64 / 2.0;
        let tied_pos = idx[start..end].iter().filter(|&&i| labels[i] == 1).count();
        rank_sum += mid * tied_pos as f64;
        start = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// F1 when the `n` highest scores are flagged, `n` being the number of anomalies.
/// Ties at the cut keep input order.
pub fn f1_at_contamination(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check_metric_input(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let tp = idx[..pos].iter().filter(|&&i| labels[i] == 1).count() as f64;
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / pos as f64;
    let recall = tp / pos as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingMode {
    Causal,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    FactorCount,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct GridConfig {
    pub ordering: OrderingMode,
    pub weighting: Weighting,
}

impl GridConfig {
    pub fn label(&self) -> String {
        let o = match self.ordering {
            OrderingMode::Causal => "causal",
            OrderingMode::Random => "random",
        };
        let w = match self.weighting {
            Weighting::FactorCount => "factor-count",
            Weighting::Uniform => "uniform",
        };
        format!("{o}/{w}")
    }

    /// The 2x2 grid of ordering modes and weightings.
    pub fn full_grid() -> Vec<GridConfig> {
        let mut grid = Vec::new();
        for ordering in [OrderingMode::Causal, OrderingMode::Random] {
            for weighting in [Weighting::FactorCount, Weighting::Uniform] {
                grid.push(GridConfig { ordering, weighting });
            }
        }
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentOptions {
    pub pc: PcOptions,
    pub enumerate: EnumerateOptions,
    pub fit: FitOptions,
    pub train_fraction: f64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            pc: PcOptions::default(),
            enumerate: EnumerateOptions::default(),
            fit: FitOptions::default(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

/// A uniform random permutation of `d` columns drawn from `seed`.
pub fn random_ordering(d: usize, seed: u64) -> Ordering {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ ORDERING_STREAM));
    Ordering::from_order(order).expect("shuffled permutation")
}

/// Top-k orderings from discovery on the factor values of `train_rows`.
pub fn causal_orderings(factors: &FactorModel, train_rows: &[usize], options: &ExperimentOptions) -> Result<OrderingSet> {
    let values = factors.values.select_rows(train_rows);
    let discovery = discover_pc(&values, options.pc)?;
    let w = project(&discovery.graph, &factors.mapping)?;
    enumerate_top_k(&w, options.enumerate)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: GridConfig,
    pub seed: u64,
    pub report: ScoreReport,
    pub labels: Vec<u8>,
    pub auc: f64,
    pub f1: f64,
}

/// One cell of the grid for one seed: split, order, fit, and score the test rows.
pub fn run_config(
    data: &LabeledTable,
    factors: &FactorModel,
    config: GridConfig,
    seed: u64,
    options: &ExperimentOptions,
) -> Result<RunOutcome> {
    let sp = split(
        data,
        SplitSpec {
            seed,
            train_fraction_of_normals: options.train_fraction,
        },
    )?;
    let d = data.table.n_columns();
    let orderings = match config.ordering {
        OrderingMode::Causal => causal_orderings(factors, &sp.train_rows, options)?,
        OrderingMode::Random => OrderingSet::single(random_ordering(d, seed)),
    };
    let weights = match config.weighting {
        Weighting::FactorCount => compute_weights(&factors.mapping),
        Weighting::Uniform => ColumnWeights::uniform(d),
    };
    let scorer = fit(&sp.train, &orderings, options.fit)?;
    let report = score_table(&scorer, &sp.test.table, &sp.test_rows, &orderings, &weights)?;
    let scores = report.scores();
    Ok(RunOutcome {
        config,
        seed,
        auc: auc_roc(&scores, &sp.test.labels)?,
        f1: f1_at_contamination(&scores, &sp.test.labels)?,
        labels: sp.test.labels,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub auc: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub config: String,
    pub ordering: OrderingMode,
    pub weighting: Weighting,
    pub mean_auc: f64,
    pub mean_f1: f64,
    pub runs: Vec<RunMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub cells: Vec<GridCell>,
}

impl CompareReport {
    pub fn cell(&self, config: GridConfig) -> Option<&GridCell> {
        self.cells
            .iter()
            .find(|c| c.ordering == config.ordering && c.weighting == config.weighting)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat `(config, seed, auc, f1)` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e| Error::csv("<report>", e);
        w.write_record(["config", "seed", "auc", "f1"]).map_err(map)?;
        for cell in &self.cells {
            for run in &cell.runs {
                w.write_record([
                    cell.config.clone(),
                    run.seed.to_string(),
                    run.auc.to_string(),
                    run.f1.to_string(),
                ])
                .map_err(map)?;
            }
        }
        w.flush().map_err(|e| Error::io("<report>", e))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Runs every (config, seed) pair, in parallel, and summarizes per config.
pub fn compare_report(
    data: &LabeledTable,
    factors: &FactorModel,
    configs: &[GridConfig],
    seeds: &[u64],
    options: &ExperimentOptions,
) -> Result<CompareReport> {
    if seeds.is_empty() || configs.is_empty() {
        return Err(Error::Usage("at least one config and one seed are required".into()));
    }
    let jobs: Vec<(GridConfig, u64)> = configs
        .iter()
        .flat_map(|&c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(config, seed)| {
            run_config(data, factors, config, seed, options).map(|o| RunMetrics {
                seed,
                auc: o.auc,
                f1: o.f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = configs
        .iter()
        .enumerate()
        .map(|(ci, &config)| {
            let runs = outcomes[ci * seeds.len()..(ci + 1) * seeds.len()].to_vec();
            GridCell {
                config: config.label(),
                ordering: config.ordering,
                weighting: config.weighting,
                mean_auc: mean(runs.iter().map(|r| r.auc)),
                mean_f1: mean(runs.iter().map(|r| r.f1)),
                runs,
            }
        })
        .collect();
    Ok(CompareReport {
        seeds: seeds.to_vec(),
        cells,
    })
}
