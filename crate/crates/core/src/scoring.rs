//! Weighted column-NLL anomaly scores.
//!
//! The anomaly score of a sample is the mean over orderings of the `alpha`-weighted
//! sum of per-column negative log-likelihoods. `alpha[j]` is the number of factors
//! that involve column `j`, so columns mapped by no factor drop out of the score.
//!
//! Column NLLs come either from [`SurrogateScorer`], a count-based model fitted here, or
//! from an external model through [`export_sequences`] / [`import_external_nll`].
//!
//! The surrogate conditions each column only on the column immediately before it in
//! the ordering (the first column uses its marginal). This is a truncation of the full
//! left context a language model would see, not an equivalent of it; it is still
//! ordering-sensitive, which is what the causal ordering needs to show an effect.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FactorMapping;
use crate::ordering::OrderingSet;
use crate::table::{serialize_with_spans, Cell, ColumnKind, ColumnSpec, Ordering, Table};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnWeights {
    alpha: Vec<f64>,
}

impl ColumnWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Domain("column weights must be finite and non-negative".into()));
        }
        Ok(Self { alpha })
    }

    pub fn uniform(d: usize) -> Self {
        Self { alpha: vec![1.0; d] }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.alpha.iter().map(|a| a * c).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&j| self.alpha[j] == 0.0).collect()
    }
}

/// Factor count per column.
pub fn compute_weights(mapping: &FactorMapping) -> ColumnWeights {
    ColumnWeights {
        alpha: (0..mapping.n_columns())
            .map(|j| mapping.inverse_map(j).len() as f64)
            .collect(),
    }
}

/// Maps a cell to a bucket index; the last bucket holds missing and unseen values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Discretizer {
    /// Sorted training vocabulary.
    Categorical { vocab: Vec<String> },
    /// Right-closed bins split at `cuts`; values beyond either end land in the end bins.
    Numerical { cuts: Vec<f64> },
    /// Whitespace-token count modulo `buckets`.
    Text { buckets: usize },
}

impl Discretizer {
    fn fit(kind: ColumnKind, cells: &[&Cell], bins: usize) -> Self {
        match kind {
            ColumnKind::Categorical => {
                let vocab: BTreeSet<String> = cells
                    .iter()
                    .filter_map(|c| match c {
                        Cell::Category(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect();
                Discretizer::Categorical {
                    vocab: vocab.into_iter().collect(),
                }
            }
            ColumnKind::Numerical => {
                let mut values: Vec<f64> = cells
                    .iter()
                    .filter_map(|c| match c {
                        Cell::Number(x) => Some(*x),
                        _ => None,
                    })
                    .collect();
                values.sort_by(f64::total_cmp);
                Discretizer::Numerical {
                    cuts: quantile_cuts(&values, bins),
                }
            }
            ColumnKind::Text => Discretizer::Text { buckets: bins },
        }
    }

    pub fn n_buckets(&self) -> usize {
        match self {
            Discretizer::Categorical { vocab } => vocab.len() + 1,
            Discretizer::Numerical { cuts } => cuts.len() + 2,
            Discretizer::Text { buckets } => buckets + 1,
        }
    }

    pub fn unknown_bucket(&self) -> usize {
        self.n_buckets() - 1
    }

    pub fn bucket(&self, cell: &Cell) -> usize {
        match (self, cell) {
            (Discretizer::Categorical { vocab }, Cell::Category(s)) => {
                vocab.binary_search(s).unwrap_or(vocab.len())
            }
            (Discretizer::Numerical { cuts }, Cell::Number(x)) => cuts.partition_point(|c| c < x),
            (Discretizer::Text { buckets }, Cell::Text(s)) => s.split_whitespace().count() % buckets,
            _ => self.unknown_bucket(),
        }
    }
}

/// Equal-mass cut points from sorted values; cuts at or above the maximum are dropped,
/// so a constant column yields a single bin.
fn quantile_cuts(sorted: &[f64], bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let Some(&max) = sorted.last() else {
        return Vec::new();
    };
    let mut cuts: Vec<f64> = (1..bins)
        .map(|i| sorted[(i * n).div_ceil(bins).max(1) - 1])
        .filter(|&c| c < max)
        .collect();
    cuts.dedup();
    cuts
}

/// Laplace-smoothed counts of one column given the bucket of its predecessor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    /// Preceding column, `None` for the first position.
    pub context: Option<usize>,
    contexts: usize,
    outcomes: usize,
    counts: Vec<f64>,
    totals: Vec<f64>,
}

impl ConditionalTable {
    pub fn probability(&self, context: usize, outcome: usize, smoothing: f64) -> f64 {
        let c = self.counts[context * self.outcomes + outcome];
        (c + smoothing) / (self.totals[context] + smoothing * self.outcomes as f64)
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingModel {
    pub ordering: Ordering,
    /// One table per column, indexed by column.
    pub tables: Vec<ConditionalTable>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bins: usize,
    pub smoothing: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateScorer {
    pub columns: Vec<ColumnSpec>,
    pub discretizers: Vec<Discretizer>,
    pub smoothing: f64,
    pub models: Vec<OrderingModel>,
}

pub fn fit(train: &Table, orderings: &OrderingSet, options: FitOptions) -> Result<SurrogateScorer> {
    if train.n_rows() == 0 {
        return Err(Error::Data("cannot fit on an empty training table".into()));
    }
    if orderings.is_empty() {
        return Err(Error::Usage("at least one ordering is required".into()));
    }
    if options.bins == 0 || !(options.smoothing > 0.0 && options.smoothing.is_finite()) {
        return Err(Error::Usage("bins must be >= 1 and smoothing > 0".into()));
    }
    let d = train.n_columns();
    if let Some(o) = orderings.orderings().find(|o| o.len() != d) {
        return Err(Error::Usage(format!("ordering over {} columns for a {d}-column table", o.len())));
    }

    let discretizers: Vec<Discretizer> = train
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let cells: Vec<&Cell> = train.rows().iter().map(|r| &r[j]).collect();
            Discretizer::fit(col.kind, &cells, options.bins)
        })
        .collect();
    let encoded: Vec<Vec<usize>> = train
        .rows()
        .iter()
        .map(|row| row.iter().zip(&discretizers).map(|(c, disc)| disc.bucket(c)).collect())
        .collect();

    let models = orderings
        .entries
        .par_iter()
        .map(|entry| {
            let ordering = &entry.ordering;
            let tables = (0..d)
                .map(|col| {
                    let context = ordering.predecessor(col);
                    let contexts = context.map_or(1, |p| discretizers[p].n_buckets());
                    let outcomes = discretizers[col].n_buckets();
                    let mut counts = vec![0.0; contexts * outcomes];
                    let mut totals = vec![0.0; contexts];
                    for row in &encoded {
                        let ctx = context.map_or(0, |p| row[p]);
                        counts[ctx * outcomes + row[col]] += 1.0;
                        totals[ctx] += 1.0;
                    }
                    ConditionalTable {
                        context,
                        contexts,
                        outcomes,
                        counts,
                        totals,
                    }
                })
                .collect();
            OrderingModel {
                ordering: ordering.clone(),
                tables,
            }
        })
        .collect();

    Ok(SurrogateScorer {
        columns: train.columns().to_vec(),
        discretizers,
        smoothing: options.smoothing,
        models,
    })
}

impl SurrogateScorer {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn model(&self, ordering: &Ordering) -> Result<&OrderingModel> {
        self.models
            .iter()
            .find(|m| &m.ordering == ordering)
            .ok_or_else(|| Error::Usage(format!("ordering {:?} was not fitted", ordering.rank_vector())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).expect("scorer serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Per-column NLL of `sample` under `ordering`, indexed by column.
pub fn column_nll(scorer: &SurrogateScorer, sample: &[Cell], ordering: &Ordering) -> Result<Vec<f64>> {
    if sample.len() != scorer.n_columns() {
        return Err(Error::Usage(format!(
            "sample has {} cells, scorer expects {}",
            sample.len(),
            scorer.n_columns()
        )));
    }
    let model = scorer.model(ordering)?;
    let buckets: Vec<usize> = sample
        .iter()
        .zip(&scorer.discretizers)
        .map(|(c, disc)| disc.bucket(c))
        .collect();
    Ok(model
        .tables
        .iter()
        .enumerate()
        .map(|(col, table)| {
            let ctx = table.context.map_or(0, |p| buckets[p]);
            -table.probability(ctx, buckets[col], scorer.smoothing).ln()
        })
        .collect())
}

/// Mean over orderings of the weighted column-NLL sums; `nll[z][j]`.
pub fn weighted_score(nll: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let total: f64 = nll
        .iter()
        .map(|per_col| per_col.iter().zip(alpha).map(|(l, a)| a * l).sum::<f64>())
        .sum();
    total / nll.len() as f64
}

pub fn score(
    scorer: &SurrogateScorer,
    sample: &[Cell],
    orderings: &OrderingSet,
    weights: &ColumnWeights,
) -> Result<f64> {
    if weights.len() != scorer.n_columns() {
        return Err(Error::Usage(format!(
            "{} weights for {} columns",
            weights.len(),
            scorer.n_columns()
        )));
    }
    let nll = orderings
        .orderings()
        .map(|o| column_nll(scorer, sample, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(weighted_score(&nll, weights.as_slice()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore {
    pub id: usize,
    /// `nll[z][j]`: ordering `z`, column `j`.
    pub nll: Vec<Vec<f64>>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub columns: Vec<String>,
    pub weights: ColumnWeights,
    /// Columns whose weight is zero and so never affect a score.
    pub ignored_columns: Vec<String>,
    pub samples: Vec<SampleScore>,
}

impl ScoreReport {
    /// Aggregates precomputed NLLs; `nll[i]` belongs to `ids[i]`.
    pub fn from_nll(columns: Vec<String>, weights: ColumnWeights, ids: &[usize], nll: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if ids.len() != nll.len() {
            return Err(Error::Shape(format!("{} ids for {} samples", ids.len(), nll.len())));
        }
        if weights.len() != columns.len() {
            return Err(Error::Usage(format!("{} weights for {} columns", weights.len(), columns.len())));
        }
        let ignored_columns = weights.zero_columns().into_iter().map(|j| columns[j].clone()).collect();
        let samples = ids
            .iter()
            .zip(nll)
            .map(|(&id, nll)| SampleScore {
                id,
                score: weighted_score(&nll, weights.as_slice()),
                nll,
            })
            .collect();
        Ok(Self {
            columns,
            weights,
            ignored_columns,
            samples,
        })
    }

    pub fn scores(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.score).collect()
    }

    pub fn write_scores<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e| Error::csv("<scores>", e);
        w.write_record(["sample", "score"]).map_err(map)?;
        for s in &self.samples {
            w.write_record([s.id.to_string(), s.score.to_string()]).map_err(map)?;
        }
        w.flush().map_err(|e| Error::io("<scores>", e))
    }

    /// Per-column NLLs as `(sample, ordering, column, nll)` rows, the same layout
    /// [`import_external_nll`] reads.
    pub fn write_breakdown<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e| Error::csv("<breakdown>", e);
        w.write_record(["sample", "ordering", "column", "nll"]).map_err(map)?;
        for s in &self.samples {
            for (z, per_col) in s.nll.iter().enumerate() {
                for (j, l) in per_col.iter().enumerate() {
                    w.write_record([s.id.to_string(), z.to_string(), j.to_string(), l.to_string()])
                        .map_err(map)?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<breakdown>", e))
    }
}

/// Scores every row of `table`; `ids` label the rows in the report.
pub fn score_table(
    scorer: &SurrogateScorer,
    table: &Table,
    ids: &[usize],
    orderings: &OrderingSet,
    weights: &ColumnWeights,
) -> Result<ScoreReport> {
    let nll = table
        .rows()
        .par_iter()
        .map(|row| {
            orderings
                .orderings()
                .map(|o| column_nll(scorer, row, o))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ScoreReport::from_nll(
        table.column_names().into_iter().map(str::to_owned).collect(),
        weights.clone(),
        ids,
        nll,
    )
}

#[derive(Serialize)]
struct SequenceRecord<'a> {
    sample: usize,
    ordering: usize,
    text: &'a str,
    spans: Vec<[usize; 3]>,
}

/// Writes one JSON line per (sample, ordering): the serialized text and the byte span
/// of each column's value, as `[column, start, end]` in serialized order.
pub fn export_sequences<W: Write>(table: &Table, ids: &[usize], orderings: &OrderingSet, mut writer: W) -> Result<usize> {
    if ids.len() != table.n_rows() {
        return Err(Error::Shape(format!("{} ids for {} rows", ids.len(), table.n_rows())));
    }
    let mut written = 0;
    for (row, &id) in table.rows().iter().zip(ids) {
        for (z, ordering) in orderings.orderings().enumerate() {
            let (text, spans) = serialize_with_spans(row, table, ordering);
            let record = SequenceRecord {
                sample: id,
                ordering: z,
                text: &text,
                spans: spans.iter().map(|s| [s.column, s.start, s.end]).collect(),
            };
            serde_json::to_writer(&mut writer, &record).map_err(|e| Error::json("<sequences>", e))?;
            writer.write_all(b"\n").map_err(|e| Error::io("<sequences>", e))?;
            written += 1;
        }
    }
    Ok(written)
}

/// Record layout of [`export_sequences`], for consumers in Rust.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SequenceLine {
    pub sample: usize,
    pub ordering: usize,
    pub text: String,
    pub spans: Vec<[usize; 3]>,
}

pub fn read_sequences<R: BufRead>(reader: R) -> Result<Vec<SequenceLine>> {
    reader
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| {
            let line = line.map_err(|e| Error::io("<sequences>", e))?;
            serde_json::from_str(&line).map_err(|e| Error::json("<sequences>", e))
        })
        .collect()
}

/// Reads `(sample, ordering, column, nll)` rows and arranges them as `nll[i][z][j]` for
/// `samples[i]`. Every triple must be present exactly once.
pub fn import_external_nll<R: std::io::Read>(
    reader: R,
    samples: &[usize],
    n_orderings: usize,
    n_columns: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let position: BTreeMap<usize, usize> = samples.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut nll = vec![vec![vec![f64::NAN; n_columns]; n_orderings]; samples.len()];
    let mut seen = vec![vec![vec![false; n_columns]; n_orderings]; samples.len()];

    let mut rdr = csv::Reader::from_reader(reader);
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv("<external nll>", e))?;
        if rec.len() != 4 {
            return Err(Error::Structural {
                row: r,
                message: format!("expected 4 fields (sample, ordering, column, nll), found {}", rec.len()),
            });
        }
        let int = |k: usize| {
            rec[k].trim().parse::<usize>().map_err(|_| Error::Structural {
                row: r,
                message: format!("{:?} is not a non-negative integer", &rec[k]),
            })
        };
        let (sample, z, j) = (int(0)?, int(1)?, int(2)?);
        let value: f64 = rec[3].trim().parse().map_err(|_| Error::Structural {
            row: r,
            message: format!("{:?} is not a number", &rec[3]),
        })?;
        if !value.is_finite() {
            return Err(Error::Domain(format!("row {r}: non-finite NLL")));
        }
        let i = *position.get(&sample).ok_or_else(|| Error::Data(format!("row {r}: unexpected sample {sample}")))?;
        if z >= n_orderings || j >= n_columns {
            return Err(Error::Data(format!("row {r}: ordering {z} / column {j} out of range")));
        }
        if seen[i][z][j] {
            return Err(Error::Data(format!("row {r}: duplicate entry ({sample}, {z}, {j})")));
        }
        seen[i][z][j] = true;
        nll[i][z][j] = value;
    }

    let mut gaps = Vec::new();
    for (i, &sample) in samples.iter().enumerate() {
        for z in 0..n_orderings {
            for j in 0..n_columns {
                if !seen[i][z][j] {
                    gaps.push(format!("(sample {sample}, ordering {z}, column {j})"));
                }
            }
        }
    }
    if !gaps.is_empty() {
        let missing = gaps.len();
        gaps.truncate(10);
        return Err(Error::Incomplete { missing, first: gaps });
    }
    Ok(nll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::RankedOrdering;

    fn cat_table(rows: &[&[&str]]) -> Table {
        let d = rows[0].len();
        let columns = (0..d)
            .map(|j| ColumnSpec::new(format!("x{}", j + 1), ColumnKind::Categorical, j))
            .collect();
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|v| Cell::Category((*v).to_owned())).collect())
            .collect();
        Table::new(columns, rows).unwrap()
    }

    fn set_of(orderings: Vec<Ordering>) -> OrderingSet {
        OrderingSet {
            entries: orderings
                .into_iter()
                .map(|ordering| RankedOrdering { ordering, objective: 0.0 })
                .collect(),
            optimum: 0.0,
            threshold: 0.0,
        }
    }

    #[test]
    fn laplace_marginal() {
        let t = cat_table(&[&["a"], &["a"], &["a"], &["b"]]);
        let scorer = fit(&t, &set_of(vec![Ordering::identity(1)]), FitOptions::default()).unwrap();
        let table = &scorer.models[0].tables[0];
        assert_eq!(table.n_outcomes(), 3);
        assert!((table.probability(0, 0, 1.0) - 4.0 / 7.0).abs() < 1e-15);
        let nll = column_nll(&scorer, &[Cell::Category("a".into())], &Ordering::identity(1)).unwrap();
        assert!((nll[0] + (4.0f64 / 7.0).ln()).abs() < 1e-15);
        // Unseen category falls into the unknown bucket: (0 + 1) / (4 + 3).
        let nll = column_nll(&scorer, &[Cell::Category("zzz".into())], &Ordering::identity(1)).unwrap();
        assert!((nll[0] - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn constant_numeric_column_has_one_bin() {
        let columns = vec![ColumnSpec::new("n", ColumnKind::Numerical, 0)];
        let t = Table::new(columns, vec![vec![Cell::Number(3.0)]; 20]).unwrap();
        let scorer = fit(&t, &set_of(vec![Ordering::identity(1)]), FitOptions::default()).unwrap();
        assert_eq!(scorer.discretizers[0], Discretizer::Numerical { cuts: vec![] });
        assert_eq!(scorer.discretizers[0].n_buckets(), 2);
        let table = &scorer.models[0].tables[0];
        assert!((table.probability(0, 0, 1.0) - 21.0 / 22.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_bins_are_right_closed_and_clamped() {
        let values: Vec<f64> = (1..=10).map(f64::from).collect();
        let cuts = quantile_cuts(&values, 5);
        assert_eq!(cuts, vec![2.0, 4.0, 6.0, 8.0]);
        let disc = Discretizer::Numerical { cuts };
        assert_eq!(disc.bucket(&Cell::Number(2.0)), 0);
        assert_eq!(disc.bucket(&Cell::Number(2.5)), 1);
        assert_eq!(disc.bucket(&Cell::Number(-100.0)), 0);
        assert_eq!(disc.bucket(&Cell::Number(1e9)), 4);
        assert_eq!(disc.bucket(&Cell::Missing), 5);
    }

    #[test]
    fn text_buckets_by_token_count() {
        let disc = Discretizer::Text { buckets: 4 };
        assert_eq!(disc.bucket(&Cell::Text("one two three".into())), 3);
        assert_eq!(disc.bucket(&Cell::Text("a b c d e".into())), 1);
        assert_eq!(disc.bucket(&Cell::Missing), 4);
    }

    /// 100 rows, x2 copies x1, with x1 taking "p" 60 times and "q" 40 times.
    fn copy_table() -> Table {
        let mut rows: Vec<[&str; 2]> = vec![["p", "p"]; 60];
        rows.extend(vec![["q", "q"]; 40]);
        let refs: Vec<&[&str]> = rows.iter().map(|r| &r[..]).collect();
        cat_table(&refs)
    }

    #[test]
    fn deterministic_copy_conditionals() {
        let scorer = fit(&copy_table(), &set_of(vec![Ordering::identity(2)]), FitOptions::default()).unwrap();
        let id = Ordering::identity(2);
        // |V2| = 3 (p, q, unknown).
        let consistent = column_nll(&scorer, &[Cell::Category("p".into()), Cell::Category("p".into())], &id).unwrap();
        assert!((consistent[1] + (61.0f64 / 63.0).ln()).abs() < 1e-12);
        let broken = column_nll(&scorer, &[Cell::Category("p".into()), Cell::Category("q".into())], &id).unwrap();
        assert!((broken[1] - 63f64.ln()).abs() < 1e-12);
        let q_ctx = column_nll(&scorer, &[Cell::Category("q".into()), Cell::Category("p".into())], &id).unwrap();
        assert!((q_ctx[1] - 43f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unfitted_ordering_is_usage_error() {
        let scorer = fit(&copy_table(), &set_of(vec![Ordering::identity(2)]), FitOptions::default()).unwrap();
        let row = copy_table().rows()[0].clone();
        let err = column_nll(&scorer, &row, &Ordering::identity(2).reversed()).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn empty_training_table_rejected() {
        let t = Table::new(vec![ColumnSpec::new("a", ColumnKind::Categorical, 0)], vec![]).unwrap();
        let err = fit(&t, &set_of(vec![Ordering::identity(1)]), FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn score_reductions() {
        let t = copy_table();
        let id = Ordering::identity(2);
        let one = set_of(vec![id.clone()]);
        let twice = set_of(vec![id.clone(), id.clone()]);
        let scorer = fit(&t, &one, FitOptions::default()).unwrap();
        let row = &t.rows()[70];
        let nll = column_nll(&scorer, row, &id).unwrap();

        let zero = ColumnWeights::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(score(&scorer, row, &one, &zero).unwrap(), 0.0);
        assert_eq!(score(&scorer, row, &one, &ColumnWeights::uniform(2)).unwrap(), nll[0] + nll[1]);
        assert_eq!(
            score(&scorer, row, &twice, &ColumnWeights::uniform(2)).unwrap(),
            score(&scorer, row, &one, &ColumnWeights::uniform(2)).unwrap()
        );
    }

    #[test]
    fn weights_from_mapping() {
        let cols = |n: usize| (0..n).map(|j| format!("c{j}")).collect::<Vec<_>>();
        let m = FactorMapping::new(
            vec!["f1".into(), "f2".into()],
            cols(3),
            vec![vec![true, true, false], vec![false, true, true]],
        )
        .unwrap();
        assert_eq!(compute_weights(&m).as_slice(), &[1.0, 2.0, 1.0]);

        let m = FactorMapping::new(vec!["f".into()], cols(3), vec![vec![true, false, true]]).unwrap();
        let w = compute_weights(&m);
        assert_eq!(w.as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(w.zero_columns(), vec![1]);

        let m = FactorMapping::new(vec!["f".into()], cols(4), vec![vec![true; 4]]).unwrap();
        assert_eq!(compute_weights(&m).as_slice(), &[1.0; 4]);
    }

    #[test]
    fn export_writes_one_record_per_pair() {
        let t = copy_table().select_rows(&[0, 99]);
        let set = set_of(vec![Ordering::identity(2), Ordering::identity(2).reversed()]);
        let mut buf = Vec::new();
        assert_eq!(export_sequences(&t, &[0, 99], &set, &mut buf).unwrap(), 4);
        let lines = read_sequences(buf.as_slice()).unwrap();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| l.spans.len() == 2));
        assert_eq!(lines[1].text, "x2 is p, x1 is p");
        assert_eq!(lines[1].spans[0], [1, 6, 7]);
        assert_eq!(lines[3].sample, 99);
    }

    #[test]
    fn import_reports_gaps() {
        let csv = "sample,ordering,column,nll\n0,0,0,1.5\n0,0,1,0.25\n1,0,0,2.0\n";
        let err = import_external_nll(csv.as_bytes(), &[0, 1], 1, 2).unwrap_err();
        match err {
            Error::Incomplete { missing, first } => {
                assert_eq!(missing, 1);
                assert_eq!(first, vec!["(sample 1, ordering 0, column 1)".to_owned()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn import_rejects_duplicates_and_strays() {
        let dup = "sample,ordering,column,nll\n0,0,0,1\n0,0,0,1\n";
        assert!(matches!(import_external_nll(dup.as_bytes(), &[0], 1, 1), Err(Error::Data(_))));
        let stray = "sample,ordering,column,nll\n5,0,0,1\n";
        assert!(matches!(import_external_nll(stray.as_bytes(), &[0], 1, 1), Err(Error::Data(_))));
    }
}
