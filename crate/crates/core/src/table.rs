//! Mixed-type tables, column orderings, and the `name is value` text form of a row.
//!
//! Missing cells come from empty fields or the token `unknown` (any case, surrounding
//! whitespace ignored) and render back as `Unknown`. Headerless files get spreadsheet
//! style placeholder names: `A`..`Z`, `AA`, `AB`, ...

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rendering of a missing cell in serialized text.
pub const MISSING_TEXT: &str = "Unknown";

/// Mean whitespace-token count at or above which an inferred non-numeric column is text.
const TEXT_TOKEN_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Text,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numerical => "numerical",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Text => "text",
        }
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numerical" | "numeric" | "number" => Ok(ColumnKind::Numerical),
            "categorical" | "category" => Ok(ColumnKind::Categorical),
            "text" => Ok(ColumnKind::Text),
            other => Err(Error::Schema(format!("unknown column kind {other:?}"))),
        }
    }
}

impl TryFrom<String> for ColumnKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ColumnKind> for String {
    fn from(kind: ColumnKind) -> String {
        kind.as_str().to_owned()
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// 0-based position in the raw file.
    pub index: usize,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, index: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            index,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Category(String),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    fn matches(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (Cell::Missing, _)
                | (Cell::Number(_), ColumnKind::Numerical)
                | (Cell::Category(_), ColumnKind::Categorical)
                | (Cell::Text(_), ColumnKind::Text)
        )
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `Display` for f64 is the shortest string that parses back to the same value.
            Cell::Number(x) => write!(f, "{x}"),
            Cell::Category(s) | Cell::Text(s) => f.write_str(s),
            Cell::Missing => f.write_str(MISSING_TEXT),
        }
    }
}

pub type Sample = Vec<Cell>;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<ColumnSpec>,
    rows: Vec<Sample>,
}

impl Table {
    pub fn new(columns: Vec<ColumnSpec>, rows: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", col.name)));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Structural {
                    row: r,
                    message: format!("expected {} cells, found {}", columns.len(), row.len()),
                });
            }
            for (cell, col) in row.iter().zip(&columns) {
                if !cell.matches(col.kind) {
                    return Err(Error::Structural {
                        row: r,
                        message: format!("cell {cell:?} does not fit {} column {:?}", col.kind, col.name),
                    });
                }
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn rows(&self) -> &[Sample] {
        &self.rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Table {
        Table {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Removes a column, returning the reduced table and the removed cells.
    pub fn take_column(&self, name: &str) -> Result<(Table, Vec<Cell>)> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| Error::Schema(format!("no column named {name:?}")))?;
        let columns = self
            .columns
            .iter()
            .filter(|c| c.name != name)
            .enumerate()
            .map(|(i, c)| ColumnSpec::new(c.name.clone(), c.kind, i))
            .collect();
        let mut taken = Vec::with_capacity(self.rows.len());
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut row = row.clone();
                taken.push(row.remove(idx));
                row
            })
            .collect();
        Ok((Table { columns, rows }, taken))
    }
}

/// A column permutation: `order()[p]` is the column at 0-based position `p`.
///
/// Serializes as its 1-based rank vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ordering {
    order: Vec<usize>,
    ranks: Vec<usize>,
}

impl Ordering {
    pub fn identity(d: usize) -> Self {
        Self {
            order: (0..d).collect(),
            ranks: (0..d).collect(),
        }
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let d = order.len();
        let mut ranks = vec![usize::MAX; d];
        for (pos, &col) in order.iter().enumerate() {
            if col >= d || ranks[col] != usize::MAX {
                return Err(Error::Data(format!("{order:?} is not a permutation of 0..{d}")));
            }
            ranks[col] = pos;
        }
        Ok(Self { order, ranks })
    }

    /// Builds from 1-based ranks, one per column.
    pub fn from_ranks(ranks: &[usize]) -> Result<Self> {
        let d = ranks.len();
        let mut order = vec![usize::MAX; d];
        for (col, &rank) in ranks.iter().enumerate() {
            if rank == 0 || rank > d || order[rank - 1] != usize::MAX {
                return Err(Error::Data(format!("{ranks:?} is not a ranking of 1..={d}")));
            }
            order[rank - 1] = col;
        }
        Ok(Self {
            order,
            ranks: ranks.iter().map(|r| r - 1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 0-based position of `column`.
    pub fn position(&self, column: usize) -> usize {
        self.ranks[column]
    }

    /// 1-based rank per column, the vector used for tie-breaking and export.
    pub fn rank_vector(&self) -> Vec<usize> {
        self.ranks.iter().map(|r| r + 1).collect()
    }

    /// Column placed immediately before `column`, if any.
    pub fn predecessor(&self, column: usize) -> Option<usize> {
        let pos = self.ranks[column];
        (pos > 0).then(|| self.order[pos - 1])
    }

    pub fn reversed(&self) -> Self {
        let order = self.order.iter().rev().copied().collect();
        Self::from_order(order).expect("reversal of a permutation")
    }

    pub fn inverse(&self) -> Self {
        Self::from_order(self.ranks.clone()).expect("inverse of a permutation")
    }

    /// Permutation composition: `result.order()[p] == self.order()[other.order()[p]]`.
    pub fn compose(&self, other: &Ordering) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Data(format!(
                "cannot compose orderings of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Self::from_order(other.order.iter().map(|&p| self.order[p]).collect())
    }
}

impl TryFrom<Vec<usize>> for Ordering {
    type Error = Error;

    fn try_from(ranks: Vec<usize>) -> Result<Self> {
        Ordering::from_ranks(&ranks)
    }
}

impl From<Ordering> for Vec<usize> {
    fn from(o: Ordering) -> Self {
        o.rank_vector()
    }
}

/// Spreadsheet column name for a 0-based index: 0 -> "A", 25 -> "Z", 26 -> "AA".
pub fn placeholder_name(mut index: usize) -> String {
    let mut name = Vec::new();
    loop {
        name.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    name.reverse();
    String::from_utf8(name).expect("ascii")
}

pub fn is_missing_token(raw: &str) -> bool {
    let t = raw.trim();
    t.is_empty() || t.eq_ignore_ascii_case("unknown")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Header {
    #[default]
    Present,
    Absent,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub header: Header,
    /// Column names and kinds; inferred from the data when absent.
    pub schema: Option<Vec<ColumnSpec>>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: Header::Present,
            schema: None,
        }
    }
}

/// Reads a column schema: a JSON list of `{"name", "kind", "index"}` objects.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let specs: Vec<ColumnSpec> = serde_json::from_str(&text).map_err(|e| {
        if e.is_data() {
            Error::Schema(format!("{}: {e}", path.display()))
        } else {
            Error::json(path, e)
        }
    })?;
    Ok(specs)
}

pub fn load_table(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, options).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

pub fn read_table<R: std::io::Read>(reader: R, options: &LoadOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv("<input>", e))?;
        records.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }

    let header = match options.header {
        Header::Present if !records.is_empty() => Some(records.remove(0)),
        _ => None,
    };
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(Vec::len))
        .or_else(|| options.schema.as_ref().map(Vec::len))
        .unwrap_or(0);

    for (r, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Structural {
                row: r,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
    }

    let columns = match &options.schema {
        Some(schema) => resolve_schema(schema, width)?,
        None => (0..width)
            .map(|j| {
                let name = header
                    .as_ref()
                    .map(|h| h[j].trim().to_owned())
                    .unwrap_or_else(|| placeholder_name(j));
                ColumnSpec::new(name, infer_kind(records.iter().map(|r| r[j].as_str())), j)
            })
            .collect(),
    };

    let rows = records
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            columns
                .iter()
                .map(|col| parse_cell(&rec[col.index], col, r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Table::new(columns, rows)
}

fn resolve_schema(schema: &[ColumnSpec], width: usize) -> Result<Vec<ColumnSpec>> {
    if schema.len() != width {
        return Err(Error::Schema(format!(
            "schema lists {} columns but the file has {width}",
            schema.len()
        )));
    }
    let mut columns = schema.to_vec();
    columns.sort_by_key(|c| c.index);
    for (pos, col) in columns.iter().enumerate() {
        if col.index != pos {
            return Err(Error::Schema(format!(
                "schema indices must cover 0..{width} exactly once (column {:?})",
                col.name
            )));
        }
    }
    Ok(columns)
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn infer_kind<'a>(values: impl Iterator<Item = &'a str>) -> ColumnKind {
    let present: Vec<&str> = values.filter(|v| !is_missing_token(v)).collect();
    if present.is_empty() {
        return ColumnKind::Categorical;
    }
    if present.iter().all(|v| parse_number(v).is_some()) {
        return ColumnKind::Numerical;
    }
    let tokens: usize = present.iter().map(|v| v.split_whitespace().count()).sum();
    if tokens as f64 / present.len() as f64 >= TEXT_TOKEN_THRESHOLD {
        ColumnKind::Text
    } else {
        ColumnKind::Categorical
    }
}

fn parse_cell(raw: &str, col: &ColumnSpec, row: usize) -> Result<Cell> {
    if is_missing_token(raw) {
        return Ok(Cell::Missing);
    }
    Ok(match col.kind {
        ColumnKind::Numerical => Cell::Number(parse_number(raw).ok_or_else(|| Error::Structural {
            row,
            message: format!("{raw:?} is not a number (column {:?})", col.name),
        })?),
        ColumnKind::Categorical => Cell::Category(raw.trim().to_owned()),
        ColumnKind::Text => Cell::Text(raw.to_owned()),
    })
}

/// Writes a headed comma-separated file; missing cells are left empty.
pub fn write_table<W: std::io::Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let map = |e| Error::csv("<table>", e);
    w.write_record(table.column_names()).map_err(map)?;
    for row in table.rows() {
        w.write_record(row.iter().map(|c| match c {
            Cell::Missing => String::new(),
            other => other.to_string(),
        }))
        .map_err(map)?;
    }
    w.flush().map_err(|e| Error::io("<table>", e))
}

/// Byte range of one column's value inside serialized text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueSpan {
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

/// `name is value` fragments joined by `", "`, columns visited in ordering rank.
pub fn serialize(sample: &[Cell], table: &Table, ordering: &Ordering) -> String {
    serialize_with_spans(sample, table, ordering).0
}

pub fn serialize_with_spans(sample: &[Cell], table: &Table, ordering: &Ordering) -> (String, Vec<ValueSpan>) {
    debug_assert_eq!(ordering.len(), table.n_columns());
    let mut text = String::new();
    let mut spans = Vec::with_capacity(ordering.len());
    for (pos, &col) in ordering.order().iter().enumerate() {
        if pos > 0 {
            text.push_str(", ");
        }
        text.push_str(&table.columns()[col].name);
        text.push_str(" is ");
        let start = text.len();
        text.push_str(&sample[col].to_string());
        spans.push(ValueSpan {
            column: col,
            start,
            end: text.len(),
        });
    }
    (text, spans)
}
