//! Seeded synthetic data with known structure, used by the examples and tests.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::LabeledTable;
use crate::factor::{build_factor_model, factor_defs_to_json, write_factor_values, FactorDef, FactorModel, FactorValueMatrix};
use crate::table::{write_table, Cell, ColumnKind, ColumnSpec, Table};

fn names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("f{i}")).collect()
}

/// `value` kept with probability `1 - noise`, otherwise redrawn uniformly from `0..levels`.
fn noisy(rng: &mut ChaCha8Rng, value: i64, levels: i64, noise: f64) -> i64 {
    if rng.random::<f64>() < noise {
        rng.random_range(0..levels)
    } else {
        value
    }
}

/// Binary chain f1 -> f2 -> f3.
pub fn chain_factors(n: usize, noise: f64, seed: u64) -> FactorValueMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let f1 = rng.random_range(0..2);
            let f2 = noisy(&mut rng, f1, 2, noise);
            let f3 = noisy(&mut rng, f2, 2, noise);
            vec![f1, f2, f3]
        })
        .collect();
    FactorValueMatrix::new(names(3), rows).expect("rectangular")
}

/// `k` mutually independent uniform factors over `0..levels`.
pub fn independent_factors(n: usize, k: usize, levels: i64, seed: u64) -> FactorValueMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|_| (0..k).map(|_| rng.random_range(0..levels)).collect()).collect();
    FactorValueMatrix::new(names(k), rows).expect("rectangular")
}

/// f1 -> f3 <- f2 with f1, f2 independent binary and f3 = f1 + f2 up to noise.
pub fn collider_factors(n: usize, noise: f64, seed: u64) -> FactorValueMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let f1 = rng.random_range(0..2);
            let f2 = rng.random_range(0..2);
            vec![f1, f2, noisy(&mut rng, f1 + f2, 3, noise)]
        })
        .collect();
    FactorValueMatrix::new(names(3), rows).expect("rectangular")
}

/// The collider plus a child f3 -> f4.
pub fn collider_with_child(n: usize, noise: f64, seed: u64) -> FactorValueMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let f1 = rng.random_range(0..2);
            let f2 = rng.random_range(0..2);
            let f3 = noisy(&mut rng, f1 + f2, 3, noise);
            vec![f1, f2, f3, noisy(&mut rng, f3, 3, noise)]
        })
        .collect();
    FactorValueMatrix::new(names(4), rows).expect("rectangular")
}

/// A labeled table together with the factor annotations of every row.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub data: LabeledTable,
    pub factors: FactorModel,
}

impl Fixture {
    /// Writes `data.csv` (features plus a trailing `label` column), `labels.csv`,
    /// `features.csv`, `factors.json`, and `factor_values.csv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            std::fs::File::create(&path).map_err(|e| Error::io(path, e))
        };

        write_table(&self.data.table, create("features.csv")?)?;

        let mut columns = self.data.table.columns().to_vec();
        columns.push(ColumnSpec::new("label", ColumnKind::Numerical, columns.len()));
        let rows = self
            .data
            .table
            .rows()
            .iter()
            .zip(&self.data.labels)
            .map(|(row, &l)| {
                let mut row = row.clone();
                row.push(Cell::Number(f64::from(l)));
                row
            })
            .collect();
        write_table(&Table::new(columns, rows)?, create("data.csv")?)?;

        let labels: String = std::iter::once("label".to_owned())
            .chain(self.data.labels.iter().map(u8::to_string))
            .map(|l| l + "\n")
            .collect();
        let path = dir.join("labels.csv");
        std::fs::write(&path, labels).map_err(|e| Error::io(&path, e))?;

        let path = dir.join("factors.json");
        std::fs::write(&path, factor_defs_to_json(&self.factors.defs) + "\n").map_err(|e| Error::io(&path, e))?;
        write_factor_values(&self.factors.values, create("factor_values.csv")?)
    }
}

const LEVELS: [&str; 5] = ["a", "b", "c", "d", "e"];
const COLORS: [&str; 3] = ["red", "green", "blue"];
const WORDS: [&str; 8] = ["alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "theta"];

/// Six columns: categorical c1 -> c2 -> c3 (each copies its parent with probability
/// 0.95, otherwise redraws), then independent c4 (numerical), c5 (categorical) and
/// c6 (free text). Anomalies draw c2 different from c1; c3 still follows c2.
/// Factors f1, f2, f3 annotate c1, c2, c3 with their level index.
pub fn planted_chain(n_normal: usize, n_anomaly: usize, seed: u64) -> Fixture {
    const NOISE: f64 = 0.05;
    let levels = LEVELS.len() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut labels: Vec<u8> = std::iter::repeat_n(0, n_normal).chain(std::iter::repeat_n(1, n_anomaly)).collect();
    for i in (1..labels.len()).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }

    let mut rows = Vec::with_capacity(labels.len());
    let mut factor_rows = Vec::with_capacity(labels.len());
    for &label in &labels {
        let c1 = rng.random_range(0..levels);
        let c2 = if label == 1 {
            (c1 + rng.random_range(1..levels)) % levels
        } else {
            noisy(&mut rng, c1, levels, NOISE)
        };
        let c3 = noisy(&mut rng, c2, levels, NOISE);
        let c4 = (rng.random::<f64>() * 1000.0).round() / 10.0;
        let c5 = COLORS[rng.random_range(0..COLORS.len())];
        let n_words = rng.random_range(2..=8);
        let c6: Vec<&str> = (0..n_words).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        rows.push(vec![
            Cell::Category(LEVELS[c1 as usize].into()),
            Cell::Category(LEVELS[c2 as usize].into()),
            Cell::Category(LEVELS[c3 as usize].into()),
            Cell::Number(c4),
            Cell::Category(c5.into()),
            Cell::Text(c6.join(" ")),
        ]);
        factor_rows.push(vec![c1, c2, c3]);
    }

    let kinds = [
        ColumnKind::Categorical,
        ColumnKind::Categorical,
        ColumnKind::Categorical,
        ColumnKind::Numerical,
        ColumnKind::Categorical,
        ColumnKind::Text,
    ];
    let columns = kinds
        .iter()
        .enumerate()
        .map(|(j, &k)| ColumnSpec::new(format!("c{}", j + 1), k, j))
        .collect();
    let table = Table::new(columns, rows).expect("well-formed rows");
    let defs = (1..=3)
        .map(|i| FactorDef {
            name: format!("f{i}"),
            description: format!("level of c{i}"),
            possible_values: (0..levels).collect(),
            annotation_criteria: format!("index of the c{i} value in a..e"),
            column_based: vec![format!("c{i}")],
        })
        .collect();
    let values = FactorValueMatrix::new(names(3), factor_rows).expect("rectangular");
    let factors = build_factor_model(defs, values, &table).expect("consistent fixture");
    Fixture {
        data: LabeledTable::new(table, labels).expect("label per row"),
        factors,
    }
}

/// One categorical column; normals mostly take the first three levels, anomalies the
/// rare last two. One factor annotates the level index.
pub fn single_column(n_normal: usize, n_anomaly: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = std::iter::repeat_n(0, n_normal).chain(std::iter::repeat_n(1, n_anomaly)).collect();
    for i in (1..labels.len()).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let mut rows = Vec::new();
    let mut factor_rows = Vec::new();
    for &label in &labels {
        let level = if label == 1 || rng.random::<f64>() < 0.02 {
            rng.random_range(3..5)
        } else {
            rng.random_range(0..3)
        };
        rows.push(vec![Cell::Category(LEVELS[level as usize].into())]);
        factor_rows.push(vec![level]);
    }
    let table = Table::new(vec![ColumnSpec::new("x", ColumnKind::Categorical, 0)], rows).expect("rows");
    let defs = vec![FactorDef {
        name: "f1".into(),
        description: "level of x".into(),
        possible_values: (0..5).collect(),
        annotation_criteria: String::new(),
        column_based: vec!["x".into()],
    }];
    let values = FactorValueMatrix::new(names(1), factor_rows).expect("rectangular");
    let factors = build_factor_model(defs, values, &table).expect("consistent fixture");
    Fixture {
        data: LabeledTable::new(table, labels).expect("label per row"),
        factors,
    }
}
