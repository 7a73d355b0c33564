//! Column preference matrices and the linear ordering problem over them.
//!
//! `project` turns factor-level edges into column-level precedence weights. The
//! objective of an ordering is the total weight of the pairs it places in the
//! preferred order; [`solve_lop`] maximizes it exactly and [`enumerate_top_k`]
//! lists every ordering within a fraction of the optimum.
//!
//! Both searches are depth-first over position assignments: a prefix fixes the first
//! positions, and every still-unplaced column lands after each placed one. The
//! optimistic completion bound is the sum of `max(w[i][j], w[j][i])` over unplaced
//! pairs.

use std::cmp::Ordering as CmpOrdering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FactorMapping;
use crate::graph::FactorCausalGraph;
use crate::table::Ordering;

pub const DEFAULT_THRESHOLD_RATIO: f64 = 0.9;
pub const DEFAULT_SOLUTION_CAP: usize = 100_000;
pub const DEFAULT_TOP_K: usize = 10;

/// Square, non-negative, zero-diagonal matrix; `get(i, j)` is the evidence for
/// column `i` preceding column `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PreferenceDocument", into = "PreferenceDocument")]
pub struct PreferenceMatrix {
    columns: Vec<String>,
    w: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PreferenceDocument {
    columns: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<PreferenceDocument> for PreferenceMatrix {
    type Error = Error;

    fn try_from(doc: PreferenceDocument) -> Result<Self> {
        PreferenceMatrix::new(doc.columns, doc.weights)
    }
}

impl From<PreferenceMatrix> for PreferenceDocument {
    fn from(m: PreferenceMatrix) -> Self {
        let weights = m.rows();
        PreferenceDocument {
            columns: m.columns,
            weights,
        }
    }
}

impl PreferenceMatrix {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = columns.len();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("preference matrix must be {d}x{d}")));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Domain(format!("w[{i}][{j}] = {v} is not a finite non-negative weight")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::Domain(format!("diagonal entry w[{i}][{i}] = {v} must be 0")));
                }
            }
        }
        Ok(Self {
            columns,
            w: rows.into_iter().flatten().collect(),
        })
    }

    /// Unnamed columns get spreadsheet placeholders.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let columns = (0..rows.len()).map(crate::table::placeholder_name).collect();
        Self::new(columns, rows)
    }

    pub fn zeros(columns: Vec<String>) -> Self {
        let d = columns.len();
        Self {
            columns,
            w: vec![0.0; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.dim() + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| self.w[i * d..(i + 1) * d].to_vec()).collect()
    }

    /// Sum of all off-diagonal entries.
    pub fn total_mass(&self) -> f64 {
        self.w.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.columns.clone(),
            self.rows().into_iter().map(|r| r.into_iter().map(|v| v * c).collect()).collect(),
        )
    }

    /// Objective of `ordering`: sum of `w[i][j]` over pairs with `i` placed before `j`.
    pub fn objective(&self, ordering: &Ordering) -> f64 {
        let d = self.dim();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if ordering.position(i) < ordering.position(j) {
                    total += self.get(i, j);
                }
            }
        }
        total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("preference matrix JSON: {e}")))
    }
}

/// Projects factor-level edges onto columns: every edge `f_u -> f_v` adds `|weight|`
/// to `w[i][j]` for each column `i` of `f_u` and each distinct column `j` of `f_v`.
pub fn project(graph: &FactorCausalGraph, mapping: &FactorMapping) -> Result<PreferenceMatrix> {
    let index = |name: &str| {
        mapping
            .factor_index(name)
            .ok_or_else(|| Error::Mapping(format!("graph factor {name:?} is not in the factor mapping")))
    };
    for f in graph.factors() {
        index(f)?;
    }
    let d = mapping.n_columns();
    let mut rows = vec![vec![0.0; d]; d];
    for edge in graph.edges() {
        let strength = edge.weight.abs();
        let sources = mapping.columns_of(index(&edge.from)?);
        let targets = mapping.columns_of(index(&edge.to)?);
        for &i in &sources {
            for &j in &targets {
                if i != j {
                    rows[i][j] += strength;
                }
            }
        }
    }
    PreferenceMatrix::new(mapping.columns().to_vec(), rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LopSolution {
    pub optimum: f64,
    /// Lexicographically smallest rank vector among the optimal orderings.
    pub witness: Ordering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedOrdering {
    pub ordering: Ordering,
    pub objective: f64,
}

/// Objective descending, then rank vector ascending.
pub fn rank_cmp(a: &RankedOrdering, b: &RankedOrdering) -> CmpOrdering {
    b.objective
        .total_cmp(&a.objective)
        .then_with(|| a.ordering.rank_vector().cmp(&b.ordering.rank_vector()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingSet {
    pub entries: Vec<RankedOrdering>,
    pub optimum: f64,
    pub threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct OrderingSetDocument {
    optimum: f64,
    threshold: f64,
    orderings: Vec<RankedDocument>,
}

#[derive(Serialize, Deserialize)]
struct RankedDocument {
    ranks: Vec<usize>,
    objective: f64,
}

impl OrderingSet {
    /// A set holding one ordering with no objective attached (threshold and optimum 0).
    pub fn single(ordering: Ordering) -> Self {
        Self {
            entries: vec![RankedOrdering {
                ordering,
                objective: 0.0,
            }],
            optimum: 0.0,
            threshold: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn orderings(&self) -> impl Iterator<Item = &Ordering> {
        self.entries.iter().map(|e| &e.ordering)
    }

    pub fn to_json(&self) -> String {
        let doc = OrderingSetDocument {
            optimum: self.optimum,
            threshold: self.threshold,
            orderings: self
                .entries
                .iter()
                .map(|e| RankedDocument {
                    ranks: e.ordering.rank_vector(),
                    objective: e.objective,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("ordering set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: OrderingSetDocument =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("orderings JSON: {e}")))?;
        let entries = doc
            .orderings
            .into_iter()
            .map(|r| {
                Ok(RankedOrdering {
                    ordering: Ordering::from_ranks(&r.ranks)?,
                    objective: r.objective,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.ordering.len() != first.ordering.len()) {
                return Err(Error::Schema("orderings have differing lengths".into()));
            }
        }
        Ok(Self {
            entries,
            optimum: doc.optimum,
            threshold: doc.threshold,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub k: usize,
    pub threshold_ratio: f64,
    /// Maximum number of qualifying orderings before enumeration gives up.
    pub cap: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_TOP_K,
            threshold_ratio: DEFAULT_THRESHOLD_RATIO,
            cap: DEFAULT_SOLUTION_CAP,
        }
    }
}

struct Search<'a> {
    w: &'a PreferenceMatrix,
    pair_max: Vec<f64>,
    /// Absorbs summation-order differences between incremental and full objectives.
    slack: f64,
}

impl<'a> Search<'a> {
    fn new(w: &'a PreferenceMatrix) -> Self {
        let d = w.dim();
        let mut pair_max = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                pair_max[i * d + j] = w.get(i, j).max(w.get(j, i));
            }
        }
        Self {
            w,
            pair_max,
            slack: 1e-9 * (1.0 + w.total_mass()),
        }
    }

    fn full_bound(&self) -> f64 {
        let d = self.w.dim();
        let mut b = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                b += self.pair_max[i * d + j];
            }
        }
        b
    }

    /// Gain and bound reduction from placing `c` ahead of every other unplaced column.
    fn step(&self, c: usize, used: &[bool]) -> (f64, f64) {
        let d = self.w.dim();
        let mut gain = 0.0;
        let mut lost = 0.0;
        for u in 0..d {
            if u != c && !used[u] {
                gain += self.w.get(c, u);
                lost += self.pair_max[c * d + u];
            }
        }
        (gain, lost)
    }
}

struct MaxState {
    best: f64,
    witness: Vec<usize>,
}

fn better_witness(objective: f64, ranks: &[usize], state: &MaxState) -> bool {
    objective > state.best || (objective == state.best && ranks < state.witness.as_slice())
}

fn maximize(
    s: &Search<'_>,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    value: f64,
    bound: f64,
    state: &mut MaxState,
) {
    let d = s.w.dim();
    if prefix.len() == d {
        let ordering = Ordering::from_order(prefix.clone()).expect("complete prefix");
        let objective = s.w.objective(&ordering);
        let ranks = ordering.rank_vector();
        if better_witness(objective, &ranks, state) {
            state.best = objective;
            state.witness = ranks;
        }
        return;
    }
    for c in 0..d {
        if used[c] {
            continue;
        }
        // Adjacent-swap dominance: if the previous column strictly prefers to follow c,
        // every completion is beaten by swapping the two.
        if let Some(&prev) = prefix.last() {
            if s.w.get(c, prev) > s.w.get(prev, c) + s.slack {
                continue;
            }
        }
        let (gain, lost) = s.step(c, used);
        let value = value + gain;
        let bound = bound - lost;
        if value + bound < state.best - s.slack {
            continue;
        }
        used[c] = true;
        prefix.push(c);
        maximize(s, prefix, used, value, bound, state);
        prefix.pop();
        used[c] = false;
    }
}

fn local_search_start(w: &PreferenceMatrix) -> Ordering {
    let d = w.dim();
    let mut order: Vec<usize> = (0..d).collect();
    let net = |i: usize| (0..d).map(|j| w.get(i, j) - w.get(j, i)).sum::<f64>();
    order.sort_by(|&a, &b| net(b).total_cmp(&net(a)).then(a.cmp(&b)));
    let mut best = w.objective(&Ordering::from_order(order.clone()).expect("permutation"));
    let mut improved = true;
    while improved {
        improved = false;
        for from in 0..d {
            for to in 0..d {
                if from == to {
                    continue;
                }
                let mut cand = order.clone();
                let c = cand.remove(from);
                cand.insert(to, c);
                let value = w.objective(&Ordering::from_order(cand.clone()).expect("permutation"));
                if value > best {
                    best = value;
                    order = cand;
                    improved = true;
                }
            }
        }
    }
    Ordering::from_order(order).expect("permutation")
}

/// Exact maximum of the ordering objective, with a deterministic optimal witness.
pub fn solve_lop(w: &PreferenceMatrix) -> Result<LopSolution> {
    let d = w.dim();
    if d == 0 {
        return Err(Error::Usage("cannot order zero columns".into()));
    }
    let s = Search::new(w);
    let start = local_search_start(w);
    let mut state = MaxState {
        best: w.objective(&start),
        witness: start.rank_vector(),
    };
    let mut used = vec![false; d];
    maximize(&s, &mut Vec::with_capacity(d), &mut used, 0.0, s.full_bound(), &mut state);
    Ok(LopSolution {
        optimum: state.best,
        witness: Ordering::from_ranks(&state.witness)?,
    })
}

fn enumerate(
    s: &Search<'_>,
    threshold: f64,
    cap: usize,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    value: f64,
    bound: f64,
    out: &mut Vec<RankedOrdering>,
) -> Result<()> {
    let d = s.w.dim();
    if prefix.len() == d {
        let ordering = Ordering::from_order(prefix.clone()).expect("complete prefix");
        let objective = s.w.objective(&ordering);
        if objective >= threshold {
            if out.len() == cap {
                return Err(Error::SolutionCap { cap });
            }
            out.push(RankedOrdering { ordering, objective });
        }
        return Ok(());
    }
    for c in 0..d {
        if used[c] {
            continue;
        }
        let (gain, lost) = s.step(c, used);
        let value = value + gain;
        let bound = bound - lost;
        if value + bound < threshold - s.slack {
            continue;
        }
        used[c] = true;
        prefix.push(c);
        enumerate(s, threshold, cap, prefix, used, value, bound, out)?;
        prefix.pop();
        used[c] = false;
    }
    Ok(())
}

/// All orderings whose objective reaches `threshold_ratio` times the optimum, best
/// first, truncated to `k`.
pub fn enumerate_top_k(w: &PreferenceMatrix, options: EnumerateOptions) -> Result<OrderingSet> {
    if options.k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    if !(options.threshold_ratio > 0.0 && options.threshold_ratio <= 1.0) {
        return Err(Error::Usage(format!(
            "threshold ratio must lie in (0, 1], got {}",
            options.threshold_ratio
        )));
    }
    let optimum = solve_lop(w)?.optimum;
    let threshold = options.threshold_ratio * optimum;
    let s = Search::new(w);
    let d = w.dim();
    let mut out = Vec::new();
    let mut used = vec![false; d];
    enumerate(
        &s,
        threshold,
        options.cap,
        &mut Vec::with_capacity(d),
        &mut used,
        0.0,
        s.full_bound(),
        &mut out,
    )?;
    out.sort_by(rank_cmp);
    out.truncate(options.k);
    Ok(OrderingSet {
        entries: out,
        optimum,
        threshold,
    })
}
