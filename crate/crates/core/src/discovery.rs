//! Constraint-based (PC) discovery over discrete factor values.
//!
//! The skeleton phase is order-independent (adjacency is frozen at the start of each
//! conditioning level), so the independence tests of one level run in parallel and are
//! merged in pair order. Orientation uses unshielded colliders followed by Meek rules
//! R1-R3. Every emitted edge is weighted by the empirical mutual information (nats) of
//! its endpoints; edges the CPDAG leaves undirected are emitted in both directions.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::factor::FactorValueMatrix;
use crate::graph::{Edge, FactorCausalGraph};

pub const MIN_SAMPLES: usize = 20;

/// Expected-count floor for a contingency cell to count as reliable.
const MIN_EXPECTED: f64 = 5.0;
/// A stratum is unusable when more than this share of its cells fall under the floor.
const MAX_SPARSE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcOptions {
    pub alpha: f64,
    pub max_cond: usize,
}

impl Default for PcOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            max_cond: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Discovery {
    pub graph: FactorCausalGraph,
    /// Factors with fewer than two observed values; they appear in the graph without edges.
    pub excluded: Vec<String>,
    pub tests_run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiOutcome {
    Independent { p_value: f64 },
    Dependent { p_value: f64 },
    /// Every informative stratum was too sparse; treated as dependence.
    Untestable,
}

impl CiOutcome {
    pub fn is_independent(self) -> bool {
        matches!(self, CiOutcome::Independent { .. })
    }
}

/// G-test of `x ⊥ y | z` on level-coded columns.
///
/// Degrees of freedom are summed per conditioning stratum from the levels actually
/// observed there. Strata where over 20% of cells expect fewer than 5 counts are
/// skipped; if that leaves nothing but sparse strata the result is `Untestable`.
pub fn g_test(x: &[usize], y: &[usize], z: &[&[usize]], alpha: f64) -> CiOutcome {
    let n = x.len();
    let mut strata: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for row in 0..n {
        let key = z.iter().map(|col| col[row]).collect();
        strata.entry(key).or_default().push(row);
    }

    let mut stat = 0.0;
    let mut df = 0usize;
    let mut sparse = false;
    for rows in strata.values() {
        let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
        let mut mx: BTreeMap<usize, f64> = BTreeMap::new();
        let mut my: BTreeMap<usize, f64> = BTreeMap::new();
        for &r in rows {
            *joint.entry((x[r], y[r])).or_default() += 1.0;
            *mx.entry(x[r]).or_default() += 1.0;
            *my.entry(y[r]).or_default() += 1.0;
        }
        if mx.len() < 2 || my.len() < 2 {
            continue;
        }
        let total = rows.len() as f64;
        let cells = mx.len() * my.len();
        let small = mx
            .values()
            .flat_map(|a| my.values().map(move |b| a * b / total))
            .filter(|&e| e < MIN_EXPECTED)
            .count();
        if small as f64 > MAX_SPARSE_SHARE * cells as f64 {
            sparse = true;
            continue;
        }
        for (&(a, b), &obs) in &joint {
            let expected = mx[&a] * my[&b] / total;
            stat += 2.0 * obs * (obs / expected).ln();
        }
        df += (mx.len() - 1) * (my.len() - 1);
    }

    if df == 0 {
        return if sparse {
            CiOutcome::Untestable
        } else {
            CiOutcome::Independent { p_value: 1.0 }
        };
    }
    let p_value = ChiSquared::new(df as f64)
        .expect("positive degrees of freedom")
        .sf(stat.max(0.0));
    if p_value > alpha {
        CiOutcome::Independent { p_value }
    } else {
        CiOutcome::Dependent { p_value }
    }
}

/// Empirical mutual information in nats.
pub fn mutual_information(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut mx: HashMap<usize, f64> = HashMap::new();
    let mut my: HashMap<usize, f64> = HashMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1.0;
        *mx.entry(a).or_default() += 1.0;
        *my.entry(b).or_default() += 1.0;
    }
    let mut pairs: Vec<_> = joint.into_iter().collect();
    pairs.sort_by_key(|(k, _)| *k);
    let mi: f64 = pairs
        .iter()
        .map(|&((a, b), c)| c / n * (c * n / (mx[&a] * my[&b])).ln())
        .sum();
    mi.max(0.0)
}

fn level_code(values: &[i64]) -> (Vec<usize>, usize) {
    let mut levels: Vec<i64> = values.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let codes = values
        .iter()
        .map(|v| levels.binary_search(v).expect("level present"))
        .collect();
    (codes, levels.len())
}

/// Lexicographic `size`-subsets of `items`.
fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, size, 0, &mut Vec::with_capacity(size), &mut out);
    out
}

struct Pdag {
    adj: Vec<Vec<bool>>,
    /// `arrow[a][b]`: the a-b edge is oriented a -> b.
    arrow: Vec<Vec<bool>>,
}

impl Pdag {
    fn undirected(&self, a: usize, b: usize) -> bool {
        self.adj[a][b] && !self.arrow[a][b] && !self.arrow[b][a]
    }

    fn directed(&self, a: usize, b: usize) -> bool {
        self.adj[a][b] && self.arrow[a][b] && !self.arrow[b][a]
    }

    fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected(a, b) {
            self.arrow[a][b] = true;
            true
        } else {
            false
        }
    }

    fn meek_pass(&mut self) -> bool {
        let n = self.adj.len();
        let mut changed = false;
        for b in 0..n {
            for c in 0..n {
                if !self.undirected(b, c) {
                    continue;
                }
                // R1: a -> b - c, a and c non-adjacent.
                let r1 = (0..n).any(|a| a != c && self.directed(a, b) && !self.adj[a][c]);
                // R2: b -> a -> c with b - c.
                let r2 = (0..n).any(|a| self.directed(b, a) && self.directed(a, c));
                // R3: b - a1 -> c, b - a2 -> c, a1 and a2 non-adjacent.
                let r3 = (0..n).any(|a1| {
                    self.undirected(b, a1)
                        && self.directed(a1, c)
                        && (a1 + 1..n).any(|a2| {
                            self.undirected(b, a2) && self.directed(a2, c) && !self.adj[a1][a2]
                        })
                });
                if (r1 || r2 || r3) && self.orient(b, c) {
                    changed = true;
                }
            }
        }
        changed
    }
}

pub fn discover_pc(values: &FactorValueMatrix, options: PcOptions) -> Result<Discovery> {
    let m = values.n_rows();
    if m < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{m} samples; discovery needs at least {MIN_SAMPLES}"
        )));
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::Usage(format!("alpha must lie in (0, 1), got {}", options.alpha)));
    }

    let k = values.n_factors();
    let names = values.factors().to_vec();
    let coded: Vec<(Vec<usize>, usize)> = (0..k).map(|f| level_code(&values.column(f))).collect();
    let active: Vec<bool> = coded.iter().map(|(_, levels)| *levels >= 2).collect();
    let excluded: Vec<String> = (0..k).filter(|&f| !active[f]).map(|f| names[f].clone()).collect();
    for name in &excluded {
        log::warn!("factor {name:?} is constant over the training rows; excluded from discovery");
    }
    let col = |f: usize| coded[f].0.as_slice();

    let mut adj = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            adj[i][j] = i != j && active[i] && active[j];
        }
    }
    let mut sepsets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut tests_run = 0usize;

    for level in 0..=options.max_cond {
        let frozen = adj.clone();
        let neighbours = |a: usize, b: usize| -> Vec<usize> {
            (0..k).filter(|&c| c != b && frozen[a][c]).collect()
        };
        let candidates: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .filter(|&(i, j)| frozen[i][j])
            .filter(|&(i, j)| neighbours(i, j).len() >= level || neighbours(j, i).len() >= level)
            .collect();
        if candidates.is_empty() {
            break;
        }

        let results: Vec<(usize, usize, usize, Option<Vec<usize>>)> = candidates
            .par_iter()
            .map(|&(i, j)| {
                let mut tried: Vec<Vec<usize>> = Vec::new();
                let mut count = 0;
                for (a, b) in [(i, j), (j, i)] {
                    for s in subsets(&neighbours(a, b), level) {
                        if tried.contains(&s) {
                            continue;
                        }
                        count += 1;
                        let z: Vec<&[usize]> = s.iter().map(|&c| col(c)).collect();
                        if g_test(col(i), col(j), &z, options.alpha).is_independent() {
                            return (i, j, count, Some(s));
                        }
                        tried.push(s);
                    }
                }
                (i, j, count, None)
            })
            .collect();

        for (i, j, count, sep) in results {
            tests_run += count;
            if let Some(s) = sep {
                adj[i][j] = false;
                adj[j][i] = false;
                sepsets.insert((i, j), s);
            }
        }
    }

    let mut pdag = Pdag {
        adj,
        arrow: vec![vec![false; k]; k],
    };

    // Unshielded colliders i -> c <- j; an edge already pointing away from c is left alone.
    for c in 0..k {
        for i in 0..k {
            for j in i + 1..k {
                if i == c || j == c || !pdag.adj[i][c] || !pdag.adj[j][c] || pdag.adj[i][j] {
                    continue;
                }
                let sep = sepsets.get(&(i, j)).map(Vec::as_slice).unwrap_or(&[]);
                if !sep.contains(&c) {
                    if !pdag.arrow[c][i] {
                        pdag.arrow[i][c] = true;
                    }
                    if !pdag.arrow[c][j] {
                        pdag.arrow[j][c] = true;
                    }
                }
            }
        }
    }
    // Mutual collider claims can mark both directions; such pairs stay undirected.
    for a in 0..k {
        for b in 0..k {
            if pdag.arrow[a][b] && pdag.arrow[b][a] {
                pdag.arrow[a][b] = false;
                pdag.arrow[b][a] = false;
            }
        }
    }
    while pdag.meek_pass() {}

    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if !pdag.adj[i][j] {
                continue;
            }
            let weight = mutual_information(col(i), col(j));
            let forward = Edge {
                from: names[i].clone(),
                to: names[j].clone(),
                weight,
            };
            let backward = Edge {
                from: names[j].clone(),
                to: names[i].clone(),
                weight,
            };
            if pdag.directed(i, j) {
                edges.push(forward);
            } else if pdag.directed(j, i) {
                edges.push(backward);
            } else {
                edges.push(forward);
                edges.push(backward);
            }
        }
    }

    Ok(Discovery {
        graph: FactorCausalGraph::new(names, edges)?,
        excluded,
        tests_run,
    })
}
