use std::collections::BTreeMap;

use super::ci::{CiTestConfig, CorrelationCache};
use super::SampleTable;
use crate::error::Result;
use crate::matrix::format_sig;

/// Interpretation of an edge in the IC* output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeMark {
    /// Marked directed edge.
    Genuine,
    /// Unmarked directed edge.
    Potential,
    /// Arrowheads at both ends.
    Spurious,
    /// No arrowheads.
    Undetermined,
}

impl EdgeMark {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeMark::Genuine => "genuine",
            EdgeMark::Potential => "potential",
            EdgeMark::Spurious => "spurious",
            EdgeMark::Undetermined => "undetermined",
        }
    }
}

/// An edge between node indices. For directed marks the edge points from
/// `from` to `to`; otherwise `from < to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub mark: EdgeMark,
}

/// The separating set found for a non-adjacent pair, and the p-value of
/// the test that accepted independence.
#[derive(Clone, Debug, PartialEq)]
pub struct SepsetRecord {
    pub set: Vec<usize>,
    pub p: f64,
}

/// Partially directed graph with IC* marks.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedPdag {
    pub nodes: Vec<String>,
    adjacent: Vec<Vec<bool>>,
    /// `head[a][b]`: arrowhead at `b` on edge `a - b`.
    head: Vec<Vec<bool>>,
    /// `marked[a][b]`: the edge `a -> b` carries the genuine-causation mark.
    marked: Vec<Vec<bool>>,
    /// Keyed by `(a, b)` with `a < b`.
    pub sepsets: BTreeMap<(usize, usize), SepsetRecord>,
}

impl MarkedPdag {
    fn empty(nodes: Vec<String>) -> Self {
        let k = nodes.len();
        MarkedPdag {
            nodes,
            adjacent: vec![vec![false; k]; k],
            head: vec![vec![false; k]; k],
            marked: vec![vec![false; k]; k],
            sepsets: BTreeMap::new(),
        }
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacent[a][b]
    }

    /// Whether the edge `a - b` has an arrowhead at `b`.
    pub fn has_arrowhead(&self, a: usize, b: usize) -> bool {
        self.head[a][b]
    }

    pub fn sepset(&self, a: usize, b: usize) -> Option<&SepsetRecord> {
        self.sepsets.get(&(a.min(b), a.max(b)))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// All edges in a stable order.
    pub fn edges(&self) -> Vec<Edge> {
        let k = self.nodes.len();
        let mut out = Vec::new();
        for a in 0..k {
            for b in (a + 1)..k {
                if !self.adjacent[a][b] {
                    continue;
                }
                let (at_a, at_b) = (self.head[b][a], self.head[a][b]);
                let edge = match (at_a, at_b) {
                    (true, true) => Edge { from: a, to: b, mark: EdgeMark::Spurious },
                    (false, false) => Edge { from: a, to: b, mark: EdgeMark::Undetermined },
                    (false, true) => Edge { from: a, to: b, mark: self.directed_mark(a, b) },
                    (true, false) => Edge { from: b, to: a, mark: self.directed_mark(b, a) },
                };
                out.push(edge);
            }
        }
        out
    }

    fn directed_mark(&self, from: usize, to: usize) -> EdgeMark {
        if self.marked[from][to] {
            EdgeMark::Genuine
        } else {
            EdgeMark::Potential
        }
    }

    /// Unshielded colliders `a *-> c <-* b` as `(min(a,b), c, max(a,b))`.
    pub fn colliders(&self) -> Vec<(usize, usize, usize)> {
        let k = self.nodes.len();
        let mut out = Vec::new();
        for c in 0..k {
            for a in 0..k {
                for b in (a + 1)..k {
                    if a != c
                        && b != c
                        && self.adjacent[a][c]
                        && self.adjacent[b][c]
                        && !self.adjacent[a][b]
                        && self.head[a][c]
                        && self.head[b][c]
                    {
                        out.push((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// Sepset table as CSV `a,b,sepset,p`, members separated by `;`.
    pub fn sepsets_csv(&self) -> String {
        let mut out = String::from("a,b,sepset,p\n");
        for (&(a, b), rec) in &self.sepsets {
            let set: Vec<&str> = rec.set.iter().map(|&i| self.nodes[i].as_str()).collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.nodes[a],
                self.nodes[b],
                set.join(";"),
                format_sig(rec.p, 9)
            ));
        }
        out
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacent[v]
            .iter()
            .enumerate()
            .filter_map(|(i, &adj)| adj.then_some(i))
    }

    // (R1) a *-> c, c - b without arrowhead at c, a and b non-adjacent:
    // orient c -> b and mark it.
    fn apply_rule_one(&mut self) -> bool {
        let k = self.nodes.len();
        let mut changed = false;
        for c in 0..k {
            let nbrs: Vec<usize> = self.neighbours(c).collect();
            for &a in &nbrs {
                if !self.head[a][c] {
                    continue;
                }
                for &b in &nbrs {
                    if b == a || self.adjacent[a][b] || self.head[b][c] {
                        continue;
                    }
                    if !self.head[c][b] || !self.marked[c][b] {
                        self.head[c][b] = true;
                        self.marked[c][b] = true;
                        changed = true;
                    }
                }
            }
        }
        changed
    }

    // (R2) a - b adjacent with a directed path of marked edges from a to b:
    // add an arrowhead at b. Skipped when b -> a already carries a mark.
    fn apply_rule_two(&mut self) -> bool {
        let k = self.nodes.len();
        let mut changed = false;
        for a in 0..k {
            let reach = self.marked_reach(a);
            for b in 0..k {
                if b != a && self.adjacent[a][b] && reach[b] && !self.head[a][b] && !self.marked[b][a] {
                    self.head[a][b] = true;
                    changed = true;
                }
            }
        }
        changed
    }

    fn marked_reach(&self, start: usize) -> Vec<bool> {
        let k = self.nodes.len();
        let mut seen = vec![false; k];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in 0..k {
                if self.marked[u][v] && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

fn subsets_of_size(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn go(items: &[usize], start: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < size - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, i + 1, size, cur, out);
            cur.pop();
        }
    }
    go(items, 0, size, &mut current, &mut out);
    out
}

/// Runs IC*: skeleton search over all conditioning subsets, collider
/// orientation from separating sets, then the two marking rules to a
/// fixpoint.
pub fn ic_star(table: &SampleTable, config: &CiTestConfig) -> Result<MarkedPdag> {
    config.validate()?;
    let table = table.canonical();
    let k = table.variables().len();
    let cache = CorrelationCache::new(&table, config.test)?;
    let max_size = config
        .max_condition_size
        .unwrap_or(k.saturating_sub(2))
        .min(k.saturating_sub(2))
        .min(table.rows().saturating_sub(4));
    let mut graph = MarkedPdag::empty(table.variables().to_vec());

    for a in 0..k {
        for b in (a + 1)..k {
            let others: Vec<usize> = (0..k).filter(|&v| v != a && v != b).collect();
            let mut sepset = None;
            'search: for size in 0..=max_size {
                for z in subsets_of_size(&others, size) {
                    let outcome = cache.test(a, b, &z, config.alpha)?;
                    if outcome.independent {
                        sepset = Some(SepsetRecord { set: z, p: outcome.p });
                        break 'search;
                    }
                }
            }
            match sepset {
                Some(rec) => {
                    graph.sepsets.insert((a, b), rec);
                }
                None => {
                    graph.adjacent[a][b] = true;
                    graph.adjacent[b][a] = true;
                }
            }
        }
    }

    for a in 0..k {
        for b in (a + 1)..k {
            let Some(rec) = graph.sepsets.get(&(a, b)) else {
                continue;
            };
            let sep = rec.set.clone();
            for c in 0..k {
                if graph.adjacent[a][c] && graph.adjacent[b][c] && !sep.contains(&c) {
                    graph.head[a][c] = true;
                    graph.head[b][c] = true;
                }
            }
        }
    }

    loop {
        let r1 = graph.apply_rule_one();
        let r2 = graph.apply_rule_two();
        if !r1 && !r2 {
            break;
        }
    }
    Ok(graph)
}
