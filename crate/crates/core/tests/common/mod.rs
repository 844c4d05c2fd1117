//! Test oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use langrep::causal::SampleTable;
use langrep::corpus::{Sentence, Token, Treebank};
use langrep::tree::{DendroTree, NodeId, TreeBuilder};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random rooted tree over `n` leaves named `L0..`, built by merging random
/// groups of two (sometimes three) clusters with random edge weights.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> DendroTree {
    let mut b = TreeBuilder::new();
    let mut pool: Vec<NodeId> = (0..n).map(|i| b.leaf(format!("L{i}"))).collect();
    pool.shuffle(rng);
    while pool.len() > 1 {
        let k = if pool.len() >= 3 && rng.gen_bool(0.2) { 3 } else { 2 };
        let mut children = Vec::new();
        for _ in 0..k {
            let i = rng.gen_range(0..pool.len());
            let w = (rng.gen_range(0.0..3.0) * 100.0_f64).round() / 100.0;
            children.push((pool.swap_remove(i), w));
        }
        pool.push(b.internal(children).unwrap());
    }
    b.finish(pool[0]).unwrap()
}

/// Leaf-pair path lengths from root-to-leaf paths: the distance is the sum
/// of the edges on both paths below their last shared node.
pub fn path_oracle(tree: &DendroTree) -> BTreeMap<(String, String), f64> {
    let mut paths: Vec<(String, Vec<(NodeId, f64)>)> = Vec::new();
    fn walk(t: &DendroTree, id: NodeId, path: &mut Vec<(NodeId, f64)>, out: &mut Vec<(String, Vec<(NodeId, f64)>)>) {
        let node = t.node(id);
        if node.is_leaf() {
            out.push((node.name.clone().unwrap(), path.clone()));
            return;
        }
        for &(c, w) in &node.children {
            path.push((c, w));
            walk(t, c, path, out);
            path.pop();
        }
    }
    walk(tree, tree.root(), &mut Vec::new(), &mut paths);
    let mut out = BTreeMap::new();
    for (a, pa) in &paths {
        for (b, pb) in &paths {
            let shared = pa.iter().zip(pb).take_while(|(x, y)| x.0 == y.0).count();
            let d: f64 = pa[shared..].iter().map(|e| e.1).sum::<f64>() + pb[shared..].iter().map(|e| e.1).sum::<f64>();
            out.insert((a.clone(), b.clone()), d);
        }
    }
    out
}

/// A DAG over nodes `0..k` given by directed edges `(from, to)` with
/// `from < to`, so index order is a topological order.
#[derive(Clone, Debug)]
pub struct Dag {
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Dag {
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Self {
        assert!(edges.iter().all(|&(a, b)| a < b && b < k));
        Dag { k, edges: edges.to_vec() }
    }

    fn parents(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    /// d-separation via the moralized ancestral graph: x and y are
    /// d-separated by z iff they are disconnected in the moral graph of
    /// the ancestral set of {x, y} ∪ z after deleting z.
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let mut anc = vec![false; self.k];
        let mut stack: Vec<usize> = [x, y].iter().chain(z).copied().collect();
        while let Some(v) = stack.pop() {
            if !anc[v] {
                anc[v] = true;
                stack.extend(self.parents(v));
            }
        }
        let mut adj = vec![vec![false; self.k]; self.k];
        for v in (0..self.k).filter(|&v| anc[v]) {
            let ps = self.parents(v);
            for &p in &ps {
                adj[p][v] = true;
                adj[v][p] = true;
            }
            for &p in &ps {
                for &q in &ps {
                    if p != q {
                        adj[p][q] = true;
                    }
                }
            }
        }
        let blocked = |v: usize| z.contains(&v) || !anc[v];
        let mut seen = vec![false; self.k];
        let mut stack = vec![x];
        seen[x] = true;
        while let Some(v) = stack.pop() {
            if v == y {
                return false;
            }
            for w in 0..self.k {
                if adj[v][w] && !seen[w] && !blocked(w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        true
    }

    /// Pairs that no conditioning set separates, i.e. the skeleton a
    /// perfect CI oracle would recover.
    pub fn oracle_skeleton(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.k {
            for b in (a + 1)..self.k {
                let others: Vec<usize> = (0..self.k).filter(|&v| v != a && v != b).collect();
                let separable = (0..(1usize << others.len())).any(|mask| {
                    let z: Vec<usize> = others
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &v)| v)
                        .collect();
                    self.d_separated(a, b, &z)
                });
                if !separable {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Unshielded colliders `a -> c <- b` as `(min(a,b), c, max(a,b))`.
    pub fn v_structures(&self) -> Vec<(usize, usize, usize)> {
        let adjacent = |a: usize, b: usize| self.edges.iter().any(|&(p, q)| (p, q) == (a, b) || (p, q) == (b, a));
        let mut out = Vec::new();
        for c in 0..self.k {
            let ps = self.parents(c);
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !adjacent(a, b) {
                        out.push((a.min(b), c, a.max(b)));
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Edge coefficients of magnitude 0.5..1.5 with random sign.
    pub fn random_coefficients<R: Rng>(&self, rng: &mut R) -> BTreeMap<(usize, usize), f64> {
        self.edges
            .iter()
            .map(|&e| {
                let m = rng.gen_range(0.5..1.5);
                (e, if rng.gen_bool(0.5) { m } else { -m })
            })
            .collect()
    }

    /// Population covariance of the linear-Gaussian model with unit noise:
    /// `(I - B)^-1 (I - B)^-T` where `B[v][p]` is the edge coefficient.
    pub fn covariance(&self, coef: &BTreeMap<(usize, usize), f64>) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(self.k, self.k);
        for (&(p, v), &c) in coef {
            m[(v, p)] -= c;
        }
        let inv = m.try_inverse().expect("triangular with unit diagonal");
        &inv * inv.transpose()
    }

    /// Smallest |population partial correlation| over every pair and
    /// conditioning set that the graph leaves d-connected.
    pub fn min_dependence(&self, coef: &BTreeMap<(usize, usize), f64>) -> f64 {
        let cov = self.covariance(coef);
        let mut min = f64::INFINITY;
        for a in 0..self.k {
            for b in (a + 1)..self.k {
                let others: Vec<usize> = (0..self.k).filter(|&v| v != a && v != b).collect();
                for mask in 0..(1usize << others.len()) {
                    let z: Vec<usize> = others
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &v)| v)
                        .collect();
                    if !self.d_separated(a, b, &z) {
                        min = min.min(partial_correlation(&cov, a, b, &z).abs());
                    }
                }
            }
        }
        min
    }

    /// Coefficients redrawn until every d-connected pair has population
    /// partial correlation of at least `lambda` (strong faithfulness).
    pub fn strongly_faithful_coefficients<R: Rng>(&self, lambda: f64, rng: &mut R) -> BTreeMap<(usize, usize), f64> {
        loop {
            let coef = self.random_coefficients(rng);
            if self.min_dependence(&coef) >= lambda {
                return coef;
            }
        }
    }

    /// Linear-Gaussian sample: each node is a weighted sum of its parents
    /// (see [`Dag::random_coefficients`]) plus unit noise.
    pub fn simulate<R: Rng>(&self, n: usize, rng: &mut R) -> SampleTable {
        let coef = self.random_coefficients(rng);
        self.simulate_with(&coef, n, rng)
    }

    pub fn simulate_with<R: Rng>(&self, coef: &BTreeMap<(usize, usize), f64>, n: usize, rng: &mut R) -> SampleTable {
        let mut cols = vec![vec![0.0; n]; self.k];
        for r in 0..n {
            for v in 0..self.k {
                let noise: f64 = StandardNormal.sample(rng);
                let mut x = noise;
                for p in self.parents(v) {
                    x += coef[&(p, v)] * cols[p][r];
                }
                cols[v][r] = x;
            }
        }
        SampleTable::new((0..self.k).map(|i| format!("x{i}")).collect(), cols).unwrap()
    }
}

fn partial_correlation(cov: &DMatrix<f64>, a: usize, b: usize, z: &[usize]) -> f64 {
    let idx: Vec<usize> = [a, b].iter().chain(z).copied().collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cov[(idx[i], idx[j])]);
    let p = sub.try_inverse().expect("positive definite");
    -p[(0, 1)] / (p[(0, 0)] * p[(1, 1)]).sqrt()
}

/// Skeleton of an IC* result as sorted index pairs.
pub fn skeleton_of(g: &langrep::causal::MarkedPdag) -> Vec<(usize, usize)> {
    let k = g.nodes.len();
    let mut out = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if g.is_adjacent(a, b) {
                out.push((a, b));
            }
        }
    }
    out
}

const UPOS: [&str; 4] = ["NOUN", "VERB", "DET", "ADP"];
const DEPRELS: [&str; 3] = ["nsubj", "obj", "det"];

/// A random projective-or-not tree: nodes are attached in a random order,
/// each to an already attached node.
pub fn random_sentence<R: Rng>(rng: &mut R) -> Sentence {
    let n = rng.gen_range(1..8);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut head = vec![0usize; n + 1];
    for k in 1..n {
        head[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let rel = if head[i] == 0 { "root" } else { DEPRELS[rng.gen_range(0..DEPRELS.len())] };
            Token::new(i, format!("w{i}"), UPOS[rng.gen_range(0..UPOS.len())], head[i], rel)
        })
        .collect();
    Sentence::new(tokens).unwrap()
}

/// Two passes: collect every (head, dependent) link, then count and divide.
pub fn hand_count(tb: &Treebank) -> BTreeMap<(String, String, String, &'static str), f64> {
    let mut links = Vec::new();
    for s in &tb.sentences {
        let t = s.tokens();
        for tok in t {
            if tok.head != 0 {
                let h = &t[tok.head - 1];
                let dir = if tok.head > tok.index { "R" } else { "L" };
                links.push((h.upos.clone(), tok.upos.clone(), tok.deprel.clone(), dir));
            }
        }
    }
    let mut counts = BTreeMap::new();
    for l in &links {
        *counts.entry(l.clone()).or_insert(0.0) += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= links.len() as f64);
    counts
}
