//! Ward clustering of languages, tree comparison and a random-tree baseline.
//!
//! Ward linkage is run through Lance-Williams updates directly on the
//! supplied dissimilarities. With cosine distances this leaves Ward's
//! Euclidean setting; the update is still monotone, so merge heights never
//! decrease.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distances::cosine_distance_matrix;
use crate::error::{Error, Result};
use crate::matrix::DistanceMatrix;
use crate::tree::{DendroTree, LeafPairDistances, NodeId, TreeBuilder};

/// One agglomeration step. Clusters are numbered like SciPy linkages:
/// `0..n` are the leaves, `n + k` is the cluster formed at step `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Ward linkage over a dissimilarity matrix. Ties go to the lowest
/// `(i, j)` pair of active row indices.
pub fn ward_linkage(matrix: &DistanceMatrix) -> Result<Vec<Merge>> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::InvalidArgument("clustering needs at least two languages".into()));
    }
    let mut d: Vec<f64> = (0..n * n).map(|k| matrix.at(k / n, k % n)).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite distance in clustering input".into()));
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut cluster: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && best.map_or(true, |(_, _, b)| d[i * n + j] < b) {
                    best = Some((i, j, d[i * n + j]));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((ni + nk) * d[i * n + k] + (nj + nk) * d[j * n + k] - nk * height)
                / (ni + nj + nk);
            let updated = updated.max(0.0);
            d[i * n + k] = updated;
            d[k * n + i] = updated;
        }
        merges.push(Merge {
            left: cluster[i],
            right: cluster[j],
            height,
            size: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        cluster[i] = n + step;
    }
    Ok(merges)
}

/// Builds the dendrogram of a linkage. A child's edge is half the gap
/// between its parent's merge height and its own (leaves sit at 0).
pub fn linkage_tree(leaves: &[String], merges: &[Merge]) -> Result<DendroTree> {
    let n = leaves.len();
    if merges.len() + 1 != n {
        return Err(Error::InvalidArgument("linkage does not match leaf count".into()));
    }
    let mut builder = TreeBuilder::new();
    let mut nodes: Vec<(NodeId, f64)> = leaves.iter().map(|l| (builder.leaf(l.clone()), 0.0)).collect();
    for m in merges {
        let (a, ha) = nodes[m.left];
        let (b, hb) = nodes[m.right];
        let id = builder.internal(vec![
            (a, ((m.height - ha) / 2.0).max(0.0)),
            (b, ((m.height - hb) / 2.0).max(0.0)),
        ])?;
        nodes.push((id, m.height));
    }
    builder.finish(nodes.last().expect("non-empty").0)
}

/// Ward clustering of a distance matrix into a binary dendrogram.
pub fn ward_cluster(matrix: &DistanceMatrix) -> Result<DendroTree> {
    linkage_tree(matrix.languages(), &ward_linkage(matrix)?)
}

/// Ward clustering of vectors under cosine distance.
pub fn ward_cluster_vectors(languages: Vec<String>, vectors: &[Vec<f64>]) -> Result<DendroTree> {
    ward_cluster(&cosine_distance_matrix("cosine", languages, vectors)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TreeDistanceMode {
    /// Sum of squared leaf-pair distance differences.
    Raw,
    /// Each tree's leaf-pair distances are divided by their mean, and the
    /// squared differences are averaged over pairs.
    #[default]
    Normalized,
}

/// Compares two trees over the same leaves through their leaf-pair
/// distances.
pub fn tree_distance(gold: &DendroTree, generated: &DendroTree, mode: TreeDistanceMode) -> Result<f64> {
    let (g, t) = (gold.leaf_pair_distances(), generated.leaf_pair_distances());
    pair_distance_score(&g, &t, mode)
}

pub fn pair_distance_score(
    gold: &LeafPairDistances,
    generated: &LeafPairDistances,
    mode: TreeDistanceMode,
) -> Result<f64> {
    if gold.leaves() != generated.leaves() {
        let a: std::collections::BTreeSet<&String> = gold.leaves().iter().collect();
        let b: std::collections::BTreeSet<&String> = generated.leaves().iter().collect();
        let diff: Vec<&str> = a.symmetric_difference(&b).map(|s| s.as_str()).collect();
        return Err(Error::InvalidArgument(format!(
            "trees have different leaves: {}",
            diff.join(", ")
        )));
    }
    let (x, y) = (gold.upper_triangle(), generated.upper_triangle());
    match mode {
        TreeDistanceMode::Raw => Ok(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum()),
        TreeDistanceMode::Normalized => {
            if x.is_empty() {
                return Err(Error::InvalidArgument(
                    "normalized tree distance needs at least two leaves".into(),
                ));
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let (mx, my) = (mean(&x), mean(&y));
            if mx <= 0.0 || my <= 0.0 {
                return Err(Error::Numerical(
                    "cannot normalize a tree whose leaf-pair distances are all zero".into(),
                ));
            }
            let sum: f64 = x.iter().zip(&y).map(|(a, b)| (a / mx - b / my).powi(2)).sum();
            Ok(sum / x.len() as f64)
        }
    }
}

/// A binary tree from uniformly random sequential merges, unit edge weights.
pub fn random_merge_tree<R: Rng>(leaves: &[String], rng: &mut R) -> Result<DendroTree> {
    if leaves.is_empty() {
        return Err(Error::InvalidArgument("no leaves".into()));
    }
    let mut builder = TreeBuilder::new();
    let mut pool: Vec<NodeId> = leaves.iter().map(|l| builder.leaf(l.clone())).collect();
    while pool.len() > 1 {
        let i = rng.gen_range(0..pool.len());
        let a = pool.swap_remove(i);
        let j = rng.gen_range(0..pool.len());
        let b = pool.swap_remove(j);
        pool.push(builder.internal(vec![(a, 1.0), (b, 1.0)])?);
    }
    builder.finish(pool[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Baseline {
    pub mean: f64,
    /// Sample standard deviation over trials.
    pub std: f64,
    pub samples: Vec<f64>,
}

impl Baseline {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = if samples.len() > 1 {
            (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Baseline { mean, std, samples }
    }

    /// Empirical quantile with linear interpolation between order
    /// statistics; `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    }

    /// Percentage of samples at or below `score`.
    pub fn percentile_of(&self, score: f64) -> f64 {
        let below = self.samples.iter().filter(|&&s| s <= score).count();
        100.0 * below as f64 / self.samples.len() as f64
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.samples.len() as f64).sqrt()
    }
}

/// Normalized distances of `trials` random merge trees to `gold`.
pub fn random_tree_baseline(gold: &DendroTree, trials: usize, seed: u64) -> Result<Baseline> {
    if trials == 0 {
        return Err(Error::InvalidArgument("baseline needs at least one trial".into()));
    }
    let gold_pairs = gold.leaf_pair_distances();
    let mut leaves: Vec<String> = gold_pairs.leaves().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        leaves.shuffle(&mut rng);
        let tree = random_merge_tree(&leaves, &mut rng)?;
        samples.push(pair_distance_score(
            &gold_pairs,
            &tree.leaf_pair_distances(),
            TreeDistanceMode::Normalized,
        )?);
    }
    Ok(Baseline::from_samples(samples))
}

/// Baseline samples as CSV `trial,distance`.
pub fn baseline_csv(baseline: &Baseline) -> String {
    let mut out = String::from("trial,distance\n");
    for (i, s) in baseline.samples.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", crate::matrix::format_sig(*s, 9)));
    }
    out
}
