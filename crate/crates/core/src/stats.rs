//! Rank correlation between distance matrices.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::matrix::{format_sig, DistanceMatrix};

/// Significance level used for the star mask.
pub const DEFAULT_ALPHA: f64 = 0.001;

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; errors when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical("correlation undefined: zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho with a two-sided p-value from the t approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("spearman inputs differ in length".into()));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument("spearman needs at least three observations".into()));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y))?;
    Ok((rho, correlation_p_value(rho, x.len())))
}

/// Two-sided p-value of a correlation coefficient under the t approximation
/// with `n - 2` degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

fn check_same_languages(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<DistanceMatrix> {
    let mut la: Vec<&String> = a.languages().iter().collect();
    let mut lb: Vec<&String> = b.languages().iter().collect();
    la.sort();
    lb.sort();
    if la != lb {
        return Err(Error::InvalidArgument(format!(
            "matrices '{}' and '{}' cover different languages",
            a.label(),
            b.label()
        )));
    }
    b.select(a.languages())
}

/// Spearman correlation of the strict upper triangles, with `b` aligned to
/// `a`'s language order.
pub fn matrix_correlation(a: &DistanceMatrix, b: &DistanceMatrix) -> Result<(f64, f64)> {
    let b = check_same_languages(a, b)?;
    spearman(&a.upper_triangle(), &b.upper_triangle())
}

/// Mantel permutation test: languages of `b` are shuffled and the p-value
/// is `(1 + #{|rho_perm| >= |rho_obs|}) / (1 + permutations)`.
pub fn mantel_test(a: &DistanceMatrix, b: &DistanceMatrix, permutations: usize, seed: u64) -> Result<f64> {
    let b = check_same_languages(a, b)?;
    let x = a.upper_triangle();
    let (observed, _) = spearman(&x, &b.upper_triangle())?;
    let rx = average_ranks(&x);
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(x.len());
    let mut hits = 0usize;
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        y.clear();
        for i in 0..n {
            for j in (i + 1)..n {
                y.push(b.at(perm[i], perm[j]));
            }
        }
        let rho = pearson(&rx, &average_ranks(&y))?;
        if rho.abs() >= observed.abs() - 1e-12 {
            hits += 1;
        }
    }
    Ok((1 + hits) as f64 / (1 + permutations) as f64)
}

/// Pairwise correlations between labelled distance matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrTable {
    pub labels: Vec<String>,
    pub rho: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    /// Mantel p-values, when requested.
    pub mantel_p: Option<Vec<Vec<f64>>>,
    pub alpha: f64,
}

impl CorrTable {
    pub fn starred(&self, i: usize, j: usize) -> bool {
        i != j && self.p[i][j] < self.alpha
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// One row per unordered pair: `a,b,rho,p,sig,mantel_p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,rho,p,sig,mantel_p\n");
        let n = self.labels.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let mantel = self
                    .mantel_p
                    .as_ref()
                    .map(|m| format_sig(m[i][j], 9))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.labels[i],
                    self.labels[j],
                    format_sig(self.rho[i][j], 9),
                    format_sig(self.p[i][j], 9),
                    if self.starred(i, j) { "*" } else { "" },
                    mantel
                ));
            }
        }
        out
    }

    /// Text heatmap of rho with two decimals; `*` marks p < alpha.
    pub fn heatmap(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut out = format!("{:width$}", "");
        for l in &self.labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&format!("{l:width$}"));
            for j in 0..self.labels.len() {
                let cell = format!(
                    "{:.2}{}",
                    self.rho[i][j],
                    if self.starred(i, j) { "*" } else { " " }
                );
                out.push_str(&format!(" {cell:>width$}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("* p < {}\n", self.alpha));
        out
    }
}

/// Correlates every pair of matrices. When `mantel` is set, Mantel
/// p-values are added with `(permutations, seed)`.
pub fn correlation_table(
    matrices: &[DistanceMatrix],
    alpha: f64,
    mantel: Option<(usize, u64)>,
) -> Result<CorrTable> {
    let n = matrices.len();
    let mut rho = vec![vec![1.0; n]; n];
    let mut p = vec![vec![0.0; n]; n];
    let mut mantel_p = mantel.map(|_| vec![vec![0.0; n]; n]);
    for i in 0..n {
        for j in (i + 1)..n {
            let (r, pv) = matrix_correlation(&matrices[i], &matrices[j])?;
            rho[i][j] = r;
            rho[j][i] = r;
            p[i][j] = pv;
            p[j][i] = pv;
            if let (Some(m), Some((perms, seed))) = (mantel_p.as_mut(), mantel) {
                let pm = mantel_test(&matrices[i], &matrices[j], perms, seed)?;
                m[i][j] = pm;
                m[j][i] = pm;
            }
        }
    }
    Ok(CorrTable {
        labels: matrices.iter().map(|m| m.label().to_string()).collect(),
        rho,
        p,
        mantel_p,
        alpha,
    })
}
