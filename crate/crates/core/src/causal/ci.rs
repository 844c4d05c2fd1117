use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use super::SampleTable;
use crate::error::{Error, Result};
use crate::stats::{average_ranks, pearson};

/// Conditional independence test statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CiTest {
    /// Partial correlation of ranks with a Fisher z test.
    #[default]
    PartialSpearman,
    /// Partial correlation of raw values with a Fisher z test.
    Gaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CiTestConfig {
    pub alpha: f64,
    /// Largest conditioning set tried; `None` means |V| - 2.
    pub max_condition_size: Option<usize>,
    pub test: CiTest,
}

impl Default for CiTestConfig {
    fn default() -> Self {
        CiTestConfig {
            alpha: 0.001,
            max_condition_size: None,
            test: CiTest::PartialSpearman,
        }
    }
}

impl CiTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CiOutcome {
    pub independent: bool,
    pub p: f64,
    pub partial_correlation: f64,
}

/// Correlation matrix of a sample table under one test statistic, shared
/// across the many tests of a skeleton search.
#[derive(Clone, Debug)]
pub struct CorrelationCache {
    corr: DMatrix<f64>,
    rows: usize,
}

impl CorrelationCache {
    pub fn new(table: &SampleTable, test: CiTest) -> Result<Self> {
        let k = table.variables().len();
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|i| match test {
                CiTest::PartialSpearman => average_ranks(table.column(i)),
                CiTest::Gaussian => table.column(i).to_vec(),
            })
            .collect();
        let mut corr = DMatrix::identity(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                let r = pearson(&cols[i], &cols[j]).map_err(|_| {
                    Error::Numerical(format!(
                        "variable '{}' or '{}' is constant",
                        table.variables()[i],
                        table.variables()[j]
                    ))
                })?;
                corr[(i, j)] = r;
                corr[(j, i)] = r;
            }
        }
        Ok(CorrelationCache {
            corr,
            rows: table.rows(),
        })
    }

    pub fn correlation(&self, x: usize, y: usize) -> f64 {
        self.corr[(x, y)]
    }

    /// Partial correlation of `x` and `y` given `z`.
    pub fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> Result<f64> {
        if z.is_empty() {
            return Ok(self.corr[(x, y)]);
        }
        let m = z.len();
        let rzz = DMatrix::from_fn(m, m, |a, b| self.corr[(z[a], z[b])]);
        let chol = rzz
            .cholesky()
            .filter(|c| c.l_dirty().diagonal().iter().all(|d| *d > 1e-10))
            .ok_or_else(|| Error::Numerical("conditioning set has a singular correlation matrix".into()))?;
        let rxz = DVector::from_fn(m, |a, _| self.corr[(x, z[a])]);
        let ryz = DVector::from_fn(m, |a, _| self.corr[(y, z[a])]);
        let sx = chol.solve(&rxz);
        let sy = chol.solve(&ryz);
        let cxy = self.corr[(x, y)] - rxz.dot(&sy);
        let vx = 1.0 - rxz.dot(&sx);
        let vy = 1.0 - ryz.dot(&sy);
        if vx <= 1e-12 || vy <= 1e-12 {
            return Err(Error::Numerical(
                "a tested variable is determined by the conditioning set".into(),
            ));
        }
        Ok((cxy / (vx * vy).sqrt()).clamp(-1.0, 1.0))
    }

    /// Fisher z test of `x ⟂ y | z`.
    pub fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiOutcome> {
        if z.len() + 3 >= self.rows {
            return Err(Error::InvalidArgument(format!(
                "conditioning set of size {} too large for {} samples",
                z.len(),
                self.rows
            )));
        }
        let r = self.partial_correlation(x, y, z)?;
        let p = if r.abs() >= 1.0 {
            0.0
        } else {
            let stat = ((self.rows - z.len() - 3) as f64).sqrt() * r.atanh().abs();
            erfc(stat / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
        };
        Ok(CiOutcome {
            independent: p >= alpha,
            p,
            partial_correlation: r,
        })
    }
}

/// Tests whether variables `x` and `y` are independent given `z`.
pub fn ci_test(
    table: &SampleTable,
    x: usize,
    y: usize,
    z: &[usize],
    config: &CiTestConfig,
) -> Result<CiOutcome> {
    config.validate()?;
    let k = table.variables().len();
    if x >= k || y >= k || z.iter().any(|&v| v >= k) {
        return Err(Error::InvalidArgument("variable index out of range".into()));
    }
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(Error::InvalidArgument("tested variables must be distinct from the conditioning set".into()));
    }
    if z.len() + 3 >= table.rows() {
        return Err(Error::InvalidArgument(format!(
            "conditioning set of size {} too large for {} samples",
            z.len(),
            table.rows()
        )));
    }
    CorrelationCache::new(table, config.test)?.test(x, y, z, config.alpha)
}
