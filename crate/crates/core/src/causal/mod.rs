//! Causal structure discovery over distance variables with IC*.
//!
//! Samples are unordered language pairs; each variable is one distance
//! measure. Pairs share languages and are therefore not independent
//! draws, though the analysis treats them as such.

mod ci;
mod dot;
mod ic_star;

pub use ci::{ci_test, CiOutcome, CiTest, CiTestConfig, CorrelationCache};
pub use dot::export_dot;
pub use ic_star::{ic_star, Edge, EdgeMark, MarkedPdag, SepsetRecord};

use crate::error::{Error, Result};
use crate::matrix::{format_sig, DistanceMatrix};

/// Note attached to causal outputs about the sampling assumption.
pub const PAIR_DEPENDENCE_CAVEAT: &str =
    "rows are language pairs that share languages; they are treated as i.i.d. samples";

/// Column-major table of observations.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable {
    variables: Vec<String>,
    columns: Vec<Vec<f64>>,
    /// Optional row labels, e.g. `da|sv`.
    row_labels: Vec<String>,
}

impl SampleTable {
    pub fn new(variables: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let labels = (0..rows).map(|i| i.to_string()).collect();
        Self::with_row_labels(variables, columns, labels)
    }

    pub fn with_row_labels(
        variables: Vec<String>,
        columns: Vec<Vec<f64>>,
        row_labels: Vec<String>,
    ) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::InvalidArgument("one column per variable required".into()));
        }
        if variables.is_empty() {
            return Err(Error::InvalidArgument("sample table has no variables".into()));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) || row_labels.len() != rows {
            return Err(Error::InvalidArgument("columns differ in length".into()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("sample table has missing or non-finite values".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !variables.iter().all(|v| seen.insert(v)) {
            return Err(Error::InvalidArgument("duplicate variable name".into()));
        }
        Ok(SampleTable {
            variables,
            columns,
            row_labels,
        })
    }

    /// One row per unordered language pair, one column per matrix. Matrices
    /// are aligned to the first one's language order.
    pub fn from_matrices(matrices: &[DistanceMatrix]) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no matrices".into()))?;
        let langs = first.languages();
        let mut columns = Vec::new();
        for m in matrices {
            if m.len() != first.len() {
                return Err(Error::InvalidArgument(format!(
                    "matrix '{}' covers a different language set",
                    m.label()
                )));
            }
            columns.push(m.select(langs)?.upper_triangle());
        }
        let mut labels = Vec::new();
        for i in 0..langs.len() {
            for j in (i + 1)..langs.len() {
                labels.push(format!("{}|{}", langs[i], langs[j]));
            }
        }
        Self::with_row_labels(
            matrices.iter().map(|m| m.label().to_string()).collect(),
            columns,
            labels,
        )
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn index_of(&self, variable: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == variable)
    }

    /// Restricts to the named variables, in the given order.
    pub fn select(&self, variables: &[String]) -> Result<SampleTable> {
        let columns = variables
            .iter()
            .map(|v| {
                self.index_of(v)
                    .map(|i| self.columns[i].clone())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown variable '{v}'")))
            })
            .collect::<Result<_>>()?;
        Self::with_row_labels(variables.to_vec(), columns, self.row_labels.clone())
    }

    /// Rows sorted lexicographically by value, so that row order cannot
    /// influence floating-point summation downstream.
    pub fn canonical(&self) -> SampleTable {
        let n = self.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.columns
                .iter()
                .map(|c| c[a].total_cmp(&c[b]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        SampleTable {
            variables: self.variables.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| order.iter().map(|&i| c[i]).collect())
                .collect(),
            row_labels: order.iter().map(|&i| self.row_labels[i].clone()).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair");
        for v in &self.variables {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for r in 0..self.rows() {
            out.push_str(&self.row_labels[r]);
            for c in &self.columns {
                out.push(',');
                out.push_str(&format_sig(c[r], 9));
            }
            out.push('\n');
        }
        out
    }

    /// Reads a CSV whose first column labels the row and whose remaining
    /// columns are numeric variables.
    pub fn from_csv(text: &str) -> Result<SampleTable> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty sample table"))?;
        let variables: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut columns = vec![Vec::new(); variables.len()];
        let mut labels = Vec::new();
        for (k, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != variables.len() + 1 {
                return Err(Error::parse(k + 2, format!("expected {} fields", variables.len() + 1)));
            }
            labels.push(fields[0].to_string());
            for (col, f) in columns.iter_mut().zip(&fields[1..]) {
                col.push(f.parse().map_err(|_| Error::parse(k + 2, format!("invalid number '{f}'")))?);
            }
        }
        Self::with_row_labels(variables, columns, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_matrices_aligns_languages() {
        let a = DistanceMatrix::from_pairs("a", vec!["x".into(), "y".into(), "z".into()], |i, j| {
            Ok((i + j) as f64)
        })
        .unwrap();
        let b = a.select(&["z".into(), "x".into(), "y".into()]).unwrap().with_label("b");
        let t = SampleTable::from_matrices(&[a, b]).unwrap();
        assert_eq!(t.column(0), t.column(1));
        assert_eq!(t.rows(), 3);
        let back = SampleTable::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(SampleTable::new(vec!["a".into()], vec![vec![1.0, f64::NAN]]).is_err());
        assert!(SampleTable::new(vec!["a".into(), "b".into()], vec![vec![1.0], vec![]]).is_err());
        assert!(SampleTable::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn canonical_is_order_free() {
        let t = SampleTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![3.0, 1.0, 2.0], vec![0.0, 5.0, 4.0]],
        )
        .unwrap();
        assert_eq!(t.canonical().column(0), &[1.0, 2.0, 3.0]);
        assert_eq!(t.canonical().column(1), &[5.0, 4.0, 0.0]);
    }
}
