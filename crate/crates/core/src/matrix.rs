//! Labelled symmetric distance matrices between languages.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Symmetry tolerance enforced on construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    label: String,
    languages: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major `values`. Fails unless the matrix is
    /// square, symmetric, zero on the diagonal, finite and non-negative.
    pub fn new(label: impl Into<String>, languages: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        let n = languages.len();
        if values.len() != n * n {
            return Err(Error::Validation(format!(
                "matrix '{label}' has {} values for {n} languages",
                values.len()
            )));
        }
        let unique: BTreeSet<&String> = languages.iter().collect();
        if unique.len() != n {
            return Err(Error::Validation(format!("matrix '{label}' repeats a language")));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Validation(format!(
                    "matrix '{label}' has non-zero diagonal at '{}'",
                    languages[i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!(
                        "matrix '{label}' entry ({}, {}) = {v} is not a finite non-negative number",
                        languages[i], languages[j]
                    )));
                }
                if (v - values[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "matrix '{label}' is not symmetric at ({}, {})",
                        languages[i], languages[j]
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            label,
            languages,
            values,
        })
    }

    /// Builds a matrix by evaluating `f` on each unordered pair.
    pub fn from_pairs(
        label: impl Into<String>,
        languages: Vec<String>,
        mut f: impl FnMut(usize, usize) -> Result<f64>,
    ) -> Result<Self> {
        let n = languages.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j)?;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(label, languages, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.languages.len() + j]
    }

    pub fn index_of(&self, language: &str) -> Option<usize> {
        self.languages.iter().position(|l| l == language)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.at(self.index_of(a)?, self.index_of(b)?))
    }

    /// Entries `(i, j)` with `i < j`, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.at(i, j));
            }
        }
        out
    }

    /// The submatrix over `languages`, in the given order.
    pub fn select(&self, languages: &[String]) -> Result<DistanceMatrix> {
        let idx: Vec<usize> = languages
            .iter()
            .map(|l| {
                self.index_of(l).ok_or_else(|| {
                    Error::InvalidArgument(format!("language '{l}' not in matrix '{}'", self.label))
                })
            })
            .collect::<Result<_>>()?;
        let n = idx.len();
        let mut values = vec![0.0; n * n];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                values[a * n + b] = self.at(i, j);
            }
        }
        DistanceMatrix::new(self.label.clone(), languages.to_vec(), values)
    }

    /// CSV with a header row and first column of language IDs; values carry
    /// nine significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lang");
        for l in &self.languages {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, l) in self.languages.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.len() {
                out.push(',');
                out.push_str(&format_sig(self.at(i, j), 9));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(label: impl Into<String>, text: &str) -> Result<DistanceMatrix> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty matrix file"))?;
        let languages: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let n = languages.len();
        let mut values = Vec::with_capacity(n * n);
        for (row, line) in lines.enumerate() {
            let lineno = row + 2;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n + 1 {
                return Err(Error::parse(lineno, format!("expected {} fields", n + 1)));
            }
            if row >= n || fields[0] != languages[row] {
                return Err(Error::parse(lineno, format!("row label '{}' out of order", fields[0])));
            }
            for f in &fields[1..] {
                values.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("invalid number '{f}'")))?,
                );
            }
        }
        DistanceMatrix::new(label, languages, values)
    }
}

/// Formats `x` with `digits` significant digits, using plain notation for
/// ordinary magnitudes and exponent notation otherwise.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-6..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
