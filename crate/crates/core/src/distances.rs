//! Explanatory distances between languages: genetic (path length in a
//! reference phylogeny), geographic (great-circle) and structural (cosine
//! distance between dependency-link frequency vectors).

use std::collections::{BTreeMap, BTreeSet};

use crate::abstraction::Direction;
use crate::corpus::Treebank;
use crate::error::{Error, Result};
use crate::matrix::{format_sig, DistanceMatrix};
use crate::tree::DendroTree;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A dependency link type: head POS, dependent POS, relation, and whether
/// the head lies right (`R`) or left (`L`) of the dependent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkKey {
    pub head_upos: String,
    pub dep_upos: String,
    pub deprel: String,
    pub dir: Direction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructVector {
    pub language: String,
    /// Relative frequency of each observed link type; sums to one.
    pub features: BTreeMap<LinkKey, f64>,
    pub link_count: usize,
}

/// Counts dependency links by type and normalizes to relative frequencies.
/// Root attachments are not links.
pub fn structural_vector(treebank: &Treebank) -> Result<StructVector> {
    let mut counts: BTreeMap<LinkKey, usize> = BTreeMap::new();
    let mut total = 0usize;
    for sentence in &treebank.sentences {
        for token in sentence.tokens() {
            let Some(head) = sentence.token(token.head) else {
                continue;
            };
            let key = LinkKey {
                head_upos: head.upos.clone(),
                dep_upos: token.upos.clone(),
                deprel: token.deprel.clone(),
                dir: Direction::of(token.index, token.head),
            };
            *counts.entry(key).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Validation(format!(
            "treebank '{}' contains no dependency links",
            treebank.language
        )));
    }
    let features = counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total as f64))
        .collect();
    Ok(StructVector {
        language: treebank.language.clone(),
        features,
        link_count: total,
    })
}

/// Cosine distance between structural vectors over the union of their
/// link types.
pub fn structural_distance(vectors: &[StructVector]) -> Result<DistanceMatrix> {
    let languages = vectors.iter().map(|v| v.language.clone()).collect();
    let norms: Vec<f64> = vectors
        .iter()
        .map(|v| v.features.values().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    DistanceMatrix::from_pairs("structural", languages, |i, j| {
        let (a, b) = (&vectors[i].features, &vectors[j].features);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let dot: f64 = small
            .iter()
            .filter_map(|(k, x)| large.get(k).map(|y| x * y))
            .sum();
        cosine_from_parts(dot, norms[i], norms[j])
    })
}

pub(crate) fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> Result<f64> {
    if norm_a == 0.0 || norm_b == 0.0 || !(norm_a.is_finite() && norm_b.is_finite()) {
        return Err(Error::Numerical("cosine distance of a zero or non-finite vector".into()));
    }
    Ok((1.0 - dot / (norm_a * norm_b)).clamp(0.0, 2.0))
}

/// `1 - cos(a, b)` for dense vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("vectors differ in dimension".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    cosine_from_parts(dot, na, nb)
}

/// Pairwise cosine distances between labelled dense vectors.
pub fn cosine_distance_matrix(
    label: &str,
    languages: Vec<String>,
    vectors: &[Vec<f64>],
) -> Result<DistanceMatrix> {
    if languages.len() != vectors.len() {
        return Err(Error::InvalidArgument("one vector per language required".into()));
    }
    DistanceMatrix::from_pairs(label, languages, |i, j| cosine_distance(&vectors[i], &vectors[j]))
}

/// Structural vectors as TSV rows `lang, head_upos, dep_upos, deprel, dir, freq`.
pub fn struct_vectors_tsv(vectors: &[StructVector]) -> String {
    let mut out = String::from("lang\thead_upos\tdep_upos\tdeprel\tdir\tfreq\n");
    for v in vectors {
        for (k, f) in &v.features {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                v.language,
                k.head_upos,
                k.dep_upos,
                k.deprel,
                k.dir.as_str(),
                format_sig(*f, 9)
            ));
        }
    }
    out
}

/// Number of distinct link types observed across all vectors.
pub fn feature_census(vectors: &[StructVector]) -> usize {
    vectors
        .iter()
        .flat_map(|v| v.features.keys())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Language coordinates in decimal degrees.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeoTable {
    coords: BTreeMap<String, (f64, f64)>,
}

impl GeoTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, language: &str, lat: f64, lon: f64) -> Result<()> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Validation(format!(
                "coordinates ({lat}, {lon}) of '{language}' out of range"
            )));
        }
        self.coords.insert(language.to_string(), (lat, lon));
        Ok(())
    }

    pub fn get(&self, language: &str) -> Option<(f64, f64)> {
        self.coords.get(language).copied()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (f64, f64))> {
        self.coords.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Great-circle distance in kilometres (haversine).
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let h = ((lat2 - lat1) / 2.0).sin().powi(2)
        + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn geo_distance(table: &GeoTable, languages: &[String]) -> Result<DistanceMatrix> {
    let points: Vec<(f64, f64)> = languages
        .iter()
        .map(|l| {
            table
                .get(l)
                .ok_or_else(|| Error::InvalidArgument(format!("no coordinates for '{l}'")))
        })
        .collect::<Result<_>>()?;
    DistanceMatrix::from_pairs("geo", languages.to_vec(), |i, j| {
        Ok(haversine_km(points[i], points[j]))
    })
}

/// Weighted path lengths between the requested leaves of a reference tree.
pub fn genetic_distance(gold: &DendroTree, languages: &[String]) -> Result<DistanceMatrix> {
    let pairs = gold.leaf_pair_distances();
    let absent: Vec<&str> = languages
        .iter()
        .filter(|l| pairs.index_of(l).is_none())
        .map(String::as_str)
        .collect();
    if !absent.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "languages missing from the reference tree: {}",
            absent.join(", ")
        )));
    }
    DistanceMatrix::from_pairs("genetic", languages.to_vec(), |i, j| {
        Ok(pairs.get(&languages[i], &languages[j]).expect("checked above"))
    })
}
