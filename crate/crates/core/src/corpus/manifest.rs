//! Corpus manifest: a TOML file naming every input of a run.
//!
//! ```toml
//! languages = ["da", "sv", "de"]
//! seed = 7
//! gold_tree = "gold.nwk"        # Newick
//! coordinates = "coords.csv"    # lang,lat,lon
//! func_upos = ["ADP", "DET"]    # optional, defaults to the UD closed classes
//!
//! [conllu]                      # per-language CoNLL-U treebanks
//! da = "da.conllu"
//!
//! [bracketed]                   # optional per-language bracketed trees
//! da = "da.ptb"
//!
//! [missing]                     # languages explicitly absent from a resource
//! bracketed = ["de"]
//! coordinates = []
//!
//! [train]                       # overrides for the language model
//! epochs = 5
//!
//! [analysis]
//! alpha = 0.001
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abstraction::DEFAULT_FUNC_UPOS;
use crate::error::{Error, Result};
use crate::lm::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingResources {
    #[serde(default)]
    pub conllu: Vec<String>,
    #[serde(default)]
    pub bracketed: Vec<String>,
    #[serde(default)]
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub gold_tree: Vec<String>,
}

/// Settings for the analysis stages downstream of training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Significance level for correlation stars and CI tests.
    pub alpha: f64,
    pub mantel_permutations: usize,
    pub baseline_trials: usize,
    /// Variables entering causal discovery, in order.
    pub causal_variables: Vec<String>,
    /// Largest conditioning set; `None` means |V| - 2.
    pub max_condition_size: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.001,
            mantel_permutations: 999,
            baseline_trials: 1000,
            causal_variables: ["genetic", "geo", "structural", "raw", "pos", "phrase", "deprel"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_condition_size: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub languages: Vec<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub gold_tree: Option<PathBuf>,
    pub coordinates: Option<PathBuf>,
    #[serde(default)]
    pub func_upos: Option<Vec<String>>,
    #[serde(default)]
    pub conllu: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub bracketed: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub missing: MissingResources,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    1
}

impl CorpusManifest {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut manifest: CorpusManifest =
            toml::from_str(text).map_err(|e| Error::Validation(format!("manifest: {e}")))?;
        manifest.base_dir = base_dir.into();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Checks that each per-language resource that is declared covers every
    /// listed language unless the language is marked missing for it.
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::Validation("manifest lists no languages".into()));
        }
        let langs: BTreeSet<&str> = self.languages.iter().map(String::as_str).collect();
        if langs.len() != self.languages.len() {
            return Err(Error::Validation("manifest lists a language twice".into()));
        }
        if let Some(f) = &self.func_upos {
            if f.is_empty() {
                return Err(Error::Validation("func_upos must not be empty".into()));
            }
        }
        self.train.validate()?;
        if !(self.analysis.alpha > 0.0 && self.analysis.alpha < 1.0) {
            return Err(Error::Validation("analysis.alpha must lie in (0, 1)".into()));
        }
        for (resource, files, missing) in [
            ("conllu", &self.conllu, &self.missing.conllu),
            ("bracketed", &self.bracketed, &self.missing.bracketed),
        ] {
            for lang in files.keys() {
                if !langs.contains(lang.as_str()) {
                    return Err(Error::Validation(format!(
                        "[{resource}] names '{lang}', which is not in languages"
                    )));
                }
            }
            if files.is_empty() {
                continue;
            }
            for lang in &self.languages {
                let listed = files.contains_key(lang);
                let marked = missing.contains(lang);
                if listed && marked {
                    return Err(Error::Validation(format!(
                        "'{lang}' is both listed and marked missing in [{resource}]"
                    )));
                }
                if !listed && !marked {
                    return Err(Error::Validation(format!(
                        "'{lang}' has no [{resource}] entry and is not marked missing"
                    )));
                }
            }
        }
        if self.conllu.is_empty() {
            return Err(Error::Validation("manifest declares no [conllu] treebanks".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn func_upos_set(&self) -> BTreeSet<String> {
        match &self.func_upos {
            Some(list) => list.iter().cloned().collect(),
            None => DEFAULT_FUNC_UPOS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Ensures the loaded resource covers every listed language not
    /// marked missing for it.
    pub fn check_coverage<'a>(
        &self,
        resource: &str,
        present: impl IntoIterator<Item = &'a str>,
        missing: &[String],
    ) -> Result<()> {
        let present: BTreeSet<&str> = present.into_iter().collect();
        let absent: Vec<&str> = self
            .languages
            .iter()
            .map(String::as_str)
            .filter(|l| !present.contains(l) && !missing.iter().any(|m| m == l))
            .collect();
        if absent.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{resource} lacks languages not marked missing: {}",
                absent.join(", ")
            )))
        }
    }
}
