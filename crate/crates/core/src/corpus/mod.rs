//! Readers for the external corpus formats and data files.

pub mod bracket;
pub mod conllu;
pub mod coords;
pub mod manifest;
pub mod newick;

pub use bracket::{parse_bracketed, BracketTree};
pub use conllu::{parse_conllu, write_conllu, Sentence, Token, Treebank};
pub use coords::{parse_coordinates, write_coordinates};
pub use manifest::{AnalysisConfig, CorpusManifest, MissingResources};
pub use newick::{emit_newick, parse_newick};
