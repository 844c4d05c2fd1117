//! Language representations from translated corpora.
//!
//! Corpora are rewritten at several abstraction levels, a multilingual
//! language model learns one vector per language, and the resulting
//! distances are compared with genetic, geographic and structural
//! distances through clustering, rank correlation and IC* causal search.

pub mod abstraction;
pub mod causal;
pub mod clustering;
pub mod corpus;
pub mod distances;
pub mod error;
pub mod lm;
pub mod matrix;
pub mod stats;
pub mod synthetic;
pub mod tree;

pub use abstraction::{Level, SymbolSequence};
pub use error::{Error, Result};
pub use matrix::DistanceMatrix;
pub use tree::DendroTree;
