use std::collections::{BTreeMap, HashMap};

use crate::abstraction::{SymbolSequence, EOS};
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const UNK_ID: usize = 0;
pub const EOS_ID: usize = 1;

/// Symbol inventory of one model. `<unk>` and `</s>` occupy ids 0 and 1;
/// the remaining symbols follow in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Collects symbols occurring at least `min_count` times.
    pub fn build<'a>(sequences: impl IntoIterator<Item = &'a SymbolSequence>, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for seq in sequences {
            for s in seq.symbols() {
                *counts.entry(s.as_str()).or_insert(0) += 1;
            }
        }
        let kept = counts
            .into_iter()
            .filter(|&(s, c)| c >= min_count && s != UNK && s != EOS)
            .map(|(s, _)| s.to_string());
        Self::from_symbols(kept).expect("special symbols filtered")
    }

    /// Builds a vocabulary from an explicit list of non-special symbols.
    pub fn from_symbols(symbols: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut all = vec![UNK.to_string(), EOS.to_string()];
        all.extend(symbols);
        Self::from_full_list(all)
    }

    /// Restores a vocabulary from its complete id-ordered list.
    pub fn from_full_list(symbols: Vec<String>) -> Result<Self> {
        if symbols.len() < 2 || symbols[UNK_ID] != UNK || symbols[EOS_ID] != EOS {
            return Err(Error::Validation("vocabulary must start with <unk> and </s>".into()));
        }
        let index: HashMap<String, usize> =
            symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        if index.len() != symbols.len() {
            return Err(Error::Validation("vocabulary repeats a symbol".into()));
        }
        Ok(Vocab { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Id of `symbol`, or the `<unk>` id.
    pub fn id(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::Level;

    fn seq(s: &[&str]) -> SymbolSequence {
        SymbolSequence::new("x", Level::Raw, s.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn specials_first_and_cutoff() {
        let seqs = [seq(&["b", "a", "b"]), seq(&["c"])];
        let v = Vocab::build(&seqs, 1);
        assert_eq!(v.symbols(), &["<unk>", "</s>", "a", "b", "c"]);
        let v = Vocab::build(&seqs, 2);
        assert_eq!(v.symbols(), &["<unk>", "</s>", "b"]);
        assert_eq!(v.id("a"), UNK_ID);
        assert_eq!(v.id("</s>"), EOS_ID);
    }

    #[test]
    fn bijective() {
        let v = Vocab::build(&[seq(&["x", "y", "z"])], 1);
        for (i, s) in v.symbols().iter().enumerate() {
            assert_eq!(v.id(s), i);
        }
        assert!(Vocab::from_full_list(vec!["a".into()]).is_err());
        assert!(Vocab::from_full_list(vec![UNK.into(), EOS.into(), "a".into(), "a".into()]).is_err());
    }
}
