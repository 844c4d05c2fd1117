//! Rewriting of annotated sentences into symbol streams at five levels of
//! abstraction: raw characters, function words with POS, POS only,
//! linearized phrase structure, and dependency-relation tuples.
//!
//! The transforms produce content symbols only. The sentence boundary
//! symbol [`EOS`] is added by the language model when it frames sequences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{BracketTree, Sentence, Treebank};
use crate::error::{Error, Result};

/// Sentence boundary symbol.
pub const EOS: &str = "</s>";
/// Symbol standing for the space between words at the raw level.
pub const SPACE: &str = "␣";
/// Head POS and direction of root tokens in dependency tuples.
pub const ROOT: &str = "ROOT";

/// UD closed-class tags used as function words by default.
pub const DEFAULT_FUNC_UPOS: [&str; 8] =
    ["ADP", "AUX", "CCONJ", "DET", "PART", "PRON", "SCONJ", "PUNCT"];

pub fn default_func_upos() -> BTreeSet<String> {
    DEFAULT_FUNC_UPOS.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Raw,
    Func,
    Pos,
    Phrase,
    Deprel,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::Raw, Level::Func, Level::Pos, Level::Phrase, Level::Deprel];

    pub fn name(self) -> &'static str {
        match self {
            Level::Raw => "raw",
            Level::Func => "func",
            Level::Pos => "pos",
            Level::Phrase => "phrase",
            Level::Deprel => "deprel",
        }
    }

    /// Whether this level is computed from bracketed trees rather than
    /// dependency treebanks.
    pub fn needs_brackets(self) -> bool {
        self == Level::Phrase
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown abstraction level '{s}' (expected raw, func, pos, phrase or deprel)"
                ))
            })
    }
}

/// One sentence rewritten at one abstraction level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSequence {
    pub language: String,
    pub level: Level,
    symbols: Vec<String>,
}

impl SymbolSequence {
    pub fn new(language: impl Into<String>, level: Level, symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Validation("symbol sequence is empty".into()));
        }
        if symbols.iter().any(String::is_empty) {
            return Err(Error::Validation("symbol sequence contains an empty symbol".into()));
        }
        Ok(SymbolSequence {
            language: language.into(),
            level,
            symbols,
        })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Raw level granularity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawUnit {
    #[default]
    Characters,
    Tokens,
}

/// Lowercased forms joined by single spaces, as characters (or as whole
/// tokens when `unit` is [`RawUnit::Tokens`]).
pub fn to_raw(sentence: &Sentence, unit: RawUnit) -> Vec<String> {
    match unit {
        RawUnit::Tokens => sentence
            .tokens()
            .iter()
            .map(|t| t.form.to_lowercase())
            .collect(),
        RawUnit::Characters => {
            let mut out = Vec::new();
            for (i, token) in sentence.tokens().iter().enumerate() {
                if i > 0 {
                    out.push(SPACE.to_string());
                }
                out.extend(token.form.to_lowercase().chars().map(String::from));
            }
            out
        }
    }
}

/// Lowercased form for tokens whose UPOS is a function class, the UPOS
/// otherwise.
pub fn to_func_pos(sentence: &Sentence, func_upos: &BTreeSet<String>) -> Result<Vec<String>> {
    if func_upos.is_empty() {
        return Err(Error::InvalidArgument("function-word UPOS set is empty".into()));
    }
    Ok(sentence
        .tokens()
        .iter()
        .map(|t| {
            if func_upos.contains(&t.upos) {
                t.form.to_lowercase()
            } else {
                t.upos.clone()
            }
        })
        .collect())
}

pub fn to_pos(sentence: &Sentence) -> Vec<String> {
    sentence.tokens().iter().map(|t| t.upos.clone()).collect()
}

/// Head direction of a dependency, seen from the dependent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Head precedes the dependent.
    Left,
    /// Head follows the dependent.
    Right,
    Root,
}

impl Direction {
    pub fn of(token_index: usize, head: usize) -> Direction {
        if head == 0 {
            Direction::Root
        } else if head > token_index {
            Direction::Right
        } else {
            Direction::Left
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Left => "L",
            Direction::Right => "R",
            Direction::Root => ROOT,
        }
    }
}

/// Dependency relation, token POS, head direction and head POS of one word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeprelTuple {
    pub deprel: String,
    pub pos: String,
    pub dir: Direction,
    /// `None` for the root token.
    pub head_pos: Option<String>,
}

impl fmt::Display for DeprelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.deprel,
            self.pos,
            self.dir.as_str(),
            self.head_pos.as_deref().unwrap_or(ROOT)
        )
    }
}

impl FromStr for DeprelTuple {
    type Err = Error;

    /// Splits from the right so relation subtypes like `nsubj:pass` survive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed dependency tuple '{s}'"));
        let mut parts = s.rsplitn(4, ':');
        let head = parts.next().ok_or_else(bad)?;
        let dir = parts.next().ok_or_else(bad)?;
        let pos = parts.next().ok_or_else(bad)?;
        let deprel = parts.next().ok_or_else(bad)?;
        let dir = match dir {
            "L" => Direction::Left,
            "R" => Direction::Right,
            ROOT => Direction::Root,
            _ => return Err(bad()),
        };
        let head_pos = (head != ROOT).then(|| head.to_string());
        if (dir == Direction::Root) != head_pos.is_none() {
            return Err(bad());
        }
        Ok(DeprelTuple {
            deprel: deprel.into(),
            pos: pos.into(),
            dir,
            head_pos,
        })
    }
}

pub fn deprel_tuples(sentence: &Sentence) -> Vec<DeprelTuple> {
    sentence
        .tokens()
        .iter()
        .map(|t| DeprelTuple {
            deprel: t.deprel.clone(),
            pos: t.upos.clone(),
            dir: Direction::of(t.index, t.head),
            head_pos: sentence.token(t.head).map(|h| h.upos.clone()),
        })
        .collect()
}

pub fn to_deprel(sentence: &Sentence) -> Vec<String> {
    deprel_tuples(sentence).iter().map(ToString::to_string).collect()
}

/// Linearizes a constituency tree. Preterminals collapse to their POS, or
/// to the lowercased word when the POS is a function class. Terminals that
/// are not alone under a preterminal get their POS from `lexicon`.
pub fn to_phrase(
    tree: &BracketTree,
    func_upos: &BTreeSet<String>,
    lexicon: &BTreeMap<String, String>,
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    linearize(tree, func_upos, lexicon, &mut out)?;
    Ok(out)
}

fn linearize(
    tree: &BracketTree,
    func_upos: &BTreeSet<String>,
    lexicon: &BTreeMap<String, String>,
    out: &mut Vec<String>,
) -> Result<()> {
    let terminal = |pos: &str, word: &str| {
        if func_upos.contains(pos) {
            word.to_lowercase()
        } else {
            pos.to_string()
        }
    };
    match tree {
        BracketTree::Leaf(word) => {
            let pos = lexicon.get(word).ok_or_else(|| {
                Error::Validation(format!(
                    "terminal '{word}' has no preterminal parent and no lexicon entry"
                ))
            })?;
            out.push(terminal(pos, word));
        }
        BracketTree::Node { label, children } => {
            if tree.is_preterminal() {
                out.push(terminal(label, children[0].label()));
            } else {
                out.push("(".into());
                out.push(label.clone());
                for child in children {
                    linearize(child, func_upos, lexicon, out)?;
                }
                out.push(")".into());
            }
        }
    }
    Ok(())
}

/// Options shared by the treebank-level rewriting helpers.
#[derive(Clone, Debug)]
pub struct AbstractionOptions {
    pub func_upos: BTreeSet<String>,
    pub raw_unit: RawUnit,
    pub lexicon: BTreeMap<String, String>,
}

impl Default for AbstractionOptions {
    fn default() -> Self {
        AbstractionOptions {
            func_upos: default_func_upos(),
            raw_unit: RawUnit::Characters,
            lexicon: BTreeMap::new(),
        }
    }
}

/// Rewrites every sentence of a dependency treebank at `level`.
pub fn abstract_treebank(
    treebank: &Treebank,
    level: Level,
    opts: &AbstractionOptions,
) -> Result<Vec<SymbolSequence>> {
    treebank
        .sentences
        .iter()
        .map(|s| {
            let symbols = match level {
                Level::Raw => to_raw(s, opts.raw_unit),
                Level::Func => to_func_pos(s, &opts.func_upos)?,
                Level::Pos => to_pos(s),
                Level::Deprel => to_deprel(s),
                Level::Phrase => {
                    return Err(Error::InvalidArgument(
                        "the phrase level needs bracketed trees, not a dependency treebank".into(),
                    ))
                }
            };
            SymbolSequence::new(&treebank.language, level, symbols)
        })
        .collect()
}

/// Rewrites bracketed trees at the phrase level.
pub fn abstract_bracketed(
    language: &str,
    trees: &[BracketTree],
    opts: &AbstractionOptions,
) -> Result<Vec<SymbolSequence>> {
    trees
        .iter()
        .map(|t| {
            SymbolSequence::new(
                language,
                Level::Phrase,
                to_phrase(t, &opts.func_upos, &opts.lexicon)?,
            )
        })
        .collect()
}

/// Form to UPOS map collected from a treebank (first tag seen wins).
pub fn lexicon_from(treebank: &Treebank) -> BTreeMap<String, String> {
    let mut lex = BTreeMap::new();
    for s in &treebank.sentences {
        for t in s.tokens() {
            lex.entry(t.form.clone()).or_insert_with(|| t.upos.clone());
        }
    }
    lex
}

/// Symbol frequencies over a set of sequences.
pub fn census<'a>(sequences: impl IntoIterator<Item = &'a SymbolSequence>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for seq in sequences {
        for s in seq.symbols() {
            *counts.entry(s.clone()).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed, Token};
    use proptest::prelude::*;

    fn sent(tokens: &[(&str, &str, usize, &str)]) -> Sentence {
        Sentence::new(
            tokens
                .iter()
                .enumerate()
                .map(|(i, &(f, u, h, d))| Token::new(i + 1, f, u, h, d))
                .collect(),
        )
        .unwrap()
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn raw_characters() {
        let s = sent(&[("The", "DET", 2, "det"), ("cat", "NOUN", 0, "root")]);
        assert_eq!(to_raw(&s, RawUnit::Characters), strs(&["t", "h", "e", SPACE, "c", "a", "t"]));
        let s = sent(&[("a", "DET", 0, "root")]);
        assert_eq!(to_raw(&s, RawUnit::Characters), strs(&["a"]));
        let s = sent(&[("Ab", "X", 0, "root"), ("c", "X", 1, "dep")]);
        assert_eq!(to_raw(&s, RawUnit::Characters), strs(&["a", "b", SPACE, "c"]));
        assert_eq!(to_raw(&s, RawUnit::Tokens), strs(&["ab", "c"]));
    }

    #[test]
    fn func_pos() {
        let s = sent(&[
            ("the", "DET", 2, "det"),
            ("cat", "NOUN", 3, "nsubj"),
            ("sleeps", "VERB", 0, "root"),
        ]);
        assert_eq!(to_func_pos(&s, &set(&["DET"])).unwrap(), strs(&["the", "NOUN", "VERB"]));
        assert_eq!(
            to_func_pos(&s, &set(&["DET", "NOUN", "VERB"])).unwrap(),
            strs(&["the", "cat", "sleeps"])
        );
        assert!(to_func_pos(&s, &BTreeSet::new()).is_err());
    }

    #[test]
    fn pos_only() {
        let s = sent(&[("the", "DET", 2, "det"), ("cat", "NOUN", 0, "root")]);
        assert_eq!(to_pos(&s), strs(&["DET", "NOUN"]));
        let s = sent(&[("x", "INTJ", 0, "root")]);
        assert_eq!(to_pos(&s), strs(&["INTJ"]));
    }

    #[test]
    fn deprel_tuples_render() {
        let s = sent(&[("the", "DET", 2, "det"), ("cat", "NOUN", 0, "root")]);
        assert_eq!(to_deprel(&s), strs(&["det:DET:R:NOUN", "root:NOUN:ROOT:ROOT"]));
        let s = sent(&[("go", "VERB", 0, "root")]);
        assert_eq!(to_deprel(&s), strs(&["root:VERB:ROOT:ROOT"]));
        // Moving the head to the other side flips only the direction.
        let s = sent(&[("cat", "NOUN", 0, "root"), ("the", "DET", 1, "det")]);
        assert_eq!(to_deprel(&s)[1], "det:DET:L:NOUN");
    }

    #[test]
    fn deprel_tuple_parses_subtypes() {
        let t: DeprelTuple = "nsubj:pass:NOUN:R:VERB".parse().unwrap();
        assert_eq!(t.deprel, "nsubj:pass");
        assert_eq!(t.to_string(), "nsubj:pass:NOUN:R:VERB");
        assert!("root:NOUN:L:ROOT".parse::<DeprelTuple>().is_err());
        assert!("x".parse::<DeprelTuple>().is_err());
    }

    #[test]
    fn phrase_linearization() {
        let t = &parse_bracketed("(S (NP (DET the) (NOUN cat)) (VP (VERB sleeps)))").unwrap()[0];
        let out = to_phrase(t, &set(&["DET"]), &BTreeMap::new()).unwrap();
        assert_eq!(out, strs(&["(", "S", "(", "NP", "the", "NOUN", ")", "(", "VP", "VERB", ")", ")"]));

        let t = &parse_bracketed("(NOUN cat)").unwrap()[0];
        assert_eq!(to_phrase(t, &BTreeSet::new(), &BTreeMap::new()).unwrap(), strs(&["NOUN"]));
    }

    #[test]
    fn phrase_bare_terminal_needs_lexicon() {
        let t = &parse_bracketed("(S (NP the cat))").unwrap()[0];
        assert!(to_phrase(t, &set(&["DET"]), &BTreeMap::new()).is_err());
        let lex: BTreeMap<String, String> =
            [("the".to_string(), "DET".to_string()), ("cat".to_string(), "NOUN".to_string())].into();
        assert_eq!(
            to_phrase(t, &set(&["DET"]), &lex).unwrap(),
            strs(&["(", "S", "(", "NP", "the", "NOUN", ")", ")"])
        );
    }

    #[test]
    fn level_names() {
        for level in Level::ALL {
            assert_eq!(level.name().parse::<Level>().unwrap(), level);
        }
        assert!("chars".parse::<Level>().is_err());
    }

    #[test]
    fn treebank_helpers() {
        let tb = Treebank::new(
            "en",
            vec![sent(&[("the", "DET", 2, "det"), ("cat", "NOUN", 0, "root")])],
        )
        .unwrap();
        let seqs = abstract_treebank(&tb, Level::Func, &AbstractionOptions::default()).unwrap();
        assert_eq!(seqs[0].symbols(), strs(&["the", "NOUN"]).as_slice());
        assert!(abstract_treebank(&tb, Level::Phrase, &AbstractionOptions::default()).is_err());
        let counts = census(&seqs);
        assert_eq!(counts["NOUN"], 1);
        assert_eq!(lexicon_from(&tb)["cat"], "NOUN");
    }

    const TAGS: [&str; 6] = ["DET", "NOUN", "VERB", "ADP", "ADJ", "PRON"];

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        prop::collection::vec((0usize..TAGS.len(), "[a-zA-Z]{1,5}"), 1..12).prop_flat_map(|words| {
            let n = words.len();
            let heads = prop::collection::vec(0usize..=n, n);
            (Just(words), heads)
        })
        .prop_map(|(words, heads)| {
            let n = words.len();
            // First token is the root; others point anywhere but themselves.
            let tokens = words
                .iter()
                .zip(heads)
                .enumerate()
                .map(|(i, ((tag, form), h))| {
                    let head = if i == 0 { 0 } else if h == i + 1 { 1 } else { h.min(n) };
                    Token::new(i + 1, form.clone(), TAGS[*tag], head, "dep")
                })
                .collect();
            Sentence::new(tokens).unwrap()
        })
    }

    proptest! {
        #[test]
        fn lengths_match_token_count(s in arb_sentence()) {
            prop_assert_eq!(to_pos(&s).len(), s.len());
            prop_assert_eq!(to_deprel(&s).len(), s.len());
        }

        #[test]
        fn func_subset_monotone(s in arb_sentence(), mask in prop::collection::vec(any::<bool>(), TAGS.len()), extra in prop::collection::vec(any::<bool>(), TAGS.len())) {
            let small: BTreeSet<String> = TAGS.iter().zip(&mask).filter(|(_, &m)| m).map(|(t, _)| t.to_string()).collect();
            let mut large = small.clone();
            large.extend(TAGS.iter().zip(&extra).filter(|(_, &m)| m).map(|(t, _)| t.to_string()));
            prop_assume!(!small.is_empty());
            let a = to_func_pos(&s, &small).unwrap();
            let b = to_func_pos(&s, &large).unwrap();
            for (i, t) in s.tokens().iter().enumerate() {
                // A POS replacement under the larger set is also one under the smaller.
                if b[i] == t.upos && !large.contains(&t.upos) {
                    prop_assert_eq!(&a[i], &t.upos);
                }
            }
        }

        #[test]
        fn transforms_are_deterministic(s in arb_sentence()) {
            prop_assert_eq!(to_raw(&s, RawUnit::Characters), to_raw(&s, RawUnit::Characters));
            prop_assert_eq!(to_deprel(&s), to_deprel(&s));
        }
    }
}
