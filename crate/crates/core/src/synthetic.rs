//! Synthetic languages evolved along a known tree.
//!
//! A seed stochastic dependency grammar is described by a real parameter
//! vector: per-relation head-direction logits, presence logits for optional
//! dependents, ordering priorities and category preferences. The vector
//! drifts by Brownian motion along every edge of the generating tree, a
//! syllable lexicon mutates by random sound substitutions, and coordinates
//! follow a random walk. Each leaf then samples a treebank.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{
    emit_newick, parse_newick, write_conllu, write_coordinates, BracketTree, CorpusManifest,
    MissingResources, Sentence, Token, Treebank,
};
use crate::distances::GeoTable;
use crate::error::{Error, Result};
use crate::lm::TrainConfig;
use crate::tree::{DendroTree, NodeId};

/// Generating tree of the bundled 12-language benchmark.
pub const SYNTHETIC_TREE: &str = "((((qa:0.3,qb:0.3):0.5,qc:0.8):0.7,((qd:0.3,qe:0.3):0.5,qf:0.8):0.7):0.6,\
(((qg:0.3,qh:0.3):0.5,qi:0.8):0.7,((qj:0.3,qk:0.3):0.5,ql:0.8):0.7):0.6);";

/// Dependency relations of the grammar: `(id, deprel, optional)`.
const RELATIONS: [(&str, &str, bool); 16] = [
    ("nsubj", "nsubj", false),
    ("obj", "obj", true),
    ("obl", "obl", true),
    ("advmod", "advmod", true),
    ("aux", "aux", true),
    ("advcl", "advcl", true),
    ("punct", "punct", false),
    ("neg", "advmod", true),
    ("det", "det", true),
    ("amod", "amod", true),
    ("nummod", "nummod", true),
    ("nmod", "nmod", true),
    ("case", "case", false),
    ("mark", "mark", false),
    ("conj", "conj", true),
    ("cc", "cc", false),
];

/// Presence logits of the seed grammar for optional relations.
fn base_presence(rel: usize) -> f64 {
    match RELATIONS[rel].0 {
        "obj" => 0.5,
        "obl" => -0.5,
        "advmod" => -1.0,
        "aux" => -0.5,
        "advcl" => -2.0,
        "neg" => -2.0,
        "det" => 0.5,
        "amod" => -0.5,
        "nummod" => -1.5,
        "nmod" => -1.2,
        "conj" => -2.5,
        _ => 0.0,
    }
}

const NOMINALS: [&str; 3] = ["NOUN", "PRON", "PROPN"];

/// Offsets into the grammar parameter vector.
struct ParamIndex;

impl ParamIndex {
    const DIR: usize = 0;
    const PRESENCE: usize = RELATIONS.len();
    const PRIORITY: usize = 2 * RELATIONS.len();
    const SUBJ: usize = 3 * RELATIONS.len();
    const OBJ: usize = Self::SUBJ + NOMINALS.len();
    const LEN: usize = Self::OBJ + NOMINALS.len();
}

fn rel_index(id: &str) -> usize {
    RELATIONS.iter().position(|r| r.0 == id).expect("known relation")
}

/// Settings of the synthetic generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Generating tree in Newick format.
    pub tree: String,
    pub sentences_per_language: usize,
    /// Brownian standard deviation of grammar parameters per unit length.
    pub grammar_rate: f64,
    /// Per-character substitution probability per unit length.
    pub lexicon_rate: f64,
    /// Random-walk standard deviation of coordinates in degrees per unit length.
    pub geo_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 1,
            tree: SYNTHETIC_TREE.to_string(),
            sentences_per_language: 300,
            grammar_rate: 1.0,
            lexicon_rate: 0.15,
            geo_rate: 4.0,
        }
    }
}

/// One generated language.
#[derive(Clone, Debug)]
pub struct SyntheticLanguage {
    pub code: String,
    pub grammar: Vec<f64>,
    pub treebank: Treebank,
    pub bracketed: Vec<BracketTree>,
    pub coordinates: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub gold: DendroTree,
    pub languages: Vec<SyntheticLanguage>,
}

type Lexicon = BTreeMap<&'static str, Vec<String>>;

/// Ancestral state carried down the tree.
#[derive(Clone)]
struct State {
    grammar: Vec<f64>,
    lexicon: Lexicon,
    lat: f64,
    lon: f64,
}

const VOWELS: &[u8] = b"aeiou";
const CONSONANTS: &[u8] = b"bdfgklmnprstvz";

fn syllable_word<R: Rng>(rng: &mut R, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).expect("non-empty") as char);
        w.push(*VOWELS.choose(rng).expect("non-empty") as char);
    }
    w
}

fn seed_lexicon<R: Rng>(rng: &mut R) -> Lexicon {
    let sizes: [(&'static str, usize, usize); 14] = [
        ("NOUN", 40, 3),
        ("VERB", 30, 3),
        ("ADJ", 20, 3),
        ("ADV", 10, 3),
        ("PROPN", 10, 3),
        ("NUM", 8, 2),
        ("PRON", 6, 1),
        ("DET", 4, 1),
        ("ADP", 6, 1),
        ("AUX", 3, 2),
        ("PART", 2, 1),
        ("SCONJ", 3, 2),
        ("CCONJ", 2, 1),
        ("PUNCT", 1, 0),
    ];
    sizes
        .iter()
        .map(|&(pos, n, max_syl)| {
            let words = if pos == "PUNCT" {
                vec![".".to_string()]
            } else {
                (0..n)
                    .map(|_| {
                        let syl = rng.gen_range(1..=max_syl);
                        syllable_word(rng, syl)
                    })
                    .collect()
            };
            (pos, words)
        })
        .collect()
}

fn mutate_lexicon<R: Rng>(lexicon: &mut Lexicon, p: f64, rng: &mut R) {
    let p = p.min(1.0);
    for words in lexicon.values_mut() {
        for w in words.iter_mut() {
            let bytes: Vec<u8> = w
                .bytes()
                .map(|b| {
                    if !rng.gen_bool(p) {
                        b
                    } else if VOWELS.contains(&b) {
                        *VOWELS.choose(rng).expect("non-empty")
                    } else if CONSONANTS.contains(&b) {
                        *CONSONANTS.choose(rng).expect("non-empty")
                    } else {
                        b
                    }
                })
                .collect();
            *w = String::from_utf8(bytes).expect("ascii");
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A node of a sampled dependency tree before linearization.
struct GNode {
    upos: &'static str,
    rel: usize,
    form: String,
    deps: Vec<usize>,
}

struct SentenceSampler<'a, R: Rng> {
    grammar: &'a [f64],
    lexicon: &'a Lexicon,
    rng: &'a mut R,
    nodes: Vec<GNode>,
}

impl<R: Rng> SentenceSampler<'_, R> {
    fn word(&mut self, upos: &'static str, rel: usize) -> usize {
        let words = &self.lexicon[upos];
        // Zipf-like choice keeps frequent words frequent in every language.
        let i = ((words.len() as f64).powf(self.rng.gen::<f64>()) - 1.0).floor() as usize;
        let form = words[i.min(words.len() - 1)].clone();
        self.nodes.push(GNode { upos, rel, form, deps: Vec::new() });
        self.nodes.len() - 1
    }

    fn present(&mut self, rel: &str) -> bool {
        let r = rel_index(rel);
        let p = sigmoid(self.grammar[ParamIndex::PRESENCE + r] + base_presence(r));
        self.rng.gen_bool(p)
    }

    fn attach(&mut self, head: usize, dep: usize) {
        self.nodes[head].deps.push(dep);
    }

    fn nominal_category(&mut self, offset: usize) -> &'static str {
        let logits = &self.grammar[offset..offset + NOMINALS.len()];
        let bias = [1.0, 0.0, -0.5];
        let w: Vec<f64> = logits.iter().zip(bias).map(|(l, b)| (l + b).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut u = self.rng.gen::<f64>() * total;
        for (cat, wi) in NOMINALS.iter().zip(&w) {
            if u < *wi {
                return cat;
            }
            u -= wi;
        }
        NOMINALS[NOMINALS.len() - 1]
    }

    fn noun_phrase(&mut self, upos: &'static str, rel: usize, depth: usize) -> usize {
        let head = self.word(upos, rel);
        if upos != "NOUN" {
            return head;
        }
        for (id, dep_pos) in [("det", "DET"), ("amod", "ADJ"), ("nummod", "NUM")] {
            if self.present(id) {
                let d = self.word(dep_pos, rel_index(id));
                self.attach(head, d);
            }
        }
        if depth < 1 && self.present("nmod") {
            let d = self.case_phrase(rel_index("nmod"), depth + 1);
            self.attach(head, d);
        }
        if depth < 1 && self.present("conj") {
            let d = self.noun_phrase("NOUN", rel_index("conj"), depth + 1);
            let cc = self.word("CCONJ", rel_index("cc"));
            self.attach(d, cc);
            self.attach(head, d);
        }
        head
    }

    fn case_phrase(&mut self, rel: usize, depth: usize) -> usize {
        let head = self.noun_phrase("NOUN", rel, depth);
        let case = self.word("ADP", rel_index("case"));
        self.attach(head, case);
        head
    }

    fn clause(&mut self, rel: usize, depth: usize) -> usize {
        let head = self.word("VERB", rel);
        let subj = self.nominal_category(ParamIndex::SUBJ);
        let d = self.noun_phrase(subj, rel_index("nsubj"), depth);
        self.attach(head, d);
        if self.present("obj") {
            let cat = self.nominal_category(ParamIndex::OBJ);
            let d = self.noun_phrase(cat, rel_index("obj"), depth);
            self.attach(head, d);
        }
        if self.present("obl") {
            let d = self.case_phrase(rel_index("obl"), depth);
            self.attach(head, d);
        }
        for (id, pos) in [("advmod", "ADV"), ("aux", "AUX"), ("neg", "PART")] {
            if self.present(id) {
                let d = self.word(pos, rel_index(id));
                self.attach(head, d);
            }
        }
        if depth < 1 && self.present("advcl") {
            let d = self.clause(rel_index("advcl"), depth + 1);
            let mark = self.word("SCONJ", rel_index("mark"));
            self.attach(d, mark);
            self.attach(head, d);
        }
        head
    }

    /// Orders the subtree of `node`: each dependent goes left with the
    /// probability given by its direction logit, and dependents on one
    /// side are sorted by a noisy priority.
    fn linearize(&mut self, node: usize, out: &mut Vec<usize>) {
        let deps = self.nodes[node].deps.clone();
        let noise = Normal::new(0.0, 0.3).expect("valid");
        let mut left = Vec::new();
        let mut right = Vec::new();
        for d in deps {
            let r = self.nodes[d].rel;
            let key = self.grammar[ParamIndex::PRIORITY + r] + noise.sample(self.rng);
            let go_left = if RELATIONS[r].0 == "punct" {
                false
            } else {
                self.rng.gen_bool(sigmoid(self.grammar[ParamIndex::DIR + r]))
            };
            if go_left {
                left.push((key, d));
            } else {
                right.push((key, d));
            }
        }
        left.sort_by(|a, b| a.0.total_cmp(&b.0));
        right.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, d) in left {
            self.linearize(d, out);
        }
        out.push(node);
        for (_, d) in right {
            self.linearize(d, out);
        }
    }

    fn sentence(&mut self) -> Result<(Sentence, BracketTree)> {
        self.nodes.clear();
        let root = self.clause(usize::MAX, 0);
        let punct = self.word("PUNCT", rel_index("punct"));
        self.attach(root, punct);
        let mut order = Vec::new();
        self.linearize(root, &mut order);
        let mut position = vec![0; self.nodes.len()];
        for (i, &n) in order.iter().enumerate() {
            position[n] = i + 1;
        }
        let mut head_of = vec![0; self.nodes.len()];
        for (h, n) in self.nodes.iter().enumerate() {
            for &d in &n.deps {
                head_of[d] = position[h];
            }
        }
        let tokens = order
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let node = &self.nodes[n];
                let deprel = if n == root { "root" } else { RELATIONS[node.rel].1 };
                Token::new(i + 1, node.form.clone(), node.upos, head_of[n], deprel)
            })
            .collect();
        let sentence = Sentence::new(tokens)?;
        let tree = self.constituent(root, &position, true);
        Ok((sentence, tree))
    }

    /// Constituent of `node`: its dependents' constituents and the head
    /// preterminal in surface order.
    fn constituent(&self, node: usize, position: &[usize], top: bool) -> BracketTree {
        let n = &self.nodes[node];
        let pre = BracketTree::node(n.upos, vec![BracketTree::leaf(n.form.clone())]);
        if n.deps.is_empty() && !top {
            return pre;
        }
        let mut parts: Vec<(usize, BracketTree)> = n
            .deps
            .iter()
            .map(|&d| (position[d], self.constituent(d, position, false)))
            .collect();
        parts.push((position[node], pre));
        parts.sort_by_key(|p| p.0);
        let label = if top {
            "S"
        } else {
            match n.upos {
                "VERB" => "VP",
                "NOUN" | "PROPN" | "PRON" => "NP",
                "ADJ" => "ADJP",
                "ADV" => "ADVP",
                "NUM" => "QP",
                _ => "XP",
            }
        };
        BracketTree::node(label, parts.into_iter().map(|p| p.1).collect())
    }
}

fn seed_state<R: Rng>(rng: &mut R) -> State {
    let mut grammar = vec![0.0; ParamIndex::LEN];
    let wide = Normal::new(0.0, 1.5).expect("valid");
    let narrow = Normal::new(0.0, 0.5).expect("valid");
    for r in 0..RELATIONS.len() {
        grammar[ParamIndex::DIR + r] = wide.sample(rng);
        grammar[ParamIndex::PRESENCE + r] = if RELATIONS[r].2 { narrow.sample(rng) } else { 0.0 };
        grammar[ParamIndex::PRIORITY + r] = wide.sample(rng);
    }
    for i in ParamIndex::SUBJ..ParamIndex::LEN {
        grammar[i] = narrow.sample(rng);
    }
    State {
        grammar,
        lexicon: seed_lexicon(rng),
        lat: 48.0,
        lon: 10.0,
    }
}

fn evolve<R: Rng>(state: &State, length: f64, cfg: &SyntheticConfig, rng: &mut R) -> State {
    let mut next = state.clone();
    if length > 0.0 {
        let drift = Normal::new(0.0, cfg.grammar_rate * length.sqrt()).expect("valid");
        for (r, value) in next.grammar.iter_mut().enumerate() {
            let fixed = (ParamIndex::PRESENCE..ParamIndex::PRIORITY).contains(&r)
                && !RELATIONS[r - ParamIndex::PRESENCE].2;
            if !fixed {
                *value += drift.sample(rng);
            }
        }
        mutate_lexicon(&mut next.lexicon, cfg.lexicon_rate * length, rng);
        let step = Normal::new(0.0, cfg.geo_rate * length.sqrt()).expect("valid");
        next.lat = (next.lat + step.sample(rng)).clamp(-80.0, 80.0);
        next.lon = (next.lon + step.sample(rng) + 180.0).rem_euclid(360.0) - 180.0;
    }
    next
}

impl SyntheticCorpus {
    pub fn generate(cfg: &SyntheticConfig) -> Result<Self> {
        if cfg.sentences_per_language == 0 {
            return Err(Error::InvalidArgument("sentences_per_language must be positive".into()));
        }
        for (name, v) in [
            ("grammar_rate", cfg.grammar_rate),
            ("lexicon_rate", cfg.lexicon_rate),
            ("geo_rate", cfg.geo_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative")));
            }
        }
        let gold = parse_newick(&cfg.tree)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut leaves = Vec::new();
        let root = seed_state(&mut rng);
        let mut stack: Vec<(NodeId, State)> = vec![(gold.root(), root)];
        while let Some((id, state)) = stack.pop() {
            let node = gold.node(id);
            if node.is_leaf() {
                leaves.push((node.name.clone().expect("leaf names validated"), state));
                continue;
            }
            let mut children = Vec::new();
            for &(child, w) in &node.children {
                children.push((child, evolve(&state, w, cfg, &mut rng)));
            }
            stack.extend(children.into_iter().rev());
        }

        let mut languages = Vec::with_capacity(leaves.len());
        for (i, (code, state)) in leaves.into_iter().enumerate() {
            let mut lrng = ChaCha8Rng::seed_from_u64(cfg.seed);
            lrng.set_stream(i as u64 + 1);
            let mut sampler = SentenceSampler {
                grammar: &state.grammar,
                lexicon: &state.lexicon,
                rng: &mut lrng,
                nodes: Vec::new(),
            };
            let mut sentences = Vec::with_capacity(cfg.sentences_per_language);
            let mut bracketed = Vec::with_capacity(cfg.sentences_per_language);
            for _ in 0..cfg.sentences_per_language {
                let (s, b) = sampler.sentence()?;
                sentences.push(s);
                bracketed.push(b);
            }
            languages.push(SyntheticLanguage {
                treebank: Treebank::new(code.clone(), sentences)?,
                code,
                grammar: state.grammar,
                bracketed,
                coordinates: (state.lat, state.lon),
            });
        }
        Ok(SyntheticCorpus { gold, languages })
    }

    pub fn codes(&self) -> Vec<String> {
        self.languages.iter().map(|l| l.code.clone()).collect()
    }

    pub fn treebanks(&self) -> Vec<&Treebank> {
        self.languages.iter().map(|l| &l.treebank).collect()
    }

    pub fn coordinates(&self) -> Result<GeoTable> {
        let mut table = GeoTable::new();
        for l in &self.languages {
            table.insert(&l.code, l.coordinates.0, l.coordinates.1)?;
        }
        Ok(table)
    }

    /// Writes treebanks, bracketed trees, gold tree, coordinates and a
    /// manifest into `dir`, returning the manifest.
    pub fn write_fixture(&self, dir: &Path, train: TrainConfig, seed: u64) -> Result<CorpusManifest> {
        fs::create_dir_all(dir.join("conllu"))?;
        fs::create_dir_all(dir.join("bracketed"))?;
        let mut conllu = BTreeMap::new();
        let mut bracketed = BTreeMap::new();
        for l in &self.languages {
            let c = PathBuf::from("conllu").join(format!("{}.conllu", l.code));
            fs::write(dir.join(&c), write_conllu(&l.treebank))?;
            conllu.insert(l.code.clone(), c);
            let b = PathBuf::from("bracketed").join(format!("{}.ptb", l.code));
            let text: String = l.bracketed.iter().map(|t| format!("{t}\n")).collect();
            fs::write(dir.join(&b), text)?;
            bracketed.insert(l.code.clone(), b);
        }
        fs::write(dir.join("gold.nwk"), format!("{}\n", emit_newick(&self.gold)))?;
        fs::write(dir.join("coords.csv"), write_coordinates(&self.coordinates()?))?;
        let manifest = CorpusManifest {
            languages: self.codes(),
            seed,
            gold_tree: Some("gold.nwk".into()),
            coordinates: Some("coords.csv".into()),
            func_upos: None,
            conllu,
            bracketed,
            missing: MissingResources::default(),
            train,
            analysis: Default::default(),
            base_dir: dir.to_path_buf(),
        };
        manifest.validate()?;
        fs::write(dir.join("manifest.toml"), manifest.to_toml()?)?;
        Ok(manifest)
    }
}

/// The same topology with leaf labels shuffled, so its path lengths no
/// longer follow the generating process.
pub fn permuted_tree(tree: &DendroTree, seed: u64) -> Result<DendroTree> {
    let names: Vec<String> = tree.leaves().iter().map(|s| s.to_string()).collect();
    let mut shuffled = names.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let map: BTreeMap<String, String> = names.into_iter().zip(shuffled).collect();
    tree.relabel(&map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_bracketed, parse_conllu};

    fn small() -> SyntheticConfig {
        SyntheticConfig { sentences_per_language: 20, ..SyntheticConfig::default() }
    }

    #[test]
    fn twelve_languages_with_valid_treebanks() {
        let c = SyntheticCorpus::generate(&small()).unwrap();
        assert_eq!(c.languages.len(), 12);
        assert_eq!(c.codes()[0], "qa");
        for l in &c.languages {
            assert_eq!(l.treebank.sentences.len(), 20);
            let text = write_conllu(&l.treebank);
            assert_eq!(parse_conllu(&text, &l.code).unwrap(), l.treebank);
        }
    }

    #[test]
    fn brackets_cover_the_tokens() {
        let c = SyntheticCorpus::generate(&small()).unwrap();
        let l = &c.languages[3];
        for (s, b) in l.treebank.sentences.iter().zip(&l.bracketed) {
            let parsed = parse_bracketed(&b.to_string()).unwrap();
            assert_eq!(parsed, vec![b.clone()]);
            let text = b.to_string();
            for t in s.tokens() {
                assert!(text.contains(&format!("({} {})", t.upos, t.form)));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = SyntheticCorpus::generate(&small()).unwrap();
        let b = SyntheticCorpus::generate(&small()).unwrap();
        assert_eq!(a.languages[5].treebank, b.languages[5].treebank);
        let c = SyntheticCorpus::generate(&SyntheticConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.languages[5].treebank, c.languages[5].treebank);
    }

    #[test]
    fn permutation_keeps_leaf_set() {
        let gold = parse_newick(SYNTHETIC_TREE).unwrap();
        let p = permuted_tree(&gold, 3).unwrap();
        assert_eq!(p.leaf_set(), gold.leaf_set());
    }
}
