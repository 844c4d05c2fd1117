//! Reader for CoNLL-U dependency treebanks.
//!
//! Only the basic layer is kept: ID, FORM, UPOS, HEAD and DEPREL. Multiword
//! token ranges (`3-4`) and empty nodes (`5.1`) are skipped.

use crate::error::{Error, Result};

/// A single syntactic word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub upos: String,
    /// Head position; 0 is the artificial root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(
        index: usize,
        form: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            index,
            form: form.into(),
            upos: upos.into(),
            head,
            deprel: deprel.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Builds a sentence, checking index contiguity, head ranges and the
    /// presence of a root.
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        let sentence = Sentence { tokens };
        sentence.validate().map_err(Error::Validation)?;
        Ok(sentence)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The token at 1-based position `index`.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.tokens.is_empty() {
            return Err("sentence has no tokens".into());
        }
        let n = self.tokens.len();
        let mut roots = 0;
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i + 1 {
                return Err(format!(
                    "token indices are not contiguous: expected {}, found {}",
                    i + 1,
                    token.index
                ));
            }
            if token.head > n {
                return Err(format!(
                    "token {} has head {} outside 0..={n}",
                    token.index, token.head
                ));
            }
            if token.head == token.index {
                return Err(format!("token {} is its own head", token.index));
            }
            if token.upos.is_empty() || token.upos == "_" {
                return Err(format!("token {} has an empty UPOS", token.index));
            }
            if token.deprel.is_empty() || token.deprel == "_" {
                return Err(format!("token {} has an empty DEPREL", token.index));
            }
            if token.head == 0 {
                roots += 1;
            }
        }
        if roots == 0 {
            return Err("sentence has no root token".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Treebank {
    pub language: String,
    pub sentences: Vec<Sentence>,
}

impl Treebank {
    pub fn new(language: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self> {
        let language = language.into();
        if language.is_empty() {
            return Err(Error::Validation("treebank language is empty".into()));
        }
        if sentences.is_empty() {
            return Err(Error::Validation(format!(
                "treebank '{language}' has no sentences"
            )));
        }
        Ok(Treebank {
            language,
            sentences,
        })
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// Parses CoNLL-U text into a treebank for `language`.
pub fn parse_conllu(text: &str, language: &str) -> Result<Treebank> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut sent_start = 0;

    let mut finish = |tokens: &mut Vec<Token>, sent_id: &mut Option<String>, start: usize| {
        if tokens.is_empty() {
            return Ok(());
        }
        let ordinal = sentences.len() + 1;
        let sentence = Sentence::new(std::mem::take(tokens)).map_err(|e| {
            let name = match sent_id.take() {
                Some(id) => format!("sentence {ordinal} (sent_id {id}, line {start})"),
                None => format!("sentence {ordinal} (line {start})"),
            };
            match e {
                Error::Validation(msg) => Error::Validation(format!("{name}: {msg}")),
                other => other,
            }
        })?;
        *sent_id = None;
        sentences.push(sentence);
        Ok::<(), Error>(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            finish(&mut tokens, &mut sent_id, sent_start)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                sent_id = Some(id.trim_start_matches([' ', '=']).trim().to_string());
            }
            continue;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            continue;
        }
        let index: usize = id
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid token ID '{id}'")))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid HEAD '{}'", cols[6])))?;
        if tokens.is_empty() {
            sent_start = lineno;
        }
        tokens.push(Token::new(index, cols[1], cols[3], head, cols[7]));
    }
    finish(&mut tokens, &mut sent_id, sent_start)?;

    if sentences.is_empty() {
        return Err(Error::Validation("no sentences".into()));
    }
    Treebank::new(language, sentences)
}

/// Renders a treebank as minimal CoNLL-U (unused columns are `_`).
pub fn write_conllu(treebank: &Treebank) -> String {
    let mut out = String::new();
    for sentence in &treebank.sentences {
        for t in sentence.tokens() {
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t_\t_\t{}\t{}\t_\t_\n",
                t.index, t.form, t.upos, t.head, t.deprel
            ));
        }
        out.push('\n');
    }
    out
}
