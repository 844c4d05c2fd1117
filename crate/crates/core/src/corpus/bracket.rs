//! PTB-style bracketed constituency trees, one tree per line.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BracketTree {
    /// A terminal string.
    Leaf(String),
    /// A labelled constituent with at least one child.
    Node {
        label: String,
        children: Vec<BracketTree>,
    },
}

impl BracketTree {
    pub fn node(label: impl Into<String>, children: Vec<BracketTree>) -> Self {
        BracketTree::Node {
            label: label.into(),
            children,
        }
    }

    pub fn leaf(s: impl Into<String>) -> Self {
        BracketTree::Leaf(s.into())
    }

    pub fn label(&self) -> &str {
        match self {
            BracketTree::Leaf(s) => s,
            BracketTree::Node { label, .. } => label,
        }
    }

    /// A preterminal is a node whose only child is a terminal.
    pub fn is_preterminal(&self) -> bool {
        matches!(self, BracketTree::Node { children, .. }
            if children.len() == 1 && matches!(children[0], BracketTree::Leaf(_)))
    }
}

impl fmt::Display for BracketTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketTree::Leaf(s) => f.write_str(s),
            BracketTree::Node { label, children } => {
                write!(f, "({label}")?;
                for child in children {
                    write!(f, " {child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses one tree per non-blank line.
///
/// An unlabelled outer wrapper with a single child, as in `( (S ...) )`, is
/// unwrapped.
pub fn parse_bracketed(text: &str) -> Result<Vec<BracketTree>> {
    let mut trees = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        trees.push(parse_line(line, lineno + 1)?);
    }
    Ok(trees)
}

enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(line: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (pos, ch) in line.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, Tok::Atom(&line[s..pos])));
            }
            match ch {
                '(' => out.push((pos, Tok::Open)),
                ')' => out.push((pos, Tok::Close)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(pos);
        }
    }
    if let Some(s) = start {
        out.push((s, Tok::Atom(&line[s..])));
    }
    out
}

fn parse_line(line: &str, lineno: usize) -> Result<BracketTree> {
    let column = |byte: usize| line[..byte].chars().count() + 1;
    let toks = tokenize(line);
    // Each frame: (label, children, column of its opening bracket).
    let mut stack: Vec<(Option<String>, Vec<BracketTree>, usize)> = Vec::new();
    let mut result: Option<BracketTree> = None;
    let mut i = 0;
    while i < toks.len() {
        let (pos, ref tok) = toks[i];
        if result.is_some() {
            return Err(Error::parse_at(
                lineno,
                column(pos),
                "trailing input after complete tree",
            ));
        }
        match tok {
            Tok::Open => {
                let label = match toks.get(i + 1) {
                    Some((_, Tok::Atom(a))) => {
                        i += 1;
                        Some((*a).to_string())
                    }
                    _ => None,
                };
                stack.push((label, Vec::new(), column(pos)));
            }
            Tok::Close => {
                let (label, children, col) = stack.pop().ok_or_else(|| {
                    Error::parse_at(lineno, column(pos), "unbalanced ')' without matching '('")
                })?;
                let node = match label {
                    Some(label) if children.is_empty() => {
                        return Err(Error::Validation(format!(
                            "line {lineno}, column {col}: empty constituent '({label})'"
                        )))
                    }
                    Some(label) => BracketTree::Node { label, children },
                    None if children.len() == 1 && stack.is_empty() => {
                        children.into_iter().next().unwrap()
                    }
                    None => {
                        return Err(Error::Validation(format!(
                            "line {lineno}, column {col}: constituent without a label"
                        )))
                    }
                };
                match stack.last_mut() {
                    Some((_, siblings, _)) => siblings.push(node),
                    None => result = Some(node),
                }
            }
            Tok::Atom(a) => match stack.last_mut() {
                Some((_, children, _)) => children.push(BracketTree::leaf(*a)),
                None => {
                    return Err(Error::parse_at(
                        lineno,
                        column(pos),
                        format!("terminal '{a}' outside any bracket"),
                    ))
                }
            },
        }
        i += 1;
    }
    if let Some((_, _, col)) = stack.last() {
        return Err(Error::parse_at(
            lineno,
            *col,
            "unbalanced '(' is never closed",
        ));
    }
    result.ok_or_else(|| Error::parse(lineno, "no tree on line"))
}
