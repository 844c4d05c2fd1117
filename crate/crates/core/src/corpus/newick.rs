//! Newick reading and writing.
//!
//! Missing branch lengths default to 1.0. Labels may be quoted with single
//! quotes (`''` escapes a quote); bracketed comments are skipped. A branch
//! length on the root is accepted and discarded.

use crate::error::{Error, Result};
use crate::tree::{DendroTree, NodeId, TreeBuilder};

pub const DEFAULT_BRANCH_LENGTH: f64 = 1.0;

const SPECIAL: &[char] = &['(', ')', '[', ']', '\'', ':', ';', ','];

pub fn parse_newick(text: &str) -> Result<DendroTree> {
    let mut parser = Parser {
        chars: text.chars().collect(),
        pos: 0,
        builder: TreeBuilder::new(),
    };
    parser.skip_ws();
    let root = parser.subtree()?;
    parser.skip_ws();
    if parser.peek() == Some(':') {
        parser.pos += 1;
        parser.length()?;
        parser.skip_ws();
    }
    match parser.peek() {
        Some(';') => parser.pos += 1,
        Some(')') => return Err(parser.error("unbalanced ')'")),
        Some(c) => return Err(parser.error(format!("unexpected '{c}', expected ';'"))),
        None => return Err(parser.error("missing terminating ';'")),
    }
    parser.skip_ws();
    if parser.pos < parser.chars.len() {
        return Err(parser.error("trailing input after ';'"));
    }
    parser.builder.finish(root)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    builder: TreeBuilder,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let consumed = &self.chars[..self.pos.min(self.chars.len())];
        let line = consumed.iter().filter(|&&c| c == '\n').count() + 1;
        let column = consumed.iter().rev().take_while(|&&c| c != '\n').count() + 1;
        Error::parse_at(line, column, msg)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => self.pos += 1,
                Some('[') => {
                    while let Some(c) = self.peek() {
                        self.pos += 1;
                        if c == ']' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn subtree(&mut self) -> Result<NodeId> {
        self.skip_ws();
        if self.peek() == Some('(') {
            let open = self.pos;
            self.pos += 1;
            let mut children = Vec::new();
            loop {
                let child = self.subtree()?;
                let weight = self.branch_length()?;
                children.push((child, weight));
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => {
                        let at = self.pos;
                        self.pos = open;
                        let err = self.error("unbalanced '(' is never closed");
                        self.pos = at;
                        return Err(err);
                    }
                }
            }
            let label = self.label()?;
            self.builder
                .internal_named((!label.is_empty()).then_some(label), children)
        } else {
            let label = self.label()?;
            if label.is_empty() {
                return Err(match self.peek() {
                    Some(')') => self.error("unbalanced ')'"),
                    _ => self.error("expected a leaf name or '('"),
                });
            }
            Ok(self.builder.leaf(label))
        }
    }

    fn branch_length(&mut self) -> Result<f64> {
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            self.length()
        } else {
            Ok(DEFAULT_BRANCH_LENGTH)
        }
    }

    fn length(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| self.error(format!("invalid branch length '{s}'")))
    }

    fn label(&mut self) -> Result<String> {
        self.skip_ws();
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.peek() {
                    Some('\'') if self.chars.get(self.pos + 1) == Some(&'\'') => {
                        out.push('\'');
                        self.pos += 2;
                    }
                    Some('\'') => {
                        self.pos += 1;
                        return Ok(out);
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                    None => return Err(self.error("unterminated quoted label")),
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || SPECIAL.contains(&c) {
                break;
            }
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }
}

/// Writes a tree as Newick with every non-root branch length. Weights use
/// the shortest decimal form that reads back to the same `f64`.
pub fn emit_newick(tree: &DendroTree) -> String {
    let mut out = String::new();
    write_node(tree, tree.root(), &mut out);
    out.push(';');
    out
}

fn write_node(tree: &DendroTree, id: NodeId, out: &mut String) {
    let node = tree.node(id);
    if !node.is_leaf() {
        out.push('(');
        for (k, &(child, w)) in node.children.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_node(tree, child, out);
            out.push(':');
            out.push_str(&format!("{w:?}"));
        }
        out.push(')');
    }
    if let Some(name) = &node.name {
        out.push_str(&quote_label(name));
    }
}

fn quote_label(name: &str) -> String {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || SPECIAL.contains(&c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}
