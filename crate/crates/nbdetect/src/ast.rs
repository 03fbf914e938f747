//! Java parsing into a labeled ordered tree.
//!
//! The tree keeps grammar-rule kinds, 1-based line spans, and attribute text
//! for identifier/literal/operator nodes. Parsing is error-tolerant: malformed
//! input produces `ERROR` nodes inside the tree instead of failing, since
//! LLM-rewritten or concatenated files are often not valid Java.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser};

use crate::{Error, Result};

/// Attribute text longer than this is truncated; keeps labels bounded when a
/// literal spans many lines.
const MAX_ATTRIBUTE_LEN: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub kind: String,
    pub attribute: Option<String>,
    pub start_line: usize,
    pub end_line: usize,
    pub children: Vec<TreeNode>,
}

#[derive(Debug, Clone)]
pub struct SyntaxTree {
    pub root: TreeNode,
}

/// Identifies the grammar whose rule names define the `kind` vocabulary.
/// Feature index maps and model bundles are only valid together with the
/// grammar they were built against.
pub fn grammar_id() -> String {
    let language = tree_sitter::Language::new(tree_sitter_java::LANGUAGE);
    format!(
        "tree-sitter-java/abi{}/kinds{}",
        language.abi_version(),
        language.node_kind_count()
    )
}

/// Parse Java source into a [`SyntaxTree`]. Parse errors become `ERROR` nodes
/// in the tree; only a wholesale parser failure is an error.
pub fn parse_java(text: &str) -> Result<SyntaxTree> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .map_err(|e| Error::ParseFailure(format!("grammar load: {e}")))?;
    let tree = parser
        .parse(text, None)
        .ok_or_else(|| Error::ParseFailure("parser returned no tree".to_string()))?;
    let root = convert(tree.root_node(), text.as_bytes());
    Ok(SyntaxTree { root })
}

fn convert(node: Node<'_>, source: &[u8]) -> TreeNode {
    let mut children = Vec::new();
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        children.push(convert(child, source));
    }
    let start = node.start_position();
    let end = node.end_position();
    // An end position at column 0 sits just past a trailing newline; the node
    // really ends on the previous line.
    let end_line = if end.column == 0 && end.row > start.row {
        end.row
    } else {
        end.row + 1
    };
    TreeNode {
        kind: node.kind().to_string(),
        attribute: capture_attribute(node, source),
        start_line: start.row + 1,
        end_line,
        children,
    }
}

/// Attributes are recorded for identifier, type-identifier, and literal token
/// nodes (their source text) and for expression nodes carrying an `operator`
/// field (the operator lexeme).
fn capture_attribute(node: Node<'_>, source: &[u8]) -> Option<String> {
    let kind = node.kind();
    let text = if kind == "identifier" || kind == "type_identifier" || kind.ends_with("literal") {
        node.utf8_text(source).ok().map(str::to_string)
    } else {
        node.child_by_field_name("operator")
            .and_then(|op| op.utf8_text(source).ok())
            .map(str::to_string)
    }?;
    let mut text = text;
    if text.len() > MAX_ATTRIBUTE_LEN {
        let cut = (0..=MAX_ATTRIBUTE_LEN)
            .rev()
            .find(|i| text.is_char_boundary(*i))
            .unwrap_or(0);
        text.truncate(cut);
    }
    Some(text)
}

/// Label for a node: the grammar kind, with the attribute appended in
/// guillemets unless `compressed`.
pub fn node_label(node: &TreeNode, compressed: bool) -> String {
    match (&node.attribute, compressed) {
        (Some(attr), false) => format!("{}\u{ab}{}\u{bb}", node.kind, attr),
        _ => node.kind.clone(),
    }
}

impl SyntaxTree {
    /// Indented one-node-per-line dump, used by the debug CLI and golden
    /// tests: `kind [start-end] «attribute»`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        dump_node(&self.root, 0, &mut out);
        out
    }

    /// True if the tree contains a parse-error node.
    pub fn has_errors(&self) -> bool {
        fn walk(node: &TreeNode) -> bool {
            node.kind == "ERROR" || node.children.iter().any(walk)
        }
        walk(&self.root)
    }
}

fn dump_node(node: &TreeNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    let _ = write!(out, "{} [{}-{}]", node.kind, node.start_line, node.end_line);
    if let Some(attr) = &node.attribute {
        let _ = write!(out, " \u{ab}{attr}\u{bb}");
    }
    out.push('\n');
    for child in &node.children {
        dump_node(child, depth + 1, out);
    }
}
