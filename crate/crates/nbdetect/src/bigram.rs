//! Nested-bigram extraction from syntax trees.
//!
//! A nested bigram is a parent→child edge labeled with both node labels and
//! the (capped) nesting depth of the parent. The depth tag is the sub-tree
//! context that distinguishes a nested bigram from a plain bigram; setting the
//! cap to 0 disables it for ablation. Compressed nested bigrams drop attribute
//! text from the labels.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::OnceLock;

use regex::Regex;

use crate::ast::{node_label, SyntaxTree, TreeNode};

/// Default cap on the parent-depth tag.
pub const DEFAULT_DEPTH_CAP: usize = 8;

/// Statement words counted by [`count_statement_tokens`]. Frozen so features
/// stay reproducible.
pub const STATEMENT_WORDS: [&str; 15] = [
    "if", "else", "for", "while", "do", "switch", "case", "break", "continue", "return", "try",
    "catch", "finally", "throw", "new",
];

/// Multiset of nested bigrams, keyed by the serialized form
/// `parent→child@depth`. BTreeMap keeps iteration (and serialization) order
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BigramCounts {
    pub counts: BTreeMap<String, u64>,
}

impl BigramCounts {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Key-wise addition, used to merge per-group counts.
    pub fn merge(&mut self, other: &BigramCounts) {
        for (key, count) in &other.counts {
            *self.counts.entry(key.clone()).or_insert(0) += count;
        }
    }
}

/// Serialized key for one parent→child edge.
pub fn bigram_key(parent_label: &str, child_label: &str, depth_tag: usize) -> String {
    format!("{parent_label}\u{2192}{child_label}@{depth_tag}")
}

/// Extract nested bigrams for edges whose child starts within `bounds`
/// (1-based inclusive lines). Assigning each edge by the child's start line
/// partitions a file's edges across its code groups, so group-level counts
/// sum to the whole-file counts.
pub fn extract_nested_bigrams(
    tree: &SyntaxTree,
    bounds: RangeInclusive<usize>,
    compressed: bool,
    depth_cap: usize,
) -> BigramCounts {
    let mut counts = BigramCounts::default();
    walk(&tree.root, 0, &bounds, compressed, depth_cap, &mut counts);
    counts
}

fn walk(
    parent: &TreeNode,
    parent_depth: usize,
    bounds: &RangeInclusive<usize>,
    compressed: bool,
    depth_cap: usize,
    counts: &mut BigramCounts,
) {
    let parent_label = node_label(parent, compressed);
    let depth_tag = parent_depth.min(depth_cap);
    for child in &parent.children {
        if bounds.contains(&child.start_line) {
            let key = bigram_key(&parent_label, &node_label(child, compressed), depth_tag);
            *counts.counts.entry(key).or_insert(0) += 1;
        }
        walk(child, parent_depth + 1, bounds, compressed, depth_cap, counts);
    }
}

fn statement_word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let alternatives = STATEMENT_WORDS.join("|");
        Regex::new(&format!(r"\b(?:{alternatives})\b")).expect("static regex")
    })
}

/// Whole-word occurrences of the fixed statement-word list in a code group's
/// raw text.
pub fn count_statement_tokens(text: &str) -> u64 {
    statement_word_regex().find_iter(text).count() as u64
}
