//! Detection of LLM-rewritten fragments in Java source code.
//!
//! Files are split into fixed-size line ranges ("code groups"), each group is
//! described by lexical features plus discretized nested-bigram frequencies
//! extracted from the syntax tree, and groups are classified with
//! tree-ensemble models.

pub mod ast;
pub mod bigram;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod rewrite;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
