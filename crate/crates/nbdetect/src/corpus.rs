//! Corpus ingestion, the labeled manifest, and code-group splitting.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::{Error, Result};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Human,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the corpus root, '/'-separated.
    pub path: String,
    pub author: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_model: Option<String>,
    pub formatted: bool,
    pub line_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema: u32,
    pub entries: Vec<FileEntry>,
}

impl CorpusManifest {
    pub fn new(mut entries: Vec<FileEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = CorpusManifest {
            schema: MANIFEST_SCHEMA,
            entries,
        };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !seen.insert(&entry.path) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate manifest path: {}",
                    entry.path
                )));
            }
            if entry.origin == Origin::Llm && entry.llm_model.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "llm-origin entry without llm_model: {}",
                    entry.path
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: CorpusManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// How the author label of a matched file is derived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorSource {
    Fixed(String),
    /// 0-based index into the '/'-separated relative path components.
    PathComponent(usize),
}

/// One labeling rule: files whose relative path starts with `prefix` get the
/// rule's labels. First matching rule wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRule {
    pub prefix: String,
    pub origin: Origin,
    pub author: AuthorSource,
    #[serde(default)]
    pub llm_model: Option<String>,
    #[serde(default)]
    pub formatted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRules {
    pub rules: Vec<LabelRule>,
}

impl LabelRules {
    /// Convention for corpora laid out as `human/<author>/...` and
    /// `llm/<model>/...`.
    pub fn default_convention() -> Self {
        LabelRules {
            rules: vec![
                LabelRule {
                    prefix: "human/".to_string(),
                    origin: Origin::Human,
                    author: AuthorSource::PathComponent(1),
                    llm_model: None,
                    formatted: false,
                },
                LabelRule {
                    prefix: "llm/".to_string(),
                    origin: Origin::Llm,
                    author: AuthorSource::PathComponent(1),
                    llm_model: None,
                    formatted: false,
                },
            ],
        }
    }

    fn apply(&self, rel_path: &str) -> Option<(String, Origin, Option<String>, bool)> {
        let rule = self.rules.iter().find(|r| rel_path.starts_with(&r.prefix))?;
        let components: Vec<&str> = rel_path.split('/').collect();
        let author = match &rule.author {
            AuthorSource::Fixed(name) => name.clone(),
            AuthorSource::PathComponent(i) => components.get(*i)?.to_string(),
        };
        let llm_model = match (rule.origin, &rule.llm_model) {
            (Origin::Llm, Some(model)) => Some(model.clone()),
            // An llm rule without an explicit model name records the author
            // component as the model (llm/<model>/ layout).
            (Origin::Llm, None) => Some(author.clone()),
            (Origin::Human, _) => None,
        };
        Some((author, rule.origin, llm_model, rule.formatted))
    }
}

/// Physical newline-delimited line count; a trailing newline does not open a
/// final empty line.
pub fn count_lines(text: &str) -> usize {
    text.split_inclusive('\n').count()
}

/// Walk `root` for `.java` files and label them with `rules`. Unreadable or
/// unmatched files are skipped with a recorded warning. Deterministic: the
/// manifest is sorted by relative path.
pub fn ingest_corpus(root: &Path, rules: &LabelRules) -> Result<(CorpusManifest, Vec<String>)> {
    if !root.is_dir() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut paths: Vec<_> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .filter(|e| e.path().extension().is_some_and(|ext| ext == "java"))
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    for path in paths {
        let rel = path
            .strip_prefix(root)
            .expect("walkdir yields paths under root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(err) => {
                warnings.push(format!("skipped unreadable file {rel}: {err}"));
                continue;
            }
        };
        let Some((author, origin, llm_model, formatted)) = rules.apply(&rel) else {
            warnings.push(format!("skipped unlabeled file {rel}: no rule matches"));
            continue;
        };
        entries.push(FileEntry {
            path: rel,
            author,
            origin,
            llm_model,
            formatted,
            line_count: count_lines(&text),
        });
    }
    if entries.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    Ok((CorpusManifest::new(entries)?, warnings))
}

/// A contiguous line-range slice of one file, the unit of classification.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeGroup {
    pub path: String,
    /// 1-based inclusive.
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    /// Number of characters in `text` (symbol c of the bin-value formula).
    pub char_count: usize,
    pub label: Option<bool>,
}

/// Split a file's text into consecutive disjoint groups of `group_size`
/// lines; a trailing remainder of at least one line forms a final shorter
/// group. Each group's text keeps the trailing newline of every line except
/// possibly the file's last, so group char counts sum to the file's length.
pub fn split_into_groups(entry: &FileEntry, text: &str, group_size: usize) -> Vec<CodeGroup> {
    assert!(group_size >= 1, "group_size must be at least 1");
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut groups = Vec::new();
    let mut start = 0;
    while start < lines.len() {
        let end = (start + group_size).min(lines.len());
        let group_text: String = lines[start..end].concat();
        groups.push(CodeGroup {
            path: entry.path.clone(),
            start_line: start + 1,
            end_line: end,
            char_count: group_text.chars().count(),
            text: group_text,
            label: None,
        });
        start = end;
    }
    groups
}

/// Binary labeling of groups: by origin (LLM positive) or by membership of
/// the file's author in a positive set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabelRule {
    OriginBased,
    AuthorSet(BTreeSet<String>),
}

impl GroupLabelRule {
    pub fn label(&self, entry: &FileEntry) -> bool {
        match self {
            GroupLabelRule::OriginBased => entry.origin == Origin::Llm,
            GroupLabelRule::AuthorSet(set) => set.contains(&entry.author),
        }
    }
}
