//! Self-contained model bundle: the trained ensemble plus the feature index
//! map, normalization stats, and feature configuration it was built with.
//! A model is only applicable together with these, so they travel as one
//! artifact keyed by the grammar id.

use std::path::Path;

use serde_json::json;

use crate::ast::{grammar_id, parse_java};
use crate::bigram::extract_nested_bigrams;
use crate::corpus::{count_lines, split_into_groups, FileEntry, Origin};
use crate::features::{
    assemble_row, winsorize_row, ColumnStats, FeatureConfig, FeatureIndexMap,
};
use crate::models::{predict_class, predict_score, TrainedModel};
use crate::{Error, Result};

pub const BUNDLE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub grammar_id: String,
    pub model: TrainedModel,
    pub index_map: FeatureIndexMap,
    pub stats: Vec<ColumnStats>,
    pub config: FeatureConfig,
}

/// Per-group detection result, one CSV row of the `detect` output.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupScore {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
    pub score: f64,
    pub positive: bool,
    pub dropped_keys: u64,
}

impl ModelBundle {
    pub fn to_json(&self) -> Result<String> {
        let value = json!({
            "schema": BUNDLE_SCHEMA,
            "grammar_id": self.grammar_id,
            "config": serde_json::to_value(&self.config)?,
            "stats": serde_json::to_value(&self.stats)?,
            "index_map": serde_json::from_str::<serde_json::Value>(
                &self.index_map.to_json(self.config.bin_width)?)?,
            "model": self.model.to_value()?,
        });
        let mut out = serde_json::to_string(&value)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let grammar = value["grammar_id"]
            .as_str()
            .ok_or_else(|| Error::InvalidConfig("bundle missing grammar_id".into()))?
            .to_string();
        Ok(ModelBundle {
            grammar_id: grammar,
            config: serde_json::from_value(value["config"].clone())?,
            stats: serde_json::from_value(value["stats"].clone())?,
            index_map: FeatureIndexMap::from_json(&value["index_map"].to_string())?,
            model: TrainedModel::from_value(&value["model"])?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Reject a bundle built against a different grammar than the one linked
    /// into this binary.
    pub fn check_grammar(&self) -> Result<()> {
        let current = grammar_id();
        if self.grammar_id != current {
            return Err(Error::ArtifactMismatch(format!(
                "bundle grammar {} does not match runtime grammar {current}",
                self.grammar_id
            )));
        }
        Ok(())
    }

    /// Score every code group of a raw Java file: parse, split with the
    /// bundle's group size, extract bigrams, assemble and normalize the row,
    /// and run the model. Unknown bigram keys are dropped and counted.
    pub fn score_file(&self, display_path: &str, text: &str) -> Result<Vec<GroupScore>> {
        self.check_grammar()?;
        let entry = FileEntry {
            path: display_path.to_string(),
            author: String::new(),
            origin: Origin::Human,
            llm_model: None,
            formatted: false,
            line_count: count_lines(text),
        };
        let tree = parse_java(text)?;
        let mut scores = Vec::new();
        for group in split_into_groups(&entry, text, self.config.group_size) {
            let counts = extract_nested_bigrams(
                &tree,
                group.start_line..=group.end_line,
                self.config.family.compressed(),
                self.config.depth_cap,
            );
            let mut row = assemble_row(&group, &counts, &self.index_map, &self.config, &self.grammar_id)?;
            winsorize_row(&mut row.values, &self.stats);
            let score = predict_score(&self.model, &row.values)?;
            scores.push(GroupScore {
                path: display_path.to_string(),
                start_line: group.start_line,
                end_line: group.end_line,
                score,
                positive: predict_class(score),
                dropped_keys: row.dropped_keys,
            });
        }
        Ok(scores)
    }
}
