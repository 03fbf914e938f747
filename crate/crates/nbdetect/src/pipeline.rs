//! Two-pass feature-matrix construction from an ingested corpus: extract
//! per-group bigram counts for every manifest file, build the dictionary in
//! manifest order, then assemble the dataset rows against it.

use std::path::Path;

use rayon::prelude::*;

use crate::ast::{grammar_id, parse_java};
use crate::bigram::{extract_nested_bigrams, BigramCounts};
use crate::corpus::{split_into_groups, CodeGroup, CorpusManifest, FileEntry, GroupLabelRule};
use crate::features::{
    assemble_row, build_feature_index, row_width, FeatureConfig, FeatureIndexMap, FeatureMatrix,
    RowMeta,
};
use crate::{Error, Result};

#[derive(Debug)]
pub struct BuildOutcome {
    /// Unnormalized matrix; winsorization is fitted at train time.
    pub matrix: FeatureMatrix,
    pub index_map: FeatureIndexMap,
    pub grammar_id: String,
    /// Files dropped because they failed to parse.
    pub skipped_files: Vec<String>,
    /// Non-fatal notes (unreadable files, recovered parse errors).
    pub warnings: Vec<String>,
}

struct FileExtraction {
    label: u8,
    groups: Vec<(CodeGroup, BigramCounts)>,
}

fn extract_file(
    root: &Path,
    entry: &FileEntry,
    config: &FeatureConfig,
    label_rule: &GroupLabelRule,
    warnings: &mut Vec<String>,
) -> Option<FileExtraction> {
    let path = root.join(&entry.path);
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(err) => {
            warnings.push(format!("{}: unreadable ({err})", entry.path));
            return None;
        }
    };
    let tree = match parse_java(&text) {
        Ok(tree) => tree,
        Err(err) => {
            warnings.push(format!("{}: parse failure ({err})", entry.path));
            return None;
        }
    };
    if tree.has_errors() {
        warnings.push(format!("{}: parse errors recovered", entry.path));
    }
    let label = u8::from(label_rule.label(entry));
    let groups = split_into_groups(entry, &text, config.group_size)
        .into_iter()
        .map(|group| {
            let counts = extract_nested_bigrams(
                &tree,
                group.start_line..=group.end_line,
                config.family.compressed(),
                config.depth_cap,
            );
            (group, counts)
        })
        .collect();
    Some(FileExtraction { label, groups })
}

/// Build the feature matrix for a whole corpus. Per-file extraction runs in
/// parallel but results are combined in manifest order, so the dictionary and
/// the matrix are deterministic. Unreadable or unparseable files are skipped
/// with a warning; an empty result is an error.
pub fn build_matrix(
    root: &Path,
    manifest: &CorpusManifest,
    config: &FeatureConfig,
    label_rule: &GroupLabelRule,
) -> Result<BuildOutcome> {
    manifest.validate()?;
    let gid = grammar_id();
    let per_file: Vec<(Option<FileExtraction>, Vec<String>)> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let mut warnings = Vec::new();
            let extraction = extract_file(root, entry, config, label_rule, &mut warnings);
            (extraction, warnings)
        })
        .collect();

    let mut warnings = Vec::new();
    let mut skipped_files = Vec::new();
    let mut files = Vec::new();
    for (entry, (extraction, file_warnings)) in manifest.entries.iter().zip(per_file) {
        if extraction.is_none() {
            skipped_files.push(entry.path.clone());
        }
        warnings.extend(file_warnings);
        files.extend(extraction);
    }

    let index_map = build_feature_index(
        files.iter().flat_map(|f| f.groups.iter().map(|(_, c)| c)),
        config,
        &gid,
    );
    let width = row_width(index_map.vocab_size(), config);
    let mut matrix = FeatureMatrix::new(width);
    for file in &files {
        for (group, counts) in &file.groups {
            let row = assemble_row(group, counts, &index_map, config, &gid)?;
            matrix.push(
                RowMeta {
                    path: group.path.clone(),
                    start_line: group.start_line,
                    end_line: group.end_line,
                },
                file.label,
                row.values,
            );
        }
    }
    if matrix.rows.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    Ok(BuildOutcome {
        matrix,
        index_map,
        grammar_id: gid,
        skipped_files,
        warnings,
    })
}
