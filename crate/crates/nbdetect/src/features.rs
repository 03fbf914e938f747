//! Feature dictionary, per-group feature vectors, equal-width discretization,
//! and winsorized normalization.
//!
//! Columns 0-9 of every row are reserved for the lexical (non-syntactic)
//! features; syntactic nested-bigram frequencies start at column 10. With bin
//! width 1 the layout is the plain NB-F/CNB-F frequency vector; larger widths
//! fold runs of dictionary indices into single bins whose value is the
//! per-character-normalized frequency sum.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bigram::{count_statement_tokens, BigramCounts, DEFAULT_DEPTH_CAP};
use crate::corpus::CodeGroup;
use crate::{Error, Result};

/// Columns reserved for lexical features at the front of every row.
pub const RESERVED_SLOTS: usize = 10;

pub const INDEX_MAP_SCHEMA: u32 = 1;
pub const MATRIX_SIDECAR_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureFamily {
    #[serde(rename = "nb-f")]
    NbF,
    #[serde(rename = "cnb-f")]
    CnbF,
    #[serde(rename = "ewd-nb-f")]
    EwdNbF,
}

impl FeatureFamily {
    /// CNB strips attribute text from node labels.
    pub fn compressed(self) -> bool {
        matches!(self, FeatureFamily::CnbF)
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::NbF => "nb-f",
            FeatureFamily::CnbF => "cnb-f",
            FeatureFamily::EwdNbF => "ewd-nb-f",
        }
    }
}

impl std::str::FromStr for FeatureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb-f" => Ok(FeatureFamily::NbF),
            "cnb-f" => Ok(FeatureFamily::CnbF),
            "ewd-nb-f" => Ok(FeatureFamily::EwdNbF),
            other => Err(Error::InvalidConfig(format!(
                "unknown feature family {other:?} (expected nb-f, cnb-f, or ewd-nb-f)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub family: FeatureFamily,
    pub group_size: usize,
    /// Bin width b; 1 disables discretization.
    pub bin_width: usize,
    pub reserved_slots: usize,
    /// Binning start within the dictionary.
    pub s1: usize,
    /// Binning start within the assembled row.
    pub s2: usize,
    pub depth_cap: usize,
}

impl FeatureConfig {
    pub fn new(family: FeatureFamily, group_size: usize, bin_width: usize) -> Result<Self> {
        if bin_width == 0 {
            return Err(Error::InvalidConfig("bin_width must be >= 1".into()));
        }
        if group_size == 0 {
            return Err(Error::InvalidConfig("group_size must be >= 1".into()));
        }
        let bin_width = match family {
            FeatureFamily::NbF | FeatureFamily::CnbF => 1,
            FeatureFamily::EwdNbF => bin_width,
        };
        Ok(FeatureConfig {
            family,
            group_size,
            bin_width,
            reserved_slots: RESERVED_SLOTS,
            s1: RESERVED_SLOTS,
            s2: RESERVED_SLOTS,
            depth_cap: DEFAULT_DEPTH_CAP,
        })
    }
}

/// Global map from serialized bigram keys to dictionary indices, assigned
/// densely from 10 in first-encounter order over a deterministic corpus
/// traversal. Grammar-specific: only valid together with the grammar (and
/// models) it was built against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureIndexMap {
    pub family: FeatureFamily,
    pub grammar_id: String,
    entries: HashMap<String, usize>,
    next_index: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexMapFile {
    schema: u32,
    family: FeatureFamily,
    grammar_id: String,
    s1: usize,
    bin_width: usize,
    entries: Vec<IndexMapEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexMapEntry {
    key: String,
    index: usize,
}

impl FeatureIndexMap {
    pub fn new(family: FeatureFamily, grammar_id: impl Into<String>) -> Self {
        FeatureIndexMap {
            family,
            grammar_id: grammar_id.into(),
            entries: HashMap::new(),
            next_index: RESERVED_SLOTS,
        }
    }

    pub fn insert_or_get(&mut self, key: &str) -> usize {
        if let Some(&index) = self.entries.get(key) {
            return index;
        }
        let index = self.next_index;
        self.entries.insert(key.to_string(), index);
        self.next_index += 1;
        index
    }

    pub fn get(&self, key: &str) -> Option<usize> {
        self.entries.get(key).copied()
    }

    pub fn next_index(&self) -> usize {
        self.next_index
    }

    /// Number of distinct syntactic features (V).
    pub fn vocab_size(&self) -> usize {
        self.next_index - RESERVED_SLOTS
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn to_file(&self, bin_width: usize) -> IndexMapFile {
        let mut entries: Vec<IndexMapEntry> = self
            .entries
            .iter()
            .map(|(key, &index)| IndexMapEntry {
                key: key.clone(),
                index,
            })
            .collect();
        entries.sort_by_key(|e| e.index);
        IndexMapFile {
            schema: INDEX_MAP_SCHEMA,
            family: self.family,
            grammar_id: self.grammar_id.clone(),
            s1: RESERVED_SLOTS,
            bin_width,
            entries,
        }
    }

    pub fn to_json(&self, bin_width: usize) -> Result<String> {
        let mut out = serde_json::to_string_pretty(&self.to_file(bin_width))?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: IndexMapFile = serde_json::from_str(text)?;
        let mut map = FeatureIndexMap::new(file.family, file.grammar_id);
        for entry in file.entries {
            map.entries.insert(entry.key, entry.index);
            map.next_index = map.next_index.max(entry.index + 1);
        }
        Ok(map)
    }

    pub fn save(&self, path: &Path, bin_width: usize) -> Result<()> {
        std::fs::write(path, self.to_json(bin_width)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check_compatible(&self, config: &FeatureConfig, grammar_id: &str) -> Result<()> {
        if self.family != config.family || self.grammar_id != grammar_id {
            return Err(Error::IndexMapMismatch {
                map_family: self.family.name().to_string(),
                map_grammar: self.grammar_id.clone(),
                family: config.family.name().to_string(),
                grammar: grammar_id.to_string(),
            });
        }
        Ok(())
    }
}

/// Dictionary creation: one deterministic pass over (group, counts) pairs,
/// assigning the next free index to every unseen key.
pub fn build_feature_index<'a>(
    corpus: impl IntoIterator<Item = &'a BigramCounts>,
    config: &FeatureConfig,
    grammar_id: &str,
) -> FeatureIndexMap {
    let mut map = FeatureIndexMap::new(config.family, grammar_id);
    for counts in corpus {
        for key in counts.counts.keys() {
            map.insert_or_get(key);
        }
    }
    map
}

/// Dataset column index for dictionary index `i`: floor((i - s1) / b) + s2.
pub fn bin_index(i: usize, config: &FeatureConfig) -> Result<usize> {
    if i < config.s1 {
        return Err(Error::IndexBelowBinningStart {
            index: i,
            start: config.s1,
        });
    }
    Ok((i - config.s1) / config.bin_width + config.s2)
}

/// Width of an assembled row for vocabulary size `vocab`.
pub fn row_width(vocab: usize, config: &FeatureConfig) -> usize {
    config.reserved_slots + vocab.div_ceil(config.bin_width)
}

/// The 10 reserved lexical slots, each normalized by the group's character
/// count c: mean line length, mean comment length, spaces, statement words,
/// tabs, underscores, empty lines, then three zero-padded slots.
pub fn lexical_features(group: &CodeGroup) -> [f64; RESERVED_SLOTS] {
    let mut slots = [0.0; RESERVED_SLOTS];
    let c = group.char_count;
    if c == 0 {
        return slots;
    }
    let c = c as f64;
    let lines: Vec<&str> = group
        .text
        .split_inclusive('\n')
        .map(|line| line.trim_end_matches('\n').trim_end_matches('\r'))
        .collect();
    let mean_line_len = if lines.is_empty() {
        0.0
    } else {
        lines.iter().map(|l| l.chars().count()).sum::<usize>() as f64 / lines.len() as f64
    };
    let comment_lengths = comment_body_lengths(&group.text);
    let mean_comment_len = if comment_lengths.is_empty() {
        0.0
    } else {
        comment_lengths.iter().sum::<usize>() as f64 / comment_lengths.len() as f64
    };
    let mut spaces = 0u64;
    let mut tabs = 0u64;
    let mut underscores = 0u64;
    for ch in group.text.chars() {
        match ch {
            ' ' => spaces += 1,
            '\t' => tabs += 1,
            '_' => underscores += 1,
            _ => {}
        }
    }
    let empty_lines = lines.iter().filter(|l| l.is_empty()).count() as f64;
    slots[0] = mean_line_len / c;
    slots[1] = mean_comment_len / c;
    slots[2] = spaces as f64 / c;
    slots[3] = count_statement_tokens(&group.text) as f64 / c;
    slots[4] = tabs as f64 / c;
    slots[5] = underscores as f64 / c;
    slots[6] = empty_lines / c;
    slots
}

/// Character lengths of comment bodies (`//` to end of line, `/* ... */`
/// between delimiters), excluding the delimiters themselves. The scanner is
/// lexical and does not skip string literals.
fn comment_body_lengths(text: &str) -> Vec<usize> {
    let chars: Vec<char> = text.chars().collect();
    let mut lengths = Vec::new();
    let mut i = 0;
    while i + 1 < chars.len() {
        if chars[i] == '/' && chars[i + 1] == '/' {
            let start = i + 2;
            let mut end = start;
            while end < chars.len() && chars[end] != '\n' {
                end += 1;
            }
            lengths.push(end - start);
            i = end + 1;
        } else if chars[i] == '/' && chars[i + 1] == '*' {
            let start = i + 2;
            let mut end = start;
            while end + 1 < chars.len() && !(chars[end] == '*' && chars[end + 1] == '/') {
                end += 1;
            }
            let closed = end + 1 < chars.len();
            lengths.push(end.saturating_sub(start));
            i = if closed { end + 2 } else { chars.len() };
        } else {
            i += 1;
        }
    }
    lengths
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledRow {
    pub values: Vec<f64>,
    /// Keys present in the counts but absent from the index map (possible at
    /// inference time); dropped, not an error.
    pub dropped_keys: u64,
}

/// Dataset creation for one group: lexical slots in columns 0-9, then each
/// bigram frequency added to its bin, the whole bin divided by c. Frequencies
/// are accumulated as integers per bin before the single division.
pub fn assemble_row(
    group: &CodeGroup,
    counts: &BigramCounts,
    index_map: &FeatureIndexMap,
    config: &FeatureConfig,
    grammar_id: &str,
) -> Result<AssembledRow> {
    index_map.check_compatible(config, grammar_id)?;
    let width = row_width(index_map.vocab_size(), config);
    let mut values = vec![0.0; width];
    let lexical = lexical_features(group);
    values[..RESERVED_SLOTS].copy_from_slice(&lexical);
    let mut bins = vec![0u64; width - config.reserved_slots];
    let mut dropped_keys = 0;
    for (key, &frequency) in &counts.counts {
        match index_map.get(key) {
            Some(index) => {
                let column = bin_index(index, config)?;
                bins[column - config.s2] += frequency;
            }
            None => dropped_keys += 1,
        }
    }
    if group.char_count > 0 {
        let c = group.char_count as f64;
        for (offset, &sum) in bins.iter().enumerate() {
            values[config.reserved_slots + offset] = sum as f64 / c;
        }
    }
    Ok(AssembledRow {
        values,
        dropped_keys,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub p5: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMeta {
    pub path: String,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub meta: RowMeta,
    pub label: u8,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub column_count: usize,
    pub rows: Vec<FeatureRow>,
    /// Present after winsorization; fitted on the training rows only.
    pub stats: Option<Vec<ColumnStats>>,
}

impl FeatureMatrix {
    pub fn new(column_count: usize) -> Self {
        FeatureMatrix {
            column_count,
            rows: Vec::new(),
            stats: None,
        }
    }

    pub fn push(&mut self, meta: RowMeta, label: u8, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.column_count);
        self.rows.push(FeatureRow {
            meta,
            label,
            values,
        });
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

/// Percentile by linear interpolation between order statistics
/// (position = p/100 * (n-1)) on an already sorted slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let position = p / 100.0 * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    if lower == upper {
        sorted[lower]
    } else {
        let weight = position - lower as f64;
        sorted[lower] * (1.0 - weight) + sorted[upper] * weight
    }
}

/// Fit per-column 5th/95th percentiles on `fit_rows` (training rows only).
pub fn fit_winsorize_stats(matrix: &FeatureMatrix, fit_rows: &[usize]) -> Result<Vec<ColumnStats>> {
    if fit_rows.is_empty() {
        return Err(Error::InvalidConfig(
            "winsorization requires a non-empty fit set".into(),
        ));
    }
    let mut stats = Vec::with_capacity(matrix.column_count);
    let mut column = Vec::with_capacity(fit_rows.len());
    for col in 0..matrix.column_count {
        column.clear();
        column.extend(fit_rows.iter().map(|&r| matrix.rows[r].values[col]));
        column.sort_by(|a, b| a.total_cmp(b));
        stats.push(ColumnStats {
            p5: percentile(&column, 5.0),
            p95: percentile(&column, 95.0),
        });
    }
    Ok(stats)
}

/// x <= p5 -> 0; x >= p95 -> 1; else (x - p5) / (p95 - p5). Constant columns
/// (p95 == p5) map to 0 everywhere.
pub fn winsorize_value(x: f64, stats: &ColumnStats) -> f64 {
    if stats.p95 <= stats.p5 {
        return 0.0;
    }
    if x <= stats.p5 {
        0.0
    } else if x >= stats.p95 {
        1.0
    } else {
        (x - stats.p5) / (stats.p95 - stats.p5)
    }
}

pub fn winsorize_row(values: &mut [f64], stats: &[ColumnStats]) {
    for (value, column_stats) in values.iter_mut().zip(stats) {
        *value = winsorize_value(*value, column_stats);
    }
}

/// Winsorize every row in place using stats fitted on `fit_rows`.
pub fn winsorize(matrix: &mut FeatureMatrix, fit_rows: &[usize]) -> Result<()> {
    let stats = fit_winsorize_stats(matrix, fit_rows)?;
    for row in &mut matrix.rows {
        winsorize_row(&mut row.values, &stats);
    }
    matrix.stats = Some(stats);
    Ok(())
}

/// 17-significant-digit float formatting used in the CSV export.
fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV layout: header `path,start_line,end_line,col_0..col_{n-1},label`.
pub fn write_matrix_csv(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(Error::from)?;
    let mut header = vec![
        "path".to_string(),
        "start_line".to_string(),
        "end_line".to_string(),
    ];
    header.extend((0..matrix.column_count).map(|i| format!("col_{i}")));
    header.push("label".to_string());
    writer.write_record(&header)?;
    for row in &matrix.rows {
        let mut record = vec![
            row.meta.path.clone(),
            row.meta.start_line.to_string(),
            row.meta.end_line.to_string(),
        ];
        record.extend(row.values.iter().map(|&v| format_value(v)));
        record.push(row.label.to_string());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "matrix CSV {} has too few columns",
            path.display()
        )));
    }
    let column_count = headers.len() - 4;
    let mut matrix = FeatureMatrix::new(column_count);
    for record in reader.records() {
        let record = record?;
        let parse_err = |field: &str| {
            Error::InvalidConfig(format!("bad field {field:?} in {}", path.display()))
        };
        let meta = RowMeta {
            path: record[0].to_string(),
            start_line: record[1].parse().map_err(|_| parse_err(&record[1]))?,
            end_line: record[2].parse().map_err(|_| parse_err(&record[2]))?,
        };
        let values: Vec<f64> = (3..3 + column_count)
            .map(|i| record[i].parse().map_err(|_| parse_err(&record[i])))
            .collect::<Result<_>>()?;
        let label: u8 = record[3 + column_count]
            .parse()
            .map_err(|_| parse_err(&record[3 + column_count]))?;
        matrix.push(meta, label, values);
    }
    Ok(matrix)
}

/// JSON sidecar persisted next to the CSV: normalization stats plus the full
/// feature configuration, round-tripping bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub schema: u32,
    pub config: FeatureConfig,
    pub grammar_id: String,
    pub stats: Option<Vec<ColumnStats>>,
}

impl MatrixSidecar {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
