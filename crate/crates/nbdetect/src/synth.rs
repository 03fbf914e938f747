//! Deterministic synthetic Java corpus generator.
//!
//! Emits files in two mechanically distinct styles so the pipeline can be
//! exercised end to end without external datasets: style A uses for-loops,
//! camelCase identifiers, and line comments; style B uses while/switch,
//! snake_case identifiers, block comments, and extra blank lines. Files land
//! under `human/gen_a/` and `llm/gen_b/` so the default labeling convention
//! applies directly.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const NOUNS: [&str; 12] = [
    "value", "count", "total", "index", "buffer", "result", "item", "size", "limit", "offset",
    "score", "weight",
];
const VERBS: [&str; 8] = [
    "compute", "update", "merge", "scan", "filter", "reduce", "collect", "resolve",
];

fn camel(verb: &str, noun: &str) -> String {
    let mut chars = noun.chars();
    let first = chars.next().unwrap().to_ascii_uppercase();
    format!("{verb}{first}{}", chars.as_str())
}

fn snake(verb: &str, noun: &str) -> String {
    format!("{verb}_{noun}")
}

/// One generated file: relative corpus path plus content.
#[derive(Debug, Clone)]
pub struct SynthFile {
    pub rel_path: String,
    pub content: String,
}

pub fn generate_file_a(index: usize, rng: &mut ChaCha8Rng) -> SynthFile {
    let mut out = String::new();
    let class = format!("DataHelper{index}");
    let _ = writeln!(out, "public class {class} {{");
    let _ = writeln!(out, "    private int totalCount;");
    let methods = rng.gen_range(3..6);
    for m in 0..methods {
        let verb = VERBS[rng.gen_range(0..VERBS.len())];
        let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
        let name = format!("{}{m}", camel(verb, noun));
        let bound = rng.gen_range(3..40);
        let step = rng.gen_range(1..5);
        let _ = writeln!(out);
        let _ = writeln!(out, "    public int {name}(int inputSize) {{");
        let _ = writeln!(out, "        int resultValue = 0;");
        let _ = writeln!(
            out,
            "        for (int indexVar = 0; indexVar < inputSize + {bound}; indexVar++) {{"
        );
        let _ = writeln!(out, "            if (indexVar % 2 == 0) {{");
        let _ = writeln!(out, "                resultValue += indexVar * {step};");
        let _ = writeln!(out, "            }} else {{");
        let _ = writeln!(out, "                resultValue -= {step};");
        let _ = writeln!(out, "            }}");
        let _ = writeln!(out, "        }}");
        let _ = writeln!(out, "        // running tally for {noun}");
        let _ = writeln!(out, "        totalCount += resultValue;");
        let _ = writeln!(out, "        return resultValue;");
        let _ = writeln!(out, "    }}");
    }
    let _ = writeln!(out, "}}");
    SynthFile {
        rel_path: format!("human/gen_a/DataHelper{index}.java"),
        content: out,
    }
}

pub fn generate_file_b(index: usize, rng: &mut ChaCha8Rng) -> SynthFile {
    let mut out = String::new();
    let class = format!("data_store_{index}");
    let _ = writeln!(out, "public class {class} {{");
    let _ = writeln!(out);
    let _ = writeln!(out, "  private int item_total;");
    let methods = rng.gen_range(3..6);
    for m in 0..methods {
        let verb = VERBS[rng.gen_range(0..VERBS.len())];
        let noun = NOUNS[rng.gen_range(0..NOUNS.len())];
        let name = format!("{}_{m}", snake(verb, noun));
        let modulo = rng.gen_range(2..6);
        let delta = rng.gen_range(1..7);
        let _ = writeln!(out);
        let _ = writeln!(out, "  public int {name}(int input_size) {{");
        let _ = writeln!(out, "    /* accumulate the {noun} */");
        let _ = writeln!(out, "    int result_value = 0;");
        let _ = writeln!(out);
        let _ = writeln!(out, "    int loop_index = 0;");
        let _ = writeln!(out, "    while (loop_index < input_size) {{");
        let _ = writeln!(out, "      switch (loop_index % {modulo}) {{");
        let _ = writeln!(out, "        case 0:");
        let _ = writeln!(out, "          result_value += loop_index;");
        let _ = writeln!(out, "          break;");
        let _ = writeln!(out, "        default:");
        let _ = writeln!(out, "          result_value -= {delta};");
        let _ = writeln!(out, "          break;");
        let _ = writeln!(out, "      }}");
        let _ = writeln!(out, "      loop_index++;");
        let _ = writeln!(out, "    }}");
        let _ = writeln!(out);
        let _ = writeln!(out, "    item_total += result_value;");
        let _ = writeln!(out, "    return result_value;");
        let _ = writeln!(out, "  }}");
    }
    let _ = writeln!(out, "}}");
    SynthFile {
        rel_path: format!("llm/gen_b/data_store_{index}.java"),
        content: out,
    }
}

/// Generate `files` Java files (half per style), deterministically from
/// `seed`.
pub fn generate_files(files: usize, seed: u64) -> Vec<SynthFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(files);
    let half = files / 2;
    for i in 0..half {
        out.push(generate_file_a(i, &mut rng));
    }
    for i in 0..files - half {
        out.push(generate_file_b(i, &mut rng));
    }
    out
}

/// Write a generated corpus under `root`.
pub fn generate_corpus(root: &Path, files: usize, seed: u64) -> Result<()> {
    for file in generate_files(files, seed) {
        let path = root.join(&file.rel_path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, &file.content).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_java;

    #[test]
    fn generated_files_parse_cleanly() {
        for file in generate_files(20, 42) {
            let tree = parse_java(&file.content).unwrap();
            assert!(!tree.has_errors(), "parse errors in {}", file.rel_path);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_files(10, 7);
        let b = generate_files(10, 7);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.rel_path, y.rel_path);
            assert_eq!(x.content, y.content);
        }
    }

    #[test]
    fn styles_split_between_label_dirs() {
        let files = generate_files(50, 1);
        let a = files.iter().filter(|f| f.rel_path.starts_with("human/gen_a/")).count();
        let b = files.iter().filter(|f| f.rel_path.starts_with("llm/gen_b/")).count();
        assert_eq!(a, 25);
        assert_eq!(b, 25);
    }
}
