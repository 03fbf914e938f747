//! Batch command-line surface for the detection pipeline.
//!
//! Settings resolve in three layers: built-in defaults, then an optional
//! TOML-or-JSON config file, then command-line flags. Exit codes: 0 success,
//! 2 input/usage error, 3 artifact mismatch.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use nbdetect::corpus::{
    ingest_corpus, CorpusManifest, GroupLabelRule, LabelRules,
};
use nbdetect::eval::{run_sweep, SplitGranularity, SweepCell};
use nbdetect::features::{
    read_matrix_csv, write_matrix_csv, FeatureConfig, FeatureFamily, FeatureIndexMap,
    FeatureMatrix, MatrixSidecar, MATRIX_SIDECAR_SCHEMA,
};
use nbdetect::models::{bundle::ModelBundle, train, ModelKind, ModelSpec, DEFAULT_SEED};
use nbdetect::pipeline::build_matrix;
use nbdetect::report::{
    metrics_csv, metrics_text, report_json, significance, significance_text, stability_csv,
    stability_text,
};
use nbdetect::rewrite::{rewrite_file, RewriteJob, API_KEY_ENV, GPT_DATASET_PROMPT};
use nbdetect::synth::generate_corpus;
use nbdetect::Error;

const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_ARTIFACT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(name = "nbdetect", version, about = "Detect LLM-rewritten fragments in Java source")]
struct Cli {
    /// TOML or JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a corpus tree into a labeled manifest.
    Ingest(IngestArgs),
    /// Rewrite a Java file through an LLM endpoint.
    Rewrite(RewriteArgs),
    /// Build the feature matrix and index map from a manifest (two passes).
    Build(BuildArgs),
    /// Train a model on a built matrix and save a self-contained bundle.
    Train(TrainArgs),
    /// Evaluate model kinds on a built matrix over repeated seeds.
    Eval(EvalArgs),
    /// Sweep feature families x group sizes x model kinds from a manifest.
    Sweep(SweepArgs),
    /// Score raw Java files with a trained bundle, one row per code group.
    Detect(DetectArgs),
    /// Render a saved evaluation report as text, CSV, or JSON tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Corpus root directory.
    #[arg(long)]
    root: Option<PathBuf>,
    /// Manifest output path.
    #[arg(long, default_value = "manifest.json")]
    out: PathBuf,
    /// Generate this many synthetic two-style Java files into the root first.
    #[arg(long)]
    synth: Option<usize>,
    /// Seed for the synthetic generator.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    synth_seed: u64,
}

#[derive(Args)]
struct RewriteArgs {
    /// Source Java file.
    #[arg(long)]
    input: PathBuf,
    /// Rewritten output path.
    #[arg(long)]
    output: PathBuf,
    /// Chat-completions endpoint URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Rewrite prompt (default: the generic dataset prompt).
    #[arg(long)]
    prompt: Option<String>,
    /// Character limit per request; larger files are chunked on line
    /// boundaries.
    #[arg(long)]
    max_chars: Option<usize>,
    /// Transport retries before giving up.
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus root the manifest paths are relative to.
    #[arg(long)]
    root: Option<PathBuf>,
    /// Manifest produced by `ingest`.
    #[arg(long, default_value = "manifest.json")]
    manifest: PathBuf,
    /// Feature family: nb-f, cnb-f, or ewd-nb-f.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    group_size: Option<usize>,
    /// Bin width b for ewd-nb-f (ignored by the other families).
    #[arg(long)]
    bin_width: Option<usize>,
    /// Binary label rule: "origin" or "authors:alice,bob".
    #[arg(long)]
    label_rule: Option<String>,
    /// Output directory for matrix.csv, index_map.json, matrix.meta.json.
    #[arg(long, default_value = "artifacts")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory holding the `build` outputs.
    #[arg(long, default_value = "artifacts")]
    artifacts: PathBuf,
    /// Model kind: random-forest or gradient-boosted-trees.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bundle output path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory holding the `build` outputs.
    #[arg(long, default_value = "artifacts")]
    artifacts: PathBuf,
    /// Comma-separated model kinds.
    #[arg(long)]
    models: Option<String>,
    /// Comma-separated seeds for repeated runs.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Split granularity: group or file.
    #[arg(long)]
    split: Option<String>,
    /// Report JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long, default_value = "manifest.json")]
    manifest: PathBuf,
    /// Comma-separated families.
    #[arg(long)]
    families: Option<String>,
    /// Comma-separated group sizes.
    #[arg(long)]
    group_sizes: Option<String>,
    #[arg(long)]
    bin_width: Option<usize>,
    #[arg(long)]
    models: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    label_rule: Option<String>,
    /// Report JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Trained bundle from `train`.
    #[arg(long, default_value = "model.json")]
    bundle: PathBuf,
    /// Java files to score.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// CSV output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON written by `eval` or `sweep`.
    #[arg(long)]
    input: PathBuf,
    /// Table to render: metrics, stability, or significance.
    #[arg(long, default_value = "metrics")]
    table: String,
    /// Output format: text, csv, or json.
    #[arg(long, default_value = "text")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Optional config-file values; every field has a flag override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus_root: Option<PathBuf>,
    family: Option<String>,
    group_size: Option<usize>,
    bin_width: Option<usize>,
    label_rule: Option<String>,
    model: Option<String>,
    models: Option<String>,
    seed: Option<u64>,
    seeds: Option<String>,
    test_fraction: Option<f64>,
    split: Option<String>,
    threads: Option<usize>,
    endpoint: Option<String>,
    endpoint_model: Option<String>,
    prompt: Option<String>,
    max_chars: Option<usize>,
}

impl FileConfig {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Artifact mismatches exit 3; everything else is an input error (2).
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            if matches!(
                e,
                Error::ArtifactMismatch(_)
                    | Error::IndexMapMismatch { .. }
                    | Error::FeatureShapeMismatch { .. }
            ) {
                return EXIT_ARTIFACT_MISMATCH;
            }
        }
    }
    EXIT_INPUT_ERROR
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = cli.threads.or(config.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args, &config),
        Command::Rewrite(args) => cmd_rewrite(args, &config),
        Command::Build(args) => cmd_build(args, &config),
        Command::Train(args) => cmd_train(args, &config),
        Command::Eval(args) => cmd_eval(args, &config),
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::Detect(args) => cmd_detect(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn resolve_root(flag: Option<PathBuf>, config: &FileConfig) -> anyhow::Result<PathBuf> {
    flag.or_else(|| config.corpus_root.clone())
        .context("no corpus root: pass --root or set corpus_root in the config file")
}

fn parse_family(text: &str) -> anyhow::Result<FeatureFamily> {
    Ok(text.parse::<FeatureFamily>()?)
}

fn parse_model_kind(text: &str) -> anyhow::Result<ModelKind> {
    match text {
        "random-forest" => Ok(ModelKind::RandomForest),
        "gradient-boosted-trees" => Ok(ModelKind::GradientBoostedTrees),
        other => bail!("unknown model kind {other:?} (expected random-forest or gradient-boosted-trees)"),
    }
}

fn parse_model_list(text: &str) -> anyhow::Result<Vec<ModelKind>> {
    text.split(',').map(|s| parse_model_kind(s.trim())).collect()
}

fn parse_seed_list(text: &str) -> anyhow::Result<Vec<u64>> {
    text.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?}")))
        .collect()
}

fn parse_split(text: &str) -> anyhow::Result<SplitGranularity> {
    match text {
        "group" => Ok(SplitGranularity::Group),
        "file" => Ok(SplitGranularity::File),
        other => bail!("unknown split granularity {other:?} (expected group or file)"),
    }
}

/// "origin" or "authors:alice,bob".
fn parse_label_rule(text: &str) -> anyhow::Result<GroupLabelRule> {
    if text == "origin" {
        return Ok(GroupLabelRule::OriginBased);
    }
    if let Some(authors) = text.strip_prefix("authors:") {
        let set: BTreeSet<String> = authors
            .split(',')
            .map(|a| a.trim().to_string())
            .filter(|a| !a.is_empty())
            .collect();
        if set.is_empty() {
            bail!("authors label rule needs at least one author");
        }
        return Ok(GroupLabelRule::AuthorSet(set));
    }
    bail!("unknown label rule {text:?} (expected \"origin\" or \"authors:a,b\")");
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_ingest(args: IngestArgs, config: &FileConfig) -> anyhow::Result<()> {
    let root = resolve_root(args.root, config)?;
    if let Some(files) = args.synth {
        generate_corpus(&root, files, args.synth_seed)?;
        println!("generated {files} synthetic files under {}", root.display());
    }
    let (manifest, warnings) = ingest_corpus(&root, &LabelRules::default_convention())?;
    for warning in &warnings {
        log::warn!("{warning}");
    }
    write_atomic(&args.out, manifest.to_json()?.as_bytes())?;
    println!(
        "ingested {} files into {}",
        manifest.entries.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_rewrite(args: RewriteArgs, config: &FileConfig) -> anyhow::Result<()> {
    let endpoint = args
        .endpoint
        .or_else(|| config.endpoint.clone())
        .context("no endpoint: pass --endpoint or set endpoint in the config file")?;
    let model = args
        .model
        .or_else(|| config.endpoint_model.clone())
        .context("no model name: pass --model or set endpoint_model in the config file")?;
    let job = RewriteJob {
        source_path: args.input.clone(),
        endpoint_url: endpoint,
        model_name: model,
        prompt: args
            .prompt
            .or_else(|| config.prompt.clone())
            .unwrap_or_else(|| GPT_DATASET_PROMPT.to_string()),
        max_chars_per_request: args.max_chars.or(config.max_chars).unwrap_or(4000),
        output_path: args.output.clone(),
        api_key: std::env::var(API_KEY_ENV).ok(),
        max_retries: args.max_retries,
        initial_backoff_ms: 500,
    };
    let text = rewrite_file(&job)?;
    println!(
        "rewrote {} -> {} ({} chars)",
        args.input.display(),
        args.output.display(),
        text.chars().count()
    );
    Ok(())
}

fn feature_config(
    family: Option<&str>,
    group_size: Option<usize>,
    bin_width: Option<usize>,
    config: &FileConfig,
) -> anyhow::Result<FeatureConfig> {
    let family = parse_family(
        family
            .map(str::to_string)
            .or_else(|| config.family.clone())
            .unwrap_or_else(|| "ewd-nb-f".to_string())
            .as_str(),
    )?;
    let group_size = group_size.or(config.group_size).unwrap_or(40);
    let bin_width = bin_width.or(config.bin_width).unwrap_or(3000);
    Ok(FeatureConfig::new(family, group_size, bin_width)?)
}

fn label_rule(flag: Option<&str>, config: &FileConfig) -> anyhow::Result<GroupLabelRule> {
    parse_label_rule(
        flag.map(str::to_string)
            .or_else(|| config.label_rule.clone())
            .unwrap_or_else(|| "origin".to_string())
            .as_str(),
    )
}

fn cmd_build(args: BuildArgs, config: &FileConfig) -> anyhow::Result<()> {
    let root = resolve_root(args.root, config)?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let feature_config = feature_config(
        args.family.as_deref(),
        args.group_size,
        args.bin_width,
        config,
    )?;
    let rule = label_rule(args.label_rule.as_deref(), config)?;
    let outcome = build_matrix(&root, &manifest, &feature_config, &rule)?;
    for warning in &outcome.warnings {
        log::warn!("{warning}");
    }
    if !outcome.skipped_files.is_empty() {
        println!("skipped {} unparseable files", outcome.skipped_files.len());
    }

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let matrix_path = args.out_dir.join("matrix.csv");
    let tmp = matrix_path.with_extension("tmp");
    write_matrix_csv(&outcome.matrix, &tmp)?;
    std::fs::rename(&tmp, &matrix_path)
        .with_context(|| format!("renaming to {}", matrix_path.display()))?;
    write_atomic(
        &args.out_dir.join("index_map.json"),
        outcome
            .index_map
            .to_json(feature_config.bin_width)?
            .as_bytes(),
    )?;
    let sidecar = MatrixSidecar {
        schema: MATRIX_SIDECAR_SCHEMA,
        config: feature_config,
        grammar_id: outcome.grammar_id.clone(),
        stats: None,
    };
    write_atomic(
        &args.out_dir.join("matrix.meta.json"),
        serde_json::to_string_pretty(&sidecar)?.as_bytes(),
    )?;
    println!(
        "built {} rows x {} columns (vocabulary {}) into {}",
        outcome.matrix.rows.len(),
        outcome.matrix.column_count,
        outcome.index_map.vocab_size(),
        args.out_dir.display()
    );
    Ok(())
}

fn load_artifacts(dir: &Path) -> anyhow::Result<(FeatureMatrix, FeatureIndexMap, MatrixSidecar)> {
    let matrix = read_matrix_csv(&dir.join("matrix.csv"))?;
    let index_map = FeatureIndexMap::load(&dir.join("index_map.json"))?;
    let sidecar = MatrixSidecar::load(&dir.join("matrix.meta.json"))?;
    Ok((matrix, index_map, sidecar))
}

fn cmd_train(args: TrainArgs, config: &FileConfig) -> anyhow::Result<()> {
    let (matrix, index_map, sidecar) = load_artifacts(&args.artifacts)?;
    let kind = parse_model_kind(
        args.model
            .or_else(|| config.model.clone())
            .unwrap_or_else(|| "random-forest".to_string())
            .as_str(),
    )?;
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let all_rows: Vec<usize> = (0..matrix.rows.len()).collect();
    let stats = nbdetect::features::fit_winsorize_stats(&matrix, &all_rows)?;
    let mut normalized = matrix;
    for row in &mut normalized.rows {
        nbdetect::features::winsorize_row(&mut row.values, &stats);
    }
    let model = train(&ModelSpec::with_defaults(kind, seed), &normalized, &all_rows)?;
    let bundle = ModelBundle {
        grammar_id: sidecar.grammar_id,
        model,
        index_map,
        stats,
        config: sidecar.config,
    };
    write_atomic(&args.out, bundle.to_json()?.as_bytes())?;
    println!(
        "trained {} (seed {seed}) on {} rows -> {}",
        kind.name(),
        normalized.rows.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, config: &FileConfig) -> anyhow::Result<()> {
    let (matrix, _, sidecar) = load_artifacts(&args.artifacts)?;
    let kinds = parse_model_list(
        args.models
            .or_else(|| config.models.clone())
            .unwrap_or_else(|| "random-forest,gradient-boosted-trees".to_string())
            .as_str(),
    )?;
    let seeds = parse_seed_list(
        args.seeds
            .or_else(|| config.seeds.clone())
            .unwrap_or_else(|| DEFAULT_SEED.to_string())
            .as_str(),
    )?;
    let test_fraction = args.test_fraction.or(config.test_fraction).unwrap_or(0.3);
    let granularity = parse_split(
        args.split
            .or_else(|| config.split.clone())
            .unwrap_or_else(|| "group".to_string())
            .as_str(),
    )?;
    let cell = SweepCell {
        family: sidecar.config.family,
        group_size: sidecar.config.group_size,
    };
    let report = run_sweep(&[(cell, Some(&matrix))], &kinds, &seeds, test_fraction, granularity)?;
    print!("{}", metrics_text(&report));
    if seeds.len() > 1 {
        print!("{}", stability_text(&report));
    }
    if let Some(out) = &args.out {
        write_atomic(out, report_json(&report)?.as_bytes())?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs, config: &FileConfig) -> anyhow::Result<()> {
    let root = resolve_root(args.root, config)?;
    let manifest = CorpusManifest::load(&args.manifest)?;
    let families: Vec<FeatureFamily> = args
        .families
        .or_else(|| config.family.clone())
        .unwrap_or_else(|| "nb-f,cnb-f,ewd-nb-f".to_string())
        .split(',')
        .map(|s| parse_family(s.trim()))
        .collect::<anyhow::Result<_>>()?;
    let group_sizes: Vec<usize> = args
        .group_sizes
        .unwrap_or_else(|| "40".to_string())
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad group size {s:?}")))
        .collect::<anyhow::Result<_>>()?;
    let bin_width = args.bin_width.or(config.bin_width).unwrap_or(3000);
    let kinds = parse_model_list(
        args.models
            .or_else(|| config.models.clone())
            .unwrap_or_else(|| "random-forest,gradient-boosted-trees".to_string())
            .as_str(),
    )?;
    let seeds = parse_seed_list(
        args.seeds
            .or_else(|| config.seeds.clone())
            .unwrap_or_else(|| DEFAULT_SEED.to_string())
            .as_str(),
    )?;
    let test_fraction = args.test_fraction.or(config.test_fraction).unwrap_or(0.3);
    let granularity = parse_split(
        args.split
            .or_else(|| config.split.clone())
            .unwrap_or_else(|| "group".to_string())
            .as_str(),
    )?;
    let rule = label_rule(args.label_rule.as_deref(), config)?;

    let mut built: Vec<(SweepCell, Option<FeatureMatrix>)> = Vec::new();
    for &family in &families {
        for &group_size in &group_sizes {
            let cell = SweepCell { family, group_size };
            let feature_config = FeatureConfig::new(family, group_size, bin_width)?;
            match build_matrix(&root, &manifest, &feature_config, &rule) {
                Ok(outcome) => built.push((cell, Some(outcome.matrix))),
                Err(err) => {
                    log::warn!(
                        "cell {} group_size={group_size}: build failed ({err})",
                        family.name()
                    );
                    built.push((cell, None));
                }
            }
        }
    }
    let cells: Vec<(SweepCell, Option<&FeatureMatrix>)> = built
        .iter()
        .map(|(cell, matrix)| (*cell, matrix.as_ref()))
        .collect();
    let report = run_sweep(&cells, &kinds, &seeds, test_fraction, granularity)?;
    print!("{}", metrics_text(&report));
    if seeds.len() > 1 {
        print!("{}", stability_text(&report));
        print!("{}", significance_text(&significance(&report)?));
    }
    if let Some(out) = &args.out {
        write_atomic(out, report_json(&report)?.as_bytes())?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> anyhow::Result<()> {
    let bundle = ModelBundle::load(&args.bundle)?;
    bundle.check_grammar()?;
    let mut out = String::from("path,start_line,end_line,score,class\n");
    for file in &args.files {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("reading {}", file.display()))?;
        for score in bundle.score_file(&file.display().to_string(), &text)? {
            out.push_str(&format!(
                "{},{},{},{:.6},{}\n",
                score.path,
                score.start_line,
                score.end_line,
                score.score,
                u8::from(score.positive),
            ));
        }
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let report: nbdetect::eval::EvalReport = serde_json::from_value(value["report"].clone())
        .with_context(|| format!("{} is not a saved evaluation report", args.input.display()))?;
    let rendered = match (args.table.as_str(), args.format.as_str()) {
        ("metrics", "text") => metrics_text(&report),
        ("metrics", "csv") => metrics_csv(&report),
        ("stability", "text") => stability_text(&report),
        ("stability", "csv") => stability_csv(&report),
        ("significance", "text") => significance_text(&significance(&report)?),
        ("significance", "json") => {
            let mut s = serde_json::to_string_pretty(&significance(&report)?)?;
            s.push('\n');
            s
        }
        (_, "json") => report_json(&report)?,
        (table, format) => bail!("unsupported table/format combination {table:?}/{format:?}"),
    };
    emit(args.out.as_deref(), &rendered)
}
