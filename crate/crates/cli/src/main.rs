//! `emobow` — pipeline driver: ingest XML reviews, rewrite them under the
//! representation models, rebalance classes, train and apply forests, and
//! compare models with cross-validated reports.

mod bundle;
mod io_util;
mod table;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use walkdir::WalkDir;

use emobow::balance::SamplingRegime;
use emobow::corpus::{
    write_cache, CacheRecord, LabeledSet, PolarityClass, ReviewReader, TagConfig,
};
use emobow::evaluate::{run_experiment, EvalConfig, ResampleScope, TimingMode, VocabScope};
use emobow::features::{build_vocabulary, vectorize, CountVector};
use emobow::forest::{train_forest, FeatureRule, ForestParams};
use emobow::represent::{transform, ModelKind};
use emobow::synth::SynthSpec;
use emobow::textnorm::TokenSeq;

use crate::bundle::{ForestBundle, BUNDLE_SCHEMA_VERSION};
use crate::io_util::{atomic_write, load_docs, load_lexicon, open_reader};
use crate::table::render_csv_table;

#[derive(Parser)]
#[command(
    name = "emobow",
    version,
    about = "Lexicon-conditioned bag-of-words models for review polarity"
)]
struct Cli {
    /// Worker threads (0 = all cores). Results are identical at any value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract reviews from XML dumps into an NDJSON cache
    Ingest(IngestArgs),
    /// Rewrite cached documents under one representation model
    Transform(TransformArgs),
    /// Train a forest on a whole cache and save it as a bundle
    Train(TrainArgs),
    /// Classify cached documents with a saved bundle
    Predict(PredictArgs),
    /// Cross-validate representation models and write CSV/JSON reports
    Evaluate(EvaluateArgs),
    /// Render a report CSV as an aligned table
    Report(ReportArgs),
    /// Generate a planted-signal synthetic corpus and matching lexicon
    Synth(SynthArgs),
}

#[derive(Args)]
struct ForestArgs {
    /// Trees in the forest
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Maximum tree depth (unbounded when omitted)
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Candidate features per split: sqrt, all, or an integer
    #[arg(long, default_value = "sqrt")]
    features: FeatureRule,
    /// Train each tree on the full sample instead of a bootstrap resample
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn params(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features,
            bootstrap: !self.no_bootstrap,
            seed,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// XML files or directories to scan for .xml files
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// NDJSON cache to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "review")]
    review_tag: String,
    #[arg(long, default_value = "content")]
    content_tag: String,
    #[arg(long, default_value = "rating")]
    rating_tag: String,
}

#[derive(Args)]
struct TransformArgs {
    /// NDJSON cache to read
    #[arg(long)]
    input: PathBuf,
    /// Lexicon TSV
    #[arg(long)]
    lexicon: PathBuf,
    /// Representation model: m, es, s, e, es+g, s+g, e+g, ces+m, cs+m, ce+m, m-es
    #[arg(long)]
    model: ModelKind,
    /// NDJSON cache of rewritten documents to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    model: ModelKind,
    /// Bundle file to write
    #[arg(long)]
    out: PathBuf,
    /// Prune tokens seen in fewer documents than this
    #[arg(long, default_value_t = 2)]
    min_df: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also dump the vocabulary as two-column TSV (token, doc_freq)
    #[arg(long)]
    vocab_out: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Bundle written by `train`
    #[arg(long)]
    forest: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// NDJSON predictions to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    /// Comma-separated model flags, or `all`
    #[arg(long, default_value = "all")]
    models: String,
    /// Class-distribution regime: natural, under, over
    #[arg(long, default_value = "natural")]
    sampling: SamplingRegime,
    /// Resample before folding (global) or inside training folds (per-fold)
    #[arg(long, default_value = "per-fold")]
    resample_scope: ResampleScope,
    /// Build the vocabulary per training fold or once over all documents
    #[arg(long, default_value = "per-fold")]
    vocab_scope: VocabScope,
    /// Cross-validation folds
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    min_df: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV seconds column: `none` keeps reports byte-reproducible, `wall`
    /// records measured time (JSON always carries wall time)
    #[arg(long, default_value = "none")]
    timing: TimingMode,
    /// Directory for report.csv and report.json
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    forest: ForestArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// report.csv produced by `evaluate`
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// NDJSON corpus to write
    #[arg(long)]
    out: PathBuf,
    /// Matching lexicon TSV to write
    #[arg(long)]
    lexicon_out: PathBuf,
    /// Documents per class: neg,neu,pos
    #[arg(long, default_value = "300,300,300")]
    class_sizes: String,
    /// Probability a document's markers come from its own class
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    markers_per_doc: usize,
    /// Distinct marker words per class and visibility group
    #[arg(long, default_value_t = 4)]
    marker_words: usize,
    #[arg(long, default_value_t = 400)]
    filler_vocab: usize,
    /// Filler-count range `lo-hi` for all classes
    #[arg(long, default_value = "25-45")]
    filler_len: String,
    /// Per-class overrides `lo-hi`
    #[arg(long)]
    filler_len_neg: Option<String>,
    #[arg(long)]
    filler_len_neu: Option<String>,
    #[arg(long)]
    filler_len_pos: Option<String>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

fn collect_xml_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in WalkDir::new(input) {
                let entry = entry.with_context(|| format!("scanning {}", input.display()))?;
                if entry.file_type().is_file()
                    && entry
                        .path()
                        .extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("xml"))
                {
                    files.push(entry.into_path());
                }
            }
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let files = collect_xml_files(&args.input)?;
    let tags = TagConfig {
        review: args.review_tag,
        content: args.content_tag,
        rating: args.rating_tag,
    };

    struct FileOutcome {
        records: Vec<CacheRecord>,
        skipped: u64,
        elements: u64,
    }

    let outcomes: Vec<FileOutcome> = files
        .par_iter()
        .map(|path| -> Result<FileOutcome> {
            let reader = open_reader(path)?;
            let mut reviews =
                ReviewReader::with_tags(reader, path.display().to_string(), tags.clone());
            let mut records = Vec::new();
            for review in reviews.by_ref() {
                let review = review.with_context(|| format!("parsing {}", path.display()))?;
                records.push(CacheRecord::from_raw(&review)?);
            }
            Ok(FileOutcome {
                records,
                skipped: reviews.skipped(),
                elements: reviews.review_elements(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let records: Vec<CacheRecord> = outcomes.iter().flat_map(|o| o.records.clone()).collect();
    let skipped: u64 = outcomes.iter().map(|o| o.skipped).sum();
    let elements: u64 = outcomes.iter().map(|o| o.elements).sum();

    let mut bytes = Vec::new();
    write_cache(&mut bytes, &records)?;
    atomic_write(&args.out, &bytes)?;

    let mut counts = [0usize; 3];
    for r in &records {
        counts[r.class.index()] += 1;
    }
    println!(
        "ingested {} reviews from {} files ({} review elements, {} skipped)",
        records.len(),
        files.len(),
        elements,
        skipped
    );
    print_class_counts(&counts);
    println!("cache written to {}", args.out.display());
    Ok(())
}

fn print_class_counts(counts: &[usize; 3]) {
    let total: usize = counts.iter().sum();
    for class in PolarityClass::ALL {
        let n = counts[class.index()];
        let share = if total == 0 {
            0.0
        } else {
            100.0 * n as f64 / total as f64
        };
        println!("  {:<8} {:>8}  ({share:.1}%)", class.name(), n);
    }
}

// ---------------------------------------------------------------------------
// transform
// ---------------------------------------------------------------------------

fn cmd_transform(args: TransformArgs) -> Result<()> {
    let lexicon = load_lexicon(&args.lexicon)?;
    let records = emobow::corpus::read_cache(open_reader(&args.input)?)?;
    let rewritten: Vec<CacheRecord> = records
        .par_iter()
        .map(|record| {
            let tokens = transform(&record.to_token_seq(), &lexicon, args.model);
            CacheRecord::from_tokens(tokens.into_inner(), record.rating)
                .expect("rating already validated on read")
        })
        .collect();

    let mut bytes = Vec::new();
    write_cache(&mut bytes, &rewritten)?;
    atomic_write(&args.out, &bytes)?;
    println!(
        "rewrote {} documents under model {} into {}",
        rewritten.len(),
        args.model,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train / predict
// ---------------------------------------------------------------------------

fn transformed_docs(
    docs: &LabeledSet<TokenSeq>,
    lexicon: &emobow::lexicon::Lexicon,
    model: ModelKind,
) -> Vec<TokenSeq> {
    docs.items()
        .par_iter()
        .map(|(doc, _)| transform(doc, lexicon, model))
        .collect()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let lexicon = load_lexicon(&args.lexicon)?;
    let docs = load_docs(&args.input)?;
    if docs.is_empty() {
        bail!("cache {} holds no documents", args.input.display());
    }
    let rewritten = transformed_docs(&docs, &lexicon, args.model);
    let vocab = build_vocabulary(&rewritten, args.min_df)?;
    if let Some(path) = &args.vocab_out {
        let mut tsv = Vec::new();
        vocab.write_tsv(&mut tsv)?;
        atomic_write(path, &tsv)?;
    }
    let x: Vec<CountVector> = rewritten.par_iter().map(|d| vectorize(d, &vocab)).collect();
    let y: Vec<PolarityClass> = docs.items().iter().map(|(_, c)| *c).collect();
    let forest = train_forest(&x, &y, &args.forest.params(args.seed))?;

    let correct = x
        .par_iter()
        .zip(&y)
        .filter(|(row, gold)| forest.predict(row).ok() == Some(**gold))
        .count();

    let bundle = ForestBundle {
        schema_version: BUNDLE_SCHEMA_VERSION,
        model: args.model,
        min_df: args.min_df,
        lexicon_tsv: lexicon.to_tsv(),
        vocab,
        forest,
    };
    bundle.save(&args.out)?;

    println!(
        "trained {} trees on {} documents (model {}, vocabulary {})",
        args.forest.trees,
        docs.len(),
        args.model,
        bundle.vocab.len()
    );
    println!(
        "training-set accuracy {:.4}",
        correct as f64 / docs.len() as f64
    );
    println!("bundle written to {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let bundle = ForestBundle::load(&args.forest)?;
    let lexicon = bundle.lexicon()?;
    let docs = load_docs(&args.input)?;
    let rewritten = transformed_docs(&docs, &lexicon, bundle.model);

    struct Prediction {
        gold: PolarityClass,
        predicted: PolarityClass,
        votes: [f64; 3],
    }

    let predictions: Vec<Prediction> = rewritten
        .par_iter()
        .zip(docs.items())
        .map(|(doc, (_, gold))| -> Result<Prediction> {
            let x = vectorize(doc, &bundle.vocab);
            Ok(Prediction {
                gold: *gold,
                predicted: bundle.forest.predict(&x)?,
                votes: bundle.forest.predict_distribution(&x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = String::new();
    for (index, p) in predictions.iter().enumerate() {
        let votes: BTreeMap<&str, f64> = PolarityClass::ALL
            .iter()
            .map(|c| (c.name(), p.votes[c.index()]))
            .collect();
        out.push_str(&serde_json::to_string(&serde_json::json!({
            "index": index,
            "gold": p.gold.name(),
            "predicted": p.predicted.name(),
            "votes": votes,
        }))?);
        out.push('\n');
    }
    atomic_write(&args.out, out.as_bytes())?;

    let correct = predictions.iter().filter(|p| p.gold == p.predicted).count();
    println!(
        "predicted {} documents with model {} (accuracy {:.4})",
        predictions.len(),
        bundle.model,
        correct as f64 / predictions.len().max(1) as f64
    );
    println!("predictions written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate / report
// ---------------------------------------------------------------------------

fn parse_models(spec: &str) -> Result<Vec<ModelKind>> {
    if spec.trim() == "all" {
        return Ok(ModelKind::ALL.to_vec());
    }
    let mut models = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let model = part.parse::<ModelKind>().map_err(|e| anyhow::anyhow!(e))?;
        if !models.contains(&model) {
            models.push(model);
        }
    }
    if models.is_empty() {
        bail!("no models selected");
    }
    Ok(models)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    // Assemble the full config before touching any input file.
    let config = EvalConfig {
        models: parse_models(&args.models)?,
        regime: args.sampling,
        resample_scope: args.resample_scope,
        vocab_scope: args.vocab_scope,
        forest: args.forest.params(args.seed),
        k: args.k,
        min_df: args.min_df,
        seed: args.seed,
        corpus_path: Some(args.input.display().to_string()),
        lexicon_path: Some(args.lexicon.display().to_string()),
    };

    let lexicon = load_lexicon(&args.lexicon)?;
    let docs = load_docs(&args.input)?;
    let report = run_experiment(&docs, &lexicon, &config)?;

    let csv = report.to_csv(args.timing);
    atomic_write(&args.out_dir.join("report.csv"), csv.as_bytes())?;
    atomic_write(
        &args.out_dir.join("report.json"),
        report.to_json()?.as_bytes(),
    )?;

    print!("{}", render_csv_table(&csv));
    for cell in &report.cells {
        if let Some(error) = &cell.error {
            println!("model {} failed: {error}", cell.model);
        }
    }
    println!(
        "reports written to {} (report.csv, report.json)",
        args.out_dir.display()
    );

    let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        bail!("{failed} model cell(s) failed; see report.json");
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let csv = std::fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    print!("{}", render_csv_table(&csv));
    Ok(())
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

fn parse_range(spec: &str) -> Result<(usize, usize)> {
    let (lo, hi) = spec
        .split_once('-')
        .with_context(|| format!("range `{spec}` must look like `25-45`"))?;
    let lo: usize = lo.trim().parse()?;
    let hi: usize = hi.trim().parse()?;
    if lo > hi {
        bail!("range `{spec}` is reversed");
    }
    Ok((lo, hi))
}

fn parse_class_sizes(spec: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        bail!("class sizes `{spec}` must be three comma-separated counts");
    }
    Ok([
        parts[0].trim().parse()?,
        parts[1].trim().parse()?,
        parts[2].trim().parse()?,
    ])
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let default_len = parse_range(&args.filler_len)?;
    let per_class = |spec: &Option<String>| -> Result<(usize, usize)> {
        spec.as_deref().map_or(Ok(default_len), parse_range)
    };
    let spec = SynthSpec {
        class_sizes: parse_class_sizes(&args.class_sizes)?,
        signal: args.signal,
        markers_per_doc: args.markers_per_doc,
        marker_words_per_group: args.marker_words,
        filler_vocab: args.filler_vocab,
        filler_len: [
            per_class(&args.filler_len_neg)?,
            per_class(&args.filler_len_neu)?,
            per_class(&args.filler_len_pos)?,
        ],
        seed: args.seed,
    };
    let corpus = spec.generate();

    let mut bytes = Vec::new();
    write_cache(&mut bytes, &corpus.records)?;
    atomic_write(&args.out, &bytes)?;
    atomic_write(&args.lexicon_out, corpus.lexicon_tsv.as_bytes())?;

    let mut counts = [0usize; 3];
    for r in &corpus.records {
        counts[r.class.index()] += 1;
    }
    println!(
        "generated {} documents (signal {}, best marker-only accuracy {:.4})",
        corpus.records.len(),
        spec.signal,
        spec.bayes_accuracy()
    );
    print_class_counts(&counts);
    println!(
        "corpus written to {}, lexicon to {}",
        args.out.display(),
        args.lexicon_out.display()
    );
    Ok(())
}
