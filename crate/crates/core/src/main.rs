use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use reqtrace::baseline_eval::{cross_validate, EvalOptions, Method};
use reqtrace::corpus::{
    generate_synthetic, load_corpus, load_phrase_lists, parse_corpus_records, save_corpus,
    Corpus, Document, GeneratorSpec,
};
use reqtrace::pipeline::{identify, load_model, save_model, train_models, Config, ModelBundle};
use reqtrace::preprocess::Preprocessor;
use reqtrace::selector::Mode;

#[derive(Parser)]
#[command(name = "reqtrace", version, about = "Trace regulatory information types to document sentences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic annotated corpus with phrase lists
    GenCorpus(GenArgs),
    /// Train one model per information type
    Train(TrainArgs),
    /// Identify the sentences of a document related to a type
    Identify(IdentifyArgs),
    /// Report which types a document appears to be missing
    Check(CheckArgs),
    /// Cross-validate the methods on an annotated corpus
    Evaluate(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator spec (JSON); the built-in spec when omitted
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Override the number of documents
    #[arg(long)]
    documents: Option<usize>,
    /// Output directory for corpus.jsonl, phrases.json and pinned.txt
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    phrases: PathBuf,
    /// Comma-separated type ids; every type with phrase lists when omitted
    #[arg(long, value_delimiter = ',')]
    types: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DocArgs {
    /// A JSON Lines corpus file or a plain-text document
    #[arg(long)]
    doc: PathBuf,
    /// Document id within a JSON Lines file; the first document when omitted
    #[arg(long)]
    doc_id: Option<String>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    doc: DocArgs,
    /// Type id; every type in the model when omitted
    #[arg(long = "type")]
    type_id: Option<String>,
    #[arg(long, default_value = "full")]
    mode: Mode,
    /// Write the full scores and selection as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    doc: DocArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    phrases: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// File of document ids, one per line, that always stay in training
    #[arg(long)]
    pinned: Option<PathBuf>,
    #[arg(long, default_value = "fiti,fiti-ir,fiti-ml,kw", value_parser = Method::parse_list)]
    methods: std::vec::Vec<Method>,
    /// Comma-separated type ids; every annotated type when omitted
    #[arg(long, value_delimiter = ',')]
    types: Vec<String>,
    /// Training sizes as `a,b,c` or `lo..hi:step`
    #[arg(long, value_parser = parse_sizes)]
    train_sizes: Option<std::vec::Vec<usize>>,
    /// Cut this fraction of each test fold to score missing-type warnings
    #[arg(long, num_args = 0..=1, default_missing_value = "0.2")]
    simulate_missing: Option<f64>,
    /// Output directory for report.csv and report.json
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; all cores when omitted
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    let sizes = if let Some((range, step)) = s.split_once(':') {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| format!("expected lo..hi:step, got {s:?}"))?;
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if step == 0 || lo > hi {
            return Err(format!("empty or invalid range {s:?}"));
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err("training sizes must be positive".into());
    }
    Ok(sizes)
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    info!("config: {cfg}");
    Ok(cfg)
}

fn load_preprocessed(path: &Path) -> Result<Corpus> {
    let mut corpus = load_corpus(path)?;
    corpus.preprocess(Preprocessor::standard());
    Ok(corpus)
}

fn load_document(args: &DocArgs) -> Result<Document> {
    let pp = Preprocessor::standard();
    let path = &args.doc;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut doc = if path.extension().is_some_and(|e| e == "jsonl") {
        let docs = parse_corpus_records(&text, path)?;
        let found = match &args.doc_id {
            Some(id) => docs.into_iter().find(|d| &d.doc_id == id),
            None => docs.into_iter().next(),
        };
        match found {
            Some(d) => d.without_annotations(),
            None => bail!("{}: no matching document", path.display()),
        }
    } else {
        let id = path.file_stem().map_or("doc".into(), |s| s.to_string_lossy().into_owned());
        Document::from_text(id, &text, pp)
    };
    doc.preprocess(pp);
    Ok(doc)
}

fn gen_corpus(args: GenArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => GeneratorSpec::parse(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => GeneratorSpec::builtin(),
    };
    if let Some(n) = args.documents {
        spec.documents = n;
    }
    let (corpus, phrases) = generate_synthetic(&spec, args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    save_corpus(&corpus, args.out.join("corpus.jsonl"))?;
    fs::write(args.out.join("phrases.json"), phrases.to_json() + "\n")?;
    let pinned: String = corpus
        .documents
        .iter()
        .take(corpus.len() / 2)
        .map(|d| format!("{}\n", d.doc_id))
        .collect();
    fs::write(args.out.join("pinned.txt"), pinned)?;
    println!(
        "wrote {} documents, {} sentences, {} types to {}",
        corpus.len(),
        corpus.sentence_count(),
        phrases.types.len(),
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let corpus = load_preprocessed(&args.corpus)?;
    let phrases = load_phrase_lists(&args.phrases, Preprocessor::standard())?;
    let types = if args.types.is_empty() {
        phrases
            .types
            .keys()
            .filter(|t| corpus.type_ids.contains(t))
            .cloned()
            .collect()
    } else {
        args.types
    };
    let models = train_models(&corpus, &types, &phrases, &config)?;
    for m in &models {
        info!("type {}: n_r={} trees={}", m.type_id, m.n_r, m.forest.trees.len());
    }
    save_model(&ModelBundle::new(config, models), &args.out)?;
    println!("trained {} types: {}", types.len(), types.join(","));
    Ok(())
}

fn run_identify(args: IdentifyArgs) -> Result<()> {
    let bundle = load_model(&args.model)?;
    info!("config: {}", bundle.config);
    let doc = load_document(&args.doc)?;
    let models = match &args.type_id {
        Some(t) => vec![bundle.get(t)?],
        None => bundle.models.iter().collect(),
    };
    let results: Vec<_> = models.iter().map(|m| identify(m, &doc, args.mode)).collect();
    for r in &results {
        if r.selection.missing_warning {
            println!("MISSING type={}", r.type_id);
            continue;
        }
        for &i in &r.selection.selected {
            println!("type={} sentence={}\t{}", r.type_id, i, doc.sentences[i].raw);
        }
    }
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&results)? + "\n";
        fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn check(args: CheckArgs) -> Result<()> {
    let bundle = load_model(&args.model)?;
    info!("config: {}", bundle.config);
    let doc = load_document(&args.doc)?;
    let mut missing = 0;
    for m in &bundle.models {
        let r = identify(m, &doc, Mode::Full);
        if r.selection.missing_warning {
            missing += 1;
            println!("MISSING type={}", r.type_id);
        } else {
            println!("PRESENT type={} sentences={}", r.type_id, r.selection.selected.len());
        }
    }
    info!("{missing} of {} types missing", bundle.models.len());
    Ok(())
}

fn evaluate(args: EvalArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let corpus = load_preprocessed(&args.corpus)?;
    let phrases = load_phrase_lists(&args.phrases, Preprocessor::standard())?;
    let pinned: BTreeSet<String> = match &args.pinned {
        Some(p) => fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        None => BTreeSet::new(),
    };
    let opts = EvalOptions {
        folds: args.folds,
        pinned,
        methods: args.methods,
        types: (!args.types.is_empty()).then_some(args.types),
        train_sizes: args.train_sizes,
        simulate_missing: args.simulate_missing,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build()?;
    let report = pool.install(|| cross_validate(&corpus, &phrases, &config, &opts))?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("report.csv"), report.to_csv())?;
    fs::write(args.out.join("report.json"), report.to_json())?;
    for r in report.rows.iter().filter(|r| r.fold.is_none()) {
        println!(
            "{:<8} {:<4} {:<8} size={:<4} P={:.3} R={:.3} F1={:.3}",
            r.task.as_str(),
            r.type_id,
            r.method,
            r.train_size.map_or("all".to_string(), |s| s.to_string()),
            r.precision,
            r.recall,
            r.f1
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Train(a) => train(a),
        Command::Identify(a) => run_identify(a),
        Command::Check(a) => check(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
