use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde_json::{json, Map, Value};

use lexrisk::corpus::read_records;
use lexrisk::eval::{sweep, Axis, EvalSplit, Layout, SweepParam};
use lexrisk::pipeline::Workspace;
use lexrisk::recipe::{FeatureSource, Recipe};
use lexrisk::server::Service;
use lexrisk::synthetic::TopicCorpus;

mod http;

/// Risk-paragraph extraction for legal documents.
#[derive(Parser)]
#[command(name = "lexrisk", version)]
struct Cli {
    /// Workspace directory holding stores, models and documents.
    #[arg(long, global = true, env = "LEXRISK_HOME", default_value = "lexrisk-home")]
    home: PathBuf,

    /// Seed for splits, training and inference.
    #[arg(long, global = true, env = "LEXRISK_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a labeled corpus and seed the training store.
    Ingest(IngestArgs),
    /// Set the embedding and classifier recipe and train category models.
    Train(TrainArgs),
    /// Evaluate a hyperparameter grid and print a report.
    Sweep(SweepArgs),
    /// Add a document to the repository.
    Upload(UploadArgs),
    /// List the document repository, newest first.
    Documents,
    /// Show one stored document.
    Show { doc_id: String },
    /// Flag risk paragraphs in a stored document.
    Analyze(AnalyzeArgs),
    /// Accept or reject a finding.
    Review(ReviewArgs),
    /// Register a category, or list categories.
    Categories {
        #[arg(long)]
        add: Option<String>,
    },
    /// Add a labeled paragraph to a category's training store.
    AddExample(ExampleArgs),
    /// Retrain one category from its full training store.
    Retrain { category: String },
    /// Write the findings report for a document.
    Export(ExportArgs),
    /// Serve the /v1 API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Args)]
struct IngestArgs {
    /// Labeled corpus, one JSON record per line.
    #[arg(long, required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Use the built-in two-topic synthetic corpus instead of a file.
    #[arg(long, conflicts_with = "input")]
    synthetic: bool,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
}

/// Recipe overrides; unset flags keep the workspace's current value.
#[derive(Args, Default)]
struct RecipeArgs {
    /// dm or dbow.
    #[arg(long)]
    arch: Option<String>,
    /// neg or hs.
    #[arg(long)]
    objective: Option<String>,
    /// Noise words per observation.
    #[arg(short = 'k', long = "negative")]
    negative: Option<String>,
    #[arg(long)]
    subsample: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    min_count: Option<String>,
    /// concat or mean.
    #[arg(long)]
    combine: Option<String>,
    /// svm_linear, svm_rbf, nb_gaussian or nb_bernoulli.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(short = 'c', long = "c-value")]
    c: Option<String>,
    #[arg(long)]
    infer_epochs: Option<usize>,
    #[arg(long, value_enum)]
    features: Option<Features>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Features {
    Trained,
    Inferred,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    recipe: RecipeArgs,
    /// Categories to train; all registered categories by default.
    #[arg(long = "category")]
    categories: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Validation,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
}

#[derive(Args)]
struct SweepArgs {
    /// Parameter to vary; repeat together with --values for a grid.
    #[arg(long = "param", required = true)]
    params: Vec<String>,
    /// Comma-separated values for the matching --param.
    #[arg(long = "values", required = true)]
    values: Vec<String>,
    /// Category to score; the first registered one by default.
    #[arg(long)]
    category: Option<String>,
    #[arg(long, value_enum, default_value = "validation")]
    split: SplitArg,
    #[arg(long, value_enum, default_value = "text")]
    format: TableFormat,
    /// Leave out the AUC column.
    #[arg(long)]
    no_auc: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    recipe: RecipeArgs,
}

#[derive(Args)]
struct UploadArgs {
    file: PathBuf,
    #[arg(long)]
    title: Option<String>,
    /// Paragraph separator; blank lines by default.
    #[arg(long)]
    delimiter: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    doc_id: String,
    #[arg(long = "category")]
    categories: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct ReviewArgs {
    finding_id: String,
    /// accept, reject or decline.
    #[arg(long)]
    verdict: String,
    #[arg(long)]
    comment: Option<String>,
}

#[derive(Args)]
struct ExampleArgs {
    #[arg(long)]
    category: String,
    #[arg(long, action = clap::ArgAction::Set)]
    label: bool,
    #[arg(long, required_unless_present = "file")]
    text: Option<String>,
    #[arg(long, conflicts_with = "text")]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    doc_id: String,
    /// csv, json or text.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Write to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RecipeArgs {
    fn apply(&self, recipe: &mut Recipe) -> Result<()> {
        let pairs = [
            (SweepParam::Architecture, &self.arch),
            (SweepParam::Objective, &self.objective),
            (SweepParam::Negative, &self.negative),
            (SweepParam::Subsample, &self.subsample),
            (SweepParam::Window, &self.window),
            (SweepParam::Dim, &self.dim),
            (SweepParam::Epochs, &self.epochs),
            (SweepParam::MinCount, &self.min_count),
            (SweepParam::Combine, &self.combine),
            (SweepParam::Classifier, &self.classifier),
            (SweepParam::C, &self.c),
        ];
        for (param, value) in pairs {
            if let Some(v) = value {
                param.apply(recipe, v)?;
            }
        }
        if let Some(n) = self.infer_epochs {
            recipe.infer_epochs = Some(n);
        }
        if let Some(f) = self.features {
            recipe.features = match f {
                Features::Trained => FeatureSource::Trained,
                Features::Inferred => FeatureSource::Inferred,
            };
        }
        recipe.hyper.validate()?;
        Ok(())
    }
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad ratios `{s}`"))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => bail!("expected three ratios, got `{s}`"),
    }
}

fn print_bytes(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)?;
    if !bytes.ends_with(b"\n") {
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs one API request in-process and returns the response body.
fn request(service: &Service, method: &str, path: &str, query: &str, body: Option<Value>) -> Result<Vec<u8>> {
    let bytes = body.map(|b| serde_json::to_vec(&b)).transpose()?.unwrap_or_default();
    let r = service.handle(method, path, query, &bytes);
    if !r.is_success() {
        let message = r
            .json_body()
            .ok()
            .map(|v| format!("{}: {}", v["code"].as_str().unwrap_or("error"), v["message"].as_str().unwrap_or("")))
            .unwrap_or_else(|| String::from_utf8_lossy(&r.body).into_owned());
        bail!("{message}");
    }
    Ok(r.body)
}

fn segment(s: &str) -> String {
    utf8_percent_encode(s, NON_ALPHANUMERIC).to_string()
}

fn open_workspace(home: &Path, seed: Option<u64>) -> Result<Workspace> {
    let mut ws = Workspace::open(home).with_context(|| format!("opening workspace {}", home.display()))?;
    if let Some(seed) = seed {
        if ws.recipe().hyper.seed != seed {
            let mut recipe = ws.recipe().clone();
            recipe.hyper.seed = seed;
            ws.set_recipe(recipe)?;
        }
    }
    Ok(ws)
}

fn run(cli: Cli) -> Result<()> {
    let ws = open_workspace(&cli.home, cli.seed)?;
    match cli.command {
        Command::Ingest(args) => {
            let records = if args.synthetic {
                TopicCorpus::default().generate()
            } else {
                let path = args.input.expect("required by clap");
                let file = fs::File::open(&path).with_context(|| format!("reading {}", path.display()))?;
                read_records(std::io::BufReader::new(file))?
            };
            let mut ws = ws;
            let split = ws.ingest(&records, parse_ratios(&args.ratios)?, cli.seed.unwrap_or(1))?;
            let [train, validation, test] = split.splits().map(|s| s.paragraphs.len());
            println!(
                "ingested {} paragraphs: {train} train, {validation} validation, {test} test; categories: {}",
                records.len(),
                split.categories.join(", ")
            );
        }
        Command::Train(args) => {
            let mut ws = ws;
            let mut recipe = ws.recipe().clone();
            args.recipe.apply(&mut recipe)?;
            ws.set_recipe(recipe)?;
            let categories = if args.categories.is_empty() {
                ws.categories().names().to_vec()
            } else {
                args.categories
            };
            if categories.is_empty() {
                bail!("no categories registered; run `ingest` first");
            }
            for c in &categories {
                let meta = ws.retrain(c)?;
                println!(
                    "{}: version {} from {} records ({} positive){}",
                    meta.category,
                    meta.version,
                    meta.training_records,
                    meta.positives,
                    if meta.degenerate { ", single class" } else { "" }
                );
            }
        }
        Command::Sweep(args) => {
            if args.params.len() != args.values.len() {
                bail!("each --param needs a matching --values");
            }
            let axes = args
                .params
                .iter()
                .zip(&args.values)
                .map(|(p, v)| Ok(Axis::new(SweepParam::parse(p)?, v.split(',').map(str::trim))))
                .collect::<Result<Vec<_>>>()?;
            let mut recipe = ws.recipe().clone();
            args.recipe.apply(&mut recipe)?;
            let data = ws.dataset()?;
            let category = match args.category {
                Some(c) => c,
                None => ws.categories().names().first().cloned().context("no categories registered")?,
            };
            let split = match args.split {
                SplitArg::Validation => EvalSplit::Validation,
                SplitArg::Test => EvalSplit::Test,
            };
            let report = sweep(&recipe, &axes, &data, &category, split)?;
            let layout = if args.no_auc { Layout::Compact } else { Layout::Full };
            let rendered = match args.format {
                TableFormat::Text => report.to_text_in(layout),
                TableFormat::Csv => report.to_csv_in(layout),
            };
            match args.output {
                Some(path) => fs::write(&path, rendered)?,
                None => print!("{rendered}"),
            }
        }
        Command::Upload(args) => {
            let text = fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
            let title = args.title.unwrap_or_else(|| {
                args.file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let body = Some(json!({
                "title": title,
                "text": text,
                "delimiter": args.delimiter,
            }));
            print_bytes(&request(&Service::new(ws), "POST", "/v1/documents", "", body)?)?;
        }
        Command::Documents => {
            print_bytes(&request(&Service::new(ws), "GET", "/v1/documents", "", None)?)?;
        }
        Command::Show { doc_id } => {
            let path = format!("/v1/documents/{}", segment(&doc_id));
            print_bytes(&request(&Service::new(ws), "GET", &path, "", None)?)?;
        }
        Command::Analyze(args) => {
            let mut body = Map::new();
            if !args.categories.is_empty() {
                body.insert("categories".into(), args.categories.into());
            }
            if let Some(t) = args.threshold {
                body.insert("threshold".into(), t.into());
            }
            let path = format!("/v1/documents/{}/analyze", segment(&args.doc_id));
            let out = request(&Service::new(ws), "POST", &path, "", Some(body.into()))?;
            print_bytes(&out)?;
        }
        Command::Review(args) => {
            let path = format!("/v1/findings/{}/review", segment(&args.finding_id));
            let body = Some(json!({
                "verdict": args.verdict,
                "comment": args.comment,
            }));
            print_bytes(&request(&Service::new(ws), "POST", &path, "", body)?)?;
        }
        Command::Categories { add } => {
            let service = Service::new(ws);
            let out = match add {
                Some(name) => request(&service, "POST", "/v1/categories", "", Some(json!({ "name": name })))?,
                None => request(&service, "GET", "/v1/categories", "", None)?,
            };
            print_bytes(&out)?;
        }
        Command::AddExample(args) => {
            let text = match (args.text, args.file) {
                (Some(t), _) => t,
                (None, Some(f)) => fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => unreachable!("required by clap"),
            };
            let path = format!("/v1/categories/{}/examples", segment(&args.category));
            let body = Some(json!({ "text": text, "label": args.label }));
            print_bytes(&request(&Service::new(ws), "POST", &path, "", body)?)?;
        }
        Command::Retrain { category } => {
            let path = format!("/v1/categories/{}/retrain", segment(&category));
            print_bytes(&request(&Service::new(ws), "POST", &path, "", None)?)?;
        }
        Command::Export(args) => {
            let path = format!("/v1/documents/{}/export", segment(&args.doc_id));
            let query = format!("format={}", segment(&args.format));
            let bytes = request(&Service::new(ws), "GET", &path, &query, None)?;
            match args.output {
                Some(out) => fs::write(&out, &bytes).with_context(|| format!("writing {}", out.display()))?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
        }
        Command::Serve { addr } => http::serve(Service::new(ws), &addr)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
