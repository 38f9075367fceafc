use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use pagesift::dataset::{self, write_atomic, LabeledPage};
use pagesift::dom::{serialize_annotated_with, SerializeOptions};
use pagesift::eval::{oracle_predictions, PagePredictions};
use pagesift::gbm::GbmError;
use pagesift::pipeline::train_on_pages;
use pagesift::{
    evaluate, load_dataset, load_model, save_model, split_dataset, synth, DatasetError, Error, EvalReport,
    Extractor, ExtractorKind, PageAnalysis, Prediction, Target, TrainingConfig, Viewport,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{Command, DumpKind, EvalArgs, ExtractArgs, FeaturesAction, FetchArgs, OutputFormat, ServeArgs, SynthArgs, TrainArgs};

pub const TOOL: &str = "pagesift";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const USER_AGENT: &str = concat!("pagesift-fetch/", env!("CARGO_PKG_VERSION"));

/// A failed command with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE_LABELS: i32 = 3;
pub const EXIT_BIND: i32 = 4;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnknownExtractor(_) | Error::ModelRequired => EXIT_USAGE,
            Error::Dataset(DatasetError::InvalidRatio(_)) => EXIT_USAGE,
            Error::Gbm(GbmError::DegenerateLabels) => EXIT_DEGENERATE_LABELS,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

macro_rules! impl_from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
impl_from_core!(DatasetError, GbmError, pagesift::EvalError, pagesift::DomError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))
}

pub fn load_model_file(path: &Path) -> Result<pagesift::GbmModel, CliError> {
    Ok(load_model(&read_file(path)?)?)
}

/// Resolve an extractor from a model path or a name.
pub fn build_extractor(model: Option<&Path>, name: Option<&str>) -> Result<Extractor, CliError> {
    let kind = match name {
        Some(n) => n.parse::<ExtractorKind>()?,
        None if model.is_some() => ExtractorKind::Gbm,
        None => return Err(CliError::new(EXIT_USAGE, "either --model or --extractor is required")),
    };
    match (kind, model) {
        (ExtractorKind::Gbm, Some(path)) => Ok(Extractor::gbm(load_model_file(path)?)?),
        (kind, _) => Ok(Extractor::heuristic(kind)?),
    }
}

/// Canonical JSON for a prediction list, shared by `extract` and the
/// prediction endpoint so both emit identical bytes.
pub fn predictions_json(predictions: &[Prediction]) -> String {
    let mut s = serde_json::to_string_pretty(predictions).expect("predictions serialize");
    s.push('\n');
    s
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn extract(args: &ExtractArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let extractor = build_extractor(args.source.model.as_deref(), args.source.extractor.as_deref())?;
    let html = String::from_utf8_lossy(&read_file(&args.input)?).into_owned();
    let page = PageAnalysis::new(&html, args.viewport)?;
    let predictions = extractor.predict(&page)?;
    match args.format {
        OutputFormat::Json => out.write_all(predictions_json(&predictions).as_bytes())?,
        OutputFormat::Html => {
            let labels = predictions.iter().map(|p| (p.node_id, p.label)).collect();
            let html = serialize_annotated_with(&page.doc, &labels, SerializeOptions { outline: true })?;
            writeln!(out, "{html}")?;
        }
    }
    Ok(())
}

fn reports_for(
    predictions: &BTreeMap<String, PagePredictions>,
    pages: &[LabeledPage],
    targets: &[Target],
) -> Result<BTreeMap<Target, EvalReport>, CliError> {
    targets.iter().map(|&t| Ok((t, evaluate(predictions, pages, t)?))).collect()
}

fn targets_for(target: Target) -> Vec<Target> {
    match target {
        Target::All => vec![Target::Text, Target::Images, Target::All],
        t => vec![t],
    }
}

fn warn_dataset(pages: &[LabeledPage]) -> Vec<String> {
    let warnings: Vec<String> =
        pages.iter().flat_map(|p| p.warnings.iter().map(move |w| format!("{}: {w}", p.page_id))).collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    warnings
}

fn warn_missing(name: &str, reports: &BTreeMap<Target, EvalReport>) {
    if let Some(r) = reports.values().find(|r| r.target == Target::All).or_else(|| reports.values().next()) {
        if r.missing_predictions > 0 {
            eprintln!("warning: {name}: {} labeled elements had no prediction and count as NR", r.missing_predictions);
        }
    }
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pages = load_dataset(&args.dataset)?;
    let warnings = warn_dataset(&pages);
    let (train_pages, test_pages) = split_dataset(&pages, args.split, args.seed)?;
    let config = TrainingConfig {
        iterations: args.iterations,
        num_leaves: args.leaves,
        learning_rate: args.learning_rate,
        shrinkage: args.shrinkage,
        min_docs_per_leaf: args.min_docs,
        seed: args.seed,
    };
    let model = train_on_pages(&train_pages, &config, args.viewport)?;
    write_atomic(&args.out, &save_model(&model))?;
    let extractor = Extractor::gbm(model)?;
    let predictions = extractor.predict_pages(&test_pages, args.viewport)?;
    let reports = reports_for(&predictions, &test_pages, &[Target::Text, Target::Images])?;
    let summary = json!({
        "tool": TOOL,
        "version": VERSION,
        "extractor": "gbm",
        "model": args.out,
        "config": config,
        "split": args.split,
        "seed": args.seed,
        "train_pages": train_pages.iter().map(|p| &p.page_id).collect::<Vec<_>>(),
        "test_pages": test_pages.iter().map(|p| &p.page_id).collect::<Vec<_>>(),
        "warnings": warnings,
        "reports": reports,
    });
    out.write_all(to_json(&summary).as_bytes())?;
    Ok(())
}

enum Scorer {
    Oracle,
    Extractor(Extractor),
}

impl Scorer {
    fn build(name: Option<&str>, model: Option<&Path>) -> Result<(String, Self), CliError> {
        if name == Some("oracle") {
            return Ok(("oracle".into(), Scorer::Oracle));
        }
        let e = build_extractor(model, name)?;
        Ok((e.kind().to_string(), Scorer::Extractor(e)))
    }

    fn predict(&self, pages: &[LabeledPage], viewport: Viewport) -> Result<BTreeMap<String, PagePredictions>, CliError> {
        match self {
            Scorer::Oracle => Ok(oracle_predictions(pages)),
            Scorer::Extractor(e) => Ok(e.predict_pages(pages, viewport)?),
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    extractor: String,
    target: Target,
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
    macro_precision: Option<f64>,
    macro_recall: Option<f64>,
    macro_f1: Option<f64>,
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let all_pages = load_dataset(&args.dataset)?;
    let pages = match args.split {
        Some(ratio) => split_dataset(&all_pages, ratio, args.seed)?.1,
        None => all_pages,
    };
    let warnings = warn_dataset(&pages);
    let targets = targets_for(args.target);
    let page_ids: Vec<&String> = pages.iter().map(|p| &p.page_id).collect();
    let body = if let Some(names) = &args.compare {
        let mut rows = Vec::new();
        for name in names {
            let (name, scorer) = Scorer::build(Some(name.trim()), args.model.as_deref())?;
            let reports = reports_for(&scorer.predict(&pages, args.viewport)?, &pages, &targets)?;
            warn_missing(&name, &reports);
            rows.extend(reports.into_values().map(|r| CompareRow {
                extractor: name.clone(),
                target: r.target,
                precision: r.precision,
                recall: r.recall,
                f1: r.f1,
                macro_precision: r.macro_precision,
                macro_recall: r.macro_recall,
                macro_f1: r.macro_f1,
            }));
        }
        json!({ "tool": TOOL, "version": VERSION, "pages": page_ids, "warnings": warnings, "rows": rows })
    } else {
        let (name, scorer) = Scorer::build(args.extractor.as_deref(), args.model.as_deref())?;
        let reports = reports_for(&scorer.predict(&pages, args.viewport)?, &pages, &targets)?;
        warn_missing(&name, &reports);
        json!({
            "tool": TOOL,
            "version": VERSION,
            "extractor": name,
            "pages": page_ids,
            "warnings": warnings,
            "reports": reports,
        })
    };
    out.write_all(to_json(&body).as_bytes())?;
    Ok(())
}

pub fn synth_cmd(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let pages = synth::generate(args.pages, args.seed)?;
    dataset::save_dataset(&args.out, &pages)?;
    let labels: usize = pages.iter().map(|p| p.labels.len()).sum();
    let relevant: usize = pages.iter().flat_map(|p| &p.labels).filter(|r| r.label.is_relevant()).count();
    let summary = json!({ "out": args.out, "pages": pages.len(), "labels": labels, "relevant": relevant });
    out.write_all(to_json(&summary).as_bytes())?;
    Ok(())
}

/// Page id for a URL: host and path segments joined by `_`, restricted to
/// the characters allowed in page ids.
pub fn page_id_for_url(url: &str) -> String {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let rest = rest.split(['?', '#']).next().unwrap_or("");
    let id: String = rest
        .split('/')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '.') { c } else { '_' })
        .collect();
    let id = id.trim_start_matches('.').to_string();
    if id.is_empty() {
        "page".to_string()
    } else {
        id
    }
}

pub fn fetch(args: &FetchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let page_id = args.page_id.clone().unwrap_or_else(|| page_id_for_url(&args.url));
    if !dataset::valid_page_id(&page_id) {
        return Err(CliError::new(EXIT_USAGE, format!("invalid page id {page_id:?}")));
    }
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    let body = runtime.block_on(async {
        let client = reqwest::Client::builder().user_agent(USER_AGENT).build()?;
        client.get(&args.url).send().await?.error_for_status()?.bytes().await
    });
    let body = body.map_err(|e| CliError::new(EXIT_FAILURE, format!("fetch {} failed: {e}", args.url)))?;
    let dir = args.out.join(&page_id);
    fs::create_dir_all(&dir)?;
    write_atomic(&dir.join(dataset::PAGE_FILE), &body)?;
    let labels = dir.join(dataset::LABELS_FILE);
    if !labels.exists() {
        dataset::write_labels(&labels, &[])?;
    }
    out.write_all(to_json(&json!({ "page_id": page_id, "bytes": body.len() })).as_bytes())?;
    Ok(())
}

pub fn features_dump(input: &Path, what: DumpKind, viewport: Viewport, out: &mut dyn Write) -> Result<(), CliError> {
    let html = String::from_utf8_lossy(&read_file(input)?).into_owned();
    let page = PageAnalysis::new(&html, viewport)?;
    match what {
        DumpKind::Layout => out.write_all(to_json(&page.layout.boxes).as_bytes())?,
        DumpKind::Features => {
            let csv = pagesift::features::to_csv(&page.candidates, &page.features, &pagesift::FeatureSchema::current());
            out.write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let extractor = match (&args.model, &args.extractor) {
        (None, None) => None,
        (model, name) => Some(build_extractor(model.as_deref(), name.as_deref())?),
    };
    if !args.dataset.is_dir() {
        return Err(CliError::new(EXIT_FAILURE, format!("dataset directory {} not found", args.dataset.display())));
    }
    let state = crate::server::AppState::new(args.dataset.clone(), extractor, args.viewport);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.listen)
            .await
            .map_err(|e| CliError::new(EXIT_BIND, format!("cannot bind {}: {e}", args.listen)))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, crate::server::router(state)).await?;
        Ok::<(), CliError>(())
    })
}

pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Extract(a) => extract(a, out),
        Command::Train(a) => train(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Synth(a) => synth_cmd(a, out),
        Command::Fetch(a) => fetch(a, out),
        Command::Serve(a) => serve(a),
        Command::Features { action: FeaturesAction::Dump { input, what, viewport } } => {
            features_dump(input, *what, *viewport, out)
        }
    }
}
