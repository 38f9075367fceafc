use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pagesift::{Target, Viewport};

#[derive(Debug, Parser)]
#[command(name = "pagesift", version, about = "Classify page elements as relevant content or boilerplate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every candidate element of one HTML file.
    Extract(ExtractArgs),
    /// Train a model on a labeled dataset and report held-out accuracy.
    Train(TrainArgs),
    /// Score an extractor against a labeled dataset.
    Eval(EvalArgs),
    /// Write a seeded synthetic labeled dataset.
    Synth(SynthArgs),
    /// Download a page into the dataset layout.
    Fetch(FetchArgs),
    /// Serve the labeling and prediction HTTP API.
    Serve(ServeArgs),
    /// Inspect layout and features of one HTML file.
    Features {
        #[command(subcommand)]
        action: FeaturesAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Html,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct ExtractorSource {
    /// Trained model file (uses the gbm extractor).
    #[arg(long, group = "source")]
    pub model: Option<PathBuf>,
    /// Extractor name: gbm, shallow, cetr or mss.
    #[arg(long, group = "source")]
    pub extractor: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub source: ExtractorSource,
    #[arg(long, default_value = "1280x800")]
    pub viewport: Viewport,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[arg(long, default_value_t = 92)]
    pub leaves: usize,
    #[arg(long, default_value_t = 0.4)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.53)]
    pub shrinkage: f64,
    #[arg(long, default_value_t = 10)]
    pub min_docs: usize,
    /// Fraction of pages used for training.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "1280x800")]
    pub viewport: Viewport,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Extractor name: gbm, shallow, cetr, mss or oracle.
    #[arg(long)]
    pub extractor: Option<String>,
    /// Model file for the gbm extractor.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    pub target: Target,
    /// Comma-separated extractor names to tabulate side by side.
    #[arg(long, value_delimiter = ',')]
    pub compare: Option<Vec<String>>,
    /// Evaluate only the held-out part of this train/test split.
    #[arg(long)]
    pub split: Option<f64>,
    /// Seed of the split; must match the one used for training.
    #[arg(long, default_value_t = 0, requires = "split")]
    pub seed: u64,
    #[arg(long, default_value = "1280x800")]
    pub viewport: Viewport,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub pages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub url: String,
    /// Dataset root; the page lands in `<out>/<page_id>/page.html`.
    #[arg(long)]
    pub out: PathBuf,
    /// Page id; derived from the URL when omitted.
    #[arg(long)]
    pub page_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: String,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Heuristic extractor for predictions when no model is given.
    #[arg(long, conflicts_with = "model")]
    pub extractor: Option<String>,
    #[arg(long, default_value = "1280x800")]
    pub viewport: Viewport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    /// Boxes of every element as JSON.
    Layout,
    /// Feature rows of every candidate as CSV.
    Features,
}

#[derive(Debug, Subcommand)]
pub enum FeaturesAction {
    Dump {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "layout")]
        what: DumpKind,
        #[arg(long, default_value = "1280x800")]
        viewport: Viewport,
    },
}
