//! Layout-aware relevance extraction for HTML pages: a lenient DOM, a
//! block layout engine, per-element features, a gradient boosted tree
//! classifier, heuristic baselines, labeled datasets and evaluation.

pub mod baselines;
pub mod dataset;
pub mod dom;
pub mod eval;
pub mod features;
pub mod gbm;
pub mod label;
pub mod layout;
pub mod matrix;
pub mod pipeline;
pub mod synth;
pub mod tags;

pub use dataset::{load_dataset, save_dataset, split_dataset, DatasetError, LabelRecord, LabeledPage};
pub use dom::{element_text, parse_document, Document, DomError, ElementNode, NodeId, ParseConfig};
pub use eval::{evaluate, EvalError, EvalReport, Target};
pub use features::{extract_all, extract_features, FeatureSchema, FeatureVector};
pub use gbm::{load_model, save_model, train, GbmError, GbmModel, TrainingConfig};
pub use label::Label;
pub use layout::{compute_layout, visible_candidates, LayoutBox, LayoutError, LayoutTree, Viewport};
pub use matrix::FeatureMatrix;
pub use pipeline::{Extractor, ExtractorKind, PageAnalysis, Prediction};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dom(#[from] DomError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Gbm(#[from] GbmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown extractor {0:?}, expected one of gbm, shallow, cetr, mss")]
    UnknownExtractor(String),
    #[error("the gbm extractor needs a model file")]
    ModelRequired,
}
