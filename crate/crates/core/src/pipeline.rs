//! Page analysis and the extractor registry shared by the CLI, the server
//! and the bindings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{block_stats, cetr_classify, mss_classify, shallow_text_classify, token_stream, Labels, ShallowConfig};
use crate::dataset::LabeledPage;
use crate::dom::{parse_document, Document, NodeId, ParseConfig};
use crate::eval::PagePredictions;
use crate::features::{extract_all, FeatureSchema};
use crate::gbm::{predict, train, GbmError, GbmModel, TrainingConfig};
use crate::label::Label;
use crate::layout::{compute_layout, LayoutTree, Viewport};
use crate::matrix::FeatureMatrix;
use crate::Error;

/// Decision threshold on the predicted probability.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// A parsed page with its layout, candidates and feature rows.
#[derive(Debug, Clone)]
pub struct PageAnalysis {
    pub doc: Document,
    pub layout: LayoutTree,
    pub candidates: Vec<NodeId>,
    pub features: FeatureMatrix,
}

impl PageAnalysis {
    pub fn new(html: &str, viewport: Viewport) -> Result<Self, Error> {
        Self::from_document(parse_document(html, &ParseConfig::default())?, viewport)
    }

    pub fn from_document(doc: Document, viewport: Viewport) -> Result<Self, Error> {
        let layout = compute_layout(&doc, viewport);
        let (candidates, features) = extract_all(&doc, &layout);
        Ok(Self { doc, layout, candidates, features })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtractorKind {
    Gbm,
    Shallow,
    Cetr,
    Mss,
}

impl ExtractorKind {
    pub const ALL: [ExtractorKind; 4] = [Self::Gbm, Self::Shallow, Self::Cetr, Self::Mss];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gbm => "gbm",
            Self::Shallow => "shallow",
            Self::Cetr => "cetr",
            Self::Mss => "mss",
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtractorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| Error::UnknownExtractor(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub enum Extractor {
    Gbm { model: GbmModel, threshold: f64 },
    Shallow(ShallowConfig),
    Cetr,
    Mss,
}

/// One classified candidate, in document order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub node_id: NodeId,
    pub tag: String,
    pub label: Label,
    /// Probability of `R` for the learned model; 1 or 0 for heuristics.
    pub score: f64,
}

impl Extractor {
    /// A learned extractor; the model must use the current feature schema.
    pub fn gbm(model: GbmModel) -> Result<Self, Error> {
        let current = FeatureSchema::current();
        if model.schema.names != current.names {
            return Err(GbmError::SchemaMismatch { expected: current.width(), got: model.schema.width() }.into());
        }
        Ok(Self::Gbm { model, threshold: DEFAULT_THRESHOLD })
    }

    /// A heuristic extractor by name. `gbm` needs a model and is rejected.
    pub fn heuristic(kind: ExtractorKind) -> Result<Self, Error> {
        match kind {
            ExtractorKind::Shallow => Ok(Self::Shallow(ShallowConfig::default())),
            ExtractorKind::Cetr => Ok(Self::Cetr),
            ExtractorKind::Mss => Ok(Self::Mss),
            ExtractorKind::Gbm => Err(Error::ModelRequired),
        }
    }

    pub fn kind(&self) -> ExtractorKind {
        match self {
            Self::Gbm { .. } => ExtractorKind::Gbm,
            Self::Shallow(_) => ExtractorKind::Shallow,
            Self::Cetr => ExtractorKind::Cetr,
            Self::Mss => ExtractorKind::Mss,
        }
    }

    pub fn predict(&self, page: &PageAnalysis) -> Result<Vec<Prediction>, Error> {
        let make = |id: NodeId, label: Label, score: f64| Prediction {
            node_id: id,
            tag: page.doc.elements()[id].tag.clone(),
            label,
            score,
        };
        let from_labels = |labels: Labels| {
            page.candidates
                .iter()
                .map(|&id| {
                    let label = labels.get(&id).copied().unwrap_or(Label::NotRelevant);
                    make(id, label, if label.is_relevant() { 1.0 } else { 0.0 })
                })
                .collect()
        };
        Ok(match self {
            Self::Gbm { model, threshold } => page
                .candidates
                .iter()
                .zip(page.features.rows())
                .map(|(&id, row)| {
                    let p = predict(model, row)?;
                    Ok(make(id, Label::from_bool(p >= *threshold), p))
                })
                .collect::<Result<_, GbmError>>()?,
            Self::Shallow(config) => from_labels(shallow_text_classify(&block_stats(&page.doc, &page.layout), config)),
            Self::Cetr => from_labels(cetr_classify(&page.doc, &page.layout)),
            Self::Mss => from_labels(mss_classify(&token_stream(&page.doc, &page.layout))),
        })
    }

    pub fn predict_html(&self, html: &str, viewport: Viewport) -> Result<Vec<Prediction>, Error> {
        self.predict(&PageAnalysis::new(html, viewport)?)
    }

    /// Label maps for every page, keyed by page id.
    pub fn predict_pages(
        &self,
        pages: &[LabeledPage],
        viewport: Viewport,
    ) -> Result<BTreeMap<String, PagePredictions>, Error> {
        pages
            .iter()
            .map(|p| {
                let preds = self.predict_html(&p.html, viewport)?;
                Ok((p.page_id.clone(), preds.into_iter().map(|x| (x.node_id, x.label)).collect()))
            })
            .collect()
    }
}

/// Feature rows and 0/1 targets for the labeled candidates of `pages`.
/// Labels on elements that are not candidates under `viewport` are skipped.
pub fn training_set(pages: &[LabeledPage], viewport: Viewport) -> Result<(FeatureMatrix, Vec<u8>), Error> {
    let mut matrix = FeatureMatrix::new(FeatureSchema::current().width());
    let mut targets = Vec::new();
    for page in pages {
        let analysis = PageAnalysis::new(&page.html, viewport)?;
        let labels = page.label_map();
        for (&id, row) in analysis.candidates.iter().zip(analysis.features.rows()) {
            if let Some(label) = labels.get(&id) {
                matrix.push_row(row);
                targets.push(u8::from(label.is_relevant()));
            }
        }
    }
    Ok((matrix, targets))
}

pub fn train_on_pages(pages: &[LabeledPage], config: &TrainingConfig, viewport: Viewport) -> Result<GbmModel, Error> {
    let (x, y) = training_set(pages, viewport)?;
    Ok(train(&x, &y, config, &FeatureSchema::current())?)
}
