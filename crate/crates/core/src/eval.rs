//! Precision, recall and F1 over labeled elements, pooled (micro) and
//! averaged per page (macro). The positive class is `R`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledPage;
use crate::dom::NodeId;
use crate::label::Label;

pub type PagePredictions = BTreeMap<NodeId, Label>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no ground-truth pages to evaluate")]
    EmptyTruth,
    #[error("unknown target {0:?}, expected text, images or all")]
    UnknownTarget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Text,
    Images,
    All,
}

impl Target {
    pub fn includes_tag(self, tag: &str) -> bool {
        match self {
            Target::Text => tag != "IMG",
            Target::Images => tag == "IMG",
            Target::All => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Text => "text",
            Target::Images => "images",
            Target::All => "all",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Target::Text),
            "images" => Ok(Target::Images),
            "all" => Ok(Target::All),
            other => Err(EvalError::UnknownTarget(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn add(&mut self, truth: Label, predicted: Label) {
        match (truth.is_relevant(), predicted.is_relevant()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target: Target,
    #[serde(flatten)]
    pub counts: Confusion,
    /// Micro (pooled) metrics; null when the slice has no labeled elements.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Means of per-page metrics over pages with at least one positive.
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub macro_f1: Option<f64>,
    pub pages_evaluated: usize,
    pub pages_skipped_macro: usize,
    pub missing_predictions: usize,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Score predictions against ground truth. Only labeled elements count; a
/// labeled element without a prediction counts as `NR`.
pub fn evaluate(
    predictions: &BTreeMap<String, PagePredictions>,
    truth: &[LabeledPage],
    target: Target,
) -> Result<EvalReport, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let empty = PagePredictions::new();
    let mut pooled = Confusion::default();
    let (mut macro_p, mut macro_r, mut macro_f) = (Vec::new(), Vec::new(), Vec::new());
    let mut pages_evaluated = 0;
    let mut pages_skipped_macro = 0;
    let mut missing = 0;
    for page in truth {
        let preds = predictions.get(&page.page_id).unwrap_or(&empty);
        let mut page_counts = Confusion::default();
        for record in page.labels.iter().filter(|r| target.includes_tag(&r.tag)) {
            let Some(id) = record.node_id() else { continue };
            let predicted = match preds.get(&id) {
                Some(l) => *l,
                None => {
                    missing += 1;
                    Label::NotRelevant
                }
            };
            page_counts.add(record.label, predicted);
        }
        if page_counts.total() == 0 {
            continue;
        }
        pages_evaluated += 1;
        if page_counts.tp + page_counts.fn_ == 0 {
            pages_skipped_macro += 1;
        } else {
            macro_p.push(page_counts.precision());
            macro_r.push(page_counts.recall());
            macro_f.push(page_counts.f1());
        }
        pooled.merge(&page_counts);
    }
    let has_data = pooled.total() > 0;
    Ok(EvalReport {
        target,
        counts: pooled,
        precision: has_data.then(|| pooled.precision()),
        recall: has_data.then(|| pooled.recall()),
        f1: has_data.then(|| pooled.f1()),
        macro_precision: mean(&macro_p),
        macro_recall: mean(&macro_r),
        macro_f1: mean(&macro_f),
        pages_evaluated,
        pages_skipped_macro,
        missing_predictions: missing,
    })
}

/// Predictions that reproduce the ground truth exactly.
pub fn oracle_predictions(truth: &[LabeledPage]) -> BTreeMap<String, PagePredictions> {
    truth.iter().map(|p| (p.page_id.clone(), p.label_map())).collect()
}
