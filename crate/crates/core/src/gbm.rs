//! MART-style gradient boosting for binary relevance classification.
//!
//! Each iteration fits a regression tree to the logistic-loss gradients
//! with Newton leaf values, grows it best-first up to `num_leaves` leaves,
//! then scales every leaf by `learning_rate * shrinkage` before adding it to
//! the ensemble. Split search is exact: every midpoint between adjacent
//! distinct feature values is a candidate threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureSchema;
use crate::label::Label;
use crate::matrix::FeatureMatrix;

pub const MODEL_VERSION: &str = "gbm-v1";

/// Regularizer added to hessian sums in gains and leaf values.
pub const HESSIAN_EPSILON: f64 = 1e-9;

/// Gains closer than this (relative to the larger of 1 and the incumbent)
/// count as ties, which then resolve to the lower feature index, the lower
/// threshold, or the lower leaf index.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A split must beat zero by this much relative to the parent term;
/// smaller gains are rounding noise from re-summing identical gradients.
pub const MIN_RELATIVE_GAIN: f64 = 1e-12;

const PARALLEL_MIN_CELLS: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbmError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("labels contain a single class; need both relevant and non-relevant rows")]
    DegenerateLabels,
    #[error("feature width {got} does not match model schema width {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("{what} length {got} does not match {expected} feature rows")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub iterations: usize,
    pub num_leaves: usize,
    pub learning_rate: f64,
    pub shrinkage: f64,
    pub min_docs_per_leaf: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            iterations: 50,
            num_leaves: 92,
            learning_rate: 0.4,
            shrinkage: 0.53,
            min_docs_per_leaf: 10,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), GbmError> {
        let bad = |msg: &str| Err(GbmError::InvalidConfig(msg.to_string()));
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.num_leaves < 2 {
            return bad("num_leaves must be >= 2");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return bad("shrinkage must be in (0, 1]");
        }
        if self.min_docs_per_leaf < 1 {
            return bad("min_docs_per_leaf must be >= 1");
        }
        Ok(())
    }

    /// Multiplier applied to every fitted leaf value.
    pub fn step_scale(&self) -> f64 {
        self.learning_rate * self.shrinkage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Binary regression tree stored as a node array rooted at index 0.
/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn scale(&mut self, k: f64) {
        for node in &mut self.nodes {
            if let TreeNode::Leaf { value } = node {
                *value *= k;
            }
        }
    }

    fn check(&self, width: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        // Children must point forward so the structure is acyclic.
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Leaf { value } if !value.is_finite() => {
                    return Err(format!("leaf {i} has a non-finite value"));
                }
                TreeNode::Split { feature, threshold, left, right } => {
                    if feature >= width {
                        return Err(format!("node {i} splits on feature {feature} outside schema"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i} has a non-finite threshold"));
                    }
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() {
                        return Err(format!("node {i} has invalid children"));
                    }
                }
                TreeNode::Leaf { .. } => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// True when `gain` beats `incumbent` by more than the tie tolerance.
pub fn improves(gain: f64, incumbent: f64) -> bool {
    gain > incumbent + TIE_TOLERANCE * incumbent.abs().max(1.0)
}

/// Newton gain term `G^2 / (H + eps)`.
pub fn score_term(g: f64, h: f64) -> f64 {
    g * g / (h + HESSIAN_EPSILON)
}

pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

fn sums(rows: &[usize], gradients: &[f64], hessians: &[f64]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + gradients[r], h + hessians[r]))
}

fn best_split_for_feature(
    features: &FeatureMatrix,
    rows: &[usize],
    gradients: &[f64],
    hessians: &[f64],
    feature: usize,
    totals: (f64, f64),
    min_docs: usize,
) -> Option<SplitCandidate> {
    let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&r| (features.get(r, feature), r)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (g_total, h_total) = totals;
    let parent = score_term(g_total, h_total);
    let n = sorted.len();
    let mut best: Option<SplitCandidate> = None;
    let (mut g_left, mut h_left) = (0.0, 0.0);
    for i in 1..n {
        let (prev_value, prev_row) = sorted[i - 1];
        g_left += gradients[prev_row];
        h_left += hessians[prev_row];
        let value = sorted[i].0;
        if prev_value == value || i < min_docs || n - i < min_docs {
            continue;
        }
        let gain = score_term(g_left, h_left) + score_term(g_total - g_left, h_total - h_left) - parent;
        if best.is_none_or(|b| improves(gain, b.gain)) {
            best = Some(SplitCandidate { feature, threshold: midpoint(prev_value, value), gain });
        }
    }
    best
}

/// Best split of `rows`, or `None` when no split has a positive gain.
pub fn best_split(
    features: &FeatureMatrix,
    rows: &[usize],
    gradients: &[f64],
    hessians: &[f64],
    min_docs: usize,
) -> Option<SplitCandidate> {
    let totals = sums(rows, gradients, hessians);
    let search = |f: usize| best_split_for_feature(features, rows, gradients, hessians, f, totals, min_docs);
    let per_feature: Vec<Option<SplitCandidate>> = if rows.len() * features.n_cols() >= PARALLEL_MIN_CELLS {
        (0..features.n_cols()).into_par_iter().map(search).collect()
    } else {
        (0..features.n_cols()).map(search).collect()
    };
    let best = per_feature.into_iter().flatten().fold(None, |best: Option<SplitCandidate>, c| match best {
        Some(b) if !improves(c.gain, b.gain) => Some(b),
        _ => Some(c),
    })?;
    let parent = score_term(totals.0, totals.1);
    (best.gain > MIN_RELATIVE_GAIN * parent.abs().max(1.0)).then_some(best)
}

/// Fit one regression tree to per-row gradients and hessians, growing
/// best-first until `config.num_leaves` leaves or no admissible split.
pub fn fit_tree(
    features: &FeatureMatrix,
    gradients: &[f64],
    hessians: &[f64],
    config: &TrainingConfig,
) -> Result<RegressionTree, GbmError> {
    let n = features.n_rows();
    if n == 0 {
        return Err(GbmError::EmptyTraining);
    }
    for (what, len) in [("gradients", gradients.len()), ("hessians", hessians.len())] {
        if len != n {
            return Err(GbmError::LengthMismatch { what, expected: n, got: len });
        }
    }
    let min_docs = config.min_docs_per_leaf.max(1);

    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let all_rows: Vec<usize> = (0..n).collect();
    let root_best = best_split(features, &all_rows, gradients, hessians, min_docs);
    // Per node: rows reaching it (leaves only) and its pending best split.
    let mut leaf_rows: Vec<Option<Vec<usize>>> = vec![Some(all_rows)];
    let mut pending: Vec<Option<SplitCandidate>> = vec![root_best];
    let mut leaves = 1;

    while leaves < config.num_leaves {
        let mut chosen: Option<(usize, f64)> = None;
        for (i, cand) in pending.iter().enumerate() {
            if let Some(c) = cand {
                if chosen.is_none_or(|(_, g)| improves(c.gain, g)) {
                    chosen = Some((i, c.gain));
                }
            }
        }
        let Some((leaf, _)) = chosen else { break };
        let split = pending[leaf].take().expect("chosen leaf has a split");
        let rows = leaf_rows[leaf].take().expect("chosen node is a leaf");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| features.get(r, split.feature) <= split.threshold);
        let left = nodes.len();
        let right = left + 1;
        nodes[leaf] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
        for child_rows in [left_rows, right_rows] {
            nodes.push(TreeNode::Leaf { value: 0.0 });
            pending.push(best_split(features, &child_rows, gradients, hessians, min_docs));
            leaf_rows.push(Some(child_rows));
        }
        leaves += 1;
    }

    for (i, rows) in leaf_rows.iter().enumerate() {
        if let Some(rows) = rows {
            let (g, h) = sums(rows, gradients, hessians);
            nodes[i] = TreeNode::Leaf { value: g / (h + HESSIAN_EPSILON) };
        }
    }
    Ok(RegressionTree { nodes })
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Mean logistic loss of raw scores against 0/1 labels.
pub fn logistic_loss(scores: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| if y == 1 { softplus(-s) } else { softplus(s) })
        .sum();
    total / scores.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmModel {
    pub prior: f64,
    pub trees: Vec<RegressionTree>,
    pub schema: FeatureSchema,
    pub config: TrainingConfig,
}

impl GbmModel {
    pub fn score(&self, x: &[f64]) -> Result<f64, GbmError> {
        if x.len() != self.schema.width() {
            return Err(GbmError::SchemaMismatch { expected: self.schema.width(), got: x.len() });
        }
        Ok(self.prior + self.trees.iter().map(|t| t.predict(x)).sum::<f64>())
    }
}

/// Probability that `x` is relevant.
pub fn predict(model: &GbmModel, x: &[f64]) -> Result<f64, GbmError> {
    model.score(x).map(sigmoid)
}

/// `R` iff the predicted probability is at least `threshold`.
pub fn classify(model: &GbmModel, x: &[f64], threshold: f64) -> Result<Label, GbmError> {
    predict(model, x).map(|p| Label::from_bool(p >= threshold))
}

pub fn train(
    features: &FeatureMatrix,
    labels: &[u8],
    config: &TrainingConfig,
    schema: &FeatureSchema,
) -> Result<GbmModel, GbmError> {
    train_with_trace(features, labels, config, schema).map(|(m, _)| m)
}

/// Train and also return the mean training loss before the first tree and
/// after each tree.
pub fn train_with_trace(
    features: &FeatureMatrix,
    labels: &[u8],
    config: &TrainingConfig,
    schema: &FeatureSchema,
) -> Result<(GbmModel, Vec<f64>), GbmError> {
    config.validate()?;
    let n = features.n_rows();
    if n == 0 {
        return Err(GbmError::EmptyTraining);
    }
    if labels.len() != n {
        return Err(GbmError::LengthMismatch { what: "labels", expected: n, got: labels.len() });
    }
    if features.n_cols() != schema.width() {
        return Err(GbmError::SchemaMismatch { expected: schema.width(), got: features.n_cols() });
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(GbmError::InvalidConfig("labels must be 0 or 1".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == n {
        return Err(GbmError::DegenerateLabels);
    }
    let p = positives as f64 / n as f64;
    let prior = (p / (1.0 - p)).ln();
    let mut scores = vec![prior; n];
    let mut trace = vec![logistic_loss(&scores, labels)];
    let mut trees = Vec::with_capacity(config.iterations);
    let mut gradients = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    for _ in 0..config.iterations {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            gradients[i] = f64::from(labels[i]) - p;
            hessians[i] = p * (1.0 - p);
        }
        let mut tree = fit_tree(features, &gradients, &hessians, config)?;
        tree.scale(config.step_scale());
        for (i, s) in scores.iter_mut().enumerate() {
            *s += tree.predict(features.row(i));
        }
        trees.push(tree);
        trace.push(logistic_loss(&scores, labels));
    }
    let model = GbmModel { prior, trees, schema: schema.clone(), config: config.clone() };
    Ok((model, trace))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: String,
    prior: f64,
    config: TrainingConfig,
    schema: Vec<String>,
    trees: Vec<RegressionTree>,
}

/// JSON model file. Floats are written in shortest round-trip form.
pub fn save_model(model: &GbmModel) -> Vec<u8> {
    let file = ModelFile {
        version: MODEL_VERSION.to_string(),
        prior: model.prior,
        config: model.config.clone(),
        schema: model.schema.names.clone(),
        trees: model.trees.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file).expect("model serializes");
    bytes.push(b'\n');
    bytes
}

pub fn load_model(bytes: &[u8]) -> Result<GbmModel, GbmError> {
    let file: ModelFile =
        serde_json::from_slice(bytes).map_err(|e| GbmError::MalformedModel(e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(GbmError::MalformedModel(format!(
            "unsupported version {:?}, expected {MODEL_VERSION:?}",
            file.version
        )));
    }
    if !file.prior.is_finite() {
        return Err(GbmError::MalformedModel("non-finite prior".into()));
    }
    file.config.validate().map_err(|e| GbmError::MalformedModel(e.to_string()))?;
    let current = FeatureSchema::current();
    let schema = if file.schema == current.names {
        current
    } else {
        FeatureSchema { names: file.schema, version: "custom".into() }
    };
    for (i, tree) in file.trees.iter().enumerate() {
        tree.check(schema.width()).map_err(|e| GbmError::MalformedModel(format!("tree {i}: {e}")))?;
    }
    Ok(GbmModel { prior: file.prior, trees: file.trees, schema, config: file.config })
}
