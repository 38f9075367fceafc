//! Python module `pagesift`: parsing, layout, feature extraction, training,
//! extraction and evaluation over the Rust core.

use std::path::PathBuf;

use pagesift::dataset::{list_pages, load_dataset, save_dataset, split_dataset};
use pagesift::eval::oracle_predictions;
use pagesift::pipeline::{train_on_pages, PageAnalysis};
use pagesift::{
    evaluate as evaluate_pages, load_model, parse_document, save_model, synth, Extractor, ExtractorKind, FeatureSchema,
    GbmModel, ParseConfig, Target, TrainingConfig, Viewport,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn viewport((w, h): (u32, u32)) -> PyResult<Viewport> {
    Viewport::new(w, h).map_err(err)
}

fn extractor(name: &str, model: Option<&Model>) -> PyResult<Extractor> {
    match model {
        Some(m) => Extractor::gbm(m.inner.clone()).map_err(err),
        None => Extractor::heuristic(name.parse::<ExtractorKind>().map_err(err)?).map_err(err),
    }
}

/// A trained gradient boosted tree model.
#[pyclass(frozen, module = "pagesift")]
struct Model {
    inner: GbmModel,
}

#[pymethods]
impl Model {
    /// Train on `split` of the pages in `dataset` (shuffled by `seed`).
    #[staticmethod]
    #[pyo3(signature = (dataset, iterations=50, num_leaves=92, learning_rate=0.4, shrinkage=0.53, min_docs=10, split=0.7, seed=0, viewport=(1280, 800)))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        dataset: PathBuf,
        iterations: usize,
        num_leaves: usize,
        learning_rate: f64,
        shrinkage: f64,
        min_docs: usize,
        split: f64,
        seed: u64,
        viewport: (u32, u32),
    ) -> PyResult<Self> {
        let vp = self::viewport(viewport)?;
        let pages = load_dataset(&dataset).map_err(err)?;
        let (train, _) = split_dataset(&pages, split, seed).map_err(err)?;
        let config = TrainingConfig { iterations, num_leaves, learning_rate, shrinkage, min_docs_per_leaf: min_docs, seed };
        Ok(Self { inner: train_on_pages(&train, &config, vp).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Self { inner: load_model(&bytes).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: load_model(text.as_bytes()).map_err(err)? })
    }

    fn to_json(&self) -> String {
        String::from_utf8(save_model(&self.inner)).expect("model file is UTF-8")
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(&path, save_model(&self.inner)).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
    }

    #[getter]
    fn num_trees(&self) -> usize {
        self.inner.trees.len()
    }

    /// Probability of relevance for one feature row.
    fn predict_proba(&self, row: Vec<f64>) -> PyResult<f64> {
        pagesift::gbm::predict(&self.inner, &row).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Model(trees={}, features={})", self.inner.trees.len(), self.inner.schema.width())
    }
}

type NodeRow = (usize, String, Option<usize>, usize);

/// Elements of the parsed document as `(node_id, tag, parent, depth)`.
#[pyfunction]
fn parse(html: &str) -> PyResult<Vec<NodeRow>> {
    let doc = parse_document(html, &ParseConfig::default()).map_err(err)?;
    Ok(doc.elements().iter().map(|e| (e.node_id, e.tag.clone(), e.parent, e.depth)).collect())
}

/// Layout boxes for every element as a JSON array.
#[pyfunction]
#[pyo3(signature = (html, viewport=(1280, 800)))]
fn layout(html: &str, viewport: (u32, u32)) -> PyResult<String> {
    let page = PageAnalysis::new(html, self::viewport(viewport)?).map_err(err)?;
    serde_json::to_string(&page.layout.boxes).map_err(err)
}

#[pyfunction]
fn feature_names() -> Vec<String> {
    FeatureSchema::current().names
}

/// Candidate node ids and their feature rows.
#[pyfunction]
#[pyo3(signature = (html, viewport=(1280, 800)))]
fn features(html: &str, viewport: (u32, u32)) -> PyResult<(Vec<usize>, Vec<Vec<f64>>)> {
    let page = PageAnalysis::new(html, self::viewport(viewport)?).map_err(err)?;
    Ok((page.candidates, page.features.rows().map(<[f64]>::to_vec).collect()))
}

/// Classify candidates as `(node_id, tag, label, score)`. A `model` takes
/// precedence over the heuristic `extractor` name.
#[pyfunction]
#[pyo3(signature = (html, extractor="mss", model=None, viewport=(1280, 800)))]
fn extract(
    html: &str,
    extractor: &str,
    model: Option<PyRef<'_, Model>>,
    viewport: (u32, u32),
) -> PyResult<Vec<(usize, String, String, f64)>> {
    let ex = self::extractor(extractor, model.as_deref())?;
    let preds = ex.predict_html(html, self::viewport(viewport)?).map_err(err)?;
    Ok(preds.into_iter().map(|p| (p.node_id, p.tag, p.label.to_string(), p.score)).collect())
}

/// Evaluation report as JSON. With `split`, only the held-out pages of that
/// split are scored. The extractor name `oracle` replays the ground truth.
#[pyfunction]
#[pyo3(signature = (dataset, extractor="mss", model=None, target="all", split=None, seed=0, viewport=(1280, 800)))]
fn evaluate(
    dataset: PathBuf,
    extractor: &str,
    model: Option<PyRef<'_, Model>>,
    target: &str,
    split: Option<f64>,
    seed: u64,
    viewport: (u32, u32),
) -> PyResult<String> {
    let target: Target = target.parse().map_err(err)?;
    let mut pages = load_dataset(&dataset).map_err(err)?;
    if let Some(ratio) = split {
        pages = split_dataset(&pages, ratio, seed).map_err(err)?.1;
    }
    let preds = if model.is_none() && extractor == "oracle" {
        oracle_predictions(&pages)
    } else {
        self::extractor(extractor, model.as_deref())?.predict_pages(&pages, self::viewport(viewport)?).map_err(err)?
    };
    let report = evaluate_pages(&preds, &pages, target).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// Write a synthetic labeled corpus and return its page ids.
#[pyfunction]
#[pyo3(signature = (out, pages=40, seed=0))]
fn synth_corpus(out: PathBuf, pages: usize, seed: u64) -> PyResult<Vec<String>> {
    let corpus = synth::generate(pages, seed).map_err(err)?;
    save_dataset(&out, &corpus).map_err(err)?;
    list_pages(&out).map_err(err)
}

#[pymodule]
#[pyo3(name = "pagesift")]
fn pagesift_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(layout, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
