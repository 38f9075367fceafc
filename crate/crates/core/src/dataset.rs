//! Labeled page datasets on disk.
//!
//! Layout: `<root>/<page_id>/page.html` plus `<root>/<page_id>/labels.json`,
//! where `labels.json` is an array of `{label, tag, id, content}` objects.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{parse_document, Document, DomError, NodeId, ParseConfig};
use crate::label::Label;

pub const PAGE_FILE: &str = "page.html";
pub const LABELS_FILE: &str = "labels.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("malformed labels in {path}: {reason}")]
    MalformedLabels { path: PathBuf, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("need at least 2 pages to split, got {0}")]
    TooFewPages(usize),
    #[error("split ratio {0} must be strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("invalid page id {0:?}")]
    InvalidPageId(String),
    #[error(transparent)]
    Dom(#[from] DomError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// One element label, field-for-field as stored in `labels.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub label: Label,
    pub tag: String,
    pub id: String,
    pub content: String,
}

impl LabelRecord {
    pub fn node_id(&self) -> Option<NodeId> {
        self.id.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPage {
    pub page_id: String,
    pub html_path: PathBuf,
    pub html: String,
    pub labels: Vec<LabelRecord>,
    /// Problems that did not prevent loading, such as label ids that do
    /// not resolve to an element.
    pub warnings: Vec<String>,
}

impl LabeledPage {
    pub fn parse(&self) -> Result<Document, DomError> {
        parse_document(&self.html, &ParseConfig::default())
    }

    pub fn label_map(&self) -> BTreeMap<NodeId, Label> {
        self.labels.iter().filter_map(|r| r.node_id().map(|id| (id, r.label))).collect()
    }
}

/// Parse and validate a `labels.json` body. Errors carry a reason only;
/// callers attach the path.
pub fn parse_labels(bytes: &[u8]) -> Result<Vec<LabelRecord>, String> {
    let records: Vec<LabelRecord> = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    for (i, r) in records.iter().enumerate() {
        if r.id.is_empty() || !r.id.bytes().all(|b| b.is_ascii_digit()) || r.node_id().is_none() {
            return Err(format!("entry {i}: id {:?} is not a decimal string", r.id));
        }
        if r.tag.is_empty() || r.tag.chars().any(|c| c.is_ascii_lowercase()) {
            return Err(format!("entry {i}: tag {:?} must be a non-empty uppercase name", r.tag));
        }
    }
    Ok(records)
}

/// Canonical `labels.json` text: pretty-printed with two-space indent and a
/// trailing newline. Serializing parsed canonical output is the identity.
pub fn labels_to_json(records: &[LabelRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("labels serialize");
    s.push('\n');
    s
}

/// Warnings for labels whose ids do not resolve or whose tag disagrees
/// with the element.
pub fn resolve_warnings(doc: &Document, records: &[LabelRecord]) -> Vec<String> {
    records
        .iter()
        .filter_map(|r| {
            let id = r.node_id()?;
            match doc.element(id) {
                None => Some(format!("label id {id} does not resolve to an element")),
                Some(el) if el.tag != r.tag => {
                    Some(format!("label id {id} has tag {} but the element is {}", r.tag, el.tag))
                }
                Some(_) => None,
            }
        })
        .collect()
}

pub fn valid_page_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn load_page(root: &Path, page_id: &str) -> Result<LabeledPage, DatasetError> {
    if !valid_page_id(page_id) {
        return Err(DatasetError::InvalidPageId(page_id.to_string()));
    }
    let dir = root.join(page_id);
    let html_path = dir.join(PAGE_FILE);
    let labels_path = dir.join(LABELS_FILE);
    for p in [&html_path, &labels_path] {
        if !p.is_file() {
            return Err(DatasetError::MissingFile(p.clone()));
        }
    }
    let bytes = fs::read(&html_path).map_err(io_err(&html_path))?;
    let html = String::from_utf8_lossy(&bytes).into_owned();
    let raw_labels = fs::read(&labels_path).map_err(io_err(&labels_path))?;
    let labels = parse_labels(&raw_labels)
        .map_err(|reason| DatasetError::MalformedLabels { path: labels_path.clone(), reason })?;
    let doc = parse_document(&html, &ParseConfig::default())?;
    let warnings = resolve_warnings(&doc, &labels);
    Ok(LabeledPage { page_id: page_id.to_string(), html_path, html, labels, warnings })
}

/// Page ids (subdirectory names) under `root`, sorted.
pub fn list_pages(root: &Path) -> Result<Vec<String>, DatasetError> {
    let entries = fs::read_dir(root).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingFile(root.to_path_buf()),
        _ => DatasetError::Io { path: root.to_path_buf(), source: e },
    })?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(io_err(root))?;
        if entry.file_type().map_err(io_err(root))?.is_dir() {
            if let Some(name) = entry.file_name().to_str() {
                if valid_page_id(name) {
                    ids.push(name.to_string());
                }
            }
        }
    }
    ids.sort();
    Ok(ids)
}

pub fn load_dataset(root: &Path) -> Result<Vec<LabeledPage>, DatasetError> {
    list_pages(root)?.iter().map(|id| load_page(root, id)).collect()
}

/// Write `contents` to `path` through a temporary file and a rename so a
/// crash never leaves a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), DatasetError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("file");
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|source| {
        let _ = fs::remove_file(&tmp);
        DatasetError::Io { path: path.to_path_buf(), source }
    })
}

pub fn write_labels(path: &Path, records: &[LabelRecord]) -> Result<(), DatasetError> {
    write_atomic(path, labels_to_json(records).as_bytes())
}

/// Write one page into `<root>/<page_id>/`.
pub fn save_page(root: &Path, page: &LabeledPage) -> Result<(), DatasetError> {
    if !valid_page_id(&page.page_id) {
        return Err(DatasetError::InvalidPageId(page.page_id.clone()));
    }
    let dir = root.join(&page.page_id);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_atomic(&dir.join(PAGE_FILE), page.html.as_bytes())?;
    write_labels(&dir.join(LABELS_FILE), &page.labels)
}

pub fn save_dataset(root: &Path, pages: &[LabeledPage]) -> Result<(), DatasetError> {
    pages.iter().try_for_each(|p| save_page(root, p))
}

/// Number of training items for `n` items at `ratio`: rounded, then
/// clamped so both parts are non-empty.
pub fn train_size(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n - 1)
}

/// Seeded shuffle of `0..n` split into train and test index sets, each
/// returned in ascending order.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::InvalidRatio(ratio));
    }
    if n < 2 {
        return Err(DatasetError::TooFewPages(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = train_size(n, ratio);
    let mut train = order[..k].to_vec();
    let mut test = order[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Split pages (never elements) into train and test parts.
pub fn split_dataset<T: Clone>(pages: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), DatasetError> {
    let (train, test) = split_indices(pages.len(), ratio, seed)?;
    Ok((
        train.into_iter().map(|i| pages[i].clone()).collect(),
        test.into_iter().map(|i| pages[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: Label, tag: &str, id: &str) -> LabelRecord {
        LabelRecord { label, tag: tag.into(), id: id.into(), content: format!("<{}>", tag.to_lowercase()) }
    }

    fn write_page(root: &Path, id: &str, html: &str, labels: &str) {
        let dir = root.join(id);
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(PAGE_FILE), html).unwrap();
        fs::write(dir.join(LABELS_FILE), labels).unwrap();
    }

    #[test]
    fn loads_pages_sorted() {
        let tmp = tempfile::tempdir().unwrap();
        let labels = labels_to_json(&[record(Label::Relevant, "P", "2")]);
        write_page(tmp.path(), "page_b", "<p>b</p>", &labels);
        write_page(tmp.path(), "page_a", "<p>a</p>", &labels);
        let pages = load_dataset(tmp.path()).unwrap();
        assert_eq!(pages.len(), 2);
        assert_eq!(pages[0].page_id, "page_a");
        assert_eq!(pages[1].labels, vec![record(Label::Relevant, "P", "2")]);
        assert!(pages[0].warnings.is_empty());
    }

    #[test]
    fn unknown_label_value_is_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        write_page(tmp.path(), "p1", "<p>x</p>", r#"[{"label":"X","tag":"P","id":"2","content":""}]"#);
        assert!(matches!(load_dataset(tmp.path()), Err(DatasetError::MalformedLabels { .. })));
    }

    #[test]
    fn extra_or_missing_keys_are_malformed() {
        for body in [
            r#"[{"label":"R","tag":"P","id":"2","content":"","extra":1}]"#,
            r#"[{"label":"R","tag":"P","id":"2"}]"#,
            r#"[{"label":"R","tag":"P","id":2,"content":""}]"#,
            r#"[{"label":"R","tag":"p","id":"2","content":""}]"#,
            r#"[{"label":"R","tag":"P","id":"-2","content":""}]"#,
            r#"[{"label":"R","tag":"P","id":"2","content":""}"#,
        ] {
            assert!(parse_labels(body.as_bytes()).is_err(), "{body}");
        }
    }

    #[test]
    fn orphan_label_id_is_a_warning() {
        let tmp = tempfile::tempdir().unwrap();
        write_page(tmp.path(), "p1", "<p>x</p>", &labels_to_json(&[record(Label::Relevant, "H1", "240")]));
        let pages = load_dataset(tmp.path()).unwrap();
        assert_eq!(pages[0].warnings.len(), 1);
        assert!(pages[0].warnings[0].contains("240"));
    }

    #[test]
    fn missing_files() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("p1")).unwrap();
        fs::write(tmp.path().join("p1").join(PAGE_FILE), "<p>x</p>").unwrap();
        assert!(matches!(load_dataset(tmp.path()), Err(DatasetError::MissingFile(_))));
        assert!(matches!(load_dataset(&tmp.path().join("nope")), Err(DatasetError::MissingFile(_))));
    }

    #[test]
    fn split_sizes() {
        let pages: Vec<usize> = (0..10).collect();
        let (train, test) = split_dataset(&pages, 0.7, 1).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        assert_eq!(split_dataset(&pages, 0.7, 1).unwrap(), (train, test));
        let (train, test) = split_dataset(&[1, 2], 0.99, 5).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
        assert!(matches!(split_dataset(&[1], 0.7, 0), Err(DatasetError::TooFewPages(1))));
        assert!(matches!(split_dataset(&pages, 1.0, 0), Err(DatasetError::InvalidRatio(_))));
        assert!(matches!(split_dataset(&pages, 0.0, 0), Err(DatasetError::InvalidRatio(_))));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("labels.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    }

    #[test]
    fn page_ids_are_restricted() {
        assert!(valid_page_id("page_001"));
        assert!(!valid_page_id("../etc"));
        assert!(!valid_page_id("a/b"));
        assert!(!valid_page_id(""));
    }
}
