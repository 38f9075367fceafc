//! Fixed-order feature vectors for candidate elements.
//!
//! Each vector carries geometry ratios from the layout, shallow text
//! statistics, id/class token flags and image attributes. The order is
//! frozen by [`Feature::ALL`]; models persist the names and refuse to load
//! against a different schema.

use std::fmt::Write as _;
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{element_text, Document, NodeId};
use crate::layout::{visible_candidates, LayoutTree};
use crate::matrix::FeatureMatrix;
use crate::tags;

pub const SCHEMA_VERSION: &str = "layout-features-v1";

/// Characters per wrapped line for the words-per-line density.
pub const WRAP_WIDTH: usize = 80;

const NEGATIVE_TOKENS: &[&str] = &["ad", "nav", "foot", "comment", "share", "promo", "related", "social"];
const POSITIVE_TOKENS: &[&str] = &["content", "article", "body", "main", "story", "text", "post", "headline"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("node {0} is not a visible candidate")]
    NotACandidate(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    XRel,
    YRel,
    WRel,
    HRel,
    AreaRel,
    CenterOffset,
    Depth,
    IframeDepth,
    WordCount,
    AvgWordLength,
    TextDensity,
    LinkDensity,
    TagRatio,
    TagCode,
    NegativeToken,
    PositiveToken,
    Reserved0,
    Reserved1,
    Reserved2,
    Reserved3,
    Reserved4,
    Reserved5,
    IsImage,
    AltLength,
    HasSrc,
}

pub const FEATURE_COUNT: usize = 25;

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::XRel,
        Feature::YRel,
        Feature::WRel,
        Feature::HRel,
        Feature::AreaRel,
        Feature::CenterOffset,
        Feature::Depth,
        Feature::IframeDepth,
        Feature::WordCount,
        Feature::AvgWordLength,
        Feature::TextDensity,
        Feature::LinkDensity,
        Feature::TagRatio,
        Feature::TagCode,
        Feature::NegativeToken,
        Feature::PositiveToken,
        Feature::Reserved0,
        Feature::Reserved1,
        Feature::Reserved2,
        Feature::Reserved3,
        Feature::Reserved4,
        Feature::Reserved5,
        Feature::IsImage,
        Feature::AltLength,
        Feature::HasSrc,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::XRel => "x_rel",
            Feature::YRel => "y_rel",
            Feature::WRel => "w_rel",
            Feature::HRel => "h_rel",
            Feature::AreaRel => "area_rel",
            Feature::CenterOffset => "center_offset",
            Feature::Depth => "depth",
            Feature::IframeDepth => "iframe_depth",
            Feature::WordCount => "word_count",
            Feature::AvgWordLength => "avg_word_length",
            Feature::TextDensity => "text_density",
            Feature::LinkDensity => "link_density",
            Feature::TagRatio => "tag_ratio",
            Feature::TagCode => "tag_code",
            Feature::NegativeToken => "negative_token",
            Feature::PositiveToken => "positive_token",
            Feature::Reserved0 => "reserved_0",
            Feature::Reserved1 => "reserved_1",
            Feature::Reserved2 => "reserved_2",
            Feature::Reserved3 => "reserved_3",
            Feature::Reserved4 => "reserved_4",
            Feature::Reserved5 => "reserved_5",
            Feature::IsImage => "is_image",
            Feature::AltLength => "alt_length",
            Feature::HasSrc => "has_src",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    pub version: String,
}

impl FeatureSchema {
    /// The schema produced by [`extract_features`].
    pub fn current() -> Self {
        Self {
            names: Feature::ALL.iter().map(|f| f.name().to_string()).collect(),
            version: SCHEMA_VERSION.to_string(),
        }
    }

    /// Schema with generated names, for models trained on arbitrary data.
    pub fn anonymous(width: usize) -> Self {
        Self { names: (0..width).map(|i| format!("f{i}")).collect(), version: "anonymous".to_string() }
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<Feature> for FeatureVector {
    type Output = f64;

    fn index(&self, f: Feature) -> &f64 {
        &self.0[f.index()]
    }
}

/// Shallow text statistics over the normalized text of an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextStats {
    pub word_count: usize,
    pub char_count: usize,
    pub avg_word_length: f64,
    /// Words per wrapped line of [`WRAP_WIDTH`] characters.
    pub text_density: f64,
    pub link_density: f64,
}

fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn text_stats(doc: &Document, id: NodeId) -> TextStats {
    let text = element_text(doc, id);
    let words: Vec<&str> = text.split_whitespace().collect();
    let word_count = words.len();
    let char_count = text.chars().count();
    let avg_word_length = if word_count == 0 {
        0.0
    } else {
        words.iter().map(|w| w.chars().count()).sum::<usize>() as f64 / word_count as f64
    };
    let lines = char_count.div_ceil(WRAP_WIDTH).max(1);
    let text_density = word_count as f64 / lines as f64;
    let link_density = if word_count == 0 {
        0.0
    } else {
        (linked_words(doc, id) as f64 / word_count as f64).min(1.0)
    };
    TextStats { word_count, char_count, avg_word_length, text_density, link_density }
}

/// Words under outermost `A` elements at or below `id`.
fn linked_words(doc: &Document, id: NodeId) -> usize {
    let el = &doc.elements()[id];
    if el.tag == "A" {
        return word_count(&element_text(doc, id));
    }
    let mut total = 0;
    let mut next = id + 1;
    let end = id + el.descendant_count;
    while next <= end {
        let d = &doc.elements()[next];
        if d.tag == "A" {
            total += word_count(&element_text(doc, next));
            next += d.descendant_count + 1;
        } else {
            next += 1;
        }
    }
    total
}

fn token_matches(token: &str, keywords: &[&str]) -> bool {
    keywords.iter().any(|kw| {
        token == *kw
            || token.strip_suffix('s') == Some(kw)
            || (kw.len() >= 3 && token.starts_with(kw))
    })
}

/// Negative and positive token flags from the element's id and class.
pub fn token_flags(doc: &Document, id: NodeId) -> (bool, bool) {
    let el = &doc.elements()[id];
    let mut negative = false;
    let mut positive = false;
    for attr in ["id", "class"] {
        let Some(value) = el.attr(attr) else { continue };
        let lower = value.to_ascii_lowercase();
        for token in lower.split(|c: char| !c.is_ascii_alphabetic()).filter(|t| !t.is_empty()) {
            negative |= token_matches(token, NEGATIVE_TOKENS);
            positive |= token_matches(token, POSITIVE_TOKENS);
        }
    }
    (negative, positive)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn features_for(doc: &Document, layout: &LayoutTree, id: NodeId) -> FeatureVector {
    let el = &doc.elements()[id];
    let b = &layout.boxes[id];
    let vw = f64::from(layout.viewport.width);
    let ph = if layout.page_height > 0.0 { layout.page_height } else { 1.0 };
    let stats = text_stats(doc, id);
    let (negative, positive) = token_flags(doc, id);
    let is_image = el.tag == "IMG";

    let mut v = [0.0; FEATURE_COUNT];
    let mut set = |f: Feature, value: f64| v[f.index()] = value;
    set(Feature::XRel, ratio(b.x, vw));
    set(Feature::YRel, ratio(b.y, ph));
    set(Feature::WRel, ratio(b.width, vw));
    set(Feature::HRel, ratio(b.height, ph));
    set(Feature::AreaRel, ratio(b.width * b.height, vw * ph));
    set(Feature::CenterOffset, ratio((b.x + b.width / 2.0 - vw / 2.0).abs(), vw));
    set(Feature::Depth, el.depth as f64);
    set(Feature::IframeDepth, el.iframe_depth as f64);
    set(Feature::WordCount, stats.word_count as f64);
    set(Feature::AvgWordLength, stats.avg_word_length);
    set(Feature::TextDensity, stats.text_density);
    set(Feature::LinkDensity, stats.link_density);
    set(Feature::TagRatio, stats.char_count as f64 / (1.0 + el.descendant_count as f64));
    set(Feature::TagCode, f64::from(tags::tag_code(&el.tag)));
    set(Feature::NegativeToken, f64::from(u8::from(negative)));
    set(Feature::PositiveToken, f64::from(u8::from(positive)));
    set(Feature::IsImage, f64::from(u8::from(is_image)));
    if is_image {
        set(Feature::AltLength, el.attr("alt").map_or(0, |a| a.trim().chars().count()) as f64);
        set(Feature::HasSrc, f64::from(u8::from(el.attr("src").is_some_and(|s| !s.trim().is_empty()))));
    }
    FeatureVector(v)
}

pub fn extract_features(
    doc: &Document,
    layout: &LayoutTree,
    node_id: NodeId,
) -> Result<FeatureVector, FeatureError> {
    if !visible_candidates(layout, doc).contains(&node_id) {
        return Err(FeatureError::NotACandidate(node_id));
    }
    Ok(features_for(doc, layout, node_id))
}

/// Features for every visible candidate; rows follow candidate order.
pub fn extract_all(doc: &Document, layout: &LayoutTree) -> (Vec<NodeId>, FeatureMatrix) {
    let candidates = visible_candidates(layout, doc);
    let mut matrix = FeatureMatrix::new(FEATURE_COUNT);
    for &id in &candidates {
        matrix.push_row(features_for(doc, layout, id).as_slice());
    }
    (candidates, matrix)
}

/// CSV export: header of schema names, `node_id` first.
pub fn to_csv(node_ids: &[NodeId], matrix: &FeatureMatrix, schema: &FeatureSchema) -> String {
    let mut out = String::from("node_id");
    for name in &schema.names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (id, row) in node_ids.iter().zip(matrix.rows()) {
        let _ = write!(out, "{id}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
