//! Heuristic reference extractors used as comparison rows in evaluation:
//! shallow text rules, per-element text-to-tag ratios, and maximum
//! subsequence segmentation over a word/tag token stream.

use std::collections::BTreeMap;

use crate::dom::{Child, Document, NodeId};
use crate::features::text_stats;
use crate::label::Label;
use crate::layout::{visible_candidates, Display, LayoutTree};

pub type Labels = BTreeMap<NodeId, Label>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStats {
    pub node_id: NodeId,
    pub word_count: usize,
    pub link_density: f64,
    pub text_density: f64,
    /// Index of the previous/next block in candidate order.
    pub prev: Option<usize>,
    pub next: Option<usize>,
}

pub fn block_stats(doc: &Document, layout: &LayoutTree) -> Vec<BlockStats> {
    let candidates = visible_candidates(layout, doc);
    let n = candidates.len();
    candidates
        .iter()
        .enumerate()
        .map(|(i, &id)| {
            let s = text_stats(doc, id);
            BlockStats {
                node_id: id,
                word_count: s.word_count,
                link_density: s.link_density,
                text_density: s.text_density,
                prev: i.checked_sub(1),
                next: (i + 1 < n).then_some(i + 1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowConfig {
    /// Blocks at or above this link density are never content.
    pub max_link_density: f64,
    /// Word count above which a block stands on its own.
    pub long_block_words: usize,
    /// Word count above which a block is content next to a long block.
    pub short_block_words: usize,
}

impl Default for ShallowConfig {
    fn default() -> Self {
        Self { max_link_density: 0.33, long_block_words: 40, short_block_words: 15 }
    }
}

pub fn shallow_text_classify(blocks: &[BlockStats], config: &ShallowConfig) -> Labels {
    let long_content = |b: &BlockStats| b.word_count > config.long_block_words && b.link_density < config.max_link_density;
    blocks
        .iter()
        .map(|b| {
            let neighbor_long = [b.prev, b.next].into_iter().flatten().any(|i| long_content(&blocks[i]));
            let relevant = b.link_density < config.max_link_density
                && (b.word_count > config.long_block_words
                    || (b.word_count > config.short_block_words && neighbor_long));
            (b.node_id, Label::from_bool(relevant))
        })
        .collect()
}

pub const CETR_SIGMA: f64 = 2.0;
pub const CETR_RADIUS: usize = 3;

/// Text-to-tag ratio per candidate: text characters over one plus the
/// number of descendant elements.
pub fn tag_ratios(doc: &Document, layout: &LayoutTree) -> (Vec<NodeId>, Vec<f64>) {
    let candidates = visible_candidates(layout, doc);
    let ratios = candidates
        .iter()
        .map(|&id| {
            let chars = text_stats(doc, id).char_count as f64;
            chars / (1.0 + doc.elements()[id].descendant_count as f64)
        })
        .collect();
    (candidates, ratios)
}

/// Gaussian smoothing over sequence order, renormalizing the truncated
/// kernel at the edges.
pub fn gaussian_smooth(values: &[f64], sigma: f64, radius: usize) -> Vec<f64> {
    let weights: Vec<f64> =
        (0..=radius).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n.saturating_sub(1));
            let (mut acc, mut norm) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate().take(hi + 1).skip(lo) {
                let w = weights[i.abs_diff(j)];
                acc += w * v;
                norm += w;
            }
            acc / norm
        })
        .collect()
}

/// `R` iff the smoothed ratio is at least the mean smoothed ratio.
pub fn cetr_classify(doc: &Document, layout: &LayoutTree) -> Labels {
    let (ids, ratios) = tag_ratios(doc, layout);
    cetr_labels(&ids, &ratios)
}

pub fn cetr_labels(ids: &[NodeId], ratios: &[f64]) -> Labels {
    if ids.is_empty() {
        return Labels::new();
    }
    let smoothed = gaussian_smooth(ratios, CETR_SIGMA, CETR_RADIUS);
    let mean = smoothed.iter().sum::<f64>() / smoothed.len() as f64;
    // Equal values can land an ulp below their own mean.
    let cutoff = mean - 1e-12 * mean.abs().max(1.0);
    ids.iter().zip(&smoothed).map(|(&id, &s)| (id, Label::from_bool(s >= cutoff))).collect()
}

pub const WORD_SCORE: i64 = 1;
pub const TAG_SCORE: i64 = -3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Tag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub node_id: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn scores(&self) -> Vec<i64> {
        self.tokens
            .iter()
            .map(|t| match t.kind {
                TokenKind::Word => WORD_SCORE,
                TokenKind::Tag => TAG_SCORE,
            })
            .collect()
    }
}

/// Document-order tokens over visible content: one tag token per element,
/// one word token per word. Words are attributed to the nearest
/// block-level ancestor of their text, which is the owning candidate.
pub fn token_stream(doc: &Document, layout: &LayoutTree) -> TokenStream {
    let mut tokens = Vec::new();
    walk_tokens(doc, layout, 0, 0, &mut tokens);
    TokenStream { tokens }
}

fn walk_tokens(doc: &Document, layout: &LayoutTree, id: NodeId, block: NodeId, out: &mut Vec<Token>) {
    let b = &layout.boxes[id];
    if !b.visible {
        return;
    }
    out.push(Token { kind: TokenKind::Tag, node_id: id });
    let block = if b.display == Display::Block { id } else { block };
    for child in &doc.elements()[id].children {
        match child {
            Child::Text(t) => {
                let words = t.raw().split_whitespace().count();
                out.extend((0..words).map(|_| Token { kind: TokenKind::Word, node_id: block }));
            }
            Child::Element(c) => walk_tokens(doc, layout, *c, block, out),
        }
    }
}

/// Inclusive token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub sum: i64,
}

/// Maximum-sum contiguous span in one pass. Among equal sums the earliest
/// start wins, then the shortest span. An all-negative input yields its
/// single largest element.
pub fn max_subsequence(scores: &[i64]) -> Option<Span> {
    let (&first, rest) = scores.split_first()?;
    let mut best = Span { start: 0, end: 0, sum: first };
    let (mut cur_start, mut cur_sum) = (0usize, first);
    for (offset, &s) in rest.iter().enumerate() {
        let j = offset + 1;
        // Extending a zero-sum prefix keeps the earlier start.
        if cur_sum < 0 {
            cur_start = j;
            cur_sum = s;
        } else {
            cur_sum += s;
        }
        if cur_sum > best.sum || (cur_sum == best.sum && cur_start < best.start) {
            best = Span { start: cur_start, end: j, sum: cur_sum };
        }
    }
    Some(best)
}

/// Nodes owning at least one word inside the maximum-sum span are `R`;
/// every other node in the stream is `NR`.
pub fn mss_classify(tokens: &TokenStream) -> Labels {
    let mut labels: Labels = tokens.tokens.iter().map(|t| (t.node_id, Label::NotRelevant)).collect();
    if let Some(span) = max_subsequence(&tokens.scores()) {
        for t in &tokens.tokens[span.start..=span.end] {
            if t.kind == TokenKind::Word {
                labels.insert(t.node_id, Label::Relevant);
            }
        }
    }
    labels
}
