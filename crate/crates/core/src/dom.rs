//! Lenient HTML parsing into an element tree with stable pre-order node ids.
//!
//! The parser is total: unclosed tags are auto-closed, `HTML` and `BODY` are
//! synthesized when missing, and unknown tags are kept as ordinary elements.
//! Element ids are the pre-order index of the element, so `doc.element(i)`
//! is the i-th element encountered in document order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::label::Label;
use crate::tags::{self, is_in};

pub type NodeId = usize;

pub const DEFAULT_MAX_DEPTH: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomError {
    #[error("element nesting exceeds the depth limit of {limit}")]
    DepthExceeded { limit: usize },
    #[error("no element with node id {0}")]
    UnknownNodeId(NodeId),
}

#[derive(Debug, Clone)]
pub struct ParseConfig {
    pub max_depth: usize,
    pub source_url: Option<String>,
}

impl Default for ParseConfig {
    fn default() -> Self {
        Self { max_depth: DEFAULT_MAX_DEPTH, source_url: None }
    }
}

/// A run of character data. Stored as decoded, un-normalized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextChunk {
    raw: String,
}

impl TextChunk {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// The chunk with whitespace runs collapsed and trimmed.
    pub fn text(&self) -> String {
        normalize_whitespace(&self.raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Child {
    Element(NodeId),
    Text(TextChunk),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementNode {
    pub node_id: NodeId,
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Child>,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub iframe_depth: usize,
    /// Number of element descendants. Descendant ids are
    /// `node_id + 1 ..= node_id + descendant_count`.
    pub descendant_count: usize,
    /// Verbatim content of `SCRIPT`/`STYLE`, kept only for serialization.
    pub raw_text: Option<String>,
}

impl ElementNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attributes.iter().any(|(k, _)| k == name)
    }

    pub fn element_children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.iter().filter_map(|c| match c {
            Child::Element(id) => Some(*id),
            Child::Text(_) => None,
        })
    }

    pub fn descendant_ids(&self) -> std::ops::RangeInclusive<NodeId> {
        self.node_id + 1..=self.node_id + self.descendant_count
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    elements: Vec<ElementNode>,
    pub source_url: Option<String>,
    pub raw_length: usize,
}

impl Document {
    pub fn root(&self) -> &ElementNode {
        &self.elements[0]
    }

    pub fn element(&self, id: NodeId) -> Option<&ElementNode> {
        self.elements.get(id)
    }

    /// Elements in pre-order (which is node id order).
    pub fn elements(&self) -> &[ElementNode] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn body(&self) -> Option<&ElementNode> {
        self.root().element_children().map(|id| &self.elements[id]).find(|e| e.tag == "BODY")
    }

    /// Drop attribute `name` from every element. Node ids are unaffected.
    pub fn strip_attribute(&mut self, name: &str) {
        for el in &mut self.elements {
            el.attributes.retain(|(k, _)| k != name);
        }
    }

    /// True when `ancestor` is `id` or one of its ancestors.
    pub fn is_ancestor_or_self(&self, ancestor: NodeId, id: NodeId) -> bool {
        let a = &self.elements[ancestor];
        id == ancestor || a.descendant_ids().contains(&id)
    }
}

pub fn normalize_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Parse raw bytes, replacing invalid UTF-8 sequences.
pub fn parse_bytes(bytes: &[u8], config: &ParseConfig) -> Result<Document, DomError> {
    parse_document(&String::from_utf8_lossy(bytes), config)
}

pub fn parse_document(html: &str, config: &ParseConfig) -> Result<Document, DomError> {
    let mut builder = TreeBuilder::new(config.max_depth);
    for token in Tokenizer::new(html) {
        builder.process(token)?;
    }
    let mut doc = builder.finish();
    doc.source_url = config.source_url.clone();
    doc.raw_length = html.len();
    Ok(doc)
}

/// Normalized text of every text chunk under `id`, in document order.
/// Block-level boundaries and `BR` separate words.
pub fn element_text(doc: &Document, id: NodeId) -> String {
    let mut raw = String::new();
    collect_text(doc, id, &mut raw);
    normalize_whitespace(&raw)
}

fn collect_text(doc: &Document, id: NodeId, out: &mut String) {
    let el = &doc.elements[id];
    for child in &el.children {
        match child {
            Child::Text(t) => out.push_str(&t.raw),
            Child::Element(cid) => {
                let breaks = tags::breaks_text(&doc.elements[*cid].tag);
                if breaks {
                    out.push(' ');
                }
                collect_text(doc, *cid, out);
                if breaks {
                    out.push(' ');
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Debug, Clone, Copy, Default)]
pub struct SerializeOptions {
    /// Add a green (R) or red (NR) outline to the inline style of labeled
    /// elements.
    pub outline: bool,
}

/// Serialize the tree back to HTML, unchanged.
pub fn serialize(doc: &Document) -> String {
    let mut out = String::new();
    write_element(doc, 0, &BTreeMap::new(), SerializeOptions::default(), &mut out);
    out
}

/// Serialize with labeled elements marked: the first class token gains a
/// `-relevant`/`-noise` suffix (or the element gets a `tagged-relevant` /
/// `tagged-noise` class) and `id` is set to the node id.
pub fn serialize_annotated(
    doc: &Document,
    labels: &BTreeMap<NodeId, Label>,
) -> Result<String, DomError> {
    serialize_annotated_with(doc, labels, SerializeOptions::default())
}

pub fn serialize_annotated_with(
    doc: &Document,
    labels: &BTreeMap<NodeId, Label>,
    options: SerializeOptions,
) -> Result<String, DomError> {
    check_label_ids(doc, labels)?;
    let mut out = String::new();
    write_element(doc, 0, labels, options, &mut out);
    Ok(out)
}

/// Outer HTML of one element, annotated the same way as
/// [`serialize_annotated`].
pub fn outer_html(
    doc: &Document,
    id: NodeId,
    labels: &BTreeMap<NodeId, Label>,
) -> Result<String, DomError> {
    if id >= doc.len() {
        return Err(DomError::UnknownNodeId(id));
    }
    check_label_ids(doc, labels)?;
    let mut out = String::new();
    write_element(doc, id, labels, SerializeOptions::default(), &mut out);
    Ok(out)
}

fn check_label_ids(doc: &Document, labels: &BTreeMap<NodeId, Label>) -> Result<(), DomError> {
    match labels.keys().find(|id| **id >= doc.len()) {
        Some(id) => Err(DomError::UnknownNodeId(*id)),
        None => Ok(()),
    }
}

fn annotated_attributes(
    el: &ElementNode,
    label: Label,
    options: SerializeOptions,
) -> Vec<(String, String)> {
    let (suffix, fallback) = match label {
        Label::Relevant => ("-relevant", "tagged-relevant"),
        Label::NotRelevant => ("-noise", "tagged-noise"),
    };
    let mut attrs = el.attributes.clone();
    match attrs.iter_mut().find(|(k, _)| k == "class") {
        Some((_, value)) if !value.trim().is_empty() => {
            let mut tokens: Vec<String> = value.split_whitespace().map(str::to_string).collect();
            tokens[0].push_str(suffix);
            *value = tokens.join(" ");
        }
        Some((_, value)) => *value = fallback.to_string(),
        None => attrs.push(("class".to_string(), fallback.to_string())),
    }
    let id = el.node_id.to_string();
    match attrs.iter_mut().find(|(k, _)| k == "id") {
        Some((_, value)) => *value = id,
        None => attrs.push(("id".to_string(), id)),
    }
    if options.outline {
        let color = if label.is_relevant() { "green" } else { "red" };
        let decl = format!("outline: 2px solid {color}");
        match attrs.iter_mut().find(|(k, _)| k == "style") {
            Some((_, value)) => {
                let trimmed = value.trim_end().trim_end_matches(';').to_string();
                *value = if trimmed.is_empty() { decl } else { format!("{trimmed}; {decl}") };
            }
            None => attrs.push(("style".to_string(), decl)),
        }
    }
    attrs
}

fn write_element(
    doc: &Document,
    id: NodeId,
    labels: &BTreeMap<NodeId, Label>,
    options: SerializeOptions,
    out: &mut String,
) {
    let el = &doc.elements[id];
    let name = el.tag.to_ascii_lowercase();
    let attrs = match labels.get(&id) {
        Some(label) => std::borrow::Cow::Owned(annotated_attributes(el, *label, options)),
        None => std::borrow::Cow::Borrowed(&el.attributes),
    };
    out.push('<');
    out.push_str(&name);
    for (k, v) in attrs.iter() {
        let _ = write!(out, " {}=\"{}\"", k, html_escape::encode_double_quoted_attribute(v));
    }
    out.push('>');
    if is_in(tags::VOID, &el.tag) {
        return;
    }
    if let Some(raw) = &el.raw_text {
        out.push_str(raw);
    }
    for child in &el.children {
        match child {
            Child::Text(t) => out.push_str(&html_escape::encode_text(&t.raw)),
            Child::Element(cid) => write_element(doc, *cid, labels, options, out),
        }
    }
    let _ = write!(out, "</{name}>");
}

// ---------------------------------------------------------------------------
// Tokenizer

#[derive(Debug, Clone, PartialEq)]
enum Token {
    StartTag { name: String, attrs: Vec<(String, String)>, self_closing: bool },
    EndTag { name: String },
    Text(String),
    RawText(String),
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
    pending: Option<Token>,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0, pending: None }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_until(&mut self, pat: &str) {
        match self.rest().find(pat) {
            Some(i) => self.pos += i + pat.len(),
            None => self.pos = self.src.len(),
        }
    }

    /// Consume content up to the matching close tag of a raw-text or RCDATA
    /// element, returning the content.
    fn raw_content(&mut self, name: &str) -> &'a str {
        let rest = self.rest();
        let lower = rest.to_ascii_lowercase();
        let close = format!("</{}", name.to_ascii_lowercase());
        let end = lower.find(&close).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn read_name(&mut self) -> String {
        let rest = self.rest();
        let end = rest
            .find(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>')
            .unwrap_or(rest.len());
        self.pos += end;
        rest[..end].to_ascii_uppercase()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        let trimmed = rest.trim_start_matches(|c: char| c.is_ascii_whitespace());
        self.pos += rest.len() - trimmed.len();
    }

    fn read_attrs(&mut self) -> (Vec<(String, String)>, bool) {
        let mut attrs: Vec<(String, String)> = Vec::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            let rest = self.rest();
            if rest.is_empty() {
                break;
            }
            if rest.starts_with('>') {
                self.pos += 1;
                break;
            }
            if rest.starts_with("/>") {
                self.pos += 2;
                self_closing = true;
                break;
            }
            if rest.starts_with('/') {
                self.pos += 1;
                continue;
            }
            let end = rest
                .find(|c: char| c.is_ascii_whitespace() || c == '=' || c == '>' || c == '/')
                .unwrap_or(rest.len())
                .max(1);
            let name = rest[..end].to_ascii_lowercase();
            self.pos += end;
            self.skip_ws();
            let mut value = String::new();
            if self.rest().starts_with('=') {
                self.pos += 1;
                self.skip_ws();
                let rest = self.rest();
                let raw = match rest.chars().next() {
                    Some(q @ ('"' | '\'')) => {
                        let body = &rest[1..];
                        let close = body.find(q).unwrap_or(body.len());
                        self.pos += 1 + close + usize::from(close < body.len());
                        &body[..close]
                    }
                    _ => {
                        let end = rest
                            .find(|c: char| c.is_ascii_whitespace() || c == '>')
                            .unwrap_or(rest.len());
                        self.pos += end;
                        &rest[..end]
                    }
                };
                value = html_escape::decode_html_entities(raw).into_owned();
            }
            if !attrs.iter().any(|(k, _)| *k == name) {
                attrs.push((name, value));
            }
        }
        (attrs, self_closing)
    }
}

impl Iterator for Tokenizer<'_> {
    type Item = Token;

    fn next(&mut self) -> Option<Token> {
        if let Some(t) = self.pending.take() {
            return Some(t);
        }
        loop {
            let rest = self.rest();
            if rest.is_empty() {
                return None;
            }
            if !rest.starts_with('<') {
                let end = rest.find('<').unwrap_or(rest.len());
                self.pos += end;
                return Some(Token::Text(html_escape::decode_html_entities(&rest[..end]).into_owned()));
            }
            let after = &rest[1..];
            if after.starts_with("!--") {
                self.pos += 4;
                self.skip_until("-->");
                continue;
            }
            if after.starts_with('!') || after.starts_with('?') {
                self.skip_until(">");
                continue;
            }
            if let Some(close) = after.strip_prefix('/') {
                if close.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    self.pos += 2;
                    let name = self.read_name();
                    self.skip_until(">");
                    return Some(Token::EndTag { name });
                }
                self.skip_until(">");
                continue;
            }
            if after.starts_with(|c: char| c.is_ascii_alphabetic()) {
                self.pos += 1;
                let name = self.read_name();
                let (attrs, self_closing) = self.read_attrs();
                if !self_closing && (is_in(tags::RAW_TEXT, &name) || is_in(tags::RCDATA, &name)) {
                    let content = self.raw_content(&name);
                    if !content.is_empty() {
                        self.pending = Some(if is_in(tags::RAW_TEXT, &name) {
                            Token::RawText(content.to_string())
                        } else {
                            Token::Text(html_escape::decode_html_entities(content).into_owned())
                        });
                    }
                }
                return Some(Token::StartTag { name, attrs, self_closing });
            }
            // A lone '<' is text.
            self.pos += 1;
            return Some(Token::Text("<".to_string()));
        }
    }
}

// ---------------------------------------------------------------------------
// Tree construction

#[derive(Debug)]
enum BuildChild {
    Element(usize),
    Text(String),
}

#[derive(Debug)]
struct BuildNode {
    tag: String,
    attrs: Vec<(String, String)>,
    children: Vec<BuildChild>,
    raw_text: Option<String>,
}

struct TreeBuilder {
    nodes: Vec<BuildNode>,
    stack: Vec<usize>,
    head: Option<usize>,
    body: Option<usize>,
    /// Most recent text chunk as (node, child index).
    last_text: Option<(usize, usize)>,
    max_depth: usize,
}

impl TreeBuilder {
    fn new(max_depth: usize) -> Self {
        let html = BuildNode { tag: "HTML".into(), attrs: Vec::new(), children: Vec::new(), raw_text: None };
        Self { nodes: vec![html], stack: vec![0], head: None, body: None, last_text: None, max_depth }
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("html is never popped")
    }

    fn create(&mut self, parent: usize, tag: &str, attrs: Vec<(String, String)>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(BuildNode { tag: tag.to_string(), attrs, children: Vec::new(), raw_text: None });
        self.nodes[parent].children.push(BuildChild::Element(id));
        id
    }

    fn merge_attrs(&mut self, node: usize, attrs: Vec<(String, String)>) {
        for (k, v) in attrs {
            if !self.nodes[node].attrs.iter().any(|(ek, _)| *ek == k) {
                self.nodes[node].attrs.push((k, v));
            }
        }
    }

    fn ensure_head(&mut self) -> usize {
        let head = match self.head {
            Some(h) => h,
            None => {
                let h = self.create(0, "HEAD", Vec::new());
                self.head = Some(h);
                h
            }
        };
        if !self.stack.contains(&head) {
            self.stack.truncate(1);
            self.stack.push(head);
        }
        head
    }

    fn ensure_body(&mut self) -> usize {
        if let Some(b) = self.body {
            return b;
        }
        let b = self.create(0, "BODY", Vec::new());
        self.body = Some(b);
        self.stack.truncate(1);
        self.stack.push(b);
        b
    }

    fn in_head(&self) -> bool {
        self.body.is_none() && self.head.is_some_and(|h| self.stack.contains(&h))
    }

    /// Pop back to the nearest open element in `targets`, unless an element
    /// in `stop` (or a scope boundary, when `scoped`) comes first.
    fn close_nearest(&mut self, targets: &[&str], stop: &[&str], scoped: bool) {
        for i in (1..self.stack.len()).rev() {
            let tag = self.nodes[self.stack[i]].tag.as_str();
            if is_in(targets, tag) {
                self.stack.truncate(i);
                return;
            }
            if is_in(stop, tag) || (scoped && is_in(tags::SCOPE_BOUNDARY, tag)) {
                return;
            }
        }
    }

    fn close_implied(&mut self, tag: &str) {
        if is_in(tags::CLOSES_P, tag) {
            self.close_nearest(&["P"], &[], true);
        }
        match tag {
            "LI" => self.close_nearest(&["LI"], &["UL", "OL", "MENU"], true),
            "DD" | "DT" => self.close_nearest(&["DD", "DT"], &["DL"], true),
            "OPTION" => self.close_nearest(&["OPTION"], &["SELECT", "DATALIST", "OPTGROUP"], true),
            "TD" | "TH" => self.close_nearest(&["TD", "TH"], &["TR", "TABLE"], false),
            "TR" => self.close_nearest(&["TR"], &["TABLE"], false),
            "TBODY" | "THEAD" | "TFOOT" => {
                self.close_nearest(&["TBODY", "THEAD", "TFOOT"], &["TABLE"], false)
            }
            _ => {}
        }
        if is_in(tags::HEADINGS, tag) && is_in(tags::HEADINGS, &self.nodes[self.top()].tag) {
            self.stack.pop();
        }
    }

    fn push_text(&mut self, text: String) {
        let parent = self.top();
        let node = &mut self.nodes[parent];
        if let Some(BuildChild::Text(prev)) = node.children.last_mut() {
            prev.push_str(&text);
        } else {
            node.children.push(BuildChild::Text(text));
            self.last_text = Some((parent, node.children.len() - 1));
        }
    }

    fn process(&mut self, token: Token) -> Result<(), DomError> {
        match token {
            Token::Text(text) => {
                if text.trim().is_empty() {
                    // Whitespace-only runs are dropped; keep the word break
                    // they stood for on the preceding chunk.
                    if self.body.is_some() {
                        if let Some((n, c)) = self.last_text {
                            if let BuildChild::Text(prev) = &mut self.nodes[n].children[c] {
                                if !prev.ends_with(char::is_whitespace) {
                                    prev.push(' ');
                                }
                            }
                        }
                    }
                    return Ok(());
                }
                if !self.in_head() {
                    self.ensure_body();
                }
                self.push_text(text);
            }
            Token::RawText(raw) => {
                let top = self.top();
                self.nodes[top].raw_text = Some(raw);
            }
            Token::StartTag { name, attrs, self_closing } => {
                match name.as_str() {
                    "HTML" => {
                        self.merge_attrs(0, attrs);
                        return Ok(());
                    }
                    "HEAD" => {
                        if self.body.is_none() {
                            let h = self.ensure_head();
                            self.merge_attrs(h, attrs);
                        }
                        return Ok(());
                    }
                    "BODY" => {
                        let b = self.ensure_body();
                        self.merge_attrs(b, attrs);
                        return Ok(());
                    }
                    _ => {}
                }
                if self.body.is_none() {
                    if is_in(tags::HEAD_CONTENT, &name) {
                        self.ensure_head();
                    } else {
                        self.ensure_body();
                    }
                }
                self.close_implied(&name);
                let parent = self.top();
                let depth = self.stack.len();
                if depth > self.max_depth {
                    return Err(DomError::DepthExceeded { limit: self.max_depth });
                }
                let id = self.create(parent, &name, attrs);
                if !(is_in(tags::VOID, &name) || self_closing) {
                    self.stack.push(id);
                }
            }
            Token::EndTag { name } => match name.as_str() {
                "HTML" | "BODY" => {}
                "HEAD" => {
                    if let Some(h) = self.head {
                        if let Some(i) = self.stack.iter().position(|&n| n == h) {
                            self.stack.truncate(i);
                        }
                    }
                }
                "BR" => {
                    if self.body.is_none() {
                        self.ensure_body();
                    }
                    let parent = self.top();
                    self.create(parent, "BR", Vec::new());
                }
                _ => {
                    let floor = self
                        .body
                        .and_then(|b| self.stack.iter().position(|&n| n == b))
                        .map_or(1, |i| i + 1);
                    if let Some(i) = self.stack[floor.min(self.stack.len())..]
                        .iter()
                        .rposition(|&n| self.nodes[n].tag == name)
                    {
                        self.stack.truncate(floor + i);
                    } else if self.body.is_none() {
                        if let Some(i) = self.stack.iter().rposition(|&n| self.nodes[n].tag == name) {
                            if i > 0 {
                                self.stack.truncate(i);
                            }
                        }
                    }
                }
            },
        }
        Ok(())
    }

    fn finish(mut self) -> Document {
        self.ensure_body();
        let count = self.nodes.len();
        // Pre-order walk over the build tree: final id = visit order.
        let mut order = Vec::with_capacity(count);
        let mut parent_of: Vec<Option<usize>> = vec![None; count];
        let mut pending = vec![0usize];
        while let Some(b) = pending.pop() {
            order.push(b);
            for child in self.nodes[b].children.iter().rev() {
                if let BuildChild::Element(c) = child {
                    parent_of[*c] = Some(b);
                    pending.push(*c);
                }
            }
        }
        let mut final_id = vec![0usize; count];
        for (id, &b) in order.iter().enumerate() {
            final_id[b] = id;
        }
        let mut nodes: Vec<Option<BuildNode>> = self.nodes.into_iter().map(Some).collect();
        let mut elements: Vec<ElementNode> = Vec::with_capacity(count);
        for (id, &b) in order.iter().enumerate() {
            let node = nodes[b].take().expect("each node visited once");
            let parent = parent_of[b].map(|p| final_id[p]);
            let (depth, iframe_depth) = match parent {
                Some(p) => {
                    let pe = &elements[p];
                    (pe.depth + 1, pe.iframe_depth + usize::from(pe.tag == "IFRAME"))
                }
                None => (0, 0),
            };
            let children = node
                .children
                .into_iter()
                .map(|c| match c {
                    BuildChild::Element(e) => Child::Element(final_id[e]),
                    BuildChild::Text(raw) => Child::Text(TextChunk { raw }),
                })
                .collect();
            elements.push(ElementNode {
                node_id: id,
                tag: node.tag,
                attributes: node.attrs,
                children,
                parent,
                depth,
                iframe_depth,
                descendant_count: 0,
                raw_text: node.raw_text,
            });
        }
        for id in (1..elements.len()).rev() {
            let n = elements[id].descendant_count + 1;
            if let Some(p) = elements[id].parent {
                elements[p].descendant_count += n;
            }
        }
        Document { elements, source_url: None, raw_length: 0 }
    }
}
