//! A small CSS-subset layout engine standing in for a real renderer.
//!
//! Supported: block flow, inline runs wrapped by character count, `BR`,
//! replaced `IMG` boxes sized from attributes or inline style, inline-style
//! `display`, `width` and `height`, and the `hidden` attribute. Floats,
//! positioning, flex and grid all fall back to normal block flow, and
//! stylesheets are ignored.

use serde::Serialize;
use thiserror::Error;

use crate::dom::{Child, Document, NodeId};
use crate::tags::{self, is_in};

pub const MIN_VIEWPORT_WIDTH: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("invalid viewport {width}x{height}: width must be >= {MIN_VIEWPORT_WIDTH} and height > 0")]
    InvalidViewport { width: u32, height: u32 },
    #[error("cannot parse viewport {0:?}, expected WIDTHxHEIGHT")]
    MalformedViewport(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Default for Viewport {
    fn default() -> Self {
        Self { width: 1280, height: 800 }
    }
}

impl Viewport {
    pub fn new(width: u32, height: u32) -> Result<Self, LayoutError> {
        if width < MIN_VIEWPORT_WIDTH || height == 0 {
            return Err(LayoutError::InvalidViewport { width, height });
        }
        Ok(Self { width, height })
    }
}

impl std::str::FromStr for Viewport {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || LayoutError::MalformedViewport(s.to_string());
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(malformed)?;
        let width = w.trim().parse().map_err(|_| malformed())?;
        let height = h.trim().parse().map_err(|_| malformed())?;
        Viewport::new(width, height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Display {
    Block,
    Inline,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayoutBox {
    pub node_id: NodeId,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "w")]
    pub width: f64,
    #[serde(rename = "h")]
    pub height: f64,
    pub visible: bool,
    #[serde(skip)]
    pub display: Display,
}

/// Default presentation values for the built-in stylesheet.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleDefaults {
    pub base_font_size: f64,
    pub body_margin: f64,
    pub line_height_ratio: f64,
    pub char_width_ratio: f64,
    pub default_image_size: (f64, f64),
}

impl Default for StyleDefaults {
    fn default() -> Self {
        Self {
            base_font_size: 16.0,
            body_margin: 8.0,
            line_height_ratio: 1.25,
            char_width_ratio: 0.5,
            default_image_size: (150.0, 150.0),
        }
    }
}

impl StyleDefaults {
    /// Font size set by the tag itself, `None` when inherited.
    pub fn tag_font_size(&self, tag: &str) -> Option<f64> {
        match tag {
            "H1" => Some(32.0),
            "H2" => Some(24.0),
            "H3" => Some(19.0),
            "H4" => Some(16.0),
            "H5" => Some(13.0),
            "H6" => Some(11.0),
            _ => None,
        }
    }

    pub fn margin(&self, tag: &str) -> f64 {
        if tag == "BODY" {
            self.body_margin
        } else {
            0.0
        }
    }

    pub fn line_height(&self, font_size: f64) -> f64 {
        self.line_height_ratio * font_size
    }

    pub fn char_width(&self, font_size: f64) -> f64 {
        self.char_width_ratio * font_size
    }

    /// Display class of a known tag. Unknown tags are resolved by content.
    pub fn known_display(&self, tag: &str) -> Option<Display> {
        if is_in(tags::HIDDEN, tag) {
            Some(Display::None)
        } else if is_in(tags::BLOCK, tag) {
            Some(Display::Block)
        } else if is_in(tags::INLINE, tag) {
            Some(Display::Inline)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutTree {
    pub viewport: Viewport,
    pub page_height: f64,
    pub boxes: Vec<LayoutBox>,
}

impl LayoutTree {
    pub fn get(&self, id: NodeId) -> Option<&LayoutBox> {
        self.boxes.get(id)
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Length {
    Px(f64),
    Percent(f64),
}

/// Inline `style` declarations that the engine honors.
#[derive(Debug, Default, Clone, Copy)]
struct InlineStyle {
    display: Option<Display>,
    width: Option<Length>,
    height: Option<Length>,
}

fn parse_length(value: &str) -> Option<Length> {
    let v = value.trim().to_ascii_lowercase();
    if let Some(p) = v.strip_suffix('%') {
        return p.trim().parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0).map(Length::Percent);
    }
    let number = v.strip_suffix("px").unwrap_or(&v).trim();
    number.parse::<f64>().ok().filter(|x| x.is_finite() && *x >= 0.0).map(Length::Px)
}

/// Leading integer of an HTML dimension attribute (`"600"`, `"600px"`).
fn parse_dimension_attr(value: &str) -> Option<Length> {
    let v = value.trim();
    if v.ends_with('%') {
        return parse_length(v);
    }
    let digits: String = v.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse::<f64>().ok().map(Length::Px)
}

fn parse_style(style: &str) -> InlineStyle {
    let mut out = InlineStyle::default();
    for decl in style.split(';') {
        let Some((k, v)) = decl.split_once(':') else { continue };
        let value = v.trim().trim_end_matches("!important").trim().to_ascii_lowercase();
        match k.trim().to_ascii_lowercase().as_str() {
            "display" => {
                out.display = match value.as_str() {
                    "none" => Some(Display::None),
                    "inline" | "inline-block" | "inline-flex" | "inline-grid" | "inline-table"
                    | "contents" => Some(Display::Inline),
                    "" => None,
                    _ => Some(Display::Block),
                }
            }
            "width" => out.width = parse_length(&value),
            "height" => out.height = parse_length(&value),
            _ => {}
        }
    }
    out
}

struct Engine<'a> {
    doc: &'a Document,
    style: &'a StyleDefaults,
    viewport: Viewport,
    styles: Vec<InlineStyle>,
    display: Vec<Display>,
    boxes: Vec<LayoutBox>,
}

/// Running state of an inline formatting context.
struct InlineFlow {
    left: f64,
    width: f64,
    char_width: f64,
    line_height: f64,
    max_cols: usize,
    /// Top of the current line.
    y: f64,
    col: usize,
    line_open: bool,
    pending_space: bool,
    /// Open inline elements and their content bounds (x0, y0, x1, y1).
    open: Vec<(NodeId, Option<Bounds>)>,
}

type Bounds = (f64, f64, f64, f64);

impl InlineFlow {
    fn new(left: f64, width: f64, y: f64, font_size: f64, style: &StyleDefaults) -> Self {
        let char_width = style.char_width(font_size);
        let max_cols = ((width / char_width).floor() as usize).max(1);
        Self {
            left,
            width,
            char_width,
            line_height: style.line_height(font_size),
            max_cols,
            y,
            col: 0,
            line_open: false,
            pending_space: false,
            open: Vec::new(),
        }
    }

    fn extend_open(&mut self, rect: (f64, f64, f64, f64)) {
        for (_, bounds) in &mut self.open {
            *bounds = Some(match *bounds {
                None => rect,
                Some((x0, y0, x1, y1)) => (x0.min(rect.0), y0.min(rect.1), x1.max(rect.2), y1.max(rect.3)),
            });
        }
    }

    fn emit_chars(&mut self, n: usize) {
        self.place_chars(n, true);
    }

    fn place_chars(&mut self, mut n: usize, owned: bool) {
        while n > 0 {
            if self.col == self.max_cols {
                self.y += self.line_height;
                self.col = 0;
            }
            let take = n.min(self.max_cols - self.col);
            let x0 = self.left + self.col as f64 * self.char_width;
            self.col += take;
            n -= take;
            self.line_open = true;
            if owned {
                let x1 = self.left + self.col as f64 * self.char_width;
                self.extend_open((x0, self.y, x1, self.y + self.line_height));
            }
        }
    }

    /// Place text with whitespace collapsed; leading and trailing whitespace
    /// of the whole run never produce characters.
    fn text(&mut self, raw: &str) {
        let mut word = 0usize;
        for c in raw.chars() {
            if c.is_whitespace() {
                if word > 0 {
                    self.emit_chars(word);
                    word = 0;
                }
                if self.line_open || self.col > 0 {
                    self.pending_space = true;
                }
            } else {
                if word == 0 && self.pending_space {
                    // Collapsed whitespace belongs to no element.
                    self.place_chars(1, false);
                    self.pending_space = false;
                }
                word += 1;
            }
        }
        if word > 0 {
            self.emit_chars(word);
        }
    }

    fn end_line(&mut self) {
        if self.line_open {
            self.y += self.line_height;
        }
        self.col = 0;
        self.line_open = false;
        self.pending_space = false;
    }

    fn line_break(&mut self) {
        let was_open = self.line_open;
        self.end_line();
        if !was_open {
            self.y += self.line_height;
        }
    }

    /// Bottom edge of the content placed so far.
    fn bottom(&self) -> f64 {
        if self.line_open {
            self.y + self.line_height
        } else {
            self.y
        }
    }
}

impl<'a> Engine<'a> {
    fn new(doc: &'a Document, viewport: Viewport, style: &'a StyleDefaults) -> Self {
        let styles: Vec<InlineStyle> =
            doc.elements().iter().map(|e| e.attr("style").map(parse_style).unwrap_or_default()).collect();
        let mut display = vec![Display::Inline; doc.len()];
        // Children have larger ids than parents, so a reverse sweep resolves
        // content-dependent displays bottom-up.
        for id in (0..doc.len()).rev() {
            let el = &doc.elements()[id];
            display[id] = if el.has_attr("hidden") {
                Display::None
            } else if let Some(d) = styles[id].display {
                d
            } else if let Some(d) = style.known_display(&el.tag) {
                d
            } else if el.element_children().any(|c| display[c] == Display::Block) {
                Display::Block
            } else {
                Display::Inline
            };
        }
        display[0] = Display::Block;
        let boxes = (0..doc.len())
            .map(|node_id| LayoutBox {
                node_id,
                x: 0.0,
                y: 0.0,
                width: 0.0,
                height: 0.0,
                visible: false,
                display: display[node_id],
            })
            .collect();
        Self { doc, style, viewport, styles, display, boxes }
    }

    fn font_size(&self, id: NodeId, inherited: f64) -> f64 {
        self.style.tag_font_size(&self.doc.elements()[id].tag).unwrap_or(inherited)
    }

    fn hide_subtree(&mut self, id: NodeId, x: f64, y: f64) {
        let el = &self.doc.elements()[id];
        for i in id..=id + el.descendant_count {
            let b = &mut self.boxes[i];
            b.x = x;
            b.y = y;
            b.width = 0.0;
            b.height = 0.0;
            b.visible = false;
        }
        self.boxes[id].display = Display::None;
    }

    fn image_size(&self, id: NodeId, container_width: f64) -> (f64, f64) {
        let el = &self.doc.elements()[id];
        let style = self.styles[id];
        let resolve_w = |l: Length| match l {
            Length::Px(v) => v,
            Length::Percent(p) => container_width * p / 100.0,
        };
        let resolve_h = |l: Length| match l {
            Length::Px(v) => v,
            Length::Percent(p) => f64::from(self.viewport.height) * p / 100.0,
        };
        let width = el.attr("width").and_then(parse_dimension_attr).or(style.width).map(resolve_w);
        let height = el.attr("height").and_then(parse_dimension_attr).or(style.height).map(resolve_h);
        let (dw, dh) = self.style.default_image_size;
        match (width, height) {
            (Some(w), Some(h)) => (w, h),
            // A single given dimension keeps the square default aspect.
            (Some(w), None) => (w, w * dh / dw),
            (None, Some(h)) => (h * dw / dh, h),
            (None, None) => (dw, dh),
        }
    }

    /// Lay out a block-level element whose margin box starts at (`x`, `y`)
    /// with `avail` px of horizontal space. Returns the margin-box height.
    fn layout_block(&mut self, id: NodeId, x: f64, y: f64, avail: f64, font: f64) -> f64 {
        let el = &self.doc.elements()[id];
        let margin = self.style.margin(&el.tag);
        let max_width = (avail - 2.0 * margin).max(0.0);
        let width = match self.styles[id].width {
            Some(Length::Px(w)) => w.min(max_width),
            Some(Length::Percent(p)) => (avail * p / 100.0).min(max_width),
            None => max_width,
        };
        let font = self.font_size(id, font);
        let left = x + margin;
        let top = y + margin;
        if el.tag == "IMG" {
            let (w, h) = self.image_size(id, avail);
            self.set_box(id, (left, top, left + w, top + h));
            return h + 2.0 * margin;
        }
        let height = self.layout_children(id, left, top, width, font) - top;
        let b = &mut self.boxes[id];
        b.x = left;
        b.y = top;
        b.width = width;
        b.height = height;
        b.visible = true;
        height + 2.0 * margin
    }

    /// Lay out the children of `id` inside a content box. Returns the bottom
    /// edge of the content.
    fn layout_children(&mut self, id: NodeId, left: f64, top: f64, width: f64, font: f64) -> f64 {
        let mut cursor = top;
        let mut flow: Option<InlineFlow> = None;
        let children = self.doc.elements()[id].children.clone();
        for child in &children {
            match child {
                Child::Text(t) => {
                    let style = self.style;
                    flow.get_or_insert_with(|| InlineFlow::new(left, width, cursor, font, style)).text(t.raw());
                }
                Child::Element(cid) => match self.display[*cid] {
                    Display::None => {
                        let y = flow.as_ref().map_or(cursor, InlineFlow::bottom);
                        self.hide_subtree(*cid, left, y);
                    }
                    Display::Block => {
                        if let Some(mut f) = flow.take() {
                            f.end_line();
                            cursor = f.y;
                        }
                        cursor += self.layout_block(*cid, left, cursor, width, font);
                    }
                    Display::Inline => {
                        let style = self.style;
                        let mut f =
                            flow.take().unwrap_or_else(|| InlineFlow::new(left, width, cursor, font, style));
                        self.layout_inline(*cid, &mut f, font);
                        flow = Some(f);
                    }
                },
            }
        }
        if let Some(mut f) = flow {
            f.end_line();
            cursor = f.y;
        }
        cursor
    }

    fn layout_inline(&mut self, id: NodeId, flow: &mut InlineFlow, font: f64) {
        let el = &self.doc.elements()[id];
        let font = self.font_size(id, font);
        match el.tag.as_str() {
            "BR" => {
                let (x, y) = (flow.left + flow.col as f64 * flow.char_width, flow.y);
                flow.line_break();
                self.set_box(id, (x, y, x, y));
                return;
            }
            "IMG" => {
                let (w, h) = self.image_size(id, flow.width);
                flow.end_line();
                let rect = (flow.left, flow.y, flow.left + w, flow.y + h);
                flow.extend_open(rect);
                flow.y += h;
                self.set_box(id, rect);
                return;
            }
            _ => {}
        }
        let start = (flow.left + flow.col as f64 * flow.char_width, flow.y);
        flow.open.push((id, None));
        let children = el.children.clone();
        for child in &children {
            match child {
                Child::Text(t) => flow.text(t.raw()),
                Child::Element(cid) => match self.display[*cid] {
                    Display::None => self.hide_subtree(*cid, flow.left, flow.bottom()),
                    Display::Inline => self.layout_inline(*cid, flow, font),
                    Display::Block => {
                        // Block inside inline: break the line around it.
                        flow.end_line();
                        let h = self.layout_block(*cid, flow.left, flow.y, flow.width, font);
                        let b = self.boxes[*cid];
                        flow.extend_open((b.x, b.y, b.x + b.width, b.y + b.height));
                        flow.y += h;
                    }
                },
            }
        }
        let (_, bounds) = flow.open.pop().expect("pushed above");
        let rect = bounds.unwrap_or((start.0, start.1, start.0, start.1));
        self.set_box(id, rect);
    }

    fn set_box(&mut self, id: NodeId, (x0, y0, x1, y1): (f64, f64, f64, f64)) {
        let b = &mut self.boxes[id];
        b.x = x0;
        b.y = y0;
        b.width = x1 - x0;
        b.height = y1 - y0;
        b.visible = true;
    }

    fn run(mut self) -> LayoutTree {
        let vw = f64::from(self.viewport.width);
        let font = self.style.base_font_size;
        self.layout_block(0, 0.0, 0.0, vw, font);
        let page_height = self.boxes[0].height;
        LayoutTree { viewport: self.viewport, page_height, boxes: self.boxes }
    }
}

pub fn compute_layout(doc: &Document, viewport: Viewport) -> LayoutTree {
    compute_layout_with(doc, viewport, &StyleDefaults::default())
}

pub fn compute_layout_with(doc: &Document, viewport: Viewport, style: &StyleDefaults) -> LayoutTree {
    Engine::new(doc, viewport, style).run()
}

/// True when the element owns at least one text character directly, i.e.
/// through text children or inline descendants that are not blocks.
pub fn owns_text(doc: &Document, layout: &LayoutTree, id: NodeId) -> bool {
    doc.elements()[id].children.iter().any(|c| match c {
        Child::Text(t) => !t.raw().trim().is_empty(),
        Child::Element(cid) => {
            let b = &layout.boxes[*cid];
            b.display == Display::Inline && b.visible && owns_text(doc, layout, *cid)
        }
    })
}

/// Elements the classifiers score, in document order: visible block-level
/// elements that directly own text, and every visible `IMG`.
pub fn visible_candidates(layout: &LayoutTree, doc: &Document) -> Vec<NodeId> {
    doc.elements()
        .iter()
        .filter(|el| {
            let b = &layout.boxes[el.node_id];
            if !b.visible {
                return false;
            }
            if el.tag == "IMG" {
                return true;
            }
            b.display == Display::Block && owns_text(doc, layout, el.node_id)
        })
        .map(|el| el.node_id)
        .collect()
}
