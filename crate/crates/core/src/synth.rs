//! Seeded generator for news-like labeled pages.
//!
//! Pages are written with `data-synth="R"|"NR"` markers on container
//! elements. After parsing, every candidate takes the label of its nearest
//! marked ancestor (unmarked chrome is `NR`) and the markers are stripped
//! before the page is serialized, so the stored HTML carries no label hints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{LabelRecord, LabeledPage, PAGE_FILE};
use crate::dom::{outer_html, parse_document, serialize, Document, DomError, NodeId, ParseConfig};
use crate::label::Label;
use crate::layout::{compute_layout, visible_candidates, Viewport};

pub const MARKER: &str = "data-synth";

const WORDS: &[&str] = &[
    "the", "city", "council", "said", "on", "report", "new", "plan", "would", "increase", "funding",
    "for", "local", "schools", "after", "years", "of", "debate", "among", "residents", "officials",
    "expect", "vote", "next", "month", "while", "critics", "argue", "that", "budget", "cannot",
    "support", "such", "changes", "without", "higher", "taxes", "in", "a", "statement", "mayor",
    "described", "proposal", "as", "balanced", "and", "fair", "researchers", "found", "water",
    "levels", "river", "had", "fallen", "sharply", "during", "summer", "drought", "farmers",
    "region", "have", "warned", "harvest", "may", "be", "smaller", "than", "last", "year",
    "company", "announced", "quarterly", "results", "showing", "strong", "growth", "its", "cloud",
    "business", "investors", "reacted", "cautiously", "shares", "rose", "slightly", "early",
    "trading", "team", "won", "match", "with", "late", "goal", "from", "young", "striker", "who",
    "joined", "club", "this", "season", "coach", "praised", "players", "effort", "despite",
    "difficult", "conditions", "hospital", "staff", "reported", "rise", "patients", "seeking",
    "treatment", "flu", "health", "authorities", "urged", "people", "get", "vaccinated", "before",
    "winter", "scientists", "believe", "discovery", "could", "help", "explain", "how", "ancient",
    "communities", "traded", "goods", "across", "long", "distances", "museum", "will", "display",
    "artifacts", "spring", "exhibition", "opening", "government", "is", "considering", "measures",
    "to", "reduce", "traffic", "congestion", "centre", "including", "charges", "drivers",
    "entering", "during", "peak", "hours", "police", "are", "investigating", "incident", "which",
    "took", "place", "late", "evening", "witnesses", "described", "seeing", "several", "vehicles",
];

const SECTIONS: &[&str] = &[
    "World", "Politics", "Business", "Technology", "Science", "Health", "Sport", "Culture",
    "Travel", "Opinion", "Weather", "Video",
];

const ARTICLE_CLASSES: &[&str] =
    &["story-body", "article-content", "entry", "post-body", "c-main", "text-block", "cb7x"];
const NAV_CLASSES: &[&str] = &["nav", "menu", "top-links", "site-nav", "primary-menu"];
const SIDEBAR_CLASSES: &[&str] = &["sidebar", "rail", "most-read", "aside-col", "related-col"];
const COMMENT_CLASSES: &[&str] = &["comments", "comment-thread", "responses", "discussion"];

struct Gen {
    rng: ChaCha8Rng,
    html: String,
}

impl Gen {
    fn pick<'a>(&mut self, items: &'a [&'a str]) -> &'a str {
        items.choose(&mut self.rng).expect("non-empty")
    }

    fn words(&mut self, n: usize) -> String {
        (0..n).map(|_| *WORDS.choose(&mut self.rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
    }

    fn sentence(&mut self) -> String {
        let n = self.rng.gen_range(6..=18);
        let mut s = self.words(n);
        if let Some(first) = s.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        s.push('.');
        s
    }

    fn title(&mut self, lo: usize, hi: usize) -> String {
        let n = self.rng.gen_range(lo..=hi);
        self.words(n)
            .split(' ')
            .map(|w| {
                let mut c = w.chars();
                c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn push(&mut self, s: &str) {
        self.html.push_str(s);
    }

    fn paragraph(&mut self) {
        let sentences = self.rng.gen_range(2..=6);
        let mut text = String::new();
        for i in 0..sentences {
            if i > 0 {
                text.push(' ');
            }
            let s = self.sentence();
            if self.rng.gen_bool(0.12) {
                // An occasional inline link inside body text.
                let mut parts = s.splitn(3, ' ');
                let (a, b, rest) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""), parts.next().unwrap_or(""));
                let _ = write!(text, "{a} <a href=\"/topic/{b}\">{b}</a> {rest}");
            } else if self.rng.gen_bool(0.1) {
                let _ = write!(text, "<b>{s}</b>");
            } else {
                text.push_str(&s);
            }
        }
        let _ = write!(self.html, "<p>{text}</p>");
    }

    fn image(&mut self, src: &str, w: u32, h: u32, alt: Option<String>) {
        let alt = alt.map(|a| format!(" alt=\"{a}\"")).unwrap_or_default();
        if self.rng.gen_bool(0.25) {
            let _ = write!(self.html, "<img src=\"{src}\" style=\"width:{w}px;height:{h}px\"{alt}>");
        } else {
            let _ = write!(self.html, "<img src=\"{src}\" width=\"{w}\" height=\"{h}\"{alt}>");
        }
    }

    fn content_figure(&mut self, n: usize) {
        let w = self.rng.gen_range(400..=840);
        let h = w * self.rng.gen_range(50..=75) / 100;
        let alt_len = self.rng.gen_range(3..=12);
        let alt = if self.rng.gen_bool(0.85) { Some(self.words(alt_len)) } else { None };
        self.push("<figure>");
        self.image(&format!("/media/photo-{n}.jpg"), w, h, alt);
        if self.rng.gen_bool(0.7) {
            let cap_len = self.rng.gen_range(5..=14);
            let cap = self.words(cap_len);
            let _ = write!(self.html, "<figcaption>{cap}</figcaption>");
        }
        self.push("</figure>");
    }

    fn link_list(&mut self, items: usize, words: (usize, usize)) {
        self.push("<ul>");
        for _ in 0..items {
            let n = self.rng.gen_range(words.0..=words.1);
            let t = self.title(n, n);
            let slug = t.to_lowercase().replace(' ', "-");
            let _ = write!(self.html, "<li><a href=\"/news/{slug}\">{t}</a></li>");
        }
        self.push("</ul>");
    }

    fn in_article_noise(&mut self, page: usize) {
        match self.rng.gen_range(0..3) {
            0 => {
                self.push("<div class=\"related-links\" data-synth=\"NR\"><h3>Related stories</h3>");
                let k = self.rng.gen_range(2..=4);
                self.link_list(k, (4, 9));
                self.push("</div>");
            }
            1 => {
                self.push("<div class=\"inline-ad\" data-synth=\"NR\">");
                self.image(&format!("/ads/box-{page}.gif"), 300, 250, None);
                self.push("<p>Advertisement</p></div>");
            }
            _ => {
                let net = self.pick(&["Facebook", "Twitter", "Email", "WhatsApp"]);
                let _ = write!(
                    self.html,
                    "<div class=\"share-tools\" data-synth=\"NR\"><p>Share this story <a href=\"/share/fb\">{net}</a> <a href=\"/share/tw\">Twitter</a> <a href=\"/share/mail\">Email</a></p></div>"
                );
            }
        }
    }

    fn page(&mut self, page: usize) {
        let site = self.title(1, 2);
        let headline = self.title(5, 12);
        let _ = write!(
            self.html,
            "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>{headline} - {site}</title><style>body {{ font-family: serif; }}</style><script>window.analytics = [];</script></head><body>"
        );

        // Header chrome: logo, navigation, optional banner.
        let _ = write!(self.html, "<header class=\"masthead\"><div class=\"logo\">");
        self.image("/static/logo.png", 120, 40, Some(site.clone()));
        let nav = self.pick(NAV_CLASSES);
        let _ = write!(self.html, "</div><nav class=\"{nav}\"><ul>");
        let k = self.rng.gen_range(5..=9);
        let mut sections = SECTIONS.to_vec();
        sections.shuffle(&mut self.rng);
        for s in &sections[..k] {
            let _ = write!(self.html, "<li><a href=\"/{}\">{s}</a></li>", s.to_lowercase());
        }
        self.push("</ul></nav></header>");
        if self.rng.gen_bool(0.6) {
            self.push("<div class=\"ad-banner\">");
            self.image(&format!("/ads/banner-{page}.gif"), 728, 90, None);
            self.push("</div>");
        }
        if self.rng.gen_bool(0.3) {
            self.push("<div class=\"cookie-notice\" style=\"display:none\"><p>We use cookies to improve your experience on this site.</p></div>");
        }

        // Article body.
        let container = if self.rng.gen_bool(0.5) { "main" } else { "div" };
        let _ = write!(self.html, "<{container} id=\"content\">");
        let cls = self.pick(ARTICLE_CLASSES);
        let width = if self.rng.gen_bool(0.5) {
            format!(" style=\"width:{}px\"", self.rng.gen_range(640..=1000))
        } else {
            String::new()
        };
        let _ = write!(self.html, "<article class=\"{cls}\"{width} data-synth=\"R\"><h1 class=\"{cls}__h1\">{headline}</h1>");
        let author = self.title(2, 2);
        let _ = write!(
            self.html,
            "<p class=\"byline\">By {author} | {} March 2024</p>",
            self.rng.gen_range(1..=28)
        );
        let mut images = 0;
        if self.rng.gen_bool(0.8) {
            images += 1;
            self.content_figure(page * 10 + images);
        }
        let paragraphs = self.rng.gen_range(5..=14);
        let noise_at: Vec<usize> = (0..self.rng.gen_range(1..=2)).map(|_| self.rng.gen_range(1..paragraphs)).collect();
        for i in 0..paragraphs {
            if noise_at.contains(&i) {
                self.in_article_noise(page);
            }
            if i > 0 && i % 4 == 0 && self.rng.gen_bool(0.5) {
                images += 1;
                self.content_figure(page * 10 + images);
            }
            if i > 0 && self.rng.gen_bool(0.15) {
                let t = self.title(3, 7);
                let _ = write!(self.html, "<h2>{t}</h2>");
            }
            self.paragraph();
        }
        self.push("</article>");

        // Comments.
        if self.rng.gen_bool(0.6) {
            let cc = self.pick(COMMENT_CLASSES);
            let _ = write!(self.html, "<section class=\"{cc}\" data-synth=\"NR\"><h3>Comments</h3>");
            for _ in 0..self.rng.gen_range(2..=6) {
                let user = self.title(1, 1);
                let n = self.rng.gen_range(8..=45);
                let text = self.words(n);
                let _ = write!(
                    self.html,
                    "<div class=\"comment\"><div class=\"comment-meta\"><a href=\"/user/{}\">{user}</a> wrote:</div><p>{text}</p></div>",
                    user.to_lowercase()
                );
            }
            self.push("</section>");
        }
        let _ = write!(self.html, "</{container}>");

        // Sidebar.
        let side = self.pick(SIDEBAR_CLASSES);
        let _ = write!(self.html, "<aside class=\"{side}\" data-synth=\"NR\"><h2>Most read</h2>");
        let k = self.rng.gen_range(4..=7);
        if self.rng.gen_bool(0.5) {
            self.push("<ol>");
            for i in 0..k {
                let t = self.title(5, 10);
                let _ = write!(self.html, "<li><a href=\"/news/{i}\">");
                self.image(&format!("/thumbs/{page}-{i}.jpg"), 100, 75, None);
                let _ = write!(self.html, "{t}</a></li>");
            }
            self.push("</ol>");
        } else {
            self.link_list(k, (5, 10));
        }
        let (w, h) = *[(300, 250), (160, 600), (300, 600)].choose(&mut self.rng).expect("non-empty");
        self.image(&format!("/ads/side-{page}.gif"), w, h, None);
        let promo_len = self.rng.gen_range(8..=16);
        let promo = self.words(promo_len);
        let _ = write!(self.html, "<div class=\"newsletter-promo\"><p>Sign up: {promo}</p></div></aside>");

        // Footer.
        let _ = write!(self.html, "<footer class=\"site-footer\" data-synth=\"NR\"><p>Copyright 2024 {site}. All rights reserved. <a href=\"/privacy\">Privacy</a> <a href=\"/terms\">Terms</a></p><div class=\"social\">");
        for net in ["facebook", "twitter", "instagram"] {
            self.image(&format!("/static/{net}.png"), 32, 32, Some(net.to_string()));
        }
        self.push("</div>");
        let k = self.rng.gen_range(3..=6);
        self.link_list(k, (1, 3));
        self.push("</footer>");
        if self.rng.gen_bool(0.5) {
            self.image("/pixel.gif", 1, 1, None);
        }
        self.push("</body></html>");
    }
}

/// Label of the nearest ancestor-or-self carrying the marker; `NR` if none.
fn marked_label(doc: &Document, id: NodeId) -> Label {
    let mut cur = Some(id);
    while let Some(i) = cur {
        let el = &doc.elements()[i];
        match el.attr(MARKER) {
            Some("R") => return Label::Relevant,
            Some(_) => return Label::NotRelevant,
            None => cur = el.parent,
        }
    }
    Label::NotRelevant
}

/// Page id for the `index`-th page (zero based).
pub fn page_id(index: usize) -> String {
    format!("page_{:03}", index + 1)
}

/// Build the labeled page for marked HTML: labels for every visible
/// candidate, markers stripped from the stored HTML.
pub fn label_marked_html(id: &str, marked: &str) -> Result<LabeledPage, DomError> {
    let mut doc = parse_document(marked, &ParseConfig::default())?;
    let layout = compute_layout(&doc, Viewport::default());
    let candidates = visible_candidates(&layout, &doc);
    let labels: BTreeMap<NodeId, Label> = candidates.iter().map(|&c| (c, marked_label(&doc, c))).collect();
    doc.strip_attribute(MARKER);
    let records = candidates
        .iter()
        .map(|&c| {
            Ok(LabelRecord {
                label: labels[&c],
                tag: doc.elements()[c].tag.clone(),
                id: c.to_string(),
                content: outer_html(&doc, c, &labels)?,
            })
        })
        .collect::<Result<Vec<_>, DomError>>()?;
    Ok(LabeledPage {
        page_id: id.to_string(),
        html_path: PathBuf::from(id).join(PAGE_FILE),
        html: serialize(&doc),
        labels: records,
        warnings: Vec::new(),
    })
}

/// Marked HTML for one page. Each page draws from its own stream of the
/// seeded generator, so page `i` does not depend on how many pages are made.
pub fn marked_page(seed: u64, index: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut g = Gen { rng, html: String::new() };
    g.page(index + 1);
    g.html
}

pub fn generate(pages: usize, seed: u64) -> Result<Vec<LabeledPage>, DomError> {
    (0..pages).map(|i| label_marked_html(&page_id(i), &marked_page(seed, i))).collect()
}
