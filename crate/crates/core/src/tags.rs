//! Static tag tables shared by the parser, the layout engine and the
//! feature extractor. Tag names are uppercase throughout.

/// Elements that never have children or an end tag.
pub const VOID: &[&str] = &[
    "AREA", "BASE", "BR", "COL", "EMBED", "HR", "IMG", "INPUT", "LINK", "META", "PARAM", "SOURCE",
    "TRACK", "WBR",
];

/// Elements whose content is kept verbatim and never becomes text.
pub const RAW_TEXT: &[&str] = &["SCRIPT", "STYLE"];

/// Elements whose content is character data only (no markup).
pub const RCDATA: &[&str] = &["TITLE", "TEXTAREA"];

/// Elements that live in the document head when seen before any body content.
pub const HEAD_CONTENT: &[&str] = &["BASE", "LINK", "META", "SCRIPT", "STYLE", "TITLE", "NOSCRIPT"];

pub const BLOCK: &[&str] = &[
    "HTML", "BODY", "ADDRESS", "ARTICLE", "ASIDE", "BLOCKQUOTE", "CAPTION", "CENTER", "DD",
    "DETAILS", "DIALOG", "DIR", "DIV", "DL", "DT", "FIELDSET", "FIGCAPTION", "FIGURE", "FOOTER",
    "FORM", "H1", "H2", "H3", "H4", "H5", "H6", "HEADER", "HGROUP", "HR", "IFRAME", "LEGEND", "LI",
    "MAIN", "MENU", "NAV", "OL", "OPTGROUP", "P", "PRE", "SECTION", "SUMMARY", "TABLE", "TBODY",
    "TD", "TFOOT", "TH", "THEAD", "TR", "UL",
];

pub const INLINE: &[&str] = &[
    "A", "ABBR", "AUDIO", "B", "BDI", "BDO", "BIG", "BR", "BUTTON", "CANVAS", "CITE", "CODE",
    "DATA", "DEL", "DFN", "EM", "EMBED", "FONT", "I", "IMG", "INPUT", "INS", "KBD", "LABEL", "MARK",
    "METER", "OBJECT", "OPTION", "OUTPUT", "PICTURE", "PROGRESS", "Q", "RP", "RT", "RUBY", "S",
    "SAMP", "SELECT", "SMALL", "SOURCE", "SPAN", "STRIKE", "STRONG", "SUB", "SUP", "SVG",
    "TEXTAREA", "TIME", "TT", "U", "VAR", "VIDEO", "WBR",
];

pub const HIDDEN: &[&str] = &[
    "HEAD", "BASE", "LINK", "META", "NOSCRIPT", "SCRIPT", "STYLE", "TEMPLATE", "TITLE",
];

/// Start tags that implicitly close an open `P`.
pub const CLOSES_P: &[&str] = &[
    "ADDRESS", "ARTICLE", "ASIDE", "BLOCKQUOTE", "CENTER", "DD", "DETAILS", "DIR", "DIV", "DL",
    "DT", "FIELDSET", "FIGCAPTION", "FIGURE", "FOOTER", "FORM", "H1", "H2", "H3", "H4", "H5", "H6",
    "HEADER", "HGROUP", "HR", "LI", "MAIN", "MENU", "NAV", "OL", "P", "PRE", "SECTION", "SUMMARY",
    "TABLE", "UL",
];

/// Elements that bound the search for an implicitly closed element.
pub const SCOPE_BOUNDARY: &[&str] = &[
    "HTML", "BODY", "TABLE", "TD", "TH", "CAPTION", "IFRAME", "OBJECT", "TEMPLATE", "BUTTON",
];

pub const HEADINGS: &[&str] = &["H1", "H2", "H3", "H4", "H5", "H6"];

pub fn is_in(set: &[&str], tag: &str) -> bool {
    set.contains(&tag)
}

/// Tags that separate words in extracted text: anything laid out on its own
/// line plus explicit breaks and replaced content.
pub fn breaks_text(tag: &str) -> bool {
    is_in(BLOCK, tag) || matches!(tag, "BR" | "IMG")
}

/// Fixed code table for the `tag_code` feature. Known tags get
/// `64 + position`; unknown tags hash into buckets `0..64`.
pub const TAG_CODES: &[&str] = &[
    "A", "ARTICLE", "ASIDE", "B", "BLOCKQUOTE", "BODY", "BUTTON", "CAPTION", "CODE", "DD", "DIV",
    "DL", "DT", "EM", "FIGCAPTION", "FIGURE", "FOOTER", "FORM", "H1", "H2", "H3", "H4", "H5", "H6",
    "HEADER", "HTML", "I", "IFRAME", "IMG", "INPUT", "LABEL", "LI", "MAIN", "NAV", "OL", "P", "PRE",
    "SECTION", "SMALL", "SPAN", "STRONG", "TABLE", "TBODY", "TD", "TH", "THEAD", "TIME", "TR",
    "UL", "VIDEO",
];

pub const UNKNOWN_TAG_BUCKETS: u64 = 64;

pub fn tag_code(tag: &str) -> u32 {
    match TAG_CODES.iter().position(|t| *t == tag) {
        Some(i) => UNKNOWN_TAG_BUCKETS as u32 + i as u32,
        None => (fnv1a(tag.as_bytes()) % UNKNOWN_TAG_BUCKETS) as u32,
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_tags_have_one_display_class() {
        for tag in BLOCK {
            assert!(!is_in(INLINE, tag), "{tag} is both block and inline");
            assert!(!is_in(HIDDEN, tag), "{tag} is both block and hidden");
        }
        for tag in INLINE {
            assert!(!is_in(HIDDEN, tag), "{tag} is both inline and hidden");
        }
    }

    #[test]
    fn tag_codes_split_known_and_unknown() {
        assert_eq!(tag_code("A"), 64);
        assert!(tag_code("P") >= 64);
        let unknown = tag_code("X-WIDGET");
        assert!(unknown < 64);
        assert_eq!(unknown, tag_code("X-WIDGET"));
    }
}
