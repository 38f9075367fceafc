use pagesift::features::{extract_features, Feature};
use pagesift::layout::{compute_layout, visible_candidates, Display, LayoutTree, Viewport};
use pagesift::{parse_document, Document, ParseConfig};
use proptest::prelude::*;

fn layout(html: &str, vp: Viewport) -> (Document, LayoutTree) {
    let doc = parse_document(html, &ParseConfig::default()).unwrap();
    let tree = compute_layout(&doc, vp);
    (doc, tree)
}

#[test]
fn candidates_in_document_order() {
    let (doc, tree) = layout("<p>one</p><p>two</p><img src=\"a.png\"><p>three</p>", Viewport::default());
    let tags: Vec<&str> = visible_candidates(&tree, &doc).iter().map(|&i| doc.elements()[i].tag.as_str()).collect();
    assert_eq!(tags, ["P", "P", "IMG", "P"]);
}

#[test]
fn hidden_paragraph_is_not_a_candidate() {
    let (doc, tree) = layout("<div style=\"display:none\"><p>gone</p></div><p>kept</p>", Viewport::default());
    assert_eq!(visible_candidates(&tree, &doc), vec![4]);
}

#[test]
fn block_without_own_text_is_not_a_candidate() {
    let (doc, tree) = layout("<div><p>inner</p></div><div><span>own</span></div>", Viewport::default());
    let tags: Vec<(usize, &str)> =
        visible_candidates(&tree, &doc).iter().map(|&i| (i, doc.elements()[i].tag.as_str())).collect();
    assert_eq!(tags, [(3, "P"), (4, "DIV")]);
}

#[test]
fn viewport_validation() {
    assert!(Viewport::new(63, 800).is_err());
    assert!(Viewport::new(64, 0).is_err());
    assert!("1280x800".parse::<Viewport>().is_ok());
    assert!("1280".parse::<Viewport>().is_err());
    assert!("wide x tall".parse::<Viewport>().is_err());
}

#[test]
fn image_feature_arithmetic() {
    // Page: 600x400 image under the 8 px body margin, 416 px high.
    let (doc, tree) = layout("<img src=\"a.png\" width=\"600\" height=\"400\">", Viewport::default());
    assert_eq!(tree.page_height, 416.0);
    let v = extract_features(&doc, &tree, 2).unwrap();
    assert_eq!(v[Feature::WRel], 600.0 / 1280.0);
    assert_eq!(v[Feature::HRel], 400.0 / 416.0);
    assert_eq!(v[Feature::IsImage], 1.0);
    assert_eq!(v[Feature::HasSrc], 1.0);
}

#[test]
fn doubling_viewport_width_halves_horizontal_ratios() {
    let html = "<p>caption</p><img src=\"a.png\" width=\"300\" height=\"200\">";
    let (doc, narrow) = layout(html, Viewport::new(1280, 800).unwrap());
    let (_, wide) = layout(html, Viewport::new(2560, 800).unwrap());
    let id = 3;
    let a = extract_features(&doc, &narrow, id).unwrap();
    let b = extract_features(&doc, &wide, id).unwrap();
    assert_eq!(b[Feature::XRel], a[Feature::XRel] / 2.0);
    assert_eq!(b[Feature::WRel], a[Feature::WRel] / 2.0);
    assert_eq!(b[Feature::YRel], a[Feature::YRel]);
}

#[test]
fn layout_dump_shape() {
    let (_, tree) = layout("<p>hi</p>", Viewport::default());
    let json = serde_json::to_value(tree.boxes[2]).unwrap();
    assert_eq!(json, serde_json::json!({"node_id": 2, "x": 8.0, "y": 8.0, "w": 1264.0, "h": 20.0, "visible": true}));
}

fn arb_node(depth: u32) -> BoxedStrategy<String> {
    let text = "[a-z]{1,12}( [a-z]{1,9}){0,12}".prop_map(|s| s);
    let img = (0u32..900, 0u32..600, any::<bool>()).prop_map(|(w, h, attrs)| {
        if attrs {
            format!("<img src=\"i.png\" width=\"{w}\" height=\"{h}\">")
        } else {
            "<img src=\"i.png\">".to_string()
        }
    });
    let leaf = prop_oneof![text, img, Just("<br>".to_string())];
    if depth == 0 {
        return leaf.boxed();
    }
    let tag = prop_oneof![
        Just("div"), Just("p"), Just("span"), Just("b"), Just("a"), Just("section"), Just("iframe"),
        Just("h2"), Just("ul"), Just("li"), Just("custom-x"),
    ];
    let style = prop_oneof![
        4 => Just(String::new()),
        1 => Just(" style=\"display:none\"".to_string()),
        1 => (1u32..2000).prop_map(|w| format!(" style=\"width:{w}px\"")),
        1 => (1u32..150).prop_map(|p| format!(" style=\"width:{p}%\"")),
        1 => Just(" style=\"display:inline\"".to_string()),
        1 => Just(" hidden".to_string()),
    ];
    let children = prop::collection::vec(arb_node(depth - 1), 0..4);
    prop_oneof![
        1 => leaf,
        3 => (tag, style, children).prop_map(|(t, s, c)| format!("<{t}{s}>{}</{t}>", c.concat())),
    ]
    .boxed()
}

fn arb_page() -> impl Strategy<Value = String> {
    prop::collection::vec(arb_node(4), 0..6).prop_map(|v| v.concat())
}

fn arb_viewport() -> impl Strategy<Value = Viewport> {
    (64u32..3000, 1u32..2000).prop_map(|(w, h)| Viewport::new(w, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn layout_is_total_and_deterministic(html in arb_page(), vp in arb_viewport()) {
        let (doc, a) = layout(&html, vp);
        let b = compute_layout(&doc, vp);
        prop_assert_eq!(a.boxes.len(), doc.len());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.page_height, a.boxes[0].height);
        for bx in &a.boxes {
            prop_assert!(bx.x >= 0.0 && bx.y >= 0.0 && bx.width >= 0.0 && bx.height >= 0.0, "{:?}", bx);
            prop_assert!(bx.x.is_finite() && bx.y.is_finite() && bx.width.is_finite() && bx.height.is_finite());
            if !bx.visible {
                prop_assert_eq!((bx.width, bx.height), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn hidden_subtrees_stay_hidden(html in arb_page()) {
        let (doc, tree) = layout(&html, Viewport::default());
        for el in doc.elements() {
            if !tree.boxes[el.node_id].visible {
                for d in el.descendant_ids() {
                    prop_assert!(!tree.boxes[d].visible);
                }
            }
        }
    }

    #[test]
    fn block_children_are_contained_stacked_and_conserved(html in arb_page(), vp in arb_viewport()) {
        let (doc, tree) = layout(&html, vp);
        for el in doc.elements() {
            let parent = &tree.boxes[el.node_id];
            if !parent.visible || parent.display != Display::Block || el.tag == "IMG" {
                continue;
            }
            let blocks: Vec<_> = el
                .element_children()
                .map(|c| &tree.boxes[c])
                .filter(|b| b.visible && b.display == Display::Block && doc.elements()[b.node_id].tag != "IMG")
                .collect();
            let mut last_y = f64::NEG_INFINITY;
            let mut last_bottom = f64::NEG_INFINITY;
            for b in &blocks {
                prop_assert!(b.x >= parent.x && b.x + b.width <= parent.x + parent.width, "{:?} in {:?}", b, parent);
                prop_assert!(b.y >= last_y);
                prop_assert!(b.y >= last_bottom, "overlap: {:?}", b);
                last_y = b.y;
                last_bottom = b.y + b.height;
            }
            let total: f64 = blocks.iter().map(|b| b.height).sum();
            prop_assert!(parent.height >= total, "{:?} children sum {}", parent, total);
        }
    }

    #[test]
    fn candidate_features_are_finite_and_bounded(html in arb_page(), vp in arb_viewport()) {
        let (doc, tree) = layout(&html, vp);
        let (ids, matrix) = pagesift::extract_all(&doc, &tree);
        prop_assert_eq!(ids.len(), matrix.n_rows());
        for row in matrix.rows() {
            prop_assert!(row.iter().all(|v| v.is_finite()));
            for f in [Feature::XRel, Feature::YRel, Feature::WRel, Feature::HRel, Feature::AreaRel, Feature::LinkDensity] {
                let v = row[f.index()];
                prop_assert!((0.0..=1.0).contains(&v), "{} = {}", f.name(), v);
            }
        }
    }
}
