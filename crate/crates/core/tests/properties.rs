use std::collections::BTreeMap;

use pagesift::dataset::{labels_to_json, parse_labels, split_indices, LabelRecord, LabeledPage};
use pagesift::dom::{serialize, serialize_annotated};
use pagesift::eval::{evaluate, Confusion, PagePredictions};
use pagesift::gbm::{load_model, save_model, train, TrainingConfig};
use pagesift::{parse_document, FeatureMatrix, FeatureSchema, Label, ParseConfig, Target};
use proptest::prelude::*;

fn parse(html: &str) -> pagesift::Document {
    parse_document(html, &ParseConfig::default()).unwrap()
}

/// Markup soup: well-formed fragments mixed with stray and unclosed tags,
/// entities, comments and raw text elements.
fn arb_markup() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Z ]{0,10}",
        Just("<p>".to_string()),
        Just("</p>".to_string()),
        Just("<div class=\"a b\">".to_string()),
        Just("</div>".to_string()),
        Just("<span id=x>".to_string()),
        Just("</span>".to_string()),
        Just("<li>".to_string()),
        Just("<ul>".to_string()),
        Just("<table><tr><td>".to_string()),
        Just("<img src='i.png' alt=\"a&amp;b\">".to_string()),
        Just("<br/>".to_string()),
        Just("&lt;&gt;&amp;&quot;&nbsp;".to_string()),
        Just("<!-- note -->".to_string()),
        Just("<script>if (a < b) {}</script>".to_string()),
        Just("<title>x &amp; y</title>".to_string()),
        Just("</b>".to_string()),
        Just("<iframe><p>inner".to_string()),
        Just("a < b".to_string()),
        Just("\n\t ".to_string()),
    ];
    prop::collection::vec(piece, 0..40).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parsing_is_deterministic(html in arb_markup()) {
        prop_assert_eq!(parse(&html), parse(&html));
    }

    #[test]
    fn serialization_round_trips(html in arb_markup()) {
        let doc = parse(&html);
        let once = serialize(&doc);
        let again = parse(&once);
        prop_assert_eq!(doc.elements(), again.elements());
        prop_assert_eq!(serialize(&again), once);
    }

    #[test]
    fn ids_are_preorder_and_contiguous(html in arb_markup()) {
        let doc = parse(&html);
        for el in doc.elements() {
            for c in el.element_children() {
                prop_assert!(el.descendant_ids().contains(&c));
                prop_assert_eq!(doc.elements()[c].parent, Some(el.node_id));
                prop_assert_eq!(doc.elements()[c].depth, el.depth + 1);
            }
        }
        prop_assert_eq!(doc.root().descendant_count + 1, doc.len());
    }

    #[test]
    fn annotation_keeps_structure(html in arb_markup(), picks in prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 0..5)) {
        let doc = parse(&html);
        let labels: BTreeMap<usize, Label> =
            picks.iter().map(|(i, r)| (i.index(doc.len()), Label::from_bool(*r))).collect();
        let annotated = parse(&serialize_annotated(&doc, &labels).unwrap());
        prop_assert_eq!(annotated.len(), doc.len());
        for (a, b) in annotated.elements().iter().zip(doc.elements()) {
            prop_assert_eq!(&a.tag, &b.tag);
            if labels.contains_key(&a.node_id) {
                let want = a.node_id.to_string();
                prop_assert_eq!(a.attr("id"), Some(want.as_str()));
            }
        }
    }

    #[test]
    fn confusion_metrics_are_bounded(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
        let c = Confusion { tp, fp, fn_, tn };
        let (p, r, f) = (c.precision(), c.recall(), c.f1());
        for v in [p, r, f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if p > 0.0 && r > 0.0 {
            prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
        }
    }

    #[test]
    fn report_counts_ignore_page_order(
        pages in prop::collection::vec(prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 1..8), 1..6),
        rotate in 0usize..6,
    ) {
        let mut truth = Vec::new();
        let mut preds = BTreeMap::new();
        for (pi, rows) in pages.iter().enumerate() {
            let id = format!("p{pi}");
            let mut page_preds = PagePredictions::new();
            let labels = rows.iter().enumerate().map(|(i, &(t, p, img))| {
                page_preds.insert(i, Label::from_bool(p));
                LabelRecord { label: Label::from_bool(t), tag: if img { "IMG" } else { "P" }.into(), id: i.to_string(), content: String::new() }
            }).collect();
            preds.insert(id.clone(), page_preds);
            truth.push(LabeledPage { page_id: id, html_path: Default::default(), html: String::new(), labels, warnings: vec![] });
        }
        let a = evaluate(&preds, &truth, Target::All).unwrap();
        let mut rotated = truth.clone();
        let k = rotate % rotated.len();
        rotated.rotate_left(k);
        let b = evaluate(&preds, &rotated, Target::All).unwrap();
        prop_assert_eq!(a.counts, b.counts);
        let total: usize = pages.iter().map(Vec::len).sum();
        prop_assert_eq!(a.counts.total() as usize, total);
        let text = evaluate(&preds, &truth, Target::Text).unwrap().counts;
        let images = evaluate(&preds, &truth, Target::Images).unwrap().counts;
        prop_assert_eq!(text.total() + images.total(), a.counts.total());
    }

    #[test]
    fn split_partitions_pages(n in 2usize..200, ratio in 0.01f64..0.99, seed in any::<u64>()) {
        let (train, test) = split_indices(n, ratio, seed).unwrap();
        prop_assert!(!train.is_empty() && !test.is_empty());
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let expected = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
        prop_assert_eq!(train.len(), expected);
    }

    #[test]
    fn canonical_labels_json_is_idempotent(
        rows in prop::collection::vec((any::<bool>(), "[A-Z][A-Z0-9]{0,5}", 0usize..10_000, "\\PC{0,30}"), 0..8)
    ) {
        let records: Vec<LabelRecord> = rows
            .into_iter()
            .map(|(r, tag, id, content)| LabelRecord { label: Label::from_bool(r), tag, id: id.to_string(), content })
            .collect();
        let text = labels_to_json(&records);
        let parsed = parse_labels(text.as_bytes()).unwrap();
        prop_assert_eq!(&parsed, &records);
        prop_assert_eq!(labels_to_json(&parsed), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn model_files_round_trip(
        rows in prop::collection::vec((prop::collection::vec(-1e3f64..1e3, 3), any::<bool>()), 4..60),
    ) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let x = FeatureMatrix::from_rows(3, &rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>());
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r.1)).collect();
        let config = TrainingConfig { iterations: 5, num_leaves: 4, min_docs_per_leaf: 1, ..Default::default() };
        let model = train(&x, &y, &config, &FeatureSchema::anonymous(3)).unwrap();
        let bytes = save_model(&model);
        let loaded = load_model(&bytes).unwrap();
        prop_assert_eq!(&loaded.trees, &model.trees);
        prop_assert_eq!(loaded.prior.to_bits(), model.prior.to_bits());
        prop_assert_eq!(save_model(&loaded), bytes);
        for r in x.rows() {
            prop_assert_eq!(loaded.score(r).unwrap().to_bits(), model.score(r).unwrap().to_bits());
        }
    }
}
