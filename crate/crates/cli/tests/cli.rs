use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pagesift");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn unknown_extractor_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let page = tmp.path().join("p.html");
    std::fs::write(&page, "<p>x</p>").unwrap();
    let out = run(&["extract", "--input", p(&page), "--extractor", "boilerpipe"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown extractor"));
}

#[test]
fn mss_on_icon_navigation_is_all_nr() {
    let tmp = tempfile::tempdir().unwrap();
    let page = tmp.path().join("nav.html");
    std::fs::write(
        &page,
        "<nav><ul><li><a href=\"/a\"><img src=\"home.svg\"></a></li><li><a href=\"/b\"><img src=\"rss.svg\"></a></li>\
         <li><a href=\"/c\"><img src=\"mail.svg\"></a></li></ul></nav>",
    )
    .unwrap();
    let preds = stdout_json(&run(&["extract", "--input", p(&page), "--extractor", "mss"]));
    let preds = preds.as_array().unwrap();
    assert_eq!(preds.len(), 3);
    assert!(preds.iter().all(|x| x["label"] == "NR" && x["tag"] == "IMG"));
}

#[test]
fn html_format_outlines_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let page = tmp.path().join("p.html");
    let words = "word ".repeat(60);
    std::fs::write(&page, format!("<p class=\"lead\">{words}</p><p><a href=\"/x\">more</a></p>")).unwrap();
    let out = run(&["extract", "--input", p(&page), "--extractor", "shallow", "--format", "html"]);
    assert!(out.status.success());
    let html = String::from_utf8(out.stdout).unwrap();
    assert!(html.contains("class=\"lead-relevant\" id=\"2\" style=\"outline: 2px solid green\""), "{html}");
    assert!(html.contains("class=\"tagged-noise\" id=\"3\" style=\"outline: 2px solid red\""), "{html}");
}

#[test]
fn train_rejects_full_split_and_degenerate_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    assert!(run(&["synth", "--out", p(&ds), "--pages", "4", "--seed", "2"]).status.success());
    let model = tmp.path().join("m.json");
    assert_eq!(run(&["train", "--dataset", p(&ds), "--out", p(&model), "--split", "1.0"]).status.code(), Some(2));
    assert!(!model.exists());

    for entry in std::fs::read_dir(&ds).unwrap() {
        let labels = entry.unwrap().path().join("labels.json");
        let text = std::fs::read_to_string(&labels).unwrap().replace("\"label\": \"NR\"", "\"label\": \"R\"");
        std::fs::write(&labels, text).unwrap();
    }
    let out = run(&["train", "--dataset", p(&ds), "--out", p(&model)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_then_eval_held_out_split() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    let model = tmp.path().join("m.json");
    run(&["synth", "--out", p(&ds), "--pages", "10", "--seed", "8"]);
    let summary = stdout_json(&run(&["train", "--dataset", p(&ds), "--out", p(&model), "--iterations", "10", "--seed", "4"]));
    assert_eq!(summary["test_pages"].as_array().unwrap().len(), 3);
    let model_file: Value = serde_json::from_slice(&std::fs::read(&model).unwrap()).unwrap();
    assert_eq!(model_file["version"], "gbm-v1");
    assert_eq!(model_file["trees"].as_array().unwrap().len(), 10);

    let report = stdout_json(&run(&[
        "eval", "--dataset", p(&ds), "--model", p(&model), "--split", "0.7", "--seed", "4", "--target", "text",
    ]));
    assert_eq!(report["pages"], summary["test_pages"]);
    assert_eq!(report["reports"]["text"], summary["reports"]["text"]);
    assert_eq!(report["tool"], "pagesift");
}

#[test]
fn eval_oracle_and_empty_image_slice() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    std::fs::create_dir_all(ds.join("only_text")).unwrap();
    std::fs::write(ds.join("only_text/page.html"), "<p>one</p><p>two</p>").unwrap();
    std::fs::write(
        ds.join("only_text/labels.json"),
        r#"[{"label":"R","tag":"P","id":"2","content":""},{"label":"NR","tag":"P","id":"3","content":""}]"#,
    )
    .unwrap();
    let report = stdout_json(&run(&["eval", "--dataset", p(&ds), "--extractor", "oracle"]));
    assert_eq!(report["reports"]["text"]["f1"], 1.0);
    let images = &report["reports"]["images"];
    assert_eq!(images["pages_evaluated"], 0);
    assert!(images["f1"].is_null() && images["precision"].is_null());
}

#[test]
fn compare_table_has_one_row_per_extractor() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    run(&["synth", "--out", p(&ds), "--pages", "3", "--seed", "1"]);
    let report = stdout_json(&run(&["eval", "--dataset", p(&ds), "--target", "text", "--compare", "shallow,cetr,mss"]));
    let names: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["extractor"].as_str().unwrap()).collect();
    assert_eq!(names, ["shallow", "cetr", "mss"]);
}

#[test]
fn features_dump_layout_json() {
    let tmp = tempfile::tempdir().unwrap();
    let page = tmp.path().join("p.html");
    std::fs::write(&page, "<body><p>hi</p></body>").unwrap();
    let boxes = stdout_json(&run(&["features", "dump", "--input", p(&page)]));
    assert_eq!(boxes[2], serde_json::json!({"node_id": 2, "x": 8.0, "y": 8.0, "w": 1264.0, "h": 20.0, "visible": true}));
    let csv = run(&["features", "dump", "--input", p(&page), "--what", "features"]);
    let csv = String::from_utf8(csv.stdout).unwrap();
    assert!(csv.starts_with("node_id,x_rel,y_rel,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn serve_bind_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = holder.local_addr().unwrap().to_string();
    let out = run(&["serve", "--listen", &addr, "--dataset", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn malformed_viewport_is_a_usage_error() {
    let out = run(&["extract", "--input", "x.html", "--extractor", "mss", "--viewport", "10x10"]);
    assert_eq!(out.status.code(), Some(2));
}
