"""Smoke test for the pagesift extension module.

Build it first with python/build_ext.sh, then run
`python3 -m pytest python/smoke_test.py` or `python3 python/smoke_test.py`.
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pagesift  # noqa: E402

ARTICLE = (
    "<nav><a href='/'>Home</a> <a href='/w'>World</a></nav>"
    "<article><h1>Harbor reopens</h1>"
    "<p>" + "The harbor reopened on Monday after repairs to the sea wall. " * 6 + "</p>"
    "<img src='harbor.jpg' width='640' height='360'></article>"
)


def test_parse_ids_are_preorder():
    nodes = pagesift.parse("<p>a</p><div><span>b</span></div>")
    assert [n[:2] for n in nodes] == [(0, "HTML"), (1, "BODY"), (2, "P"), (3, "DIV"), (4, "SPAN")]
    assert nodes[4][2] == 3


def test_layout_and_features():
    boxes = json.loads(pagesift.layout("<p>hi</p>"))
    assert boxes[2] == {"node_id": 2, "x": 8.0, "y": 8.0, "w": 1264.0, "h": 20.0, "visible": True}
    ids, rows = pagesift.features(ARTICLE)
    assert len(ids) == len(rows) > 0
    assert all(len(r) == len(pagesift.feature_names()) for r in rows)


def test_heuristic_extract_and_bad_name():
    preds = pagesift.extract(ARTICLE, extractor="mss")
    assert {p[2] for p in preds} <= {"R", "NR"}
    assert any(p[1] == "P" and p[2] == "R" for p in preds)
    try:
        pagesift.extract(ARTICLE, extractor="nope")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown extractor accepted")


def test_train_extract_evaluate_round_trip():
    with tempfile.TemporaryDirectory() as tmp:
        ids = pagesift.synth_corpus(tmp, pages=8, seed=5)
        assert ids[0] == "page_001" and len(ids) == 8
        model = pagesift.Model.train(tmp, iterations=8, split=0.75, seed=1)
        assert model.num_trees == 8
        again = pagesift.Model.from_json(model.to_json())
        assert again.to_json() == model.to_json()
        html = (Path(tmp) / "page_008" / "page.html").read_text()
        preds = pagesift.extract(html, model=model)
        assert all(0.0 <= p[3] <= 1.0 for p in preds)
        report = json.loads(pagesift.evaluate(tmp, model=model, target="text", split=0.75, seed=1))
        assert report["target"] == "text" and report["f1"] is not None
        oracle = json.loads(pagesift.evaluate(tmp, extractor="oracle"))
        assert oracle["f1"] == 1.0


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
