import json
import math
import os

import numpy as np
import pytest

import screenkit as sk


def test_version():
    assert sk.__version__ == "0.1.0"


def test_auc_matches_pair_counting():
    rng = np.random.default_rng(3)
    s = np.round(rng.normal(size=60), 1)
    y = np.where(rng.random(60) < 0.3, 1, -1)
    y[0], y[1] = 1, -1
    pos, neg = s[y == 1], s[y == -1]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    assert sk.ranking_auc(s.tolist(), y.tolist()) == pytest.approx(wins / (len(pos) * len(neg)), abs=1e-12)
    assert sk.ranking_auc([0.1, 0.2], [1, 1]) is None


def test_evaluate_reports_every_metric():
    r = sk.evaluate([1.0, -1.0, 0.5, -0.5], [1, -1, -1, 1])
    assert r["accuracy"] == pytest.approx(0.5)
    assert set(r) >= {"precision", "recall", "auc", "auprc", "utility"}


def test_bad_labels_raise():
    with pytest.raises(ValueError):
        sk.ranking_auc([0.1, 0.2], [1, 0])


def test_train_separable():
    rng = np.random.default_rng(1)
    x = np.vstack([rng.normal(2.0, 0.3, size=(20, 3)), rng.normal(-2.0, 0.3, size=(80, 3))])
    y = [1] * 20 + [-1] * 80
    for loss in ("hinge", "cost_hinge", "auc"):
        m = sk.train(x, y, loss=loss)
        scores = x @ np.array(m["weights"]) + m["intercept"]
        assert sk.ranking_auc(scores.tolist(), y) == 1.0


def test_relrank_and_stars():
    c = sk.combined_scores([[1, -1], [2, -2], [3, -3]])
    assert c[0]["score"] == pytest.approx(3800)
    assert c[1]["score"] == pytest.approx(-3000)
    assert sk.assign_stars(3800) == 5
    assert sk.assign_stars(-3000) == 1


def test_stats():
    t, p = sk.paired_t_test([5, 6, 7, 8, 10], [4, 4, 4, 4, 4])
    assert t == pytest.approx(3.7199244398022175)
    assert p == pytest.approx(0.020475874420910676)
    assert sk.lsu_select([0.2, 0.02, 0.001]) == [0]
    base = np.linspace(0.5, 0.7, 20)
    wob = np.array([0.01, -0.01] * 10)
    groups = sk.equivalence_groups([1, 2, 3], [list(base + 0.3), list(base + wob), list(base - wob)])
    assert groups == [[1], [2, 3]]
    a = sk.anova_two_factor(["a", "a", "b", "b", "c", "c"], [1, 2, 1, 2, 1, 2], [1.0, 1.0, 2.0, 2.0, 3.0, 3.0])
    assert a["method_p"] == pytest.approx(1.0)


def test_histogram():
    assert sk.screened_histogram([0.35, 0.45, 0.45]) == [0, 0, 0, 1, 2, 0, 0, 0, 0, 0]
    assert sk.screened_histogram([1.0])[9] == 1


def test_corpus_and_cli(tmp_path):
    path = tmp_path / "c.jsonl"
    rows = []
    for i in range(30):
        rel = i < 6
        words = "alpha beta gamma" if rel else "delta epsilon zeta"
        rows.append({"id": f"c{i}", "title": words, "abstract": words + " common text", "label": 1 if rel else -1})
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    corpus = sk.load_corpus(str(path))
    assert len(corpus) == 30
    assert corpus.relevant_count == 6
    frac, group = corpus.prevalence()
    assert frac == pytest.approx(0.2) and group == "high"

    out = tmp_path / "norm.jsonl"
    code, stdout, _ = sk.run_cli(["ingest", "--corpus", str(path), "--out", str(out)])
    assert code == 0 and out.exists()
    assert json.loads(stdout)["relevant"] == 6
    code, _, err = sk.run_cli(["evaluate", "--corpus", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "e")])
    assert code == 2 and "missing.jsonl" in err
    with pytest.raises(RuntimeError):
        sk.load_corpus(str(tmp_path / "missing.jsonl"))
