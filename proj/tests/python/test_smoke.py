"""Smoke tests for the pybind11 module."""

import json
import math

import pytest

import floc


def test_version_present():
    assert floc.__version__ == "0.1.0"


def test_score_anchors():
    assert floc.score(2, 1, 0, 5, "ochiai") == pytest.approx(2 / math.sqrt(6), abs=1e-12)
    assert floc.score(3, 0, 2, 4, "barinel") == 1.0
    assert floc.score(3, 2, 1, 0, "dstar") == 4.5
    assert math.isinf(floc.score(2, 0, 0, 3, "dstar"))
    assert floc.score(0, 3, 1, 1, "tarantula") == 0.0


def test_rank_classes_tie_example():
    ranking = floc.rank_classes({"A": 0.9, "B": 0.9, "C": 0.5})
    by_class = {row["class"]: row for row in ranking}
    assert by_class["A"]["rank"] == 2
    assert by_class["B"]["rank"] == 2
    assert by_class["A"]["best_rank"] == 1
    assert by_class["A"]["tie_group_size"] == 2
    assert by_class["C"]["rank"] == 3


def test_wef_and_rwef_anchors():
    assert floc.wef({"A": 0.9, "B": 0.9, "C": 0.5}, "B") == 2.0
    assert floc.r_wef(2.0, 10) == 30.0


def test_rank_rejects_nan():
    with pytest.raises(ValueError):
        floc.rank_classes({"A": float("nan")})


def test_ddu_identity_matrix(tmp_path):
    n = 4
    lines = ["test,outcome," + ",".join(f"C{i}" for i in range(n))]
    for t in range(n):
        outcome = "flaky" if t == 0 else "stable"
        cells = ["1" if c == t else "0" for c in range(n)]
        lines.append(f"T{t},{outcome}," + ",".join(cells))
    path = tmp_path / "identity.csv"
    path.write_text("\n".join(lines) + "\n")

    matrix = floc.parse_coverage(path)
    result = floc.ddu(matrix)
    assert result["ddu"] == pytest.approx(2 / n, abs=1e-12)
    assert result["diversity"] == 1.0
    assert result["uniqueness"] == 1.0


def test_synth_localise_round_trip(tmp_path):
    out = tmp_path / "ds"
    floc.generate_synth(out, commits=4, tests=16, classes=12, bias=0.8, baseline=0.0, seed=5)

    truth = {}
    for line in (out / "truth.jsonl").read_text().splitlines():
        record = json.loads(line)
        truth[record["commit_id"]] = record["flaky_classes"]

    assert len(truth) == 4
    for commit_id, flaky_classes in truth.items():
        matrix = floc.parse_coverage(out / "commits" / commit_id / "coverage.csv")
        ranking = floc.localise(matrix, "ochiai")
        ranks = {row["class"]: row["best_rank"] for row in ranking}
        assert min(ranks[c] for c in flaky_classes) == 1
        covered = floc.covered_by_flaky(matrix)
        assert set(flaky_classes) <= set(covered)


def test_spectrum_counts_identities(tmp_path):
    path = tmp_path / "cov.csv"
    path.write_text("test,outcome,C1,C2\nT1,flaky,1,0\nT2,stable,1,1\n")
    matrix = floc.parse_coverage(path)
    counts = floc.spectrum_counts(matrix)
    assert counts["C1"] == (1, 1, 0, 0)
    assert counts["C2"] == (0, 1, 1, 0)


def test_evaluate_expression_and_vote():
    features = {
        "a": {"ochiai": 1.0, "changes": 0.0},
        "b": {"ochiai": 0.5, "changes": 1.0},
        "c": {"ochiai": 0.0, "changes": 0.5},
    }
    scores = floc.evaluate_expression("add(ochiai,changes)", features)
    assert scores["b"] == pytest.approx(1.5)

    model1 = {"c1": 0.9, "x": 0.6, "c2": 0.3}
    model2 = {"c2": 0.9, "c1": 0.6, "x": 0.3}
    voted = floc.vote_rankings([model1, model2], top_n=3)
    assert voted[0]["class"] == "c1"
    assert voted[0]["votes"] == pytest.approx(1.5)


def test_parse_errors_are_value_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("test,outcome,C1\nT1,failing,1\n")
    with pytest.raises(ValueError):
        floc.parse_coverage(path)
