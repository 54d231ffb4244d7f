import json
import xml.etree.ElementTree as ET

import pytest

from candlecnn import metrics, report
from candlecnn.metrics import Confusion


def cells():
    return [
        report.Cell("Time", "MacdMa", 1, Confusion(3, 1, 4, 2), 40, 10),
        report.Cell("Time", "MacdMa", 20, Confusion(5, 0, 5, 0), 40, 10),
        report.Cell("Random", "MacdMa", 1, Confusion(1, 1, 1, 1), 8, 4),
        report.Cell("Random", "MacdMa", 20, Confusion(0, 2, 1, 3), 24, 6),
        report.Cell("Time", "Gaf", 1, Confusion(2, 2, 2, 2), 30, 8),
        report.Cell("Time", "Gaf", 90, error="SeriesTooShort: too short"),
    ]


def test_table_columns_and_failed_cells():
    text = report.results_tsv(cells())
    lines = text.splitlines()
    assert lines[0].split("\t") == [
        "strategy", "variant", "horizon", "tp", "fp", "tn", "fn",
        "sensitivity", "specificity", "accuracy", "mcc", "n_train", "n_test",
    ]
    assert len(lines) == 1 + 5
    assert lines[1].split("\t")[:7] == ["Time", "MacdMa", "1", "3", "1", "4", "2"]


def test_metrics_recomputable_from_counts():
    for r in report.parse_results(report.results_tsv(cells())):
        c = Confusion(r["tp"], r["fp"], r["tn"], r["fn"])
        for k, v in metrics.scores(c).items():
            assert abs(r[k] - v) <= 1e-12


def test_json_report_marks_failures_and_banner():
    doc = json.loads(report.report_json(cells(), {"config_hash": "abc", "seed": 0}))
    status = [c["status"] for c in doc["cells"]]
    assert status == ["ok"] * 5 + ["failed"]
    assert "SeriesTooShort" in doc["cells"][-1]["error"]
    assert len(doc["warnings"]) == 1 and "Random" in doc["warnings"][0]
    text = report.report_text(cells(), {"config_hash": "abc"})
    assert "FAILED" in text and "WARNING" in text


def test_banner_only_for_leaky_splits():
    assert report.leakage_banner(["Time"]) is None
    assert "Automatic" in report.leakage_banner(["Time", "Automatic"])


def _points(svg):
    root = ET.fromstring(svg)
    return [
        (e.get("data-strategy"), e.get("data-variant"), int(e.get("data-horizon")), float(e.get("data-value")))
        for e in root.iter()
        if e.get("data-value") is not None
    ]


def test_figure_values_equal_table_values():
    rows = report.parse_results(report.results_tsv(cells()))
    figs = report.figures(rows)
    assert sorted(figs) == ["accuracy_vs_horizon_Gaf.svg", "accuracy_vs_horizon_MacdMa.svg", "split_comparison.svg"]
    table = {(r["strategy"], r["variant"], r["horizon"]): r["accuracy"] for r in rows}
    seen = set()
    for name, svg in figs.items():
        for strat, var, h, v in _points(svg):
            var = var or name[len("accuracy_vs_horizon_"):-4]
            assert table[(strat, var, h)] == v
            seen.add((strat, var, h))
    assert seen == set(table)


def test_single_strategy_has_no_split_figure():
    rows = [r for r in report.parse_results(report.results_tsv(cells())) if r["strategy"] == "Time"]
    assert "split_comparison.svg" not in report.figures(rows)


def test_figures_regenerate_byte_identical(tmp_path):
    (tmp_path / "results.tsv").write_text(report.results_tsv(cells()))
    first = {p.name: p.read_bytes() for p in report.write_figures(tmp_path / "results.tsv", tmp_path / "a")}
    second = {p.name: p.read_bytes() for p in report.write_figures(tmp_path / "results.tsv", tmp_path / "b")}
    assert first == second and len(first) == 3


def test_parse_rejects_foreign_table():
    with pytest.raises(ValueError):
        report.parse_results("a\tb\n1\t2\n")
