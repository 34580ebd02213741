import json

import pytest

from ccgrag.eval import PipelineConfig, generate_tasks, run_eval
from ccgrag.index_store import build_database
from ccgrag.llm import LlmConfig
from helpers import write_duplication_repo


@pytest.fixture(scope="module")
def repo(tmp_path_factory):
    return write_duplication_repo(tmp_path_factory.mktemp("dup"), pairs=8)


@pytest.fixture(scope="module")
def tasks(repo):
    return generate_tasks(repo, "line", 10, seed=3, languages=["python"], include_globs=["copies/*"])


def pipeline(retriever, model):
    return PipelineConfig(retriever=retriever, languages=("python",), llm=LlmConfig(endpoint_url=model))


def test_zero_tasks():
    report = run_eval([], pipeline("graph", "mock:echo"))
    assert report.records == [] and report.failures == 0
    assert report.aggregates["all"]["count"] == 0 and report.aggregates["all"]["em"] == 0.0


def test_graph_with_copy_model_is_exact(repo, tasks):
    report = run_eval(tasks, pipeline("graph", "mock:copy-next-line"))
    assert report.aggregates["all"]["em"] == 1.0
    assert report.aggregates["all"]["count"] == 10
    assert {"level=line", "language=python"} <= set(report.aggregates)


def test_no_retrieval_with_echo_never_matches(repo, tasks):
    report = run_eval(tasks, pipeline("none", "mock:echo"))
    assert report.aggregates["all"]["em"] == 0.0
    assert all(r["snippets"] == [] for r in report.records)


def test_window_baseline_runs(repo, tasks):
    report = run_eval(tasks, pipeline("window", "mock:copy-next-line"))
    assert report.failures == 0
    assert report.db_stats["entries"] > 0


def test_no_leakage(repo, tasks):
    db = build_database(repo, ["python"])
    for retriever in ("graph", "window"):
        report = run_eval(tasks, pipeline(retriever, "mock:copy-next-line"), db=db)
        for r in report.records:
            for path, lo, hi in r["snippets"]:
                assert not (path == r["file_path"] and lo <= r["target_line_no"] <= hi)


def test_failures_are_recorded(repo, tasks):
    report = run_eval(tasks[:3], pipeline("none", "mock:unknown-model"))
    assert report.failures == 3
    assert all(r["em"] == 0 and r["error"].startswith("EndpointError") for r in report.records)


def test_metric_bounds(repo, tasks):
    report = run_eval(tasks, pipeline("window", "mock:echo"))
    for r in report.records:
        assert r["em"] in (0, 1) and 0 <= r["es"] <= 1 and 0 <= r["id_f1"] <= 1
        if r["es"] == 1:
            assert r["em"] == 1


def test_report_serialization_is_stable(repo, tasks, tmp_path):
    a = run_eval(tasks, pipeline("graph", "mock:copy-next-line"))
    b = run_eval(tasks, pipeline("graph", "mock:copy-next-line"))
    assert a.to_json() == b.to_json()
    assert "latency" not in json.loads(a.to_json())
    assert "latency" in json.loads(a.to_json(include_latency=True))
    a.write(tmp_path / "r.json")
    assert (tmp_path / "r.json").read_text() == a.to_json()
    assert a.table().splitlines()[0].split() == ["group", "n", "em", "es", "id_em", "id_f1"]


def test_unknown_retriever():
    with pytest.raises(ValueError):
        PipelineConfig(retriever="bm25")
