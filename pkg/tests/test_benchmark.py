import json

import pytest

from mlar.benchmark import (
    HEADERS,
    BenchmarkReport,
    EmptyCorpus,
    TimingRecord,
    delta_t,
    load_baseline_records,
    per_resume,
    render_report,
    run_bench,
    write_report,
)
from mlar.llm import ExtractorConfig, Provider
from mlar.pipeline import PipelineConfig
from mlar.synth import generate_corpus, write_corpus

MLAR = TimingRecord("MLAR", 12414, 2400)
SYSTEM_A = TimingRecord("System A", 15258, 2400)
SYSTEM_B = TimingRecord("System B", 15350, 2400)


def test_delta_t_reported_totals():
    assert delta_t(SYSTEM_A, MLAR)[0] == 2844
    assert delta_t(SYSTEM_B, MLAR)[0] == 2936


def test_delta_t_percent_of_benchmark_total():
    seconds, percent = delta_t(SYSTEM_A, MLAR)
    assert percent == pytest.approx(2844 / 15258 * 100)


def test_delta_t_antisymmetric_and_zero():
    assert delta_t(MLAR, SYSTEM_A)[0] == -delta_t(SYSTEM_A, MLAR)[0]
    assert delta_t(TimingRecord("x", 10, 1), TimingRecord("y", 10, 1)) == (0, 0)


def test_delta_t_requires_distinct_systems():
    with pytest.raises(ValueError):
        delta_t(MLAR, MLAR)


@pytest.mark.parametrize("total,count,expected", [(12414, 2400, 5.17), (100, 100, 1.00), (0, 7, 0.00),
                                                  (15258, 2400, 6.36), (15350, 2400, 6.40)])
def test_per_resume_examples(total, count, expected):
    assert per_resume(TimingRecord("s", total, count)) == expected


def test_per_resume_scales_linearly():
    base = per_resume(TimingRecord("s", 250, 100))
    assert per_resume(TimingRecord("s", 500, 100)) == pytest.approx(2 * base)


def test_record_validation():
    with pytest.raises(ValueError):
        TimingRecord("s", 1, 0)
    with pytest.raises(ValueError):
        TimingRecord("s", -1, 1)


def test_render_three_rows():
    text, js = render_report(BenchmarkReport((SYSTEM_A, SYSTEM_B, MLAR), "MLAR"))
    lines = text.splitlines()
    assert all(h in lines[0] for h in HEADERS)
    assert [line.split("|")[0].strip() for line in lines[2:5]] == ["System A", "System B", "MLAR"]
    assert "15,258.00" in lines[2] and "5.17" in lines[4]
    assert "*" not in text
    assert "2,844.00" in text and "2,936.00" in text
    data = json.loads(js)
    assert data["per_resume"] == {"System A": 6.36, "System B": 6.4, "MLAR": 5.17}
    assert BenchmarkReport.from_dict(data) == BenchmarkReport((SYSTEM_A, SYSTEM_B, MLAR), "MLAR")


def test_render_single_row():
    text, _ = render_report(BenchmarkReport((MLAR,), "MLAR"))
    assert len([line for line in text.splitlines() if line.strip()]) == 3
    assert "Savings" not in text


def test_render_flags_reported_discrepancy():
    text, _ = render_report(BenchmarkReport((SYSTEM_A, MLAR), "MLAR", {"System A": 6.45, "MLAR": 5.17}))
    row_a = next(line for line in text.splitlines() if line.startswith("System A"))
    row_m = next(line for line in text.splitlines() if line.startswith("MLAR"))
    assert row_a.rstrip().endswith("6.36*") and "*" not in row_m
    assert "System A 6.45" in text


def test_write_report_and_load_records(tmp_path):
    txt, js = write_report(BenchmarkReport((SYSTEM_A, MLAR), "MLAR"), tmp_path / "out")
    assert txt.read_text().startswith("System")
    assert json.loads(js.read_text())["reference_label"] == "MLAR"
    src = tmp_path / "records.json"
    src.write_text(json.dumps([{**SYSTEM_A.to_dict(), "per_resume": 6.45}]))
    records, reported = load_baseline_records(src)
    assert records == [SYSTEM_A] and reported == {"System A": 6.45}


@pytest.fixture(scope="module")
def corpus_100(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    corpus = generate_corpus(seed=5, jobs_per_department=1, resumes_per_department=5)
    corpus.resumes[:] = corpus.resumes[:100]
    write_corpus(root, corpus)
    return root


def test_run_bench_counts_and_stage_sum(corpus_100):
    run = run_bench(None, corpus_100)
    assert run.record.resume_count == 100 and run.record.system_label == "MLAR"
    assert sum(run.stage_seconds.values()) == pytest.approx(run.record.total_seconds, rel=0.01)
    assert set(run.stage_seconds) == {"parse", "match", "notify"}
    # The inbox itself is never turned into a store.
    assert not (corpus_100 / "store").exists()


def test_run_bench_is_stable(corpus_100):
    run = run_bench(None, corpus_100, repeat=5)
    totals = sorted(run.totals)
    median = totals[2]
    assert all(abs(t - median) <= 0.25 * median + 0.02 for t in totals)


def test_run_bench_parse_stage_only(corpus_100):
    run = run_bench(None, corpus_100, stages=("parse",))
    assert set(run.stage_seconds) == {"parse"} and run.record.resume_count == 100


def test_parse_stage_with_latency_and_concurrency(corpus_100, stub_llm):
    stub_llm.delay = 0.05
    cfg = PipelineConfig(root=corpus_100, extractor=ExtractorConfig(
        Provider.REMOTE, stub_llm.url, "MLAR_TEST_KEY", max_concurrent_requests=4))
    run = run_bench(cfg, corpus_100, stages=("parse",))
    docs = 100 + 24
    assert len(stub_llm.requests) == docs
    lower = docs * 0.05 / 4
    assert lower <= run.stage_seconds["parse"] <= 2 * lower


def test_empty_corpus(tmp_path):
    (tmp_path / "resumes").mkdir()
    with pytest.raises(EmptyCorpus):
        run_bench(None, tmp_path)
