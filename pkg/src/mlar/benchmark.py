"""Timing methodology: total time, time per resume and savings against other systems."""

from __future__ import annotations

import json
import statistics
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

from .domain import MlarError
from .ingestion import ACCEPTED_EXTENSIONS
from .notification import MailTransportConfig, TransportMode
from .pipeline import PipelineConfig, init_store, run_once

HEADERS = ("System", "Total Time Taken (seconds)", "Time Per Resume (seconds)")


class EmptyCorpus(MlarError):
    pass


@dataclass(frozen=True)
class TimingRecord:
    system_label: str
    total_seconds: float
    resume_count: int

    def __post_init__(self) -> None:
        if self.resume_count <= 0:
            raise ValueError("resume_count must be positive")
        if self.total_seconds < 0:
            raise ValueError("total_seconds must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {"system_label": self.system_label, "total_seconds": self.total_seconds,
                "resume_count": self.resume_count}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TimingRecord":
        return cls(str(d["system_label"]), float(d["total_seconds"]), int(d["resume_count"]))


def per_resume(record: TimingRecord) -> float:
    return round(record.total_seconds / record.resume_count, 2)


def delta_t(benchmark: TimingRecord, mlar: TimingRecord) -> tuple[float, float]:
    """Seconds saved relative to ``benchmark`` and that saving as a percent of the benchmark's total."""
    if benchmark.system_label == mlar.system_label:
        raise ValueError("delta_t needs two distinct systems")
    seconds = benchmark.total_seconds - mlar.total_seconds
    percent = seconds / benchmark.total_seconds * 100.0 if benchmark.total_seconds else 0.0
    return seconds, percent


@dataclass(frozen=True)
class BenchmarkReport:
    records: tuple[TimingRecord, ...]
    reference_label: str | None = None
    reported_per_resume: dict[str, float] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def per_resume(self) -> dict[str, float]:
        return {r.system_label: per_resume(r) for r in self.records}

    @property
    def deltas(self) -> list[tuple[str, float, float]]:
        ref = self.reference()
        if ref is None:
            return []
        return [(r.system_label, *delta_t(r, ref)) for r in self.records if r.system_label != ref.system_label]

    def reference(self) -> TimingRecord | None:
        for r in self.records:
            if r.system_label == self.reference_label:
                return r
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "records": [r.to_dict() for r in self.records],
            "reference_label": self.reference_label,
            "reported_per_resume": dict(self.reported_per_resume),
            "per_resume": self.per_resume,
            "deltas": [{"label": label, "seconds": s, "percent": p} for label, s, p in self.deltas],
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BenchmarkReport":
        return cls(
            tuple(TimingRecord.from_dict(r) for r in d["records"]),
            d.get("reference_label"),
            {k: float(v) for k, v in (d.get("reported_per_resume") or {}).items()},
            dict(d.get("extra") or {}),
        )


def load_baseline_records(path: str | Path) -> tuple[list[TimingRecord], dict[str, float]]:
    """Read externally measured systems: a JSON list of records, optionally with a reported ``per_resume``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("records", [])
    records, reported = [], {}
    for item in data:
        rec = TimingRecord.from_dict(item)
        records.append(rec)
        if item.get("per_resume") is not None:
            reported[rec.system_label] = float(item["per_resume"])
    return records, reported


def _fmt_total(x: float) -> str:
    return f"{x:,.2f}"


def render_text(report: BenchmarkReport) -> str:
    flagged: list[str] = []
    rows = []
    for r in report.records:
        value = per_resume(r)
        cell = f"{value:.2f}"
        reported = report.reported_per_resume.get(r.system_label)
        if reported is not None and abs(reported - value) > 0.005:
            cell += "*"
            flagged.append(f"{r.system_label} {reported:.2f}")
        else:
            cell += " "
        rows.append((r.system_label, _fmt_total(r.total_seconds), cell))

    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(HEADERS)]
    lines = [
        " | ".join([HEADERS[0].ljust(widths[0]), HEADERS[1].rjust(widths[1]), HEADERS[2].rjust(widths[2])]),
        "-+-".join("-" * w for w in widths),
    ]
    for label, total, cell in rows:
        lines.append(" | ".join([label.ljust(widths[0]), total.rjust(widths[1]), cell.rjust(widths[2])]))
    if flagged:
        lines.append("")
        lines.append("* total / resume count differs from the reported value: " + "; ".join(flagged))
    ref = report.reference()
    if ref is not None and report.deltas:
        lines.append("")
        lines.append(f"Savings of {ref.system_label}:")
        for label, seconds, percent in report.deltas:
            lines.append(f"  vs {label}: dT = {_fmt_total(seconds)} s ({seconds / 60:.1f} min, {percent:.2f}% of {label})")
    return "\n".join(lines) + "\n"


def render_report(report: BenchmarkReport) -> tuple[str, str]:
    """Fixed-width table plus the machine-readable JSON of the same report."""
    return render_text(report), json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(report: BenchmarkReport, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text, js = render_report(report)
    txt_path, json_path = out_dir / "bench_report.txt", out_dir / "bench_report.json"
    txt_path.write_text(text, encoding="utf-8")
    json_path.write_text(js, encoding="utf-8")
    return txt_path, json_path


# ----------------------------------------------------------------------------
# Measuring this system
# ----------------------------------------------------------------------------

@dataclass
class BenchRun:
    record: TimingRecord
    stage_seconds: dict[str, float]
    totals: list[float]

    def summary(self) -> dict[str, Any]:
        return {
            "stages_seconds": self.stage_seconds,
            "repeat": len(self.totals),
            "total_seconds_min": min(self.totals),
            "total_seconds_mean": statistics.fmean(self.totals),
            "total_seconds_max": max(self.totals),
        }


def count_resumes(corpus: str | Path) -> int:
    d = Path(corpus) / "resumes"
    if not d.is_dir():
        return 0
    return sum(1 for p in d.iterdir() if p.is_file() and p.suffix.lower() in ACCEPTED_EXTENSIONS)


def run_bench(
    config: PipelineConfig | None,
    corpus: str | Path,
    stages: Iterable[str] = ("parse", "match", "notify"),
    *,
    repeat: int = 1,
    label: str = "MLAR",
    client=None,
) -> BenchRun:
    """Time full passes over ``corpus`` (``jobs/`` and ``resumes/`` subdirectories).

    Every repetition starts from an empty store and always uses the dry-run
    transport. The record's total is the mean over repetitions.
    """
    corpus = Path(corpus)
    if count_resumes(corpus) == 0:
        raise EmptyCorpus(f"no resumes under {corpus / 'resumes'}")
    stages = tuple(stages)
    totals: list[float] = []
    stage_acc: dict[str, list[float]] = {}
    resume_count = 0
    for _ in range(max(1, repeat)):
        with tempfile.TemporaryDirectory(prefix="mlar-bench-") as tmp:
            base = config or PipelineConfig(root=corpus)
            cfg = replace(
                base,
                root=corpus,
                store_root=Path(tmp) / "store",
                transport=MailTransportConfig(TransportMode.DRY_RUN, base.transport.from_address),
            )
            init_store(cfg)
            report = run_once(cfg, stages=stages, client=client)
        if report.resumes_processed == 0:
            raise EmptyCorpus(f"no resume in {corpus} could be parsed")
        resume_count = report.resumes_processed
        totals.append(sum(report.stage_seconds[s] for s in report.stage_seconds))
        for s, v in report.stage_seconds.items():
            stage_acc.setdefault(s, []).append(v)
    mean_total = statistics.fmean(totals)
    return BenchRun(
        TimingRecord(label, mean_total, resume_count),
        {s: statistics.fmean(v) for s, v in stage_acc.items()},
        totals,
    )
