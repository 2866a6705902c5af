"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from . import __version__
from .benchmark import BenchmarkReport, load_baseline_records, run_bench, write_report
from .domain import Department, DocumentId, DocumentKind, JobFeatures, MlarError, RawDocument, parse_ts, utcnow
from .extraction import parse_document
from .ingestion import ConfigurationError, NoTextError, extract_text
from .llm import ExtractorConfig, Provider, RemoteClient
from .matching import match_record, rank, score, select_top_k
from .notification import TransportMode, generate_hr_posting, send
from .pipeline import (
    CircuitBreakerOpen,
    PipelineConfig,
    init_store,
    run_loop,
    run_once,
)
from .store import DOCUMENTS, JOBS, LEDGER, MATCHES, FileStore
from .synth import generate_corpus, write_corpus

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
DEFAULT_CONFIG = "mlar.json"

log = logging.getLogger("mlar")


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, default=str))


def _config_path(args) -> Path:
    return Path(args.config or os.environ.get("MLAR_CONFIG") or DEFAULT_CONFIG)


def load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(_config_path(args))
    transport = config.transport
    if args.live_mail:
        if not (transport.host and transport.port):
            raise ConfigurationError("--live-mail needs transport.host and transport.port in the config")
        transport = replace(transport, mode=TransportMode.SMTP)
    else:
        transport = replace(transport, mode=TransportMode.DRY_RUN)
    config = replace(config, transport=transport)
    if args.match_all_departments:
        config = replace(config, match_all_departments=True)
    return config


def _client(config: PipelineConfig):
    return RemoteClient(config.extractor) if config.extractor.provider is Provider.REMOTE else None


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_init(args) -> int:
    root = Path(args.root)
    cfg_path = root / DEFAULT_CONFIG
    config = PipelineConfig(root=root)
    init_store(config)
    if not cfg_path.exists() or args.force:
        data = config.to_dict()
        data["root"], data["store_root"] = ".", "store"
        cfg_path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    print(f"initialized {root} (config: {cfg_path})")
    return EXIT_OK


def cmd_run_once(args) -> int:
    report = run_once(load_config(args))
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_watch(args) -> int:
    config = load_config(args)
    if args.poll_interval:
        config = replace(config, poll_interval=args.poll_interval)
    passes = run_loop(config, max_passes=args.max_passes)
    log.info("watch stopped after %d passes", passes)
    return EXIT_OK


def cmd_parse(args) -> int:
    path = Path(args.file)
    kind = args.kind
    if kind is None:
        parent = path.resolve().parent.name
        kind = {"jobs": "job", "resumes": "resume"}.get(parent)
        if kind is None:
            raise ConfigurationError("cannot tell job from resume by directory; pass --kind")
    try:
        config = load_config(args)
        extractor = config.extractor
    except ConfigurationError:
        if args.config:
            raise
        config, extractor = None, ExtractorConfig()
    data = path.read_bytes()
    doc = RawDocument(
        DocumentId.of_bytes(data),
        DocumentKind.JOB if kind == "job" else DocumentKind.RESUME,
        str(path),
        extract_text(path),
        utcnow(),
    )
    client = _client(config) if config else None
    try:
        features = parse_document(doc, extractor, client)
    finally:
        if client:
            client.close()
    _print_json(features.to_dict())
    return EXIT_OK


def _store(config: PipelineConfig) -> FileStore:
    store = FileStore(config.store_root)
    if not store.is_initialized():
        raise ConfigurationError(f"store not initialized at {config.store_root}")
    return store


def cmd_match(args) -> int:
    config = load_config(args)
    store = _store(config)
    rec = store.get(JOBS, args.job_id)
    if rec is None:
        raise MlarError(f"unknown job id {args.job_id}")
    job = JobFeatures.from_dict(rec)
    if config.match_all_departments:
        resumes = store.all_resumes()
    else:
        resumes = store.query_resumes_by_department(job.department)
    received = {id: parse_ts(r["received_at"]) for id, r in store.records(DOCUMENTS)}
    client = _client(config)
    try:
        scores = [score(job, r, config.scorer, client) for r in resumes]
    finally:
        if client:
            client.close()
    ranking = rank(scores, received, job_id=job.job_id)
    k = args.k or config.k
    _print_json(match_record(ranking, select_top_k(ranking, k)))
    return EXIT_OK


def cmd_notify_hr(args) -> int:
    config = load_config(args)
    store = _store(config)
    rec = store.get(JOBS, args.job_id)
    if rec is None:
        raise MlarError(f"unknown job id {args.job_id}")
    job = JobFeatures.from_dict(rec)
    meta = store.get(DOCUMENTS, args.job_id) or {}
    text = extract_text(meta["source_path"]) if meta.get("source_path") else job.title
    transport = config.effective_transport()
    receipt = send(generate_hr_posting(job, text, dry_run=transport.mode is TransportMode.DRY_RUN), transport)
    _print_json(receipt.to_dict())
    return EXIT_OK if receipt.status.value != "Failed" else EXIT_RUNTIME


def cmd_bench(args) -> int:
    config = None
    if args.config or Path(DEFAULT_CONFIG).exists():
        config = load_config(args)
    stages = tuple(s.strip() for s in args.stages.split(",") if s.strip())
    run = run_bench(config, args.corpus, stages, repeat=args.repeat, label=args.label)
    records, reported = [], {}
    if args.baseline_records:
        records, reported = load_baseline_records(args.baseline_records)
    report = BenchmarkReport(
        tuple(records) + (run.record,),
        reference_label=run.record.system_label,
        reported_per_resume=reported,
        extra={"stages": list(stages), **run.summary()},
    )
    txt, js = write_report(report, args.out)
    sys.stdout.write(txt.read_text(encoding="utf-8"))
    print(f"\nwrote {txt} and {js}")
    return EXIT_OK


def cmd_report(args) -> int:
    config = load_config(args)
    store = _store(config)
    per_dept = {d.value: len(store.ids(f"resumes/{d.value}")) for d in Department}
    ledger = [e for e in store.read(LEDGER) if e.get("event") == "receipt"]
    audit = store.audit_entries()
    _print_json({
        "jobs": len(store.ids(JOBS)),
        "resumes": sum(per_dept.values()),
        "resumes_by_department": {k: v for k, v in per_dept.items() if v},
        "matches": len(store.ids(MATCHES)),
        "deliveries": dict(Counter(e["status"] for e in ledger)),
        "audit_entries": len(audit),
        "audit_outcomes": dict(Counter(e.outcome.value for e in audit)),
        "last_pass": next((e.to_dict() for e in reversed(audit) if e.operation == "pass"), None),
    })
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    corpus = generate_corpus(args.seed, args.jobs_per_department, args.resumes_per_department, args.email_rate)
    write_corpus(args.dir, corpus)
    print(f"wrote {len(corpus.jobs)} jobs and {len(corpus.resumes)} resumes under {args.dir}")
    return EXIT_OK


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlar", description="Resume screening and notification pipeline.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help=f"JSON config file (default: $MLAR_CONFIG or ./{DEFAULT_CONFIG})")
    p.add_argument("--live-mail", action="store_true", help="send real email over SMTP instead of the dry-run outbox")
    p.add_argument("--match-all-departments", action="store_true", help="score every job against every resume")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init", help="create inbox directories, store layout and a default config")
    s.add_argument("root")
    s.add_argument("--force", action="store_true", help="overwrite an existing config file")
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("run-once", help="process new documents once")
    s.set_defaults(func=cmd_run_once)

    s = sub.add_parser("watch", help="poll the inboxes until terminated")
    s.add_argument("--poll-interval", type=float, help="override the configured poll interval (seconds)")
    s.add_argument("--max-passes", type=int, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_watch)

    s = sub.add_parser("parse", help="extract features from one file and print them")
    s.add_argument("file")
    s.add_argument("--kind", choices=("job", "resume"))
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("match", help="rank stored resumes for a stored job")
    s.add_argument("job_id")
    s.add_argument("-k", type=int)
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("notify-hr", help="forward a stored job posting to its HR address")
    s.add_argument("job_id")
    s.set_defaults(func=cmd_notify_hr)

    s = sub.add_parser("bench", help="time passes over a corpus and compare with other systems")
    s.add_argument("--corpus", required=True)
    s.add_argument("--stages", default="parse,match,notify")
    s.add_argument("--baseline-records", help="JSON list of {system_label, total_seconds, resume_count[, per_resume]}")
    s.add_argument("--repeat", type=int, default=1)
    s.add_argument("--label", default="MLAR")
    s.add_argument("--out", default=".", help="directory for bench_report.txt and bench_report.json")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("report", help="summarize the store")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("gen-corpus", help="write a synthetic labeled corpus")
    s.add_argument("dir")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs-per-department", type=int, default=1)
    s.add_argument("--resumes-per-department", type=int, default=10)
    s.add_argument("--email-rate", type=float, default=1.0)
    s.set_defaults(func=cmd_gen_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"mlar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CircuitBreakerOpen, MlarError, NoTextError, OSError) as exc:
        print(f"mlar: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
