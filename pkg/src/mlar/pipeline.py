"""The continuous monitoring loop: ingest, parse, match, notify, log.

One pass (:func:`run_once`) ingests new documents, parses and stores their
features, re-matches every job affected by the new arrivals and notifies the
job's top-k candidates that have not been notified before. State that must
survive a crash (seen-set, jobs awaiting re-matching, notification ledger)
lives in the store, so an interrupted pass is finished by the next one.
"""

from __future__ import annotations

import json
import logging
import signal
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from .domain import (
    AuditLogEntry,
    Department,
    JobFeatures,
    MlarError,
    Outcome,
    RawDocument,
    ResumeFeatures,
    ScorerKind,
    format_ts,
    parse_ts,
    utcnow,
)
from .extraction import ExtractionFailed, ExtractionInvalid, parse_document
from .ingestion import ConfigurationError, InboxState, scan_inbox
from .llm import ExtractorConfig, Provider, RemoteClient
from .matching import ScorerConfig, ScoringError, match_record, rank, score, select_top_k
from .notification import (
    DeliveryStatus,
    MailTransportConfig,
    TransportMode,
    UnnotifiableCandidate,
    generate_hr_posting,
    generate_response,
    open_connection,
    send,
)
from .store import DOCUMENTS, INBOX_STATE, JOBS, LEDGER, MATCHES, OUTBOX, FileStore, resume_collection

log = logging.getLogger(__name__)

STAGES = ("parse", "match", "notify")
MAX_CONSECUTIVE_FAILURES = 5


class CircuitBreakerOpen(MlarError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    root: Path
    store_root: Path | None = None
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    transport: MailTransportConfig = field(default_factory=MailTransportConfig)
    k: int = 3
    poll_interval: float = 5.0
    match_all_departments: bool = False
    notify_hr: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "root", Path(self.root))
        if self.store_root is None:
            object.__setattr__(self, "store_root", self.root / "store")
        else:
            object.__setattr__(self, "store_root", Path(self.store_root))
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.poll_interval <= 0:
            raise ConfigurationError("poll_interval must be positive")
        if self.scorer.kind is ScorerKind.LLM and self.extractor.provider is not Provider.REMOTE:
            raise ConfigurationError("the LLM scorer uses the remote extractor endpoint; configure provider Remote")

    @property
    def jobs_dir(self) -> Path:
        return self.root / "jobs"

    @property
    def resumes_dir(self) -> Path:
        return self.root / "resumes"

    @property
    def outbox_path(self) -> Path:
        return self.store_root / f"{OUTBOX}.jsonl"

    def effective_transport(self) -> MailTransportConfig:
        return replace(self.transport, outbox_path=str(self.outbox_path))

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": str(self.root),
            "store_root": str(self.store_root),
            "extractor": self.extractor.to_dict(),
            "scorer": self.scorer.to_dict(),
            "transport": self.transport.to_dict(),
            "k": self.k,
            "poll_interval": self.poll_interval,
            "match_all_departments": self.match_all_departments,
            "notify_hr": self.notify_hr,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], base: Path | None = None) -> "PipelineConfig":
        """Relative paths resolve against ``base`` (the config file's directory)."""
        try:
            root = Path(d["root"])
            if base is not None and not root.is_absolute():
                root = base / root
            store_root = d.get("store_root")
            if store_root is not None:
                store_root = Path(store_root)
                if base is not None and not store_root.is_absolute():
                    store_root = base / store_root
            return cls(
                root=root,
                store_root=store_root,
                extractor=ExtractorConfig.from_dict(d.get("extractor", {})),
                scorer=ScorerConfig.from_dict(d.get("scorer", {})),
                transport=MailTransportConfig.from_dict(d.get("transport", {})),
                k=int(d.get("k", 3)),
                poll_interval=float(d.get("poll_interval", 5.0)),
                match_all_departments=bool(d.get("match_all_departments", False)),
                notify_hr=bool(d.get("notify_hr", False)),
            )
        except ConfigurationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(data, base=path.parent.resolve())


@dataclass
class NotificationCounts:
    sent: int = 0
    dry_run: int = 0
    skipped: int = 0
    failed: int = 0

    @property
    def total(self) -> int:
        return self.sent + self.dry_run + self.skipped + self.failed


@dataclass
class RunReport:
    """Counters for one pass.

    ``jobs_processed`` counts jobs ranked in this pass (new jobs plus jobs
    re-matched because new resumes arrived in scope); ``jobs_parsed`` and
    ``resumes_processed`` count newly parsed documents.
    """

    jobs_processed: int = 0
    jobs_parsed: int = 0
    resumes_processed: int = 0
    matches_computed: int = 0
    notifications: NotificationCounts = field(default_factory=NotificationCounts)
    errors: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    per_resume_time: float = 0.0
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# ----------------------------------------------------------------------------
# Persistent pass state
# ----------------------------------------------------------------------------

@dataclass
class PassState:
    inbox: InboxState
    dirty_jobs: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {"inbox": self.inbox.to_dict(), "dirty_jobs": sorted(self.dirty_jobs)}


def load_state(store: FileStore, config: PipelineConfig) -> PassState:
    rec = store.get(INBOX_STATE, "state")
    if rec is None:
        return PassState(InboxState(config.jobs_dir, config.resumes_dir, config.poll_interval))
    inbox = InboxState.from_dict(rec["inbox"])
    inbox.jobs_dir, inbox.resumes_dir, inbox.poll_interval = config.jobs_dir, config.resumes_dir, config.poll_interval
    return PassState(inbox, set(rec.get("dirty_jobs", ())))


def save_state(store: FileStore, state: PassState) -> None:
    store.replace(INBOX_STATE, "state", state.to_dict())


def _channel(transport: MailTransportConfig) -> str:
    return "dry_run" if transport.mode is TransportMode.DRY_RUN else "live"


def ledger_keys(store: FileStore) -> set[tuple[str, str | None, str]]:
    """(job_id, resume_id, channel) triples that already had a delivery attempt."""
    return {
        (e["job_id"], e["resume_id"], e["channel"])
        for e in store.read(LEDGER)
        if e.get("event") == "attempt"
    }


def init_store(config: PipelineConfig) -> FileStore:
    config.jobs_dir.mkdir(parents=True, exist_ok=True)
    config.resumes_dir.mkdir(parents=True, exist_ok=True)
    return FileStore(config.store_root).init()


# ----------------------------------------------------------------------------
# One pass
# ----------------------------------------------------------------------------

class _Pass:
    def __init__(self, config: PipelineConfig, store: FileStore, client: RemoteClient | None):
        self.config = config
        self.store = store
        self.client = client
        self.report = RunReport()
        self.transport = config.effective_transport()
        self._resumes: dict[Department, list[ResumeFeatures]] | None = None
        self._received: dict[str, Any] | None = None

    def audit(self, operation: str, outcome: Outcome, ids: Iterable[str] = (), detail: str = "") -> None:
        self.store.append_audit(AuditLogEntry(operation, outcome, tuple(str(i) for i in ids), detail))

    def pool(self) -> ThreadPoolExecutor:
        return ThreadPoolExecutor(max_workers=self.config.extractor.max_concurrent_requests)

    # -- parse ----------------------------------------------------------

    def parse(self, state: PassState, require_stable: bool) -> None:
        docs = scan_inbox(state.inbox, lambda e: self.store.append_audit(e), require_stable=require_stable)
        for doc in docs:
            meta = {k: v for k, v in doc.to_dict().items() if k != "text"}
            self.store.put(DOCUMENTS, doc.id, meta)

        def work(doc: RawDocument):
            try:
                return parse_document(doc, self.config.extractor, self.client)
            except (ExtractionInvalid, ExtractionFailed) as exc:
                return exc

        if len(docs) > 1:
            with self.pool() as pool:
                results = list(pool.map(work, docs))
        else:
            results = [work(d) for d in docs]

        new_jobs: list[JobFeatures] = []
        new_resumes: list[ResumeFeatures] = []
        for doc, result in zip(docs, results):
            if isinstance(result, Exception):
                raw = getattr(result, "raw", None)
                detail = str(result) if raw is None else f"{result}; raw={json.dumps(raw, default=str)[:2000]}"
                self.audit("parse", Outcome.ERROR, [doc.id], detail)
                self.report.errors.append(f"{doc.source_path}: {result}")
                continue
            if isinstance(result, JobFeatures):
                self.store.put(JOBS, result.job_id, result.to_dict())
                new_jobs.append(result)
            else:
                self.store.put(resume_collection(result.predicted_department), result.resume_id, result.to_dict())
                new_resumes.append(result)
            self.audit("parse", Outcome.OK, [doc.id], f"{doc.kind.value} parsed")

        self.report.jobs_parsed = len(new_jobs)
        self.report.resumes_processed = len(new_resumes)
        self.new_jobs = new_jobs
        state.dirty_jobs.update(j.job_id for j in new_jobs)
        if new_resumes:
            touched = {r.predicted_department for r in new_resumes}
            for job_id, rec in self.store.records(JOBS):
                if self.config.match_all_departments or Department(rec["department"]) in touched:
                    state.dirty_jobs.add(job_id)
        # Features are durable before the seen-set records their documents.
        save_state(self.store, state)

    # -- match ----------------------------------------------------------

    def resumes_in_scope(self, job: JobFeatures) -> list[ResumeFeatures]:
        if self._resumes is None:
            self._resumes = {d: self.store.query_resumes_by_department(d) for d in Department}
        if self.config.match_all_departments:
            return sorted((r for rs in self._resumes.values() for r in rs), key=lambda r: r.resume_id)
        return self._resumes[job.department]

    def received_at(self) -> dict[str, Any]:
        if self._received is None:
            self._received = {id: parse_ts(rec["received_at"]) for id, rec in self.store.records(DOCUMENTS)}
        return self._received

    def match(self, job_ids: list[str]) -> list[tuple[JobFeatures, Any]]:
        out = []
        for job_id in job_ids:
            rec = self.store.get(JOBS, job_id)
            if rec is None:
                continue
            job = JobFeatures.from_dict(rec)
            resumes = self.resumes_in_scope(job)

            def work(resume: ResumeFeatures):
                try:
                    return score(job, resume, self.config.scorer, self.client)
                except ScoringError as exc:
                    return exc

            if self.config.scorer.kind is ScorerKind.LLM and len(resumes) > 1:
                with self.pool() as pool:
                    results = list(pool.map(work, resumes))
            else:
                results = [work(r) for r in resumes]
            scores = []
            for resume, result in zip(resumes, results):
                if isinstance(result, Exception):
                    self.audit("score", Outcome.ERROR, [job_id, resume.resume_id], str(result))
                    self.report.errors.append(f"score {job_id}/{resume.resume_id}: {result}")
                else:
                    scores.append(result)
            self.report.matches_computed += len(scores)
            self.audit("score", Outcome.OK, [job_id], f"{len(scores)} resumes scored")

            ranking = rank(scores, self.received_at(), job_id=job.job_id)
            self.audit("rank", Outcome.OK, [job_id], f"{len(ranking.entries)} entries")
            selected = select_top_k(ranking, self.config.k)
            self.store.put(MATCHES, job_id, match_record(ranking, selected))
            self.audit("select", Outcome.OK, [job_id, *selected.selected], f"top {self.config.k}")
            self.report.jobs_processed += 1
            out.append((job, selected))
        return out

    # -- notify ---------------------------------------------------------

    def notify(self, matched: list[tuple[JobFeatures, Any]], state: PassState) -> None:
        channel = _channel(self.transport)
        done = ledger_keys(self.store)
        counts = self.report.notifications
        with ExitStack() as stack:
            connection = None
            if self.transport.mode is TransportMode.SMTP and matched:
                try:
                    connection = stack.enter_context(open_connection(self.transport))
                except OSError as exc:
                    log.warning("SMTP connection failed: %s", exc)

            def deliver(message, ids):
                key = (str(message.job_id), None if message.resume_id is None else str(message.resume_id), channel)
                self.store.append(LEDGER, {"event": "attempt", "job_id": key[0], "resume_id": key[1],
                                           "channel": channel, "at": format_ts(utcnow())})
                receipt = send(message, self.transport, connection)
                self.store.append(LEDGER, {"event": "receipt", "channel": channel, **receipt.to_dict()})
                done.add(key)
                outcome = Outcome.ERROR if receipt.status is DeliveryStatus.FAILED else Outcome.OK
                self.audit("notify", outcome, ids, f"{receipt.status.value}: {receipt.detail}")
                return receipt

            if self.config.notify_hr:
                for job in getattr(self, "new_jobs", []):
                    if not job.hr_notify_email or (job.job_id, None, channel) in done:
                        continue
                    meta = self.store.get(DOCUMENTS, job.job_id) or {}
                    try:
                        text = Path(meta["source_path"]).read_text(encoding="utf-8")
                    except (KeyError, OSError, UnicodeDecodeError):
                        text = f"{job.title} ({job.department.value})"
                    deliver(generate_hr_posting(job, text, dry_run=channel == "dry_run"), [job.job_id])

            for job, selected in matched:
                for resume_id in selected.selected:
                    if (job.job_id, resume_id, channel) in done:
                        continue
                    resume = self.store.find_resume(resume_id)
                    try:
                        message = generate_response(resume, job, dry_run=channel == "dry_run")
                    except UnnotifiableCandidate as exc:
                        counts.skipped += 1
                        self.audit("notify", Outcome.SKIPPED, [job.job_id, resume_id], str(exc))
                        continue
                    receipt = deliver(message, [job.job_id, resume_id])
                    if receipt.status is DeliveryStatus.SENT:
                        counts.sent += 1
                    elif receipt.status is DeliveryStatus.DRY_RUN:
                        counts.dry_run += 1
                    else:
                        counts.failed += 1
                        self.report.errors.append(f"notify {job.job_id}/{resume_id}: {receipt.detail}")
                state.dirty_jobs.discard(job.job_id)
                save_state(self.store, state)


def _needs_client(config: PipelineConfig) -> bool:
    return config.extractor.provider is Provider.REMOTE


def run_once(
    config: PipelineConfig,
    *,
    stages: Iterable[str] = STAGES,
    require_stable: bool = False,
    client: RemoteClient | None = None,
) -> RunReport:
    """One pass over the inboxes.

    ``stages`` restricts the work for benchmarking (``notify`` implies
    ``match``). ``require_stable`` defers files whose size changed since the
    previous poll; the watch loop enables it.
    """
    stages = set(stages)
    unknown = stages - set(STAGES)
    if unknown or "parse" not in stages or ("notify" in stages and "match" not in stages):
        raise ConfigurationError(f"invalid stage selection: {sorted(stages)}")
    store = FileStore(config.store_root)
    if not store.is_initialized():
        raise ConfigurationError(f"store not initialized at {config.store_root}; run `mlar init` first")

    t0 = time.perf_counter()
    with ExitStack() as stack:
        if client is None and _needs_client(config):
            client = stack.enter_context(RemoteClient(config.extractor))
        p = _Pass(config, store, client)
        state = load_state(store, config)

        p.parse(state, require_stable)
        t1 = time.perf_counter()
        matched: list = []
        if "match" in stages:
            matched = p.match(sorted(state.dirty_jobs))
        t2 = time.perf_counter()
        if "notify" in stages:
            p.notify(matched, state)
        t3 = time.perf_counter()

    report = p.report
    spans = {"parse": t1 - t0, "match": t2 - t1, "notify": t3 - t2}
    report.stage_seconds = {s: v for s, v in spans.items() if s in stages}
    report.wall_time = t3 - t0
    report.per_resume_time = report.wall_time / report.resumes_processed if report.resumes_processed else 0.0
    n = report.notifications
    p.audit(
        "pass",
        Outcome.OK if not report.errors else Outcome.ERROR,
        detail=(
            f"jobs_parsed={report.jobs_parsed} resumes={report.resumes_processed} ranked={report.jobs_processed} "
            f"scores={report.matches_computed} sent={n.sent} dry_run={n.dry_run} skipped={n.skipped} "
            f"failed={n.failed} errors={len(report.errors)}"
        ),
    )
    return report


# ----------------------------------------------------------------------------
# Continuous loop
# ----------------------------------------------------------------------------

def run_loop(
    config: PipelineConfig,
    *,
    stop: threading.Event | None = None,
    max_passes: int | None = None,
    install_signal_handlers: bool = True,
) -> int:
    """Run passes every ``poll_interval`` until stopped; returns the number of passes.

    SIGTERM/SIGINT let the in-flight pass finish, then the loop returns.
    Five consecutive failed passes raise :class:`CircuitBreakerOpen`.
    """
    stop = stop or threading.Event()
    previous = {}
    if install_signal_handlers and threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGTERM, signal.SIGINT):
            previous[sig] = signal.signal(sig, lambda *_: stop.set())
    passes = failures = 0
    try:
        while not stop.is_set():
            started = time.monotonic()
            try:
                report = run_once(config, require_stable=True)
            except ConfigurationError:
                raise
            except Exception as exc:  # noqa: BLE001 - any failed pass counts toward the breaker
                failures += 1
                log.error("pass failed (%d consecutive): %s", failures, exc)
                if failures >= MAX_CONSECUTIVE_FAILURES:
                    raise CircuitBreakerOpen(f"{failures} consecutive failed passes; last: {exc}") from exc
            else:
                failures = 0
                log.info("pass done: %s", json.dumps(report.to_dict(), default=str))
            passes += 1
            if max_passes is not None and passes >= max_passes:
                break
            stop.wait(max(0.0, config.poll_interval - (time.monotonic() - started)))
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    return passes
