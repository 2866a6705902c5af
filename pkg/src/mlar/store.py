"""File-backed document store.

Layout under ``root``::

    jobs/<id>.json
    resumes/<Department>/<id>.json
    documents/<id>.json        raw-document metadata (kind, path, received_at)
    matches/<job_id>.json
    inbox_state/state.json
    ledger.jsonl               notification attempts and receipts
    audit.jsonl                one line per pipeline operation
    outbox.jsonl               dry-run mail

Single documents are written to a temp file in the target directory, fsynced
and renamed into place, so readers never observe partial documents.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
from collections import defaultdict
from datetime import timedelta
from pathlib import Path
from typing import Any, Iterator

from .domain import AuditLogEntry, Department, ResumeFeatures, parse_ts

log = logging.getLogger(__name__)

JOBS = "jobs"
RESUMES = "resumes"
DOCUMENTS = "documents"
MATCHES = "matches"
INBOX_STATE = "inbox_state"
LEDGER = "ledger"
AUDIT = "audit"
OUTBOX = "outbox"


class StoreError(OSError):
    pass


def canonical_json(record: Any) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def resume_collection(department: Department) -> str:
    return f"{RESUMES}/{department.value}"


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


class FileStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._last_audit_ts = None

    # -- layout -------------------------------------------------------------

    def init(self) -> "FileStore":
        for sub in (JOBS, DOCUMENTS, MATCHES, INBOX_STATE):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        for d in Department:
            (self.root / resume_collection(d)).mkdir(parents=True, exist_ok=True)
        for name in (LEDGER, AUDIT, OUTBOX):
            self.jsonl_path(name).touch(exist_ok=True)
        return self

    def is_initialized(self) -> bool:
        return (self.root / JOBS).is_dir() and (self.root / RESUMES).is_dir()

    def _lock(self, collection: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[collection]

    def _path(self, collection: str, id: str) -> Path:
        return self.root / collection / f"{id}.json"

    def jsonl_path(self, name: str) -> Path:
        return self.root / f"{name}.jsonl"

    # -- documents ----------------------------------------------------------

    def put(self, collection: str, id: str, record: Any) -> Path:
        """Store ``record`` under ``id``.

        Rewriting identical content is a no-op. Different content moves the
        current file aside as ``<id>.json.v<n>`` before the new one lands.
        """
        data = canonical_json(record)
        path = self._path(collection, id)
        with self._lock(collection):
            path.parent.mkdir(parents=True, exist_ok=True)
            if path.exists():
                if path.read_text(encoding="utf-8") == data:
                    return path
                n = 1
                while path.with_name(f"{path.name}.v{n}").exists():
                    n += 1
                os.link(path, path.with_name(f"{path.name}.v{n}"))
            _atomic_write(path, data)
        return path

    def replace(self, collection: str, id: str, record: Any) -> Path:
        """Atomic overwrite without versioning, for mutable state documents."""
        path = self._path(collection, id)
        with self._lock(collection):
            path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(path, canonical_json(record))
        return path

    def get(self, collection: str, id: str) -> Any | None:
        try:
            return json.loads(self._path(collection, id).read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None

    def versions(self, collection: str, id: str) -> list[Path]:
        path = self._path(collection, id)
        return sorted(path.parent.glob(f"{path.name}.v*"), key=lambda p: int(p.name.rsplit(".v", 1)[1]))

    def ids(self, collection: str) -> list[str]:
        d = self.root / collection
        if not d.is_dir():
            return []
        return sorted(p.name[: -len(".json")] for p in d.glob("*.json") if not p.name.startswith("."))

    def records(self, collection: str) -> Iterator[tuple[str, Any]]:
        for id in self.ids(collection):
            rec = self.get(collection, id)
            if rec is not None:
                yield id, rec

    # -- typed helpers ------------------------------------------------------

    def query_resumes_by_department(self, department: Department) -> list[ResumeFeatures]:
        return [ResumeFeatures.from_dict(rec) for _, rec in self.records(resume_collection(department))]

    def all_resumes(self) -> list[ResumeFeatures]:
        out: list[ResumeFeatures] = []
        for d in Department:
            out.extend(self.query_resumes_by_department(d))
        return sorted(out, key=lambda r: r.resume_id)

    def find_resume(self, resume_id: str) -> ResumeFeatures | None:
        for d in Department:
            rec = self.get(resume_collection(d), resume_id)
            if rec is not None:
                return ResumeFeatures.from_dict(rec)
        return None

    # -- append-only logs ---------------------------------------------------

    def append(self, name: str, record: Any) -> None:
        path = self.jsonl_path(name)
        line = (canonical_json(record) + "\n").encode("utf-8")
        with self._lock(name):
            with open(path, "ab+") as fh:
                size = fh.seek(0, os.SEEK_END)
                if size:
                    fh.seek(-1, os.SEEK_END)
                    if fh.read(1) != b"\n":
                        # Torn tail from an interrupted append was never committed.
                        _truncate_torn_tail(fh)
                fh.seek(0, os.SEEK_END)
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())

    def read(self, name: str) -> list[Any]:
        path = self.jsonl_path(name)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return []
        out = []
        for chunk in raw.split(b"\n")[:-1]:
            if chunk:
                out.append(json.loads(chunk))
        return out

    def append_audit(self, entry: AuditLogEntry) -> AuditLogEntry:
        """Append ``entry``; timestamps are bumped by 1 µs when needed to stay strictly increasing."""
        with self._lock("audit-clock"):
            ts = entry.timestamp
            if self._last_audit_ts is None:
                tail = self.read(AUDIT)[-1:]
                if tail:
                    self._last_audit_ts = parse_ts(tail[0]["timestamp"])
            if self._last_audit_ts is not None and ts <= self._last_audit_ts:
                ts = self._last_audit_ts + timedelta(microseconds=1)
                entry = AuditLogEntry(entry.operation, entry.outcome, entry.document_ids, entry.detail, ts)
            self.append(AUDIT, entry.to_dict())
            self._last_audit_ts = ts
        return entry

    def audit_entries(self) -> list[AuditLogEntry]:
        return [AuditLogEntry.from_dict(d) for d in self.read(AUDIT)]


def _truncate_torn_tail(fh) -> None:
    fh.seek(0)
    data = fh.read()
    keep = data.rfind(b"\n") + 1
    fh.truncate(keep)
