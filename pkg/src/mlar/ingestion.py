"""Inbox polling: discover new job/resume files, extract text, assign identities."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

from .domain import (
    AuditLogEntry,
    DocumentId,
    DocumentKind,
    MlarError,
    Outcome,
    RawDocument,
)

log = logging.getLogger(__name__)

ACCEPTED_EXTENSIONS = (".pdf", ".txt")


class ConfigurationError(MlarError):
    pass


class NoTextError(MlarError):
    def __init__(self, path: str | Path, reason: str = "no text"):
        super().__init__(f"no text: {path} ({reason})")
        self.path = str(path)


def extract_text(path: str | Path) -> str:
    """Plain text of a ``.txt`` or ``.pdf`` file, trimmed.

    PDF pages are joined with form feeds. Scanned PDFs without a text layer
    raise :class:`NoTextError`, as do empty or undecodable files.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".txt":
        try:
            text = path.read_bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NoTextError(path, f"not UTF-8: {exc.reason}") from exc
    elif suffix == ".pdf":
        from pypdf import PdfReader
        from pypdf.errors import PdfReadError

        try:
            reader = PdfReader(str(path))
            pages = [(page.extract_text() or "").strip() for page in reader.pages]
        except PdfReadError as exc:
            raise NoTextError(path, f"unreadable PDF: {exc}") from exc
        text = "\x0c".join(pages)
    else:
        raise NoTextError(path, f"unsupported extension {suffix!r}")
    text = text.strip()
    if not text.strip("\x0c").strip():
        raise NoTextError(path)
    return text


@dataclass
class InboxState:
    """Seen-set plus the per-path bookkeeping needed between polls.

    ``known`` maps a path to ``[size, mtime_ns, doc_id]`` for files already
    handled, so unchanged files are not rehashed. ``pending`` holds sizes of
    files observed once but not yet size-stable.
    """

    jobs_dir: Path
    resumes_dir: Path
    poll_interval: float = 5.0
    seen: set[str] = field(default_factory=set)
    known: dict[str, list] = field(default_factory=dict)
    pending: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "jobs_dir": str(self.jobs_dir),
            "resumes_dir": str(self.resumes_dir),
            "poll_interval": self.poll_interval,
            "seen": sorted(self.seen),
            "known": self.known,
            "pending": self.pending,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "InboxState":
        return cls(
            Path(d["jobs_dir"]),
            Path(d["resumes_dir"]),
            float(d.get("poll_interval", 5.0)),
            set(d.get("seen", ())),
            {k: list(v) for k, v in d.get("known", {}).items()},
            dict(d.get("pending", {})),
        )


AuditSink = Callable[[AuditLogEntry], Any]


def _candidates(state: InboxState) -> list[tuple[Path, DocumentKind]]:
    out = []
    for directory, kind in ((state.jobs_dir, DocumentKind.JOB), (state.resumes_dir, DocumentKind.RESUME)):
        if not directory.is_dir():
            raise ConfigurationError(f"inbox directory missing: {directory}")
        for p in directory.iterdir():
            if p.is_file() and p.suffix.lower() in ACCEPTED_EXTENSIONS and not p.name.startswith("."):
                out.append((p, kind))
    return out


def scan_inbox(
    state: InboxState,
    audit: AuditSink | None = None,
    *,
    require_stable: bool = False,
) -> list[RawDocument]:
    """New documents since the last scan, oldest modification first.

    With ``require_stable`` a file is ingested only once its size matches the
    size recorded at the previous poll. Files that fail text extraction are
    audited as skipped and never retried; byte-identical copies of an already
    seen file are skipped as duplicates.
    """
    emit = audit or (lambda e: None)
    fresh: list[tuple[int, str, Path, DocumentKind, int]] = []
    for path, kind in _candidates(state):
        st = path.stat()
        key = str(path)
        known = state.known.get(key)
        if known is not None and known[0] == st.st_size and known[1] == st.st_mtime_ns:
            continue
        if require_stable and state.pending.get(key) != st.st_size:
            state.pending[key] = st.st_size
            continue
        state.pending.pop(key, None)
        fresh.append((st.st_mtime_ns, key, path, kind, st.st_size))

    docs: list[RawDocument] = []
    for mtime_ns, key, path, kind, size in sorted(fresh, key=lambda t: (t[0], t[1])):
        data = path.read_bytes()
        doc_id = DocumentId.of_bytes(data)
        state.known[key] = [size, mtime_ns, str(doc_id)]
        if doc_id in state.seen:
            emit(AuditLogEntry("ingest", Outcome.SKIPPED, (str(doc_id),), f"duplicate of a seen document: {key}"))
            continue
        state.seen.add(doc_id)
        try:
            text = extract_text(path)
        except (NoTextError, OSError) as exc:
            log.info("skipping %s: %s", key, exc)
            emit(AuditLogEntry("ingest", Outcome.SKIPPED, (str(doc_id),), str(exc)))
            continue
        received = datetime.fromtimestamp(mtime_ns // 1_000_000_000, tz=timezone.utc)
        doc = RawDocument(doc_id, kind, key, text, received)
        emit(AuditLogEntry("ingest", Outcome.OK, (str(doc_id),), f"{kind.value}: {key}"))
        docs.append(doc)
    return docs
