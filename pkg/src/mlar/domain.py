"""Shared domain types, the department taxonomy and normalization rules.

Every record type is an immutable dataclass with a ``to_dict``/``from_dict``
pair producing the canonical JSON shape used for persistence and CLI output:
snake_case field names, sets rendered as sorted lists, timestamps as RFC 3339
strings in UTC.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Mapping

_HEX64 = re.compile(r"^[0-9a-f]{64}$")
_EMAIL = re.compile(r"^[^@\s]+@[^@\s]+$")
_WS = re.compile(r"\s+")


class MlarError(Exception):
    """Base class for pipeline errors."""


class ValidationError(MlarError, ValueError):
    pass


class EmptySkillError(ValidationError):
    def __init__(self, raw: str):
        super().__init__(f"empty skill: {raw!r}")
        self.raw = raw


class UnknownDepartmentError(ValidationError):
    def __init__(self, label: str):
        super().__init__(f"unknown department: {label!r}")
        self.label = label


# ----------------------------------------------------------------------------
# Timestamps
# ----------------------------------------------------------------------------

def utcnow(precision: str = "seconds") -> datetime:
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=0) if precision == "seconds" else now


def format_ts(ts: datetime) -> str:
    """RFC 3339 in UTC with a trailing ``Z``."""
    if ts.tzinfo is None:
        raise ValueError("naive datetime")
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def parse_ts(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        raise ValueError(f"timestamp without offset: {text!r}")
    return ts.astimezone(timezone.utc)


# ----------------------------------------------------------------------------
# Identity
# ----------------------------------------------------------------------------

class DocumentId(str):
    """Lowercase hex SHA-256 of a document's raw bytes."""

    def __new__(cls, value: str) -> "DocumentId":
        if not isinstance(value, str) or not _HEX64.match(value):
            raise ValidationError(f"invalid document id: {value!r}")
        return super().__new__(cls, value)

    @classmethod
    def of_bytes(cls, data: bytes) -> "DocumentId":
        return cls(hashlib.sha256(data).hexdigest())


class DocumentKind(str, Enum):
    JOB = "Job"
    RESUME = "Resume"


# ----------------------------------------------------------------------------
# Departments
# ----------------------------------------------------------------------------

class Department(str, Enum):
    HR = "HR"
    DESIGNER = "Designer"
    INFORMATION_TECHNOLOGY = "Information-Technology"
    TEACHER = "Teacher"
    ADVOCATE = "Advocate"
    BUSINESS_DEVELOPMENT = "Business-Development"
    HEALTHCARE = "Healthcare"
    FITNESS = "Fitness"
    AGRICULTURE = "Agriculture"
    BPO = "BPO"
    SALES = "Sales"
    CONSULTANT = "Consultant"
    DIGITAL_MEDIA = "Digital-Media"
    AUTOMOBILE = "Automobile"
    CHEF = "Chef"
    FINANCE = "Finance"
    APPAREL = "Apparel"
    ENGINEERING = "Engineering"
    ACCOUNTANT = "Accountant"
    CONSTRUCTION = "Construction"
    PUBLIC_RELATIONS = "Public-Relations"
    BANKING = "Banking"
    ARTS = "Arts"
    AVIATION = "Aviation"

    @property
    def label(self) -> str:
        return self.value


def _department_key(label: str) -> str:
    return _WS.sub(" ", label.replace("-", " ")).strip().lower()


_DEPARTMENT_INDEX = {_department_key(d.value): d for d in Department}


def parse_department(label: str) -> Department:
    """Case-insensitive lookup; ``-`` and whitespace runs are interchangeable."""
    if isinstance(label, Department):
        return label
    try:
        return _DEPARTMENT_INDEX[_department_key(str(label))]
    except KeyError:
        raise UnknownDepartmentError(label) from None


# ----------------------------------------------------------------------------
# Normalization
# ----------------------------------------------------------------------------

def normalize_skill(raw: str) -> str:
    skill = _WS.sub(" ", raw).strip().lower()
    if not skill:
        raise EmptySkillError(raw)
    return skill


def normalize_skills(raw: Iterable[str]) -> frozenset[str]:
    return frozenset(normalize_skill(s) for s in raw)


def tokens(text: str) -> frozenset[str]:
    """Whitespace tokens of the normalized form of ``text`` (empty set for blank text)."""
    return frozenset(_WS.sub(" ", text).strip().lower().split())


def is_email(value: str) -> bool:
    return bool(_EMAIL.match(value))


def _check_email(value: str | None, what: str) -> None:
    if value is not None and not is_email(value):
        raise ValidationError(f"invalid {what}: {value!r}")


# ----------------------------------------------------------------------------
# Documents and features
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RawDocument:
    id: DocumentId
    kind: DocumentKind
    source_path: str
    text: str
    received_at: datetime

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValidationError(f"empty document: {self.source_path}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": str(self.id),
            "kind": self.kind.value,
            "source_path": self.source_path,
            "text": self.text,
            "received_at": format_ts(self.received_at),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RawDocument":
        return cls(
            id=DocumentId(d["id"]),
            kind=DocumentKind(d["kind"]),
            source_path=d["source_path"],
            text=d["text"],
            received_at=parse_ts(d["received_at"]),
        )


@dataclass(frozen=True)
class JobFeatures:
    job_id: DocumentId
    title: str
    required_skills: frozenset[str]
    experience_level: str
    education: str
    department: Department
    preferences: tuple[str, ...] | None = None
    hr_notify_email: str | None = None

    def __post_init__(self) -> None:
        if not self.title.strip():
            raise ValidationError("job title is empty")
        for s in self.required_skills:
            if normalize_skill(s) != s:
                raise ValidationError(f"skill not normalized: {s!r}")
        _check_email(self.hr_notify_email, "hr_notify_email")

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": str(self.job_id),
            "title": self.title,
            "required_skills": sorted(self.required_skills),
            "experience_level": self.experience_level,
            "education": self.education,
            "preferences": None if self.preferences is None else list(self.preferences),
            "department": self.department.value,
            "hr_notify_email": self.hr_notify_email,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "JobFeatures":
        prefs = d.get("preferences")
        return cls(
            job_id=DocumentId(d["job_id"]),
            title=d["title"],
            required_skills=frozenset(d["required_skills"]),
            experience_level=d.get("experience_level", ""),
            education=d.get("education", ""),
            preferences=None if prefs is None else tuple(prefs),
            department=parse_department(d["department"]),
            hr_notify_email=d.get("hr_notify_email"),
        )


@dataclass(frozen=True)
class Experience:
    role_title: str
    description: str = ""
    years: float | None = None

    def __post_init__(self) -> None:
        if self.years is not None and not self.years >= 0:
            raise ValidationError(f"negative years of experience: {self.years}")

    def to_dict(self) -> dict[str, Any]:
        return {"role_title": self.role_title, "description": self.description, "years": self.years}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Experience":
        years = d.get("years")
        return cls(d["role_title"], d.get("description") or "", None if years is None else float(years))


@dataclass(frozen=True)
class Education:
    degree: str
    institution: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"degree": self.degree, "institution": self.institution}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Education":
        return cls(d["degree"], d.get("institution"))


@dataclass(frozen=True)
class ResumeFeatures:
    resume_id: DocumentId
    candidate_name: str
    skills: frozenset[str]
    predicted_department: Department
    email: str | None = None
    phone: str | None = None
    experience: tuple[Experience, ...] = ()
    education: tuple[Education, ...] = ()

    def __post_init__(self) -> None:
        if not self.candidate_name.strip():
            raise ValidationError("candidate name is empty")
        for s in self.skills:
            if normalize_skill(s) != s:
                raise ValidationError(f"skill not normalized: {s!r}")
        _check_email(self.email, "email")

    def to_dict(self) -> dict[str, Any]:
        return {
            "resume_id": str(self.resume_id),
            "candidate_name": self.candidate_name,
            "email": self.email,
            "phone": self.phone,
            "skills": sorted(self.skills),
            "experience": [e.to_dict() for e in self.experience],
            "education": [e.to_dict() for e in self.education],
            "predicted_department": self.predicted_department.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ResumeFeatures":
        return cls(
            resume_id=DocumentId(d["resume_id"]),
            candidate_name=d["candidate_name"],
            email=d.get("email"),
            phone=d.get("phone"),
            skills=frozenset(d["skills"]),
            experience=tuple(Experience.from_dict(e) for e in d.get("experience", ())),
            education=tuple(Education.from_dict(e) for e in d.get("education", ())),
            predicted_department=parse_department(d["predicted_department"]),
        )


# ----------------------------------------------------------------------------
# Scores, rankings, selections
# ----------------------------------------------------------------------------

class ScorerKind(str, Enum):
    LLM = "LLM"
    BASELINE = "Baseline"


@dataclass(frozen=True)
class SimilarityScore:
    job_id: DocumentId
    resume_id: DocumentId
    value: float
    scorer: ScorerKind
    computed_at: datetime = field(default_factory=utcnow)

    def __post_init__(self) -> None:
        # Out-of-range scorer output is an error, never clamped.
        if not 0.0 <= self.value <= 100.0:
            raise ValidationError(f"similarity {self.value} outside [0, 100]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": str(self.job_id),
            "resume_id": str(self.resume_id),
            "value": self.value,
            "scorer": self.scorer.value,
            "computed_at": format_ts(self.computed_at),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SimilarityScore":
        return cls(
            DocumentId(d["job_id"]),
            DocumentId(d["resume_id"]),
            float(d["value"]),
            ScorerKind(d["scorer"]),
            parse_ts(d["computed_at"]),
        )


@dataclass(frozen=True)
class Ranking:
    job_id: DocumentId
    entries: tuple[tuple[DocumentId, float], ...]

    def __post_init__(self) -> None:
        ids = [rid for rid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate resume in ranking")
        values = [v for _, v in self.entries]
        if any(a < b for a, b in zip(values, values[1:])):
            raise ValidationError("ranking entries are not in descending order")

    def to_dict(self) -> dict[str, Any]:
        return {"job_id": str(self.job_id), "entries": [[str(r), v] for r, v in self.entries]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Ranking":
        return cls(DocumentId(d["job_id"]), tuple((DocumentId(r), float(v)) for r, v in d["entries"]))


@dataclass(frozen=True)
class SelectedCandidates:
    job_id: DocumentId
    selected: tuple[DocumentId, ...]
    k: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValidationError(f"k must be positive, got {self.k}")
        if len(self.selected) > self.k:
            raise ValidationError("more selections than k")

    def to_dict(self) -> dict[str, Any]:
        return {"job_id": str(self.job_id), "selected": [str(r) for r in self.selected], "k": self.k}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SelectedCandidates":
        return cls(DocumentId(d["job_id"]), tuple(DocumentId(r) for r in d["selected"]), int(d["k"]))


# ----------------------------------------------------------------------------
# Notifications and audit
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NotificationMessage:
    job_id: DocumentId
    resume_id: DocumentId | None
    recipient: str
    subject: str
    body: str
    dry_run: bool = True

    def __post_init__(self) -> None:
        if not is_email(self.recipient):
            raise ValidationError(f"invalid recipient: {self.recipient!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "job_id": str(self.job_id),
            "resume_id": None if self.resume_id is None else str(self.resume_id),
            "recipient": self.recipient,
            "subject": self.subject,
            "body": self.body,
            "dry_run": self.dry_run,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "NotificationMessage":
        rid = d.get("resume_id")
        return cls(
            DocumentId(d["job_id"]),
            None if rid is None else DocumentId(rid),
            d["recipient"],
            d["subject"],
            d["body"],
            bool(d.get("dry_run", True)),
        )


class Outcome(str, Enum):
    OK = "Ok"
    SKIPPED = "Skipped"
    ERROR = "Error"


@dataclass(frozen=True)
class AuditLogEntry:
    operation: str
    outcome: Outcome
    document_ids: tuple[str, ...] = ()
    detail: str = ""
    timestamp: datetime = field(default_factory=lambda: utcnow("micro"))

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": format_ts(self.timestamp),
            "operation": self.operation,
            "document_ids": list(self.document_ids),
            "outcome": self.outcome.value,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuditLogEntry":
        return cls(
            operation=d["operation"],
            outcome=Outcome(d["outcome"]),
            document_ids=tuple(d.get("document_ids", ())),
            detail=d.get("detail", ""),
            timestamp=parse_ts(d["timestamp"]),
        )
