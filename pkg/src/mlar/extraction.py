"""Turn raw document text into validated job and resume features.

Two extractors produce the same raw record shape: a remote LLM behind
:class:`~mlar.llm.RemoteClient`, and a deterministic line-oriented rules
extractor used offline and in tests. Validation into
:class:`JobFeatures`/:class:`ResumeFeatures` is shared and unconditional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Any

from .domain import (
    Department,
    DocumentKind,
    Education,
    Experience,
    JobFeatures,
    MlarError,
    RawDocument,
    ResumeFeatures,
    ValidationError,
    normalize_skill,
    parse_department,
)
from .llm import ExtractorConfig, LLMError, Provider, RemoteClient, repair_json

PROMPT_VERSION = "v1"

LABELS = frozenset(
    {"title", "name", "email", "phone", "department", "skills", "experience", "education", "preferences"}
)
_LABEL_LINE = re.compile(r"^\s*([A-Za-z]+)\s*:(.*)$")
_NUMBER = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(?:years?|yrs?)?\s*$", re.IGNORECASE)


class Schema(str, Enum):
    JOB = "JobSchema"
    RESUME = "ResumeSchema"


class ExtractionInvalid(MlarError):
    """Extractor output failed validation; ``raw`` is kept for the audit log."""

    def __init__(self, message: str, raw: Any = None):
        super().__init__(f"extraction invalid: {message}")
        self.raw = raw


class ExtractionFailed(MlarError):
    def __init__(self, message: str, raw: Any = None):
        super().__init__(f"extraction failed: {message}")
        self.raw = raw


class MissingLabels(ExtractionInvalid):
    pass


@dataclass(frozen=True)
class ExtractionRequest:
    document: RawDocument
    schema: Schema
    prompt: str


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    text = resources.files("mlar").joinpath("prompts", f"{name}_{PROMPT_VERSION}.txt").read_text("utf-8")
    return Template(text)


def _departments_list() -> str:
    return ", ".join(f'"{d.value}"' for d in Department)


def build_request(document: RawDocument) -> ExtractionRequest:
    schema = Schema.JOB if document.kind is DocumentKind.JOB else Schema.RESUME
    template = load_template("job" if schema is Schema.JOB else "resume")
    prompt = template.substitute(departments=_departments_list(), document=document.text)
    return ExtractionRequest(document, schema, prompt)


def document_text_from_prompt(prompt: str) -> str:
    """Inverse of the template's document framing; used by test stubs."""
    start = prompt.index("<<<DOCUMENT\n") + len("<<<DOCUMENT\n")
    end = prompt.rindex("\nDOCUMENT>>>")
    return prompt[start:end]


def llm_extract(request: ExtractionRequest, config: ExtractorConfig, client: RemoteClient | None = None) -> dict:
    own = client is None
    client = client or RemoteClient(config)
    try:
        return client.complete(request.prompt, repair_json)
    finally:
        if own:
            client.close()


# ----------------------------------------------------------------------------
# Rules extractor
# ----------------------------------------------------------------------------

def _split_commas(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _labeled_lines(text: str) -> list[tuple[str, str]]:
    out = []
    for line in text.splitlines():
        m = _LABEL_LINE.match(line)
        if m and m.group(1).lower() in LABELS:
            out.append((m.group(1).lower(), m.group(2).strip()))
    return out


def _parse_years(raw: str) -> float | None:
    if not raw.strip():
        return None
    m = _NUMBER.match(raw)
    if not m:
        raise ExtractionInvalid(f"unparseable years {raw!r}")
    return float(m.group(1))


def rules_extract(document: RawDocument, schema: Schema) -> dict[str, Any]:
    """Line grammar ``Label: value`` with case-insensitive labels.

    Skills and Preferences are comma lists and accumulate across lines.
    Resume Experience lines are ``role | years | description`` and resume
    Education lines ``degree | institution``; each line adds one entry.
    Scalar labels keep their first occurrence. Unknown labels and prose are
    ignored.
    """
    lines = _labeled_lines(document.text)
    first: dict[str, str] = {}
    skills: list[str] = []
    prefs: list[str] | None = None
    experience: list[dict[str, Any]] = []
    education: list[dict[str, Any]] = []
    for label, value in lines:
        if label == "skills":
            skills.extend(_split_commas(value))
        elif label == "preferences":
            prefs = (prefs or []) + _split_commas(value)
        elif schema is Schema.RESUME and label == "experience":
            role, years, desc = (value.split("|", 2) + ["", ""])[:3]
            experience.append({"role_title": role.strip(), "description": desc.strip(), "years": _parse_years(years)})
        elif schema is Schema.RESUME and label == "education":
            degree, inst = (value.split("|", 1) + [""])[:2]
            education.append({"degree": degree.strip(), "institution": inst.strip() or None})
        else:
            first.setdefault(label, value)

    required = ("title", "department") if schema is Schema.JOB else ("name", "department")
    missing = [label for label in required if not first.get(label)]
    if missing:
        raise MissingLabels(f"missing required labels: {', '.join(missing)}", raw=document.text)

    if schema is Schema.JOB:
        return {
            "title": first["title"],
            "required_skills": skills,
            "experience_level": first.get("experience", ""),
            "education": first.get("education", ""),
            "preferences": prefs,
            "department": first["department"],
            "hr_notify_email": first.get("email") or None,
        }
    return {
        "candidate_name": first["name"],
        "email": first.get("email") or None,
        "phone": first.get("phone") or None,
        "skills": skills,
        "experience": experience,
        "education": education,
        "predicted_department": first["department"],
    }


# ----------------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------------

def _skills(raw: Any) -> frozenset[str]:
    if not isinstance(raw, (list, tuple)):
        raise ValidationError("skills must be a list")
    return frozenset(normalize_skill(s) for s in raw if isinstance(s, str) and s.strip())


def _opt_str(raw: Any) -> str | None:
    if raw is None:
        return None
    s = str(raw).strip()
    return s or None


def job_from_record(record: dict[str, Any], document: RawDocument) -> JobFeatures:
    try:
        prefs = record.get("preferences")
        return JobFeatures(
            job_id=document.id,
            title=str(record["title"]).strip(),
            required_skills=_skills(record.get("required_skills", [])),
            experience_level=str(record.get("experience_level") or ""),
            education=str(record.get("education") or ""),
            preferences=None if prefs is None else tuple(str(p) for p in prefs),
            department=parse_department(record["department"]),
            hr_notify_email=_opt_str(record.get("hr_notify_email")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ExtractionInvalid(str(exc), raw=record) from exc


def resume_from_record(record: dict[str, Any], document: RawDocument) -> ResumeFeatures:
    try:
        return ResumeFeatures(
            resume_id=document.id,
            candidate_name=str(record["candidate_name"]).strip(),
            email=_opt_str(record.get("email")),
            phone=_opt_str(record.get("phone")),
            skills=_skills(record.get("skills", [])),
            experience=tuple(Experience.from_dict(e) for e in record.get("experience") or ()),
            education=tuple(Education.from_dict(e) for e in record.get("education") or ()),
            predicted_department=parse_department(record["predicted_department"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ExtractionInvalid(str(exc), raw=record) from exc


def _extract(document: RawDocument, extractor: ExtractorConfig, client: RemoteClient | None) -> dict:
    request = build_request(document)
    if extractor.provider is Provider.RULES:
        return rules_extract(document, request.schema)
    try:
        return llm_extract(request, extractor, client)
    except LLMError as exc:
        raise ExtractionFailed(str(exc), raw=exc.last_output) from exc


def parse_job(document: RawDocument, extractor: ExtractorConfig, client: RemoteClient | None = None) -> JobFeatures:
    if document.kind is not DocumentKind.JOB:
        raise ValueError(f"not a job document: {document.source_path}")
    return job_from_record(_extract(document, extractor, client), document)


def parse_resume(
    document: RawDocument, extractor: ExtractorConfig, client: RemoteClient | None = None
) -> ResumeFeatures:
    if document.kind is not DocumentKind.RESUME:
        raise ValueError(f"not a resume document: {document.source_path}")
    return resume_from_record(_extract(document, extractor, client), document)


def parse_document(
    document: RawDocument, extractor: ExtractorConfig, client: RemoteClient | None = None
) -> JobFeatures | ResumeFeatures:
    if document.kind is DocumentKind.JOB:
        return parse_job(document, extractor, client)
    return parse_resume(document, extractor, client)
