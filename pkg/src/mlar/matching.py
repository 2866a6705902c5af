"""Candidate-job similarity, per-job ranking and top-k selection."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Iterable, Mapping

from .domain import (
    DocumentId,
    JobFeatures,
    MlarError,
    Ranking,
    ResumeFeatures,
    ScorerKind,
    SelectedCandidates,
    SimilarityScore,
    ValidationError,
    tokens,
)
from .extraction import load_template
from .llm import LLMError, RemoteClient

DEFAULT_WEIGHTS = (0.5, 0.25, 0.25)
_SCORE_TEXT = re.compile(r"^\s*(-?\d+(?:\.\d+)?)\s*$")


class ScoringError(MlarError):
    pass


@dataclass(frozen=True)
class ScorerConfig:
    kind: ScorerKind = ScorerKind.BASELINE
    w_skills: float = DEFAULT_WEIGHTS[0]
    w_experience: float = DEFAULT_WEIGHTS[1]
    w_education: float = DEFAULT_WEIGHTS[2]

    def __post_init__(self) -> None:
        check_weights(self.weights)

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.w_skills, self.w_experience, self.w_education)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "w_skills": self.w_skills,
            "w_experience": self.w_experience,
            "w_education": self.w_education,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScorerConfig":
        return cls(
            ScorerKind(d.get("kind", "Baseline")),
            float(d.get("w_skills", DEFAULT_WEIGHTS[0])),
            float(d.get("w_experience", DEFAULT_WEIGHTS[1])),
            float(d.get("w_education", DEFAULT_WEIGHTS[2])),
        )


def check_weights(weights: Iterable[float]) -> None:
    w = tuple(weights)
    if len(w) != 3 or any(not (x >= 0) for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ValidationError(f"weights must be three non-negative numbers summing to 1, got {w}")


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def experience_aligned(job: JobFeatures, resume: ResumeFeatures) -> bool:
    title = tokens(job.title)
    return any(tokens(e.role_title) & title for e in resume.experience)


def baseline_score(
    job: JobFeatures, resume: ResumeFeatures, weights: tuple[float, float, float] = DEFAULT_WEIGHTS
) -> float:
    """Weighted blend of skill Jaccard, title/role overlap and department agreement, scaled to [0, 100]."""
    check_weights(weights)
    w_skills, w_exp, w_edu = weights
    e = 1.0 if experience_aligned(job, resume) else 0.0
    d = 1.0 if resume.predicted_department == job.department else 0.0
    value = 100.0 * (w_skills * jaccard(job.required_skills, resume.skills) + w_exp * e + w_edu * d)
    if value > 100.0:  # weights sum to 1 only within 1e-9
        value = 100.0
    return value


def parse_score_text(text: str) -> float:
    m = _SCORE_TEXT.match(text)
    if not m:
        raise ValueError(f"not a number: {text[:40]!r}")
    value = float(m.group(1))
    if not (0.0 <= value <= 100.0) or math.isnan(value):
        raise ValueError(f"score {value} outside [0, 100]")
    return value


def score_prompt(job: JobFeatures, resume: ResumeFeatures) -> str:
    job_rec = {k: v for k, v in job.to_dict().items() if k not in ("job_id", "hr_notify_email")}
    res_rec = {k: v for k, v in resume.to_dict().items() if k not in ("resume_id", "email", "phone")}
    return load_template("score").substitute(
        job=json.dumps(job_rec, indent=2, ensure_ascii=False),
        resume=json.dumps(res_rec, indent=2, ensure_ascii=False),
    )


def llm_score(job: JobFeatures, resume: ResumeFeatures, client: RemoteClient) -> float:
    """Ask the model for a number; one re-ask if the answer is not a number in range."""
    prompt = score_prompt(job, resume)
    last: Exception | None = None
    for _ in range(2):
        try:
            text = client.complete(prompt, str)
        except LLMError as exc:
            raise ScoringError(str(exc)) from exc
        try:
            return parse_score_text(text)
        except ValueError as exc:
            last = exc
    raise ScoringError(f"LLM score unusable after re-ask: {last}")


def score(
    job: JobFeatures,
    resume: ResumeFeatures,
    scorer: ScorerConfig,
    client: RemoteClient | None = None,
) -> SimilarityScore:
    if scorer.kind is ScorerKind.BASELINE:
        value = baseline_score(job, resume, scorer.weights)
    else:
        if client is None:
            raise ScoringError("LLM scorer needs a remote client")
        value = llm_score(job, resume, client)
    return SimilarityScore(job.job_id, resume.resume_id, value, scorer.kind)


def ranking_key(value: float, received_at: datetime, resume_id: str) -> tuple:
    return (-value, received_at, resume_id)


def rank(
    scores: Iterable[SimilarityScore],
    receipt_times: Mapping[str, datetime],
    job_id: DocumentId | None = None,
) -> Ranking:
    """Per-job ranking: score descending, then earlier receipt, then resume id.

    ``job_id`` is only needed to build an empty ranking.
    """
    scores = list(scores)
    job_ids = {s.job_id for s in scores} | ({job_id} if job_id is not None else set())
    if len(job_ids) > 1:
        raise ValidationError("scores for more than one job")
    if not job_ids:
        raise ValueError("empty score list needs an explicit job_id")
    ids = [s.resume_id for s in scores]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate resume in scores")
    ordered = sorted(scores, key=lambda s: ranking_key(s.value, receipt_times[s.resume_id], s.resume_id))
    return Ranking(job_ids.pop(), tuple((s.resume_id, s.value) for s in ordered))


def select_top_k(ranking: Ranking, k: int = 3) -> SelectedCandidates:
    if k < 1:
        raise ValidationError(f"k must be positive, got {k}")
    return SelectedCandidates(ranking.job_id, tuple(rid for rid, _ in ranking.entries[:k]), k)


def match_record(ranking: Ranking, selected: SelectedCandidates) -> dict[str, Any]:
    return {
        "job_id": str(ranking.job_id),
        "ranking": [[str(r), v] for r, v in ranking.entries],
        "selected": [str(r) for r in selected.selected],
    }
