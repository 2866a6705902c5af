import re
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from mlar.domain import (
    AuditLogEntry,
    Department,
    DocumentId,
    DocumentKind,
    EmptySkillError,
    Experience,
    JobFeatures,
    NotificationMessage,
    Outcome,
    Ranking,
    RawDocument,
    ResumeFeatures,
    ScorerKind,
    SelectedCandidates,
    SimilarityScore,
    UnknownDepartmentError,
    ValidationError,
    format_ts,
    normalize_skill,
    parse_department,
    parse_ts,
)

ID_A = DocumentId.of_bytes(b"a")
ID_B = DocumentId.of_bytes(b"b")

# The 24 category labels of the public Kaggle resume dataset, in listed order.
DATASET_LABELS = (
    "HR, Designer, Information-Technology, Teacher, Advocate, Business-Development, Healthcare, Fitness, "
    "Agriculture, BPO, Sales, Consultant, Digital-Media, Automobile, Chef, Finance, Apparel, Engineering, "
    "Accountant, Construction, Public-Relations, Banking, Arts, Aviation"
).split(", ")


@pytest.mark.parametrize(
    "raw, expected",
    [(" Machine  Learning ", "machine learning"), ("sql", "sql"), ("C++\t Programming", "c++ programming")],
)
def test_normalize_skill(raw, expected):
    assert normalize_skill(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "\t\n"])
def test_normalize_skill_empty(raw):
    with pytest.raises(EmptySkillError):
        normalize_skill(raw)


@given(st.text())
def test_normalize_skill_idempotent(raw):
    try:
        once = normalize_skill(raw)
    except EmptySkillError:
        return
    assert normalize_skill(once) == once
    assert once == once.strip() and "  " not in once


def test_department_taxonomy_matches_dataset():
    assert [d.value for d in Department] == DATASET_LABELS


@pytest.mark.parametrize(
    "label, expected",
    [
        ("Engineering", Department.ENGINEERING),
        ("information technology", Department.INFORMATION_TECHNOLOGY),
        ("  PUBLIC  relations ", Department.PUBLIC_RELATIONS),
        ("bpo", Department.BPO),
    ],
)
def test_parse_department(label, expected):
    assert parse_department(label) is expected


def test_parse_department_unknown():
    with pytest.raises(UnknownDepartmentError) as exc:
        parse_department("Astrology")
    assert exc.value.label == "Astrology"
    assert "unknown department" in str(exc.value)


@pytest.mark.parametrize("d", list(Department))
def test_department_round_trip(d):
    assert parse_department(d.value) is d
    assert parse_department(d.value.lower().replace("-", " ")) is d


def test_document_id():
    doc_id = DocumentId.of_bytes(b"hello")
    assert re.fullmatch(r"[0-9a-f]{64}", doc_id)
    assert doc_id == DocumentId.of_bytes(b"hello")
    assert doc_id != DocumentId.of_bytes(b"hello ")
    with pytest.raises(ValidationError):
        DocumentId("ABC")


def test_timestamps_rfc3339():
    ts = datetime(2024, 5, 1, 12, 30, tzinfo=timezone.utc)
    assert format_ts(ts) == "2024-05-01T12:30:00Z"
    assert parse_ts("2024-05-01T12:30:00Z") == ts


def test_raw_document_rejects_empty_text():
    with pytest.raises(ValidationError):
        RawDocument(ID_A, DocumentKind.RESUME, "x.txt", "  \n ", datetime.now(timezone.utc))


def test_job_features_invariants():
    with pytest.raises(ValidationError):
        JobFeatures(ID_A, " ", frozenset(), "", "", Department.ARTS)
    with pytest.raises(ValidationError):
        JobFeatures(ID_A, "Painter", frozenset({"Oil Painting"}), "", "", Department.ARTS)


def test_resume_features_invariants():
    with pytest.raises(ValidationError):
        ResumeFeatures(ID_A, "Ada", frozenset(), Department.ARTS, email="not-an-email")
    with pytest.raises(ValidationError):
        ResumeFeatures(ID_A, "Ada", frozenset(), Department.ARTS, email="a@b@c")
    with pytest.raises(ValidationError):
        Experience("Cook", years=-1)
    ResumeFeatures(ID_A, "Ada", frozenset(), Department.ARTS, email="a@b")


def test_similarity_score_range_is_enforced():
    SimilarityScore(ID_A, ID_B, 0.0, ScorerKind.BASELINE)
    SimilarityScore(ID_A, ID_B, 100.0, ScorerKind.LLM)
    for bad in (-0.01, 100.5, float("nan")):
        with pytest.raises(ValidationError):
            SimilarityScore(ID_A, ID_B, bad, ScorerKind.LLM)


def test_ranking_and_selection_invariants():
    with pytest.raises(ValidationError):
        Ranking(ID_A, ((ID_B, 10.0), (ID_B, 5.0)))
    with pytest.raises(ValidationError):
        Ranking(ID_A, ((ID_A, 10.0), (ID_B, 50.0)))
    with pytest.raises(ValidationError):
        SelectedCandidates(ID_A, (), k=0)


def test_notification_requires_valid_recipient():
    with pytest.raises(ValidationError):
        NotificationMessage(ID_A, ID_B, "nobody", "s", "b")


records = [
    RawDocument(ID_A, DocumentKind.JOB, "/in/jobs/a.txt", "Title: X", datetime(2024, 1, 1, tzinfo=timezone.utc)),
    JobFeatures(ID_A, "Chef", frozenset({"baking", "haccp"}), "3+ years", "Diploma", Department.CHEF,
                ("night shifts",), "hr@example.com"),
    JobFeatures(ID_A, "Chef", frozenset(), "", "", Department.CHEF),
    ResumeFeatures(ID_B, "Ada Lovelace", frozenset({"math"}), Department.ENGINEERING, "ada@ex.com", "+1",
                   (Experience("Analyst", "engines", 2.5), Experience("Clerk")),
                   ()),
    SimilarityScore(ID_A, ID_B, 42.5, ScorerKind.BASELINE, datetime(2024, 1, 1, tzinfo=timezone.utc)),
    Ranking(ID_A, ((ID_B, 90.0), (ID_A, 10.0))),
    SelectedCandidates(ID_A, (ID_B,), 3),
    NotificationMessage(ID_A, ID_B, "ada@ex.com", "Application update: Chef", "Dear Ada"),
    AuditLogEntry("parse", Outcome.OK, (ID_A,), "ok", datetime(2024, 1, 1, 0, 0, 0, 5, tzinfo=timezone.utc)),
]


@pytest.mark.parametrize("obj", records, ids=lambda o: type(o).__name__)
def test_json_round_trip(obj):
    import json

    d = obj.to_dict()
    assert type(obj).from_dict(json.loads(json.dumps(d))) == obj


def test_json_field_names_are_snake_case():
    d = records[3].to_dict()
    assert set(d) == {"resume_id", "candidate_name", "email", "phone", "skills", "experience", "education",
                      "predicted_department"}
    assert d["skills"] == ["math"]
    assert records[4].to_dict()["computed_at"] == "2024-01-01T00:00:00Z"
