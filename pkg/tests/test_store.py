import json
import os
import threading
from datetime import datetime, timezone

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from conftest import make_doc

from mlar.domain import AuditLogEntry, Department, DocumentId, Outcome, ResumeFeatures
from mlar.extraction import parse_resume
from mlar.llm import ExtractorConfig
from mlar.store import AUDIT, JOBS, FileStore, resume_collection
from mlar.synth import generate_corpus


@pytest.fixture
def store(tmp_path):
    return FileStore(tmp_path / "store").init()


def resume(n, dept):
    return ResumeFeatures(DocumentId.of_bytes(f"{n}".encode()), f"Cand {n}", frozenset({"x"}), dept)


def test_layout(store):
    for d in Department:
        assert (store.root / "resumes" / d.value).is_dir()
    for sub in ("jobs", "matches", "inbox_state"):
        assert (store.root / sub).is_dir()
    assert (store.root / "audit.jsonl").exists() and (store.root / "ledger.jsonl").exists()


def test_put_get_round_trip(store):
    store.put(JOBS, "a" * 64, {"title": "X", "n": [1, 2]})
    assert store.get(JOBS, "a" * 64) == {"title": "X", "n": [1, 2]}
    assert store.get(JOBS, "b" * 64) is None


def test_put_identical_is_noop(store):
    p1 = store.put(JOBS, "id", {"a": 1})
    mtime = p1.stat().st_mtime_ns
    store.put(JOBS, "id", {"a": 1})
    assert store.versions(JOBS, "id") == []
    assert p1.stat().st_mtime_ns == mtime
    assert sorted(os.listdir(p1.parent)) == ["id.json"]


def test_put_different_versions(store):
    store.put(JOBS, "id", {"a": 1})
    store.put(JOBS, "id", {"a": 2})
    versions = store.versions(JOBS, "id")
    assert [v.name for v in versions] == ["id.json.v1"]
    assert json.loads(versions[0].read_text()) == {"a": 1}
    assert store.get(JOBS, "id") == {"a": 2}
    store.put(JOBS, "id", {"a": 3})
    assert [v.name for v in store.versions(JOBS, "id")] == ["id.json.v1", "id.json.v2"]
    assert store.ids(JOBS) == ["id"]


def test_query_by_department(store):
    for n in range(3):
        r = resume(n, Department.ENGINEERING)
        store.put(resume_collection(r.predicted_department), r.resume_id, r.to_dict())
    for n in range(3, 5):
        r = resume(n, Department.SALES)
        store.put(resume_collection(r.predicted_department), r.resume_id, r.to_dict())
    eng = store.query_resumes_by_department(Department.ENGINEERING)
    assert len(eng) == 3 and [r.resume_id for r in eng] == sorted(r.resume_id for r in eng)
    assert store.query_resumes_by_department(Department.CHEF) == []


def test_department_counts_match_generator(store):
    corpus = generate_corpus(seed=8, jobs_per_department=0, resumes_per_department=10)
    for doc in corpus.resumes:
        r = parse_resume(make_doc(doc.text), ExtractorConfig())
        store.put(resume_collection(r.predicted_department), r.resume_id, r.to_dict())
    expected = {}
    for doc in corpus.resumes:
        expected[doc.department] = expected.get(doc.department, 0) + 1
    union = []
    for d in Department:
        part = store.query_resumes_by_department(d)
        assert len(part) == expected.get(d, 0)
        assert all(r.predicted_department is d for r in part)
        union.extend(r.resume_id for r in part)
    assert len(union) == len(set(union)) == 240
    assert sorted(union) == [r.resume_id for r in store.all_resumes()]


JSON_VALUES = st.recursive(
    st.none() | st.booleans() | st.integers(-10**9, 10**9) | st.floats(allow_nan=False, allow_infinity=False)
    | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4) | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=12,
)


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.dictionaries(st.text(max_size=8), JSON_VALUES, max_size=6), st.integers(0, 50))
def test_get_put_round_trip_property(store, record, n):
    doc_id = DocumentId.of_bytes(str(n).encode())
    store.put("props", doc_id, record)
    assert store.get("props", doc_id) == record


def test_audit_append_order_and_restart(store):
    ts = datetime(2024, 1, 1, tzinfo=timezone.utc)
    for op in ("ingest", "parse", "score"):
        store.append_audit(AuditLogEntry(op, Outcome.OK, timestamp=ts))
    entries = store.audit_entries()
    assert [e.operation for e in entries] == ["ingest", "parse", "score"]
    assert all(a.timestamp < b.timestamp for a, b in zip(entries, entries[1:]))
    again = FileStore(store.root)
    again.append_audit(AuditLogEntry("notify", Outcome.OK, timestamp=ts))
    entries = again.audit_entries()
    assert len(entries) == 4 and entries[-1].timestamp > entries[-2].timestamp


def test_concurrent_audit_appends(store):
    def worker(w):
        for i in range(50):
            store.append_audit(AuditLogEntry(f"op{w}", Outcome.OK, (str(i),)))

    threads = [threading.Thread(target=worker, args=(w,)) for w in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    entries = store.audit_entries()
    assert len(entries) == 400
    assert all(a.timestamp < b.timestamp for a, b in zip(entries, entries[1:]))


def test_torn_tail_is_dropped(store):
    store.append(AUDIT, {"a": 1})
    with open(store.jsonl_path(AUDIT), "ab") as fh:
        fh.write(b'{"half":')
    assert store.read(AUDIT) == [{"a": 1}]
    store.append(AUDIT, {"b": 2})
    assert store.read(AUDIT) == [{"a": 1}, {"b": 2}]


class Crash(BaseException):
    pass


def test_interrupted_writes_leave_collections_readable(store, monkeypatch):
    store.put(JOBS, "x", {"v": 0})
    real_replace = os.replace
    for crash_at in range(4):
        calls = {"n": 0}

        def flaky_replace(src, dst):
            if calls["n"] == crash_at:
                raise Crash()
            calls["n"] += 1
            return real_replace(src, dst)

        monkeypatch.setattr(os, "replace", flaky_replace)
        with pytest.raises(Crash):
            for v in range(1, 6):
                store.put(JOBS, "x", {"v": v + 10 * crash_at})
        monkeypatch.setattr(os, "replace", real_replace)
        assert isinstance(store.get(JOBS, "x"), dict)
        assert not [p for p in (store.root / JOBS).iterdir() if p.name.startswith(".tmp-")]
        for v in store.versions(JOBS, "x"):
            json.loads(v.read_text())
