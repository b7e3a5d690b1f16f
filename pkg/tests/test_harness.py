import math
from fractions import Fraction

import pytest

from app.config import get_settings
from app.errors import PreconditionError, SolverError, UnknownSuiteError
from app.models.family import FamilyKind
from app.models.report import InstanceRecord, InstanceSpec, SuiteStatus, VerifyReport
from app.models.states import CqState
from app.tasks import suites
from app.tasks.harness import _chunks, evaluate_chunk, run_suite, verify_average_form, verify_lhl


def test_run_suite_rejects_unknown_suite_and_zero_trials():
    with pytest.raises(UnknownSuiteError):
        run_suite("no-such-suite", 5, 1)
    with pytest.raises(PreconditionError):
        run_suite("hoelder", 0, 1)


def test_chunks_cover_every_index():
    chunks = _chunks(53, 25)
    assert [len(c) for c in chunks] == [25, 25, 3]
    assert sum(chunks, []) == list(range(53))


@pytest.mark.parametrize("name", ["metric", "hoelder", "mirror", "projection"])
def test_linear_algebra_suites_pass(name):
    report = run_suite(name, 30, 42)
    assert report.passed, [r.model_dump(exclude={"state"}) for r in report.failures]
    assert report.status == SuiteStatus.PASSED
    assert report.instance_count == 30
    assert report.worst_margin is not None


def test_suite_runs_are_reproducible():
    first = run_suite("metric", 12, 7)
    second = run_suite("metric", 12, 7)
    other = run_suite("metric", 12, 8)
    assert first.digest == second.digest
    assert first.digest != other.digest
    assert [r.lhs for r in first.records] == [r.lhs for r in second.records]


def test_chunk_size_does_not_change_report(monkeypatch):
    reference = run_suite("projection", 10, 3)
    monkeypatch.setenv("VERIFY_CHUNK_SIZE", "3")
    get_settings.cache_clear()
    assert run_suite("projection", 10, 3).digest == reference.digest


def test_universality_suite_audits_every_family():
    report = run_suite("universality", len(suites.AUDITED_FAMILIES), 0)
    assert report.passed
    checks = {r.check for r in report.records}
    assert checks == {"collision-bound", "two-universal-exact"}


def test_evaluate_chunk_task_returns_plain_records():
    payload = evaluate_chunk.apply(args=("projection", 5, [0, 1], 1e-7)).get()
    assert len(payload) == 2
    records = [InstanceRecord(**data) for data in payload]
    assert [r.index for r in records] == [0, 1]


def test_library_errors_become_failed_records(monkeypatch):
    def broken(index, rng, slack):
        raise SolverError(0.4, 0.5)

    monkeypatch.setitem(suites.SUITES, "metric", broken)
    report = run_suite("metric", 3, 0)
    assert not report.passed
    assert report.status == SuiteStatus.FAILED
    assert len(report.failures) == 3
    assert all(r.error.startswith("SolverError") for r in report.failures)
    assert report.worst_margin is None


def test_record_outcome_rules():
    assert InstanceRecord(index=0, check="c", lhs=1.0, rhs=1.0, tolerance=0.0).passed
    failed = InstanceRecord(index=0, check="c", lhs=1.0 + 1e-6, rhs=1.0, tolerance=1e-7)
    assert not failed.passed
    assert failed.margin == pytest.approx(-1e-6)
    assert not InstanceRecord(index=0, check="c", lhs=math.inf, rhs=1.0, tolerance=1.0).passed
    assert InstanceRecord(index=0, check="c", lhs=5.0, rhs=1.0, tolerance=0.0, informational=True).passed


def test_report_sorts_records_and_tracks_worst_margin():
    records = [
        InstanceRecord(index=1, check="b", lhs=0.5, rhs=1.0, tolerance=0.0),
        InstanceRecord(index=0, check="z", lhs=0.9, rhs=1.0, tolerance=0.0),
        InstanceRecord(index=0, check="a", lhs=0.0, rhs=1.0, tolerance=0.0),
    ]
    report = VerifyReport.assemble("metric", 1, 2, records)
    assert [(r.index, r.check) for r in report.records] == [(0, "a"), (0, "z"), (1, "b")]
    assert report.worst_margin == pytest.approx(0.1)
    assert report.instance_count == 2
    assert "records" not in report.to_json()
    assert "records" in report.to_json(include_records=True)


def test_instance_spec_budget():
    with pytest.raises(PreconditionError):
        InstanceSpec(n=5, ell=1, d_e=1, family="multiply:5:1")
    with pytest.raises(PreconditionError):
        InstanceSpec(n=3, ell=1, d_e=5, family="multiply:3:1")
    with pytest.raises(PreconditionError):
        InstanceSpec(n=3, ell=1, d_e=1, family="multiply:4:1")


def test_verify_lhl_classical_instance():
    spec = InstanceSpec(n=3, ell=1, d_e=2, family="multiply:3:1", generator="classical", rng_seed=17)
    report = verify_lhl(spec)
    assert report.passed
    assert [r.check for r in report.records] == ["two-universal"]


def test_verify_lhl_almost_universal_instance():
    spec = InstanceSpec(n=4, ell=1, d_e=1, family="polynomial:4:1:1:4", generator="classical", rng_seed=2)
    report = verify_lhl(spec)
    assert report.passed
    assert {r.check for r in report.records} == {"almost-0.05", "almost-0.1", "almost-0.3", "almost-optimized"}


def test_verify_average_form_classical_instance():
    spec = InstanceSpec(n=3, ell=1, d_e=2, family="multiply:3:1", generator="classical", rng_seed=5)
    report = verify_average_form(spec)
    assert report.passed
    average = next(r for r in report.records if r.check == "average")
    assert average.lhs == pytest.approx(average.rhs, abs=1e-12)
    search = next(r for r in report.records if r.check == "average-search")
    assert search.informational


def test_instance_matrix_is_deterministic():
    assert suites.instance_for(5, 7) == suites.instance_for(5, 7)
    assert suites.instance_for(0, 7).family == "multiply:3:1"
    assert suites.instance_for(2, 7).family == "concatenated:3:1:2"


def test_concatenated_instances_use_almost_universal_bounds():
    concatenated = [
        suites.instance_for(i, 0)
        for i, entry in enumerate(suites.LHL_MATRIX)
        if entry[3] == FamilyKind.CONCATENATED
    ]
    assert concatenated
    for spec in concatenated:
        desc = spec.descriptor
        assert desc.blocks >= 2
        assert desc.delta > Fraction(1, 2**spec.ell)


def test_verify_lhl_concatenated_instance():
    spec = InstanceSpec(n=4, ell=2, d_e=2, family="concatenated:4:2:3", generator="classical", rng_seed=11)
    report = verify_lhl(spec)
    assert report.passed
    assert "almost-optimized" in {r.check for r in report.records}


def test_failing_records_carry_their_state(monkeypatch):
    monkeypatch.setattr(suites, "dist_uniform", lambda state, **kwargs: 10.0)
    records = suites.collision_suite(0, suites.rng_for(3, 0), 3e-7)
    failed = next(r for r in records if r.check == "distance-from-collision")
    assert not failed.passed
    replayed = CqState.from_dict(failed.state)
    assert replayed.size == failed.parameters["labels"]
    assert replayed.d_e == failed.parameters["d_e"]
    assert all(r.state is None for r in records if r.passed)


@pytest.mark.slow
@pytest.mark.parametrize("name,trials", [
    ("collision", 1000),
    ("hoelder", 1000),
    ("mirror", 1000),
    ("projection", 1000),
    ("entropy-duality", 200),
    ("smoothing", 200),
    ("guessing-monotonicity", 200),
    ("guessing-solvers", 200),
])
def test_randomized_suites_pass(name, trials):
    report = run_suite(name, trials, 42)
    assert report.passed, [r.model_dump(exclude={"state"}) for r in report.failures]
    assert report.instance_count == trials


@pytest.mark.slow
def test_lhl_suite_full_matrix():
    report = run_suite("lhl", 200, 7)
    assert report.passed, [r.model_dump(exclude={"state"}) for r in report.failures]
    assert report.instance_count == 200


@pytest.mark.slow
def test_average_suite():
    report = run_suite("average", 200, 7)
    assert report.passed, [r.model_dump(exclude={"state"}) for r in report.failures]
