"""Celery tasks and entry points of the verification harness.

A suite run is split into chunks of instance indices. Each chunk is one
``harness.evaluate_chunk`` task; the chunks run as a Celery group (eagerly
in-process unless a broker is configured) and their records are merged into
a report sorted by (index, check).
"""

from typing import Optional

from celery import group

from celery_app import celery_app
from app.config import get_settings
from app.errors import PreconditionError, UnknownSuiteError
from app.logging_config import get_logger
from app.models.report import InstanceRecord, InstanceSpec, VerifyReport
from app.tasks.suites import SUITES, average_checks, lhl_checks, run_instance

logger = get_logger("harness")


@celery_app.task(bind=True, name="harness.evaluate_chunk")
def evaluate_chunk(self, suite: str, seed: int, indices: list[int], slack: float) -> list[dict]:
    """Evaluate a chunk of instances and return their records as JSON-ready dicts."""
    log = logger.bind(suite=suite, seed=seed, task_id=self.request.id, first=indices[0], count=len(indices))
    log.debug("chunk_started")
    try:
        records = []
        for index in indices:
            records.extend(run_instance(suite, seed, index, slack))
        log.debug("chunk_completed", records=len(records))
        return [r.model_dump() for r in records]
    except Exception as e:
        log.exception("chunk_error", error=str(e))
        raise


def _chunks(trials: int, size: int) -> list[list[int]]:
    size = max(1, size)
    return [list(range(start, min(start + size, trials))) for start in range(0, trials, size)]


def run_suite(name: str, trials: int, seed: int, slack: Optional[float] = None) -> VerifyReport:
    """Run a named randomized property suite; deterministic given ``seed``."""
    if name not in SUITES:
        raise UnknownSuiteError(name)
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    settings = get_settings()
    slack = settings.slack if slack is None else slack
    log = logger.bind(suite=name, trials=trials, seed=seed)
    log.info("suite_started")

    job = group(evaluate_chunk.s(name, seed, chunk, slack) for chunk in _chunks(trials, settings.verify_chunk_size))
    result = job.apply() if settings.celery_task_always_eager else job.apply_async()
    payloads = result.get()

    records = [InstanceRecord(**data) for chunk in payloads for data in chunk]
    report = VerifyReport.assemble(name, seed, trials, records)
    if report.passed:
        log.info("suite_passed", worst_margin=report.worst_margin, digest=report.digest)
    else:
        log.warning("suite_failed", failures=len(report.failures), worst_margin=report.worst_margin)
    return report


def verify_lhl(spec: InstanceSpec, slack: Optional[float] = None) -> VerifyReport:
    """Leftover-hash bound on a single instance (every auxiliary-smoothing value for delta-almost families)."""
    slack = get_settings().slack if slack is None else slack
    return VerifyReport.assemble("lhl", spec.rng_seed, 1, lhl_checks(spec, 0, slack))


def verify_average_form(spec: InstanceSpec, slack: Optional[float] = None) -> VerifyReport:
    """Per-function distance averaged over the family against the joint distance."""
    slack = get_settings().slack if slack is None else slack
    return VerifyReport.assemble("average", spec.rng_seed, 1, average_checks(spec, 0, slack))
