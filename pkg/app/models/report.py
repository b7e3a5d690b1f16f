"""Verification instances, per-check records and suite reports."""

import enum
import hashlib
import json
import math
from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, model_validator

from app.errors import PreconditionError
from app.models.family import HashFamilyDescriptor

GeneratorKind = Literal["random-rank", "classical", "pure-side-info", "adversarial-peaked"]

MAX_INPUT_BITS = 4
MAX_SIDE_DIM = 4
MAX_FUNCTIONS = 2**16


class SuiteStatus(str, enum.Enum):
    """Outcome of a verification suite."""
    PASSED = "passed"
    FAILED = "failed"


class InstanceSpec(BaseModel):
    """One end-to-end leftover-hash instance: a random CQ state and a family."""

    n: int
    ell: int
    d_e: int
    family: str
    generator: GeneratorKind = "random-rank"
    rng_seed: int = 0

    @model_validator(mode="after")
    def _check_budget(self) -> "InstanceSpec":
        if not 1 <= self.n <= MAX_INPUT_BITS:
            raise PreconditionError(f"instances need 2^n <= {2**MAX_INPUT_BITS}")
        if not 1 <= self.d_e <= MAX_SIDE_DIM:
            raise PreconditionError(f"instances need d_E <= {MAX_SIDE_DIM}")
        desc = self.descriptor
        if desc.n != self.n or desc.ell != self.ell:
            raise PreconditionError("family does not match n and l")
        if desc.size > MAX_FUNCTIONS:
            raise PreconditionError(f"instances need |F| <= {MAX_FUNCTIONS}")
        return self

    @property
    def descriptor(self) -> HashFamilyDescriptor:
        return HashFamilyDescriptor.parse(self.family)


class InstanceRecord(BaseModel):
    """One inequality check lhs <= rhs + tolerance."""

    index: int
    check: str
    parameters: dict[str, Any] = Field(default_factory=dict)
    lhs: float
    rhs: float
    tolerance: float
    margin: Optional[float] = None
    passed: Optional[bool] = None
    informational: bool = False
    error: Optional[str] = None
    state: Optional[dict] = None

    @model_validator(mode="after")
    def _derive_outcome(self) -> "InstanceRecord":
        if self.margin is None:
            self.margin = self.rhs - self.lhs
        if self.passed is None:
            self.passed = self.error is None and (
                self.informational or (math.isfinite(self.lhs) and self.lhs <= self.rhs + self.tolerance)
            )
        return self


class VerifyReport(BaseModel):
    """Result of a suite run, reproducible from (suite, trials, seed)."""

    suite: str
    seed: int
    trials: int
    instance_count: int = 0
    records: list[InstanceRecord] = Field(default_factory=list)
    worst_margin: Optional[float] = None
    passed: bool = True
    status: SuiteStatus = SuiteStatus.PASSED
    failures: list[InstanceRecord] = Field(default_factory=list)
    digest: str = ""

    @classmethod
    def assemble(cls, suite: str, seed: int, trials: int, records: list[InstanceRecord]) -> "VerifyReport":
        """Sort records by (index, check) and derive the summary fields."""
        records = sorted(records, key=lambda r: (r.index, r.check))
        scored = [r for r in records if not r.informational and r.error is None]
        failures = [r for r in records if not r.passed]
        worst = min((r.margin for r in scored), default=None)
        passed = not failures
        payload = [r.model_dump(exclude={"state"}) for r in records]
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()
        return cls(
            suite=suite,
            seed=seed,
            trials=trials,
            instance_count=len({r.index for r in records}),
            records=records,
            worst_margin=worst,
            passed=passed,
            status=SuiteStatus.PASSED if passed else SuiteStatus.FAILED,
            failures=failures,
            digest=digest,
        )

    def to_json(self, include_records: bool = False) -> str:
        exclude = None if include_records else {"records"}
        return json.dumps(self.model_dump(mode="json", exclude=exclude), sort_keys=True)
