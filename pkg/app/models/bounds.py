"""Inputs and outputs of the bound calculators."""

import json
from fractions import Fraction
from typing import Optional, Union

from pydantic import BaseModel, model_validator

from app.errors import BoundError


class BoundQuery(BaseModel):
    """Scalar parameters of a leftover-hash bound.

    ``hmin`` is a (smooth) min-entropy in bits supplied by the caller.
    """

    ell: int
    hmin: float
    delta: Optional[Union[Fraction, float]] = None
    eps: float = 0.0
    eps_bar: Optional[float] = None
    n: Optional[int] = None

    class Config:
        arbitrary_types_allowed = True

    @model_validator(mode="after")
    def _check_ranges(self) -> "BoundQuery":
        if self.ell < 1:
            raise BoundError("output length must be at least 1")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise BoundError("collision bound must lie in (0, 1]")
        if self.eps < 0:
            raise BoundError("smoothing parameter must be non-negative")
        if self.eps_bar is not None and self.eps_bar <= 0:
            raise BoundError("auxiliary smoothing parameter must be positive")
        return self

    @property
    def two_universal(self) -> bool:
        return self.delta is None or Fraction(self.delta) <= Fraction(1, 2**self.ell)


class BoundReport(BaseModel):
    """Result of a bound or parameter calculation.

    ``delta`` is the distance from uniform (clamped to 1); ``eps_star`` the
    optimal inner smoothing parameter of the general bound; ``k``, ``s``,
    ``delta1`` and ``delta2`` the short-seed breakdown.
    """

    delta: Optional[float] = None
    eps_star: Optional[float] = None
    k: Optional[int] = None
    s: Optional[int] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None

    ell: Optional[int] = None
    r: Optional[int] = None
    delta_tight: Optional[float] = None
    s_statement: Optional[int] = None
    s_discrepancy: Optional[int] = None
    distinguish_success: Optional[float] = None
    family: Optional[str] = None

    def to_dict(self) -> dict:
        data = self.model_dump()
        # The six core keys are always present; extras only when set.
        core = {"delta", "eps_star", "k", "s", "delta1", "delta2"}
        return {key: value for key, value in data.items() if key in core or value is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
