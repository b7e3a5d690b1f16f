"""Leftover-hash security bounds and parameter calculators.

All distances are evaluated from base-2 exponents and combined with
log-sum-exp, so entropies of 10^6 bits or output lengths of thousands of
bits never overflow binary floating point. Every distance is clamped to 1.
"""

import math
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from app.errors import BoundError
from app.logging_config import get_logger
from app.models.bounds import BoundQuery, BoundReport

logger = get_logger("lhl_bounds")

Rational = Union[Fraction, float, int]

# Search interval for log2(eps) in the general bound.
LOG_EPS_RANGE = (-64.0, 0.0)
LOG_EPS_TOL = 1e-9
_COARSE_GRID = 257


def _log2(x: Rational) -> float:
    if isinstance(x, Fraction):
        return math.log2(x.numerator) - math.log2(x.denominator)
    return math.log2(x)


def _half_sqrt_exp2(log2_radicand: float) -> float:
    """0.5 * sqrt(2^log2_radicand), saturating at 1."""
    exponent = 0.5 * log2_radicand - 1.0
    if exponent >= 0.0:
        return 1.0
    return float(np.exp2(exponent))


def _log2_collision_excess(ell: int, delta: Rational) -> tuple[int, float]:
    """Sign and log2 magnitude of 2^l * delta - 1."""
    e = ell + _log2(delta)
    if e == 0.0:
        return 0, -math.inf
    if e > 60.0:
        return 1, e + math.log1p(-(2.0 ** -e)) / math.log(2)
    value = math.expm1(e * math.log(2))
    return (1 if value > 0 else -1), math.log2(abs(value))


def _log2_smoothing_term(ell: int, hmin: float, eps_bar: float) -> float:
    """log2 of 2^{l - H + log(2/eps_bar^2 + 1)}."""
    return ell - hmin + float(np.logaddexp2(1.0 - 2.0 * math.log2(eps_bar), 0.0))


def _log2_radicand(sign: int, log2_a: float, log2_b: float) -> float:
    """log2 of max(0, sign * 2^log2_a + 2^log2_b)."""
    if sign >= 0:
        return float(np.logaddexp2(log2_a, log2_b)) if sign > 0 else log2_b
    if log2_a >= log2_b:
        return -math.inf
    return log2_b + math.log1p(-(2.0 ** (log2_a - log2_b))) / math.log(2)


def classical_delta(ell: float, hmin: float) -> float:
    """Distance from uniform guaranteed by two-universal hashing: 0.5 * sqrt(2^{l-H})."""
    return _half_sqrt_exp2(ell - hmin)


def extractable_bits(hmin: float, delta: float) -> int:
    """Key length l = floor(H - 2 log(1/(2 Delta))), floored at 0."""
    if delta <= 0:
        raise BoundError("distance from uniform must be positive")
    if delta > 0.5:
        raise BoundError("distance from uniform must not exceed 1/2")
    ell = math.floor(hmin - 2.0 * math.log2(1.0 / (2.0 * delta)))
    return max(ell, 0)


def _general_objective(log_eps: float, ell: int, sign: int, log2_a: float, hmin: float) -> float:
    eps = 2.0 ** log_eps
    log2_b = _log2_smoothing_term(ell, hmin, eps)
    log2_rad = _log2_radicand(sign, log2_a, log2_b)
    # Unclamped value so the minimizer sees a strictly shaped objective.
    return eps + 2.0 ** min(0.5 * log2_rad - 1.0, 1000.0)


def general_delta(ell: int, delta: Rational, hmin: float) -> tuple[float, float]:
    """Distance bound for delta-almost two-universal hashing, minimized over eps.

    Returns (Delta, eps*). When delta <= 2^-l the two-universal bound applies
    directly and eps* = 0.
    """
    if delta <= 0:
        raise BoundError("collision bound must be positive")
    if Fraction(delta) <= Fraction(1, 2**ell):
        return classical_delta(ell, hmin), 0.0

    sign, log2_a = _log2_collision_excess(ell, delta)
    args = (ell, sign, log2_a, hmin)

    # Bracket the minimum on a coarse grid, then refine with bounded Brent.
    grid = np.linspace(*LOG_EPS_RANGE, _COARSE_GRID)
    values = [_general_objective(t, *args) for t in grid]
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    result = minimize_scalar(_general_objective, bounds=(lo, hi), args=args, method="bounded", options={"xatol": LOG_EPS_TOL})

    best_t, best = float(grid[i]), values[i]
    if result.success and result.fun < best:
        best_t, best = float(result.x), float(result.fun)
    return min(best, 1.0), 2.0 ** best_t


def general_delta_classical(ell: int, delta: Rational, hmin: float) -> float:
    """Classical delta-almost bound 0.5 * sqrt((2^l delta - 1) + 2^{l-H})."""
    sign, log2_a = _log2_collision_excess(ell, delta)
    return _half_sqrt_exp2(_log2_radicand(sign, log2_a, ell - hmin))


def thm_two_universal_delta(ell: int, hmin_eps: float, eps: float) -> float:
    """eps + 0.5 * sqrt(2^{l - H_eps}) for a two-universal family."""
    if eps < 0:
        raise BoundError("smoothing parameter must be non-negative")
    return min(1.0, eps + classical_delta(ell, hmin_eps))


def thm_almost_delta(ell: int, delta: Rational, hmin_eps: float, eps: float, eps_bar: float) -> float:
    """eps + eps_bar + 0.5 * sqrt((2^l delta - 1) + 2^{l - H_eps + log(2/eps_bar^2 + 1)}).

    A negative radicand is floored at zero.
    """
    if eps_bar <= 0:
        raise BoundError("auxiliary smoothing parameter must be positive")
    if eps < 0:
        raise BoundError("smoothing parameter must be non-negative")
    sign, log2_a = _log2_collision_excess(ell, delta)
    log2_b = _log2_smoothing_term(ell, hmin_eps, eps_bar)
    return min(1.0, eps + eps_bar + _half_sqrt_exp2(_log2_radicand(sign, log2_a, log2_b)))


def short_seed_k(n: int, ell: int, eps: float) -> int:
    """Intermediate field degree k = floor(l + log(n/l) + log(1/eps^2))."""
    if ell < 1:
        raise BoundError("output length must be at least 1")
    if ell >= n:
        raise BoundError("output must be shorter than the input")
    if not 0 < eps <= 1:
        raise BoundError("eps must lie in (0, 1]")
    return math.floor(ell + (math.log2(n) - math.log2(ell)) - 2.0 * math.log2(eps))


def short_seed_bound(ell: int, hmin_eps: float, eps: float) -> float:
    """2 eps + 0.5 * sqrt(2^{l - H_eps + log(2/eps^2 + 1)} + 4 eps^2).

    The short-seed family has 2^l delta - 1 <= 4 eps^2; this is the bound
    before the square root is split.
    """
    log2_b = _log2_smoothing_term(ell, hmin_eps, eps)
    log2_rad = float(np.logaddexp2(log2_b, 2.0 + 2.0 * math.log2(eps)))
    return min(1.0, 2.0 * eps + _half_sqrt_exp2(log2_rad))


def short_seed_params(n: int, ell: int, eps: float, hmin: Optional[float] = None) -> BoundReport:
    """Parameters of the concatenated family with a seed proportional to l.

    k = floor(l + log(n/l) + log(1/eps^2)), s = 2k, delta1 = (r-1)/2^k,
    delta2 = 2^-l. With ``hmin`` the distance bound
    3 eps + 0.5 * sqrt(2^{l - H + log(2/eps^2 + 1)}) is reported as well.
    """
    k = short_seed_k(n, ell, eps)
    r = -(-n // k)
    s = 2 * k
    s_statement = 2 * math.floor(ell + math.log2(n) - math.log2(ell) - 2.0 * math.log2(eps) - 1)

    log = logger.bind(n=n, ell=ell, eps=eps)
    if s != s_statement:
        log.warning("seed_length_discrepancy", s=s, s_statement=s_statement)

    report = BoundReport(
        k=k,
        s=s,
        r=r,
        ell=ell,
        delta1=float(Fraction(r - 1, 2**k)),
        delta2=2.0 ** -ell,
        s_statement=s_statement,
        s_discrepancy=s - s_statement,
        family=f"concatenated:{n}:{ell}:{k}",
    )
    if hmin is not None:
        tail = _half_sqrt_exp2(_log2_smoothing_term(ell, hmin, eps))
        report.delta = min(1.0, 3.0 * eps + tail)
        report.delta_tight = short_seed_bound(ell, hmin, eps)
        report.distinguish_success = distinguishing_advantage(report.delta)
    return report


def distinguishing_advantage(delta: float) -> float:
    """Best success probability of telling the key from uniform: 1/2 + Delta/2."""
    return 0.5 + 0.5 * min(max(delta, 0.0), 1.0)


def evaluate(query: BoundQuery) -> BoundReport:
    """Distance bound for a validated query.

    Two-universal families use eps + 0.5 sqrt(2^{l-H}); otherwise the
    delta-almost bound with ``eps_bar`` when given, else the general bound
    minimized over the auxiliary parameter.
    """
    if query.two_universal:
        delta = thm_two_universal_delta(query.ell, query.hmin, query.eps)
        return BoundReport(delta=delta, eps_star=0.0, ell=query.ell, distinguish_success=distinguishing_advantage(delta))

    if query.eps_bar is not None:
        delta = thm_almost_delta(query.ell, query.delta, query.hmin, query.eps, query.eps_bar)
        return BoundReport(delta=delta, eps_star=query.eps_bar, ell=query.ell, distinguish_success=distinguishing_advantage(delta))

    delta, eps_star = general_delta(query.ell, query.delta, query.hmin)
    delta = min(1.0, delta + query.eps)
    return BoundReport(delta=delta, eps_star=eps_star, ell=query.ell, distinguish_success=distinguishing_advantage(delta))
