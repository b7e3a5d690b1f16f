"""Randomized property suites of the verification harness.

A suite maps (instance index, generator, slack) to a list of InstanceRecord
checks of the form lhs <= rhs + tolerance. Instances are independent and
fully determined by (seed, index).
"""

import math
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from app.errors import ExtractorError
from app.logging_config import get_logger
from app.models.family import FamilyKind, HashFamilyDescriptor
from app.models.report import InstanceRecord, InstanceSpec
from app.models.states import CqState, PureStateVector
from app.services import lhl_bounds
from app.services.hash_families import audit_collision_prob
from app.services.qinfo import (
    apply_hash,
    apply_isometry,
    collision_gamma,
    dist_uniform,
    dmax,
    hmax_alt,
    hmin_alt,
    hmin_cq,
    marginal_collision,
    purified_distance,
    purify,
    relabel,
    smooth_for_collision,
    trace_distance,
)
from app.services.qmat import inv_sqrt, reduce_to, schatten_power, sqrtm, support_projector, tensor, trace_norm
from app.tasks.generators import (
    GENERATOR_KINDS,
    random_cq,
    random_density,
    random_isometry,
    random_matrix,
    random_orthogonal,
    random_projector,
    rng_for,
)

logger = get_logger("suites")

Suite = Callable[[int, np.random.Generator, float], list[InstanceRecord]]

MIRROR_TOL = 1e-9
DUALITY_TOL = 1e-8
SOLVER_AGREEMENT = {"commuting": 1e-8, "helstrom": 1e-6}
SMOOTHING_RELATIVE_TOL = 1e-6
EPS_BAR_GRID = (0.05, 0.1, 0.3)


def _record(index: int, check: str, lhs: float, rhs: float, tolerance: float, **parameters) -> InstanceRecord:
    return InstanceRecord(
        index=index,
        check=check,
        parameters=parameters,
        lhs=float(lhs),
        rhs=float(rhs),
        tolerance=float(tolerance),
    )


def _with_state(records: list[InstanceRecord], state: CqState) -> list[InstanceRecord]:
    """Attach the serialized state to failing records so they can be replayed."""
    for record in records:
        if not record.passed:
            record.state = state.to_dict()
    return records


def _subnormalized(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=int(rng.integers(1, d + 1)), trace=float(rng.uniform(0.5, 1.0)))


def _log_gap(cert) -> float:
    """Width of the certified min-entropy interval."""
    return cert.h_upper - cert.h


# ---------------------------------------------------------------------------
# Distances and matrix inequalities
# ---------------------------------------------------------------------------


def metric_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d = int(rng.integers(2, 5))
    rho, tau, omega = (_subnormalized(d, rng) for _ in range(3))
    proj = random_projector(d, rng)

    p_rt = purified_distance(rho, tau)
    records = [
        _record(index, "triangle", p_rt, purified_distance(rho, omega) + purified_distance(omega, tau), slack, d=d),
        _record(index, "dominates-trace-distance", trace_distance(rho, tau), p_rt, slack, d=d),
        _record(index, "projection-monotone", purified_distance(proj @ rho @ proj, proj @ tau @ proj), p_rt, slack, d=d),
    ]
    return records


def hoelder_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d = int(rng.integers(2, 5))
    a, b, c = (random_matrix(d, rng) for _ in range(3))
    lhs = trace_norm(a @ b @ c)
    records = []
    for p, q, r in ((4, 2, 4), (3, 3, 3)):
        rhs = schatten_power(a, p) * schatten_power(b, q) * schatten_power(c, r)
        records.append(_record(index, f"hoelder-{p}{q}{r}", lhs, rhs, slack * max(1.0, rhs), d=d))
    return records


def mirror_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d = int(rng.integers(2, 5))
    schmidt = rng.dirichlet(np.ones(d))
    basis = random_orthogonal(d, rng)
    # |phi> = sum_i sqrt(lambda_i) |o_i>|o_i> with a real orthonormal basis o_i
    coefficients = (basis * np.sqrt(schmidt)) @ basis.T
    phi = PureStateVector(coefficients.reshape(-1), (d, d))
    rho_a, rho_b = phi.reduced([0]), phi.reduced([1])
    identity = np.eye(d)

    x = random_matrix(d, rng)
    dual = sqrtm(rho_b) @ x.T @ inv_sqrt(rho_b)
    lhs = tensor(x, identity) @ phi.amplitudes
    rhs = tensor(identity, dual) @ phi.amplitudes
    records = [_record(index, "mirror", np.linalg.norm(lhs - rhs), 0.0, MIRROR_TOL, d=d)]

    for name, f in (("sqrt", sqrtm), ("support", support_projector)):
        lhs = tensor(f(rho_a), identity) @ phi.amplitudes
        rhs = tensor(identity, f(rho_b)) @ phi.amplitudes
        records.append(_record(index, f"mirror-{name}", np.linalg.norm(lhs - rhs), 0.0, MIRROR_TOL, d=d))
    return records


def projection_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d = int(rng.integers(2, 5))
    rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
    proj = random_projector(d, rng)
    t = float(np.trace((np.eye(d) - proj) @ rho).real)
    rhs = math.sqrt(max(0.0, 2.0 * t - t * t))
    return [_record(index, "projection", purified_distance(rho, proj @ rho @ proj), rhs, slack, d=d, weight=t)]


# ---------------------------------------------------------------------------
# Collision entropy
# ---------------------------------------------------------------------------


def _random_state(rng: np.random.Generator, labels: Optional[int] = None, d_e: Optional[int] = None) -> CqState:
    labels = labels or int(rng.integers(2, 5))
    d_e = d_e or int(rng.integers(2, 5))
    kind = GENERATOR_KINDS[int(rng.integers(len(GENERATOR_KINDS)))]
    return random_cq(labels, d_e, kind, rng=rng)


def collision_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    state = _random_state(rng)
    scale = float(rng.uniform(0.5, 1.0))
    state = state.with_blocks(state.blocks * scale)
    d_a, d_e = state.dims
    params = {"labels": d_a, "d_e": d_e}

    sigma = random_density(d_e, rng)
    gamma = collision_gamma(state, sigma)
    bound = dmax(state, np.kron(np.eye(d_a), sigma))
    records = [_record(index, "collision-vs-dmax", math.log2(gamma) - math.log2(state.trace), bound, slack, **params)]

    cert = hmin_cq(state)
    records.append(_record(index, "collision-at-optimal-sigma", collision_gamma(state, cert.sigma), 2.0**-cert.h, slack, **params))

    tau = random_density(d_e, rng)
    radicand = d_a * collision_gamma(state, tau) - marginal_collision(state.marginal, tau)
    rhs = 0.5 * math.sqrt(max(0.0, radicand))
    records.append(_record(index, "distance-from-collision", dist_uniform(state), rhs, slack, **params))
    _with_state(records, state)

    n = int(rng.integers(2, 4))
    desc = HashFamilyDescriptor.multiply(n, 1) if index % 2 else HashFamilyDescriptor.polynomial(n, 2)
    source = random_cq(2**n, d_e, "random-rank", rng=rng)
    hashed = apply_hash(source, desc)
    tau = random_density(d_e, rng)
    rhs = collision_gamma(source, tau) + float(desc.delta) * marginal_collision(source.marginal, tau)
    hashed_record = _record(index, "hashed-collision", collision_gamma(hashed, tau), rhs, slack, family=desc.format(), d_e=d_e)
    records.extend(_with_state([hashed_record], source))
    return records


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


def entropy_duality_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d_a, d_b = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    rank = int(rng.integers(1, d_a * d_b))
    rho = random_density(d_a * d_b, rng, rank=rank)
    dims = (d_a, d_b)
    params = {"d_a": d_a, "d_b": d_b, "rank": rank}

    phi = purify(rho, dims)
    rho_ac = reduce_to(phi.density(), phi.dims, [0, 2])
    h_max = hmax_alt(rho, dims)
    dual = -hmin_alt(rho_ac, (d_a, phi.dims[2]))
    records = [_record(index, "max-min-duality", abs(h_max - dual), 0.0, DUALITY_TOL, **params)]

    v = random_isometry(d_b, d_b + 1, rng)
    embedded = apply_isometry(rho, v, "B", dims)
    new_dims = (d_a, d_b + 1)
    records.append(_record(index, "isometry-hmin", abs(hmin_alt(rho, dims) - hmin_alt(embedded, new_dims)), 0.0, DUALITY_TOL, **params))
    records.append(_record(index, "isometry-hmax", abs(h_max - hmax_alt(embedded, new_dims)), 0.0, DUALITY_TOL, **params))

    state = _random_state(rng)
    state = state.with_blocks(state.blocks * float(rng.uniform(0.5, 1.0)))
    cert = hmin_cq(state)
    rhs = cert.h - math.log2(1.0 / state.trace)
    below = _record(index, "alt-below-min-entropy", hmin_alt(state), rhs, slack + _log_gap(cert), labels=state.size, d_e=state.d_e)
    records.extend(_with_state([below], state))
    return records


def guessing_monotonicity_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    labels = int(rng.integers(3, 7))
    d_e = int(rng.integers(1, 4))
    state = _random_state(rng, labels, d_e)
    outputs = int(rng.integers(2, labels))
    image = rng.integers(0, outputs, size=labels)
    coarse = relabel(state, lambda x: int(image[int(x)]), range(outputs))

    before, after = hmin_cq(state), hmin_cq(coarse)
    records = _with_state([_record(index, "relabel-monotone", after.h, before.h_upper, slack, labels=labels, outputs=outputs, d_e=d_e)], state)

    ell = int(rng.integers(1, 3))
    rho_e = random_density(d_e, rng)
    uniform = CqState(tuple(str(z) for z in range(2**ell)), np.array([rho_e / 2**ell] * 2**ell))
    cert = hmin_cq(uniform)
    records.extend(_with_state([_record(index, "uniform-independent", abs(cert.h - ell), 0.0, slack, ell=ell, d_e=d_e)], uniform))
    return records


def guessing_solvers_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    d_e = int(rng.integers(2, 4))
    labels = int(rng.integers(2, 5))

    classical = random_cq(labels, d_e, "classical", rng=rng)
    exact = hmin_cq(classical, method="commuting")
    iterative = hmin_cq(classical, method="iterative")
    records = [
        _record(index, "commuting-vs-iterative", abs(exact.upper - iterative.upper), 0.0, SOLVER_AGREEMENT["commuting"] + slack, labels=labels, d_e=d_e),
    ]
    joint = np.einsum("xee->xe", classical.blocks).real
    formula = -math.log2(float(joint.max(axis=0).sum()))
    records.append(_record(index, "classical-formula", abs(exact.h - formula), 0.0, 1e-12, labels=labels, d_e=d_e))
    _with_state(records, classical)

    binary = random_cq(2, d_e, "random-rank", rng=rng)
    helstrom = hmin_cq(binary, method="helstrom")
    iterative = hmin_cq(binary, method="iterative")
    agreement = _record(index, "helstrom-vs-iterative", abs(helstrom.upper - iterative.upper), 0.0, SOLVER_AGREEMENT["helstrom"], d_e=d_e)
    records.extend(_with_state([agreement], binary))
    return records


# ---------------------------------------------------------------------------
# Leftover hashing
# ---------------------------------------------------------------------------

LHL_FAMILIES = (FamilyKind.MULTIPLY, FamilyKind.POLYNOMIAL, FamilyKind.CONCATENATED)
LHL_MATRIX = tuple(
    (n, ell, d_e, kind)
    for n in (3, 4)
    for ell in (1, 2)
    for d_e in (1, 2, 3)
    for kind in LHL_FAMILIES
)


def family_for(kind: FamilyKind, n: int, ell: int) -> HashFamilyDescriptor:
    """Small family of the given kind; concatenated families split the input in two blocks."""
    if kind == FamilyKind.MULTIPLY:
        return HashFamilyDescriptor.multiply(n, ell)
    if kind == FamilyKind.POLYNOMIAL:
        return HashFamilyDescriptor.polynomial(n, ell)
    # k = n - 1: two blocks, delta > 2^-l
    return HashFamilyDescriptor.concatenated(n, ell, max(n - 1, ell))


def instance_for(index: int, seed: int) -> InstanceSpec:
    """Configuration-matrix entry for an instance, cycling generator kinds."""
    n, ell, d_e, kind = LHL_MATRIX[index % len(LHL_MATRIX)]
    generator = GENERATOR_KINDS[(index // len(LHL_MATRIX)) % len(GENERATOR_KINDS)]
    return InstanceSpec(
        n=n,
        ell=ell,
        d_e=d_e,
        family=family_for(kind, n, ell).format(),
        generator=generator,
        rng_seed=int(rng_for(seed, index).integers(2**31)),
    )


def lhl_checks(spec: InstanceSpec, index: int, slack: float) -> list[InstanceRecord]:
    """Distance from uniform after hashing against the leftover-hash bounds."""
    desc = spec.descriptor
    state = random_cq(2**spec.n, spec.d_e, spec.generator, seed=spec.rng_seed)
    hashed = apply_hash(state, desc)
    distance = dist_uniform(hashed)
    cert = hmin_cq(state)
    h = cert.h_upper
    params = spec.model_dump()

    delta = desc.delta
    if delta <= Fraction(1, 2**spec.ell):
        records = [_record(index, "two-universal", distance, lhl_bounds.classical_delta(spec.ell, h), slack, **params)]
    else:
        records = [
            _record(index, f"almost-{eps_bar}", distance, lhl_bounds.thm_almost_delta(spec.ell, delta, h, 0.0, eps_bar), slack, **params)
            for eps_bar in EPS_BAR_GRID
        ]
        records.append(_record(index, "almost-optimized", distance, lhl_bounds.general_delta(spec.ell, delta, h)[0], slack, **params))
    return _with_state(records, state)


def average_checks(spec: InstanceSpec, index: int, slack: float) -> list[InstanceRecord]:
    """Averaged per-function distance against the joint distance given F and E."""
    desc = spec.descriptor
    state = random_cq(2**spec.n, spec.d_e, spec.generator, seed=spec.rng_seed)
    hashed = apply_hash(state, desc)
    joint = dist_uniform(hashed)
    per_function = [hashed.for_function(f) for f in range(hashed.num_functions)]
    averaged = hashed.p_f * sum(dist_uniform(s) for s in per_function)
    params = spec.model_dump()
    records = [_record(index, "average", averaged, joint, slack, **params)]

    if desc.size <= 16 and spec.d_e > 1:
        searched = hashed.p_f * sum(dist_uniform(s, mode="search") for s in per_function)
        informational = _record(index, "average-search", searched, joint, slack, **params)
        informational.informational = True
        informational.passed = True
        records.append(informational)
    return _with_state(records, state)


def lhl_suite(index: int, rng: np.random.Generator, slack: float, seed: int = 0) -> list[InstanceRecord]:
    return lhl_checks(instance_for(index, seed), index, slack)


def average_suite(index: int, rng: np.random.Generator, slack: float, seed: int = 0) -> list[InstanceRecord]:
    return average_checks(instance_for(index, seed), index, slack)


def smoothing_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    eps_bar = (0.05, 0.2)[index % 2]
    state = random_cq(3, int(rng.integers(2, 4)), GENERATOR_KINDS[int(rng.integers(len(GENERATOR_KINDS)))], rng=rng)
    smoothed, distance = smooth_for_collision(state, eps_bar)
    cert = hmin_cq(state)
    params = {"eps_bar": eps_bar, "d_e": state.d_e}

    gamma = collision_gamma(smoothed, smoothed.marginal)
    rhs = 2.0 ** (-cert.h_upper + math.log2(2.0 / eps_bar**2 + 1.0))
    return _with_state([
        _record(index, "smoothing-distance", distance, eps_bar, slack, **params),
        _record(index, "smoothed-collision", gamma, rhs, SMOOTHING_RELATIVE_TOL * rhs + slack, **params),
    ], state)


# ---------------------------------------------------------------------------
# Exhaustive family audits
# ---------------------------------------------------------------------------

AUDITED_FAMILIES = (
    *(HashFamilyDescriptor.multiply(n, ell) for n in (4, 8) for ell in range(1, 5)),
    HashFamilyDescriptor.polynomial(8, 4),
    HashFamilyDescriptor.polynomial(9, 4),
    HashFamilyDescriptor.concatenated(6, 2, 3),
)


def universality_suite(index: int, rng: np.random.Generator, slack: float) -> list[InstanceRecord]:
    desc = AUDITED_FAMILIES[index % len(AUDITED_FAMILIES)]
    audited = audit_collision_prob(desc)
    records = [_record(index, "collision-bound", audited, desc.delta, 0.0, family=desc.format(), delta_hat=str(audited))]
    if desc.kind == FamilyKind.MULTIPLY:
        exact = audited == Fraction(1, 2**desc.ell)
        records.append(_record(index, "two-universal-exact", 0.0 if exact else 1.0, 0.0, 0.0, family=desc.format()))
    return records


SUITES: dict[str, Suite] = {
    "metric": metric_suite,
    "hoelder": hoelder_suite,
    "mirror": mirror_suite,
    "projection": projection_suite,
    "collision": collision_suite,
    "entropy-duality": entropy_duality_suite,
    "lhl": lhl_suite,
    "average": average_suite,
    "smoothing": smoothing_suite,
    "guessing-monotonicity": guessing_monotonicity_suite,
    "guessing-solvers": guessing_solvers_suite,
    "universality": universality_suite,
}

SEEDED_SUITES = {"lhl", "average"}


def run_instance(suite: str, seed: int, index: int, slack: float) -> list[InstanceRecord]:
    """Evaluate one instance; library errors become failed records."""
    rng = rng_for(seed, index)
    log = logger.bind(suite=suite, seed=seed, index=index)
    try:
        if suite in SEEDED_SUITES:
            return SUITES[suite](index, rng, slack, seed=seed)
        return SUITES[suite](index, rng, slack)
    except ExtractorError as e:
        log.warning("instance_failed", error=e.message, error_type=type(e).__name__)
        return [
            InstanceRecord(
                index=index,
                check="error",
                lhs=math.inf,
                rhs=0.0,
                tolerance=slack,
                error=f"{type(e).__name__}: {e.message}",
            )
        ]
