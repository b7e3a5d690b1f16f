"""Quantum-information quantities on small classical-quantum states.

Operators on A (x) B are ordered with the A index major, i.e. index a * d_B + b.
CQ states are handled blockwise; HashedState quantities average over the
family with p_f = 1 / |F|.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from app.config import get_settings
from app.errors import (
    DimensionError,
    FamilyError,
    NotIsometryError,
    NotPositiveError,
    PreconditionError,
    SmoothingError,
    SolverError,
    SupportError,
    TraceError,
)
from app.logging_config import get_logger
from app.models.family import HashFamilyDescriptor
from app.models.states import CqState, HashedState, PureStateVector
from app.services.hash_families import check_budget, evaluate_all
from app.services.qmat import (
    as_hermitian,
    commutator_norm,
    herm_eig,
    hermitize,
    inv_sqrt,
    is_isometry,
    lambda_max,
    op_norm,
    partial_trace,
    sqrtm,
    support_projector,
    trace_norm,
)

logger = get_logger("qinfo")

State = Union[np.ndarray, CqState]

TRACE_TOL = 1e-10
SUPPORT_TOL = 1e-9
COMMUTE_TOL = 1e-10
FIXED_SIGMA_TOL = 1e-9
SMOOTHING_TOL = 1e-8

SDP_OPTIONS = {
    "CLARABEL": {"tol_gap_abs": 1e-9, "tol_gap_rel": 1e-9, "tol_feas": 1e-9, "max_iter": 200},
    "SCS": {"eps_abs": 1e-7, "eps_rel": 1e-7, "max_iters": 20000},
}

HminMethod = Literal["commuting", "helstrom", "iterative"]
DistMode = Literal["fixed_sigma", "marginal", "search"]


def _operator(rho: State) -> np.ndarray:
    if isinstance(rho, CqState):
        return rho.to_operator()
    return as_hermitian(rho)


def _dims_of(rho: State, dims: Optional[Sequence[int]]) -> tuple[int, int]:
    if isinstance(rho, CqState):
        return rho.dims
    if dims is None or len(dims) != 2:
        raise DimensionError("two subsystem dimensions are required")
    return int(dims[0]), int(dims[1])


def _trace(m: np.ndarray) -> float:
    return float(np.trace(m).real)


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def trace_distance(rho: State, tau: State) -> float:
    """0.5 * ||rho - tau||_1."""
    a, b = _operator(rho), _operator(tau)
    _same_shape(a, b)
    return 0.5 * trace_norm(a - b)


def generalized_fidelity(rho: State, tau: State) -> float:
    """tr|sqrt(rho) sqrt(tau)| + sqrt((1 - tr rho)(1 - tr tau)), capped at 1."""
    a, b = _operator(rho), _operator(tau)
    _same_shape(a, b)
    tr_a, tr_b = _trace(a), _trace(b)
    if tr_a > 1.0 + TRACE_TOL or tr_b > 1.0 + TRACE_TOL:
        raise TraceError("generalized fidelity needs subnormalized states")

    root = sqrtm(b)
    w = herm_eig(hermitize(root @ a @ root))[0]
    overlap = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    slack = math.sqrt(max(0.0, 1.0 - tr_a) * max(0.0, 1.0 - tr_b))
    return min(1.0, overlap + slack)


def purified_distance(rho: State, tau: State) -> float:
    """sqrt(1 - F^2) with F the generalized fidelity."""
    f = generalized_fidelity(rho, tau)
    return math.sqrt(max(0.0, 1.0 - f * f))


# ---------------------------------------------------------------------------
# Collision entropy and max relative entropy
# ---------------------------------------------------------------------------


def _support_leak(rho_b: np.ndarray, sigma: np.ndarray) -> float:
    """Weight of rho_B outside the support of sigma, relative to tr rho_B."""
    outside = np.eye(sigma.shape[0]) - support_projector(sigma)
    leak = _trace(outside @ rho_b @ outside)
    return leak / max(_trace(rho_b), 1e-300)


def _check_support(rho_b: np.ndarray, sigma: np.ndarray) -> None:
    if _support_leak(rho_b, sigma) > SUPPORT_TOL:
        raise SupportError()


def _blockwise_gamma(blocks: np.ndarray, root_inv: np.ndarray) -> float:
    total = 0.0
    for b in blocks:
        m = b @ root_inv
        total += float(np.trace(m @ m).real)
    return total


def collision_gamma(
    rho: Union[np.ndarray, CqState, HashedState],
    sigma: np.ndarray,
    dims: Optional[Sequence[int]] = None,
) -> float:
    """tr(rho_AB (I (x) sigma_B^{-1/2}))^2.

    For a HashedState the conditioning system is F (x) E with
    sigma_FE = rho_F (x) sigma_E, which averages the per-function values.
    """
    sigma = as_hermitian(sigma)
    if isinstance(rho, HashedState):
        if sigma.shape[0] != rho.d_e:
            raise DimensionError("sigma must act on the side-information space")
        _check_support(rho.marginal, sigma)
        root_inv = inv_sqrt(sigma)
        return rho.p_f * sum(_blockwise_gamma(blocks, root_inv) for blocks in rho.blocks)

    if isinstance(rho, CqState):
        if sigma.shape[0] != rho.d_e:
            raise DimensionError("sigma must act on the side-information space")
        _check_support(rho.marginal, sigma)
        return _blockwise_gamma(rho.blocks, inv_sqrt(sigma))

    a = as_hermitian(rho)
    d_a, d_b = _dims_of(a, dims)
    if sigma.shape[0] != d_b or d_a * d_b != a.shape[0]:
        raise DimensionError(f"dims {(d_a, d_b)} do not match the operands")
    _check_support(partial_trace(a, (d_a, d_b), "B"), sigma)
    m = a @ np.kron(np.eye(d_a), inv_sqrt(sigma))
    return float(np.trace(m @ m).real)


def marginal_collision(rho_b: np.ndarray, sigma: np.ndarray) -> float:
    """tr(rho_B sigma^{-1/2} rho_B sigma^{-1/2})."""
    root_inv = inv_sqrt(as_hermitian(sigma))
    m = as_hermitian(rho_b) @ root_inv
    return float(np.trace(m @ m).real)


def dmax(rho: State, tau: State) -> float:
    """log2 of the smallest 2^lambda with rho <= 2^lambda tau; +inf without support."""
    a, b = _operator(rho), _operator(tau)
    _same_shape(a, b)
    if _support_leak(a, b) > SUPPORT_TOL:
        return math.inf
    root_inv = inv_sqrt(b)
    top = op_norm(hermitize(root_inv @ a @ root_inv))
    if top <= 0.0:
        return -math.inf
    return math.log2(top)


def hmin_alt(rho: State, dims: Optional[Sequence[int]] = None) -> float:
    """-D_max(rho_AB || I_A (x) rho_B)."""
    a = _operator(rho)
    d_a, d_b = _dims_of(rho, dims)
    rho_b = partial_trace(a, (d_a, d_b), "B")
    return -dmax(a, np.kron(np.eye(d_a), rho_b))


def hmax_alt(rho: State, dims: Optional[Sequence[int]] = None) -> float:
    """log2 || tr_A Pi_AB ||_inf, with Pi_AB the support projector of rho_AB."""
    a = _operator(rho)
    d_a, d_b = _dims_of(rho, dims)
    reduced = partial_trace(support_projector(a), (d_a, d_b), "B")
    return math.log2(op_norm(reduced))


# ---------------------------------------------------------------------------
# Purification and isometries
# ---------------------------------------------------------------------------


def purify(rho: np.ndarray, dims: Optional[Sequence[int]] = None) -> PureStateVector:
    """Sum_i sqrt(lambda_i) |i>_sys |i>_C over the support of rho.

    The purifying system C is appended as the last factor and has
    dimension rank(rho).
    """
    a = as_hermitian(rho)
    w, v = herm_eig(a)
    if w.size and w[0] < -1e-8:
        raise NotPositiveError()
    keep = w > get_settings().support_cutoff * max(float(w[-1]), 0.0)
    if not np.any(keep):
        raise TraceError("cannot purify the zero operator")
    amplitudes = v[:, keep] * np.sqrt(w[keep])
    sys_dims = tuple(dims) if dims is not None else (a.shape[0],)
    return PureStateVector(amplitudes.reshape(-1), sys_dims + (int(np.count_nonzero(keep)),))


def apply_isometry(
    rho: State,
    v: np.ndarray,
    side: Literal["A", "B"] = "B",
    dims: Optional[Sequence[int]] = None,
) -> State:
    """(I (x) V) rho (I (x) V^dagger) for side B, (V (x) I) rho (V^dagger (x) I) for side A.

    CQ states keep their classical register, so only side B applies to them.
    """
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 2 or not is_isometry(v):
        raise NotIsometryError("V^dagger V is not the identity")

    if isinstance(rho, CqState):
        if side != "B":
            raise PreconditionError("isometries on a CQ state act on the quantum side")
        if v.shape[1] != rho.d_e:
            raise DimensionError("isometry input dimension must equal d_E")
        return CqState(rho.labels, np.einsum("ij,xjk,lk->xil", v, rho.blocks, v.conj()))

    a = as_hermitian(rho)
    d_a, d_b = _dims_of(a, dims)
    if side == "B":
        if v.shape[1] != d_b:
            raise DimensionError("isometry input dimension must equal d_B")
        w = np.kron(np.eye(d_a), v)
    elif side == "A":
        if v.shape[1] != d_a:
            raise DimensionError("isometry input dimension must equal d_A")
        w = np.kron(v, np.eye(d_b))
    else:
        raise DimensionError(f"side must be 'A' or 'B', got {side!r}")
    return hermitize(w @ a @ w.conj().T)


# ---------------------------------------------------------------------------
# Min-entropy of a CQ state
# ---------------------------------------------------------------------------


@dataclass
class GuessingCertificate:
    """Certified bounds on the guessing probability of X given E.

    ``lower`` comes from an explicit POVM, ``upper`` from a dual-feasible
    sigma (sigma >= rho_E^[x] for every x). ``h`` = -log2(upper) is the
    reported min-entropy and ``sigma`` the normalized dual operator.
    Unpacks as ``h, sigma, gap``.
    """

    h: float
    sigma: np.ndarray
    gap: float
    lower: float
    upper: float
    method: str
    povm: np.ndarray = field(repr=False)

    @property
    def h_upper(self) -> float:
        """Largest min-entropy compatible with the certificate."""
        return -math.log2(self.lower) if self.lower > 0 else math.inf

    def __iter__(self):
        return iter((self.h, self.sigma, self.gap))


def _make_feasible(sigma: np.ndarray, blocks: np.ndarray) -> np.ndarray:
    """Shift sigma by max_x lambda_max(rho^[x] - sigma)_+ times the identity."""
    sigma = hermitize(sigma)
    shift = max((lambda_max(hermitize(b - sigma)) for b in blocks), default=0.0)
    if shift > 0.0:
        sigma = sigma + shift * np.eye(sigma.shape[0])
    return sigma


def _povm_value(blocks: np.ndarray, povm: np.ndarray) -> float:
    return float(np.einsum("xij,xji->", blocks, povm).real)


def _dual_from_povm(blocks: np.ndarray, povm: np.ndarray) -> np.ndarray:
    return _make_feasible(hermitize(np.einsum("xij,xjk->ik", blocks, povm)), blocks)


def _complete_povm(elements: np.ndarray) -> np.ndarray:
    """Normalize positive elements so that they sum to the identity."""
    d = elements.shape[1]
    fixed = []
    for m in elements:
        w, v = herm_eig(hermitize(m), backend="lapack")
        fixed.append((v * np.clip(w, 0.0, None)) @ v.conj().T)
    fixed = np.array(fixed)
    total = hermitize(fixed.sum(axis=0))
    root_inv = inv_sqrt(total)
    povm = np.einsum("ij,xjk,kl->xil", root_inv, fixed, root_inv)
    leftover = np.eye(d) - support_projector(total)
    povm[0] = povm[0] + leftover
    return povm


def _all_commute(blocks: np.ndarray) -> bool:
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if commutator_norm(blocks[i], blocks[j]) >= COMMUTE_TOL:
                return False
    return True


def _solve_commuting(blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Eigenvectors of a generic combination diagonalize every block.
    weights = 1.0 / (np.arange(len(blocks)) + math.sqrt(2.0))
    combo = hermitize(np.einsum("x,xij->ij", weights, blocks))
    _, v = herm_eig(combo)
    diag = np.einsum("ij,xjk,ki->xi", v.conj().T, blocks, v).real
    best = np.argmax(diag, axis=0)
    d = blocks.shape[1]
    povm = np.zeros_like(blocks)
    for j in range(d):
        povm[best[j]] += np.outer(v[:, j], v[:, j].conj())
    sigma = (v * diag.max(axis=0)) @ v.conj().T
    return _make_feasible(sigma, blocks), povm


def _solve_helstrom(blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = hermitize(blocks[0] - blocks[1])
    w, v = herm_eig(diff)
    positive = (v * (w > 0)) @ v.conj().T
    povm = np.array([positive, np.eye(diff.shape[0]) - positive])
    absolute = (v * np.abs(w)) @ v.conj().T
    sigma = 0.5 * (blocks[0] + blocks[1] + absolute)
    return _make_feasible(sigma, blocks), povm


def _pretty_good(blocks: np.ndarray) -> np.ndarray:
    root_inv = inv_sqrt(hermitize(blocks.sum(axis=0)))
    return _complete_povm(np.einsum("ij,xjk,kl->xil", root_inv, blocks, root_inv))


def _refine_sdp(blocks: np.ndarray) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Solve min tr sigma s.t. sigma >= rho^[x] with cvxpy; returns (sigma, povm).

    Only an ``optimal`` status is used. The result seeds the refinement loop
    and is re-certified there, so it never enters a certificate unchecked.
    """
    import cvxpy as cp

    settings = get_settings()
    d = blocks.shape[1]
    sigma = cp.Variable((d, d), hermitian=True)
    constraints = [sigma - b >> 0 for b in blocks]
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(sigma))), constraints)
    log = logger.bind(labels=len(blocks), d_e=d, solver=settings.hmin_sdp_solver)
    options = SDP_OPTIONS.get(settings.hmin_sdp_solver.upper(), {})
    try:
        problem.solve(solver=settings.hmin_sdp_solver, **options)
    except cp.error.SolverError as e:
        log.warning("sdp_seed_failed", error=str(e))
        return None, None
    if problem.status != cp.OPTIMAL or sigma.value is None:
        log.info("sdp_seed_discarded", status=problem.status)
        return None, None

    duals = [c.dual_value for c in constraints]
    povm = None
    if all(m is not None and np.shape(m) == (d, d) for m in duals):
        povm = _complete_povm(np.array([np.asarray(m, dtype=np.complex128) for m in duals]))
    log.debug("sdp_seeded", value=float(problem.value))
    return _make_feasible(np.asarray(sigma.value, dtype=np.complex128), blocks), povm


def _fixed_point_step(blocks: np.ndarray, povm: np.ndarray) -> np.ndarray:
    """One step Pi_x <- R^{-1} rho_x Pi_x rho_x R^{-1}, R = (sum_x rho_x Pi_x rho_x)^{1/2}."""
    weighted = np.einsum("xij,xjk,xkl->xil", blocks, povm, blocks)
    root_inv = inv_sqrt(hermitize(weighted.sum(axis=0)))
    return _complete_povm(np.einsum("ij,xjk,kl->xil", root_inv, weighted, root_inv))


def _solve_iterative(blocks: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Refine primal and dual certificates until the gap is at most ``tol``.

    Starts from the pretty good measurement (and the SDP solution when the
    solver reports it optimal), then applies fixed-point POVM iterations.
    Every iterate yields a lower bound from its POVM and an upper bound from
    the feasible dual sigma built from it; the best of each is kept.
    """
    max_iter = get_settings().hmin_max_iter
    best_povm = _pretty_good(blocks)
    best_lower = _povm_value(blocks, best_povm)
    best_sigma = _dual_from_povm(blocks, best_povm)
    if _trace(best_sigma) - best_lower <= tol:
        return best_sigma, best_povm

    povm = best_povm
    sdp_sigma, sdp_povm = _refine_sdp(blocks)
    if sdp_sigma is not None and _trace(sdp_sigma) < _trace(best_sigma):
        best_sigma = sdp_sigma
    if sdp_povm is not None and _povm_value(blocks, sdp_povm) > best_lower:
        povm = best_povm = sdp_povm
        best_lower = _povm_value(blocks, sdp_povm)

    log = logger.bind(labels=len(blocks), d_e=blocks.shape[1], tol=tol)
    for step in range(max_iter):
        candidate = _dual_from_povm(blocks, povm)
        if _trace(candidate) < _trace(best_sigma):
            best_sigma = candidate
        if _trace(best_sigma) - best_lower <= tol:
            log.debug("solver_converged", steps=step, gap=_trace(best_sigma) - best_lower)
            break
        povm = _fixed_point_step(blocks, povm)
        value = _povm_value(blocks, povm)
        if value > best_lower:
            best_povm, best_lower = povm, value
    return best_sigma, best_povm


def hmin_cq(rho: CqState, tol: Optional[float] = None, method: Optional[HminMethod] = None) -> GuessingCertificate:
    """Min-entropy H_min(X|E) from the dual program min{tr sigma : sigma >= rho_E^[x]}.

    Commuting blocks are solved exactly in a common eigenbasis, two labels by
    the Helstrom measurement, anything else by a pretty-good-measurement
    certificate refined with a semidefinite solver.

    Raises:
        SolverError: the certified gap exceeds ``tol``.
        PreconditionError: ``tol`` <= 0, or a forced method does not apply.
    """
    tol = get_settings().hmin_tol if tol is None else tol
    if tol <= 0:
        raise PreconditionError("solver tolerance must be positive")
    blocks = np.asarray(rho.blocks)

    commuting = _all_commute(blocks)
    if method is None:
        method = "commuting" if commuting else ("helstrom" if rho.size == 2 else "iterative")
    if method == "commuting" and not commuting:
        raise PreconditionError("blocks do not commute")
    if method == "helstrom" and rho.size != 2:
        raise PreconditionError("Helstrom measurement needs exactly two labels")

    if method == "commuting":
        sigma, povm = _solve_commuting(blocks)
    elif method == "helstrom":
        sigma, povm = _solve_helstrom(blocks)
    elif method == "iterative":
        sigma, povm = _solve_iterative(blocks, tol)
    else:
        raise PreconditionError(f"unknown solver method {method!r}")

    upper = _trace(sigma)
    lower = min(_povm_value(blocks, povm), upper)
    gap = upper - lower
    if gap > tol:
        logger.warning("solver_gap_not_reached", method=method, lower=lower, upper=upper, tol=tol)
        raise SolverError(lower, upper)
    return GuessingCertificate(
        h=-math.log2(upper),
        sigma=sigma / upper,
        gap=gap,
        lower=lower,
        upper=upper,
        method=method,
        povm=povm,
    )


def guessing_probability(rho: CqState, tol: Optional[float] = None) -> float:
    """Optimal probability of guessing X from E, 2^{-H_min(X|E)}."""
    return hmin_cq(rho, tol).upper


# ---------------------------------------------------------------------------
# Classical maps on the register
# ---------------------------------------------------------------------------


def relabel(
    rho: CqState,
    g: Union[Callable[[str], object], Mapping[str, object]],
    codomain: Optional[Sequence[object]] = None,
) -> CqState:
    """Push the classical register through a deterministic function g.

    Output labels are ``codomain`` when given (so values g never reaches get
    zero blocks), otherwise the images of g in order of first appearance.
    """
    mapping = g if callable(g) else g.__getitem__
    images = [str(mapping(label)) for label in rho.labels]
    labels = [str(z) for z in codomain] if codomain is not None else list(dict.fromkeys(images))
    index = {label: i for i, label in enumerate(labels)}
    blocks = np.zeros((len(labels), rho.d_e, rho.d_e), dtype=np.complex128)
    for image, block in zip(images, rho.blocks):
        if image not in index:
            raise FamilyError(f"label {image!r} is outside the codomain")
        blocks[index[image]] += block
    return CqState(tuple(labels), blocks)


def apply_hash(rho: CqState, desc: HashFamilyDescriptor, budget: Optional[int] = None) -> HashedState:
    """blocks[f, z] = sum over x with f(x) = z of rho_E^[x], for every seed f.

    Labels must be decimal integers below 2^n.
    """
    try:
        xs = np.array([int(label) for label in rho.labels], dtype=np.uint64)
    except ValueError as e:
        raise FamilyError("hashing needs integer labels") from e
    if len(xs) > 2**desc.n or (len(xs) and int(xs.max()) >= 2**desc.n):
        raise FamilyError(f"labels do not fit in n={desc.n} bits")
    check_budget(desc.size << desc.n, budget)

    outputs = 2**desc.ell
    d = rho.d_e
    blocks = np.zeros((desc.size, outputs, d, d), dtype=np.complex128)
    for seed_value in range(desc.size):
        z = evaluate_all(desc, seed_value, xs).astype(np.intp)
        np.add.at(blocks[seed_value], z, rho.blocks)
    logger.debug("state_hashed", family=desc.format(), functions=desc.size)
    return HashedState(desc, blocks, rho.marginal)


# ---------------------------------------------------------------------------
# Distance from uniform
# ---------------------------------------------------------------------------


def _uniform_distance(blocks: np.ndarray, sigma: np.ndarray, d_a: int) -> float:
    target = sigma / d_a
    return 0.5 * sum(trace_norm(hermitize(b - target)) for b in blocks)


def _fixed_sigma(sigma: Optional[np.ndarray], marginal: np.ndarray) -> np.ndarray:
    if sigma is None:
        raise PreconditionError("fixed_sigma mode needs sigma")
    sigma = as_hermitian(sigma)
    if sigma.shape != marginal.shape:
        raise DimensionError("sigma must act on the side-information space")
    if abs(_trace(sigma) - _trace(marginal)) > FIXED_SIGMA_TOL:
        raise TraceError("sigma must have the trace of rho_B")
    return sigma


def _search_sigma(blocks: np.ndarray, d_a: int, start: np.ndarray) -> float:
    """Local search over sigma = t A A^dagger / tr(A A^dagger), t = tr rho_B."""
    d = blocks.shape[1]
    t = _trace(blocks.sum(axis=0))

    def sigma_of(params: np.ndarray) -> np.ndarray:
        a = (params[: d * d] + 1j * params[d * d:]).reshape(d, d)
        g = a @ a.conj().T
        norm = _trace(g)
        return t * g / norm if norm > 0 else start

    def objective(params: np.ndarray) -> float:
        return _uniform_distance(blocks, sigma_of(params), d_a)

    root = sqrtm(start) if _trace(start) > 0 else np.eye(d)
    x0 = np.concatenate([root.real.ravel(), root.imag.ravel()])
    result = minimize(objective, x0, method="Nelder-Mead", options={"maxiter": 400 * d, "xatol": 1e-9, "fatol": 1e-12})
    return float(min(result.fun, objective(x0)))


def dist_uniform(
    rho: Union[CqState, HashedState],
    sigma: Optional[np.ndarray] = None,
    mode: DistMode = "marginal",
) -> float:
    """0.5 * || rho_AB - omega_A (x) sigma_B ||_1, blockwise.

    ``marginal`` uses sigma_B = rho_B, ``fixed_sigma`` the supplied sigma
    (same trace as rho_B) and ``search`` a local minimization over sigma_B
    that returns the best value found; it is an upper bound on the minimum,
    not a certified one.
    """
    if isinstance(rho, HashedState):
        if mode == "search":
            return rho.p_f * sum(dist_uniform(rho.for_function(f), mode="search") for f in range(rho.num_functions))
        if mode == "fixed_sigma":
            sigma = _fixed_sigma(sigma, rho.marginal)
        elif mode == "marginal":
            sigma = rho.marginal
        else:
            raise PreconditionError(f"unknown mode {mode!r}")
        return rho.p_f * sum(_uniform_distance(blocks, sigma, rho.num_outputs) for blocks in rho.blocks)

    blocks = np.asarray(rho.blocks)
    d_a = rho.size
    marginal = rho.marginal
    if mode == "marginal":
        return _uniform_distance(blocks, marginal, d_a)
    if mode == "fixed_sigma":
        return _uniform_distance(blocks, _fixed_sigma(sigma, marginal), d_a)
    if mode == "search":
        baseline = _uniform_distance(blocks, marginal, d_a)
        return min(baseline, _search_sigma(blocks, d_a, marginal))
    raise PreconditionError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Constructive smoothing
# ---------------------------------------------------------------------------


def _projector_onto(vectors: np.ndarray) -> np.ndarray:
    return vectors @ vectors.conj().T


def smooth_for_collision(rho: CqState, eps_bar: float) -> tuple[CqState, float]:
    """Normalized CQ state within purified distance eps_bar of rho with small collision entropy.

    Projects away the largest eigenvalues of Gamma_B = rho_B^{-1/2} sigma* rho_B^{-1/2}
    as long as their weight under rho_B stays within eps_bar^2 / 2, applies
    K = rho_B^{1/2} Pi_B rho_B^{-1/2} to every block and spreads the removed
    weight evenly over the labels.

    Returns:
        Tuple (smoothed state, purified distance to rho).
    """
    if eps_bar <= 0:
        raise PreconditionError("smoothing parameter must be positive")
    if abs(rho.trace - 1.0) > FIXED_SIGMA_TOL:
        raise TraceError("smoothing needs a normalized state")
    log = logger.bind(labels=rho.size, d_e=rho.d_e, eps_bar=eps_bar)

    cert = hmin_cq(rho)
    rho_b = hermitize(rho.marginal)
    w_b, v_b = herm_eig(rho_b)
    support = w_b > get_settings().support_cutoff * max(float(w_b[-1]), 0.0)
    basis = v_b[:, support]

    root_inv = inv_sqrt(rho_b)
    gamma = hermitize(basis.conj().T @ root_inv @ cert.sigma @ root_inv @ basis)
    g_w, g_v = herm_eig(gamma)
    vectors = basis @ g_v

    # Drop whole eigenvalue groups from the top while the budget allows.
    budget = 0.5 * eps_bar * eps_bar
    weights = np.einsum("ij,ik,kj->j", vectors.conj(), rho_b, vectors).real
    dropped = np.zeros(len(g_w), dtype=bool)
    used = 0.0
    i = len(g_w) - 1
    scale = max(abs(float(g_w[-1])), 1.0) if len(g_w) else 1.0
    while i >= 0:
        j = i
        while j > 0 and abs(g_w[j - 1] - g_w[i]) <= 1e-9 * scale:
            j -= 1
        group = float(weights[j:i + 1].sum())
        if used + group > budget:
            break
        used += group
        dropped[j:i + 1] = True
        i = j - 1

    pi_b = _projector_onto(vectors[:, ~dropped])
    k = sqrtm(rho_b) @ pi_b @ root_inv
    projected = np.einsum("ij,xjk,lk->xil", k, rho.blocks, k.conj())
    removed = hermitize(rho_b - projected.sum(axis=0))
    smoothed = CqState(rho.labels, projected + removed[None, :, :] / rho.size)

    distance = purified_distance(rho, smoothed)
    log.debug("state_smoothed", dropped=int(dropped.sum()), weight=used, distance=distance)
    if distance > eps_bar + SMOOTHING_TOL:
        raise SmoothingError(distance, eps_bar)
    return smoothed, distance
