"""Seeded random instances for the verification harness.

Every generator draws from ``numpy.random.Generator(Philox)`` keyed by
(seed, index), so an instance can be regenerated from its report entry alone.
"""

from typing import Optional

import numpy as np

from app.errors import DimensionError, PreconditionError
from app.models.states import CqState

GENERATOR_KINDS = ("random-rank", "classical", "pure-side-info", "adversarial-peaked")

MAX_LABELS = 64
MAX_DIM = 16


def rng_for(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for instance ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary (QR of a Ginibre matrix with phase fix)."""
    q, r = np.linalg.qr(_complex_gaussian(rng, (d, d)))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    if d_out < d_in:
        raise DimensionError("an isometry cannot shrink the space")
    return haar_unitary(d_out, rng)[:, :d_in]


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None, trace: float = 1.0) -> np.ndarray:
    """U diag(w) U^dagger with Haar U and ``rank`` random positive weights."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise DimensionError(f"rank must lie in [1, {d}]")
    w = np.zeros(d)
    w[:rank] = rng.random(rank) + 1e-3
    w *= trace / w.sum()
    u = haar_unitary(d, rng)
    return (u * w) @ u.conj().T


def random_projector(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    rank = int(rng.integers(1, d + 1)) if rank is None else rank
    u = haar_unitary(d, rng)[:, :rank]
    return u @ u.conj().T


def random_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    return _complex_gaussian(rng, (d, d))


def _pure(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = _complex_gaussian(rng, d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_cq(
    n_labels: int,
    d_e: int,
    kind: str = "random-rank",
    seed: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> CqState:
    """Normalized random CQ state with labels "0" .. str(n_labels - 1).

    ``classical`` gives diagonal blocks, ``pure-side-info`` rank-one blocks and
    ``adversarial-peaked`` skewed weights on nearly orthogonal states, which
    makes guessing easy and the bounds tight.
    """
    if not 1 <= n_labels <= MAX_LABELS or not 1 <= d_e <= MAX_DIM:
        raise PreconditionError("instance dimensions outside the harness budget")
    rng = rng_for(seed) if rng is None else rng
    labels = tuple(str(x) for x in range(n_labels))

    if kind == "classical":
        joint = rng.dirichlet(np.ones(n_labels * d_e)).reshape(n_labels, d_e)
        return CqState.classical(joint, labels)

    if kind == "random-rank":
        weights = rng.dirichlet(np.ones(n_labels))
        blocks = [w * random_density(d_e, rng, rank=int(rng.integers(1, d_e + 1))) for w in weights]
    elif kind == "pure-side-info":
        weights = rng.dirichlet(np.ones(n_labels))
        blocks = [w * _pure(d_e, rng) for w in weights]
    elif kind == "adversarial-peaked":
        weights = rng.dirichlet(np.full(n_labels, 0.3))
        basis = haar_unitary(d_e, rng)
        noise = 0.05
        blocks = []
        for x, w in enumerate(weights):
            v = basis[:, x % d_e]
            peak = np.outer(v, v.conj())
            blocks.append(w * ((1.0 - noise) * peak + noise * random_density(d_e, rng)))
    else:
        raise PreconditionError(f"unknown generator kind {kind!r}")

    blocks = np.array(blocks, dtype=np.complex128)
    blocks /= np.trace(blocks.sum(axis=0)).real
    return CqState(labels, blocks)
