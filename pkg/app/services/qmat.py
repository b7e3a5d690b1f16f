"""Dense complex linear algebra for small Hermitian operators.

Matrices are numpy complex128 arrays. The eigensolver is a cyclic Jacobi
method for complex Hermitian matrices (dimension <= 64); setting
``EIG_BACKEND=lapack`` switches to ``numpy.linalg.eigh``.

Every generalized inverse and support projector uses one rank rule:
eigenvalues at or below ``support_cutoff * lambda_max`` count as zero.
"""

import enum
from typing import Literal, Optional, Sequence

import numpy as np

from app.config import get_settings
from app.errors import DimensionError, EigenConvergenceError, NotHermitianError, NotPositiveError

ComplexMatrix = np.ndarray
HermitianOperator = np.ndarray

MAX_DIM = 64
HERMITIAN_ATOL = 1e-12
NEGATIVE_TOL = 1e-8
RESIDUAL_TOL = 1e-10  # relative to the infinity norm


class MatFunc(str, enum.Enum):
    """Spectral functions supported by ``mat_func``."""
    SQRT = "sqrt"
    INV_SQRT_SUPPORT = "inv_sqrt_support"
    SUPPORT_PROJECTOR = "support_projector"
    ABS = "abs"


def as_matrix(m) -> ComplexMatrix:
    """Validate a finite 2-D complex matrix."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix has non-finite entries")
    return a


def as_square(m) -> ComplexMatrix:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitize(m: ComplexMatrix) -> HermitianOperator:
    """(M + M^dagger) / 2 without checks."""
    return 0.5 * (m + m.conj().T)


def is_hermitian(m: ComplexMatrix, atol: float = HERMITIAN_ATOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= atol * scale)


def as_hermitian(m, atol: float = HERMITIAN_ATOL) -> HermitianOperator:
    """Validate Hermiticity (relative to the largest entry) and symmetrize."""
    a = as_square(m)
    if not is_hermitian(a, atol):
        raise NotHermitianError("matrix is not Hermitian")
    return hermitize(a)


def _off_norm(a: np.ndarray) -> float:
    """Frobenius norm of the strictly off-diagonal part."""
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _residual(m: np.ndarray, w: np.ndarray, v: np.ndarray) -> float:
    return float(np.max(np.abs(m @ v - v * w), initial=0.0))


def _jacobi(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    m = a
    a = a.copy()
    d = a.shape[0]
    v = np.eye(d, dtype=np.complex128)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(d), v
    threshold = np.finfo(float).eps * scale * d

    previous = np.inf
    for _ in range(max_sweeps):
        off = _off_norm(a)
        # Sweeps shrink the off-diagonal norm; a sweep that does not has hit rounding.
        if off <= threshold or off >= previous:
            break
        previous = off
        for p in range(d - 1):
            for q in range(p + 1, d):
                b = a[p, q]
                mag = abs(b)
                if mag <= 1e-300:
                    continue
                phase = b / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on rows/cols (p, q)
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                v[:, cols] = v[:, cols] @ rot
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

    w = np.diag(a).real
    # Accuracy is judged on the original matrix, not on the rotated copy.
    residual = _residual(m, w, v)
    if residual > RESIDUAL_TOL * max(np.abs(m).sum(axis=1).max(), 1.0):
        raise EigenConvergenceError(residual, max_sweeps)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def herm_eig(
    m,
    backend: Optional[Literal["jacobi", "lapack"]] = None,
) -> tuple[np.ndarray, ComplexMatrix]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Returns:
        Tuple (w, V) with M = V diag(w) V^dagger.
    """
    a = as_hermitian(m)
    if a.shape[0] > MAX_DIM:
        raise DimensionError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    settings = get_settings()
    backend = backend or settings.eig_backend
    if backend == "lapack":
        return np.linalg.eigh(a)
    return _jacobi(a, settings.jacobi_max_sweeps)


def eigvalsh(m) -> np.ndarray:
    return herm_eig(m)[0]


def _cutoff(w: np.ndarray) -> float:
    top = float(np.max(np.abs(w), initial=0.0))
    return get_settings().support_cutoff * top


def mat_func(m, f: MatFunc) -> HermitianOperator:
    """Apply a spectral function to a Hermitian operator.

    Eigenvalues at or below the support cutoff count as zero:
    ``inv_sqrt_support`` maps them to 0 and ``support_projector`` drops them.
    """
    f = MatFunc(f)
    w, v = herm_eig(m)
    cut = _cutoff(w)

    if f == MatFunc.SQRT:
        if w.size and w[0] < -NEGATIVE_TOL:
            raise NotPositiveError()
        g = np.sqrt(np.clip(w, 0.0, None))
    elif f == MatFunc.INV_SQRT_SUPPORT:
        g = np.zeros_like(w)
        support = w > cut
        g[support] = 1.0 / np.sqrt(w[support])
    elif f == MatFunc.SUPPORT_PROJECTOR:
        g = (w > cut).astype(float)
    else:
        g = np.abs(w)
    return hermitize((v * g) @ v.conj().T)


def sqrtm(m) -> HermitianOperator:
    return mat_func(m, MatFunc.SQRT)


def inv_sqrt(m) -> HermitianOperator:
    return mat_func(m, MatFunc.INV_SQRT_SUPPORT)


def support_projector(m) -> HermitianOperator:
    return mat_func(m, MatFunc.SUPPORT_PROJECTOR)


def singular_values(m) -> np.ndarray:
    """Singular values (ascending) from the eigenvalues of M^dagger M."""
    a = as_matrix(m)
    gram = hermitize(a.conj().T @ a)
    w = herm_eig(gram)[0]
    cut = _cutoff(w)
    w = np.where(w > cut, w, 0.0)
    return np.sqrt(w)


def trace_norm(m) -> float:
    """Sum of singular values; sum of |eigenvalues| for Hermitian input."""
    a = as_square(m)
    if is_hermitian(a):
        return float(np.sum(np.abs(herm_eig(hermitize(a))[0])))
    return float(np.sum(singular_values(a)))


def schatten_power(m, p: float) -> float:
    """|| |M|^p ||_1 ^ (1/p), i.e. the Schatten p-norm."""
    s = singular_values(m)
    return float(np.sum(s**p) ** (1.0 / p))


def op_norm(m) -> float:
    """Largest |eigenvalue| for Hermitian input, largest singular value otherwise."""
    a = as_square(m)
    if is_hermitian(a):
        w = herm_eig(hermitize(a))[0]
        return float(np.max(np.abs(w), initial=0.0))
    return float(np.max(singular_values(a), initial=0.0))


def lambda_max(m) -> float:
    return float(herm_eig(m)[0][-1])


def tensor(a, b) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def reduce_to(m, dims: Sequence[int], keep: Sequence[int]) -> ComplexMatrix:
    """Partial trace over every factor not listed in ``keep``."""
    a = as_square(m)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to {a.shape[0]}")
    keep = sorted(set(keep))
    k = len(dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:k])
    cols = [rows[i] if i not in keep else letters[k + i] for i in range(k)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    tensor_form = a.reshape(dims + dims)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor_form)
    size = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(size, size)


def partial_trace(m, dims: tuple[int, int], keep: Literal["A", "B"]) -> HermitianOperator:
    """Reduced operator on A (tracing out B) or on B (tracing out A)."""
    if len(dims) != 2:
        raise DimensionError("partial_trace expects two subsystem dimensions")
    if keep not in ("A", "B"):
        raise DimensionError(f"keep must be 'A' or 'B', got {keep!r}")
    return reduce_to(m, dims, [0] if keep == "A" else [1])


def commutator_norm(a, b) -> float:
    return float(np.max(np.abs(a @ b - b @ a), initial=0.0))


def is_isometry(v, atol: float = 1e-10) -> bool:
    v = as_matrix(v)
    return bool(np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=atol, rtol=0.0))
