"""Classical-quantum state containers and their JSON form.

Complex entries serialize as ``[re, im]`` pairs and classical labels as
strings, so failing verification instances can be dumped and replayed.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from app.errors import DimensionError, FamilyError, NotPositiveError, TraceError
from app.models.family import HashFamilyDescriptor

PSD_TOL = 1e-10
TRACE_TOL = 1e-10


def encode_matrix(m: np.ndarray) -> list:
    """Nested lists with complex entries as [re, im]."""
    m = np.asarray(m, dtype=np.complex128)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def decode_matrix(data: Any) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise DimensionError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CqState:
    """Labelled subnormalized positive blocks rho_E^[x] on a d_E-dimensional space.

    ``blocks`` has shape (|X|, d_E, d_E). The labels enumerate the whole
    classical alphabet, so zero blocks are allowed.
    """

    labels: tuple[str, ...]
    blocks: np.ndarray

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        blocks = np.asarray(self.blocks, dtype=np.complex128)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise DimensionError(f"blocks must have shape (|X|, d, d), got {blocks.shape}")
        if len(labels) != blocks.shape[0]:
            raise DimensionError("one block per label is required")
        if len(set(labels)) != len(labels):
            raise DimensionError("labels must be distinct")

        blocks = 0.5 * (blocks + blocks.conj().transpose(0, 2, 1))
        min_eig = min(float(np.linalg.eigvalsh(b)[0]) for b in blocks) if len(blocks) else 0.0
        if min_eig < -PSD_TOL:
            raise NotPositiveError(f"block has eigenvalue {min_eig:.3e}")
        total = float(np.trace(blocks.sum(axis=0)).real) if len(blocks) else 0.0
        if not 0.0 < total <= 1.0 + TRACE_TOL:
            raise TraceError(f"total trace {total!r} outside (0, 1]")

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "blocks", _frozen(blocks))

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def d_e(self) -> int:
        return self.blocks.shape[1]

    @property
    def marginal(self) -> np.ndarray:
        """rho_E = sum_x rho_E^[x]."""
        return self.blocks.sum(axis=0)

    @property
    def trace(self) -> float:
        return float(np.trace(self.marginal).real)

    @property
    def probabilities(self) -> np.ndarray:
        return np.trace(self.blocks, axis1=1, axis2=2).real

    def block(self, label: str) -> np.ndarray:
        return self.blocks[self.labels.index(str(label))]

    def to_operator(self) -> np.ndarray:
        """Block-diagonal operator on X (x) E with index x * d_E + e."""
        d = self.d_e
        out = np.zeros((self.size * d, self.size * d), dtype=np.complex128)
        for i, b in enumerate(self.blocks):
            out[i * d:(i + 1) * d, i * d:(i + 1) * d] = b
        return out

    @property
    def dims(self) -> tuple[int, int]:
        return self.size, self.d_e

    def with_blocks(self, blocks: np.ndarray) -> "CqState":
        return CqState(self.labels, blocks)

    def normalized(self) -> "CqState":
        return CqState(self.labels, self.blocks / self.trace)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "blocks": encode_matrix(self.blocks)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CqState":
        return cls(tuple(data["labels"]), decode_matrix(data["blocks"]))

    @classmethod
    def from_json(cls, text: str) -> "CqState":
        return cls.from_dict(json.loads(text))

    @classmethod
    def classical(cls, joint: np.ndarray, labels: Optional[Sequence[str]] = None) -> "CqState":
        """CQ state of a joint distribution P(x, e) with classical E (rows x, columns e)."""
        joint = np.asarray(joint, dtype=float)
        if labels is None:
            labels = [str(i) for i in range(joint.shape[0])]
        blocks = np.array([np.diag(row) for row in joint], dtype=np.complex128)
        return cls(tuple(labels), blocks)


@dataclass(frozen=True, eq=False)
class HashedState:
    """State of (F, Z, E) after hashing: blocks[f, z] = sum_{x: f(x) = z} rho_E^[x].

    Functions are uniformly distributed, p_f = 1 / |F|.
    """

    family: HashFamilyDescriptor
    blocks: np.ndarray
    marginal: np.ndarray

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=np.complex128)
        if blocks.ndim != 4 or blocks.shape[2] != blocks.shape[3]:
            raise DimensionError(f"blocks must have shape (|F|, |Z|, d, d), got {blocks.shape}")
        if blocks.shape[1] != 2**self.family.ell:
            raise FamilyError("one block per output value is required")
        sums = blocks.sum(axis=1)
        if not np.allclose(sums, self.marginal[None, :, :], atol=1e-10, rtol=0.0):
            raise TraceError("hashing must conserve the side-information marginal")
        object.__setattr__(self, "blocks", _frozen(blocks))
        object.__setattr__(self, "marginal", _frozen(self.marginal))

    @property
    def num_functions(self) -> int:
        return self.blocks.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.blocks.shape[1]

    @property
    def d_e(self) -> int:
        return self.blocks.shape[2]

    @property
    def p_f(self) -> float:
        return 1.0 / self.num_functions

    @property
    def trace(self) -> float:
        return float(np.trace(self.marginal).real)

    def for_function(self, f: int) -> CqState:
        """Conditional CQ state rho_{ZE}^{(f)} for one function of the family."""
        labels = tuple(str(z) for z in range(self.num_outputs))
        return CqState(labels, self.blocks[f])

    def to_dict(self) -> dict:
        return {"family": self.family.format(), "blocks": encode_matrix(self.blocks), "marginal": encode_matrix(self.marginal)}


@dataclass(frozen=True, eq=False)
class PureStateVector:
    """Amplitudes over a composite space with declared factor dimensions."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != amps.size:
            raise DimensionError(f"dims {dims} do not multiply to {amps.size}")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "dims", dims)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        """Reduced density operator on the listed factors."""
        from app.services.qmat import reduce_to

        return reduce_to(self.density(), self.dims, keep)

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "amplitudes": encode_matrix(self.amplitudes[None, :])[0]}

    @classmethod
    def from_dict(cls, data: dict) -> "PureStateVector":
        return cls(decode_matrix(data["amplitudes"]), tuple(data["dims"]))
