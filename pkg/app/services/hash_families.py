"""Universal hash families over binary fields and exhaustive collision audits.

Bit conventions: inputs are little-endian integers; "mod 2^l" keeps the low
l bits; polynomial-hash blocks are taken from the low end of the input with
the last block zero-padded on the high side.
"""

from fractions import Fraction
from typing import Optional

import numpy as np

from app.config import get_settings
from app.errors import BudgetExceededError, FamilyError
from app.logging_config import get_logger
from app.models.family import FamilyKind, HashFamilyDescriptor, Seed
from app.services.gf2poly import (
    BitPolynomial,
    PolyLike,
    _as_int,
    field_for_degree,
    gf_mul_array,
)

logger = get_logger("hash_families")

# Largest input width handled by the vectorized enumeration path.
MAX_ENUMERATION_BITS = 32


def _low_bits(value: int, bits: int) -> int:
    return value & ((1 << bits) - 1)


def _check_input(x: PolyLike, n: int) -> int:
    value = _as_int(x)
    if value.bit_length() > n:
        raise FamilyError(f"input has more than n={n} bits")
    return value


def multiply_hash(x: PolyLike, seed: Seed, ell: int) -> BitPolynomial:
    """Low ``ell`` bits of x * alpha in GF(2^n), where n is the seed length."""
    n = seed.length
    if ell > n:
        raise FamilyError("output longer than input")
    if ell < 1:
        raise FamilyError("output length must be positive")
    ctx = field_for_degree(n)
    product = ctx.mul(_check_input(x, n), seed.value)
    return BitPolynomial(_low_bits(product, ell))


def _poly_eval(x: int, alpha: int, k: int, n: int) -> int:
    ctx = field_for_degree(k)
    blocks = -(-n // k)
    acc = 0
    for i in range(blocks):
        block = _low_bits(x >> (k * i), k)
        acc = ctx.mul(acc, alpha) ^ block
    return acc


def poly_hash(x: PolyLike, seed: Seed, k: int, n: int) -> BitPolynomial:
    """Horner evaluation of sum_i x_i alpha^{r-i} over GF(2^k).

    x is split into r = ceil(n/k) blocks of k bits; x_1 holds the lowest bits.
    """
    if seed.length != k:
        raise FamilyError(f"polynomial hash needs a {k}-bit seed, got {seed.length}")
    return BitPolynomial(_poly_eval(_check_input(x, n), seed.value, k, n))


def concat_hash(x: PolyLike, seed: Seed, ell: int, n: int) -> BitPolynomial:
    """Polynomial hash over GF(2^k) followed by multiplication, truncated to ``ell`` bits."""
    if seed.length % 2:
        raise FamilyError("concatenated seed must hold two field elements")
    k = seed.length // 2
    if ell > k:
        raise FamilyError("intermediate width too small")
    alpha1, alpha2 = seed.split(k)
    inner = _poly_eval(_check_input(x, n), alpha1, k, n)
    return BitPolynomial(_low_bits(field_for_degree(k).mul(inner, alpha2), ell))


def evaluate(desc: HashFamilyDescriptor, x: PolyLike, seed: Seed) -> BitPolynomial:
    """Apply the member of ``desc`` selected by ``seed`` to ``x``."""
    if not seed.matches(desc):
        raise FamilyError(f"seed has {seed.length} bits, family {desc} needs {desc.seed_bits}")
    if desc.kind == FamilyKind.MULTIPLY:
        return multiply_hash(x, seed, desc.ell)
    if desc.kind == FamilyKind.POLYNOMIAL:
        return poly_hash(x, seed, desc.k, desc.n)
    return concat_hash(x, seed, desc.ell, desc.n)


def _poly_eval_array(xs: np.ndarray, alpha: int, k: int, blocks: int) -> np.ndarray:
    ctx = field_for_degree(k)
    mask = np.uint64((1 << k) - 1)
    acc = np.zeros_like(xs)
    for i in range(blocks):
        block = (xs >> np.uint64(k * i)) & mask
        acc = gf_mul_array(acc, alpha, ctx) ^ block
    return acc


def evaluate_all(desc: HashFamilyDescriptor, seed_value: int, xs: Optional[np.ndarray] = None) -> np.ndarray:
    """Outputs of one family member on a vector of inputs (all 2^n by default)."""
    if desc.n > MAX_ENUMERATION_BITS:
        raise FamilyError(f"vectorized evaluation supports n <= {MAX_ENUMERATION_BITS}")
    if xs is None:
        xs = np.arange(1 << desc.n, dtype=np.uint64)
    else:
        xs = np.asarray(xs, dtype=np.uint64)

    out_mask = np.uint64((1 << desc.ell) - 1)
    if desc.kind == FamilyKind.MULTIPLY:
        return gf_mul_array(xs, seed_value, field_for_degree(desc.n)) & out_mask
    if desc.kind == FamilyKind.POLYNOMIAL:
        return _poly_eval_array(xs, seed_value, desc.k, desc.blocks)

    alpha1, alpha2 = _low_bits(seed_value, desc.k), seed_value >> desc.k
    inner = _poly_eval_array(xs, alpha1, desc.k, desc.blocks)
    return gf_mul_array(inner, alpha2, field_for_degree(desc.k)) & out_mask


def check_budget(required: int, budget: Optional[int] = None) -> None:
    """Raise if an enumeration needs more evaluations than the budget allows."""
    if budget is None:
        budget = get_settings().audit_budget
    if budget <= 0 or required > budget:
        raise BudgetExceededError(required, budget)


def audit_collision_prob(desc: HashFamilyDescriptor, budget: Optional[int] = None) -> Fraction:
    """Exact max over pairs x != x' of the fraction of seeds with f(x) = f(x').

    Enumerates every seed and every input pair, so the family must satisfy
    2^{seed_bits} * 2^{2n} <= budget.
    """
    check_budget(desc.size << (2 * desc.n), budget)
    log = logger.bind(family=desc.format())

    inputs = 1 << desc.n
    counts = np.zeros((inputs, inputs), dtype=np.min_scalar_type(desc.size))
    for seed_value in range(desc.size):
        out = evaluate_all(desc, seed_value)
        counts += out[:, None] == out[None, :]
    np.fill_diagonal(counts, 0)

    worst = Fraction(int(counts.max()), desc.size)
    log.info("family_audited", delta_hat=str(worst), delta=str(desc.delta), seeds=desc.size)
    return worst


def theoretical_delta(desc: HashFamilyDescriptor) -> Fraction:
    """Collision bound of the construction: 2^-l, (r-1)/2^k, or their sum."""
    return desc.delta


def colliding_seeds(desc: HashFamilyDescriptor, x: int, x_prime: int) -> int:
    """Number of seeds under which x and x' hash to the same value."""
    check_budget(desc.size << desc.n)
    pair = np.array([x, x_prime], dtype=np.uint64)
    count = 0
    for seed_value in range(desc.size):
        out = evaluate_all(desc, seed_value, pair)
        count += int(out[0] == out[1])
    return count
