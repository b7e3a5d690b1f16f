"""Binary polynomials and GF(2^n) field arithmetic.

Polynomials over GF(2) are stored as non-negative Python integers with
bit i holding the coefficient of x^i. Python integers are arbitrary
precision little-endian digit arrays with no leading zero digits, so the
representation is canonical and equality of polynomials is equality of
integers.

Three multiplication kernels are used:
- shift-and-xor over the set bits of the shorter operand (<= 64 bits),
- an 8-bit window table of the longer operand for mid-sized products,
- Karatsuba above ``settings.karatsuba_threshold_words`` 64-bit words.

Field reduction uses a precomputed Barrett constant per modulus; the
constant itself is obtained by Newton iteration on the reversed modulus so
that fields with very large degree stay usable.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from app.config import get_settings
from app.errors import FieldError
from app.logging_config import get_logger

logger = get_logger("gf2poly")


@dataclass(frozen=True, slots=True)
class BitPolynomial:
    """Polynomial over GF(2); bit i of ``value`` is the coefficient of x^i."""

    value: int = 0

    def __post_init__(self):
        if not isinstance(self.value, int) or self.value < 0:
            raise FieldError("polynomial coefficients must form a non-negative integer")

    @property
    def degree(self) -> int:
        """Index of the highest set bit; -1 for the zero polynomial."""
        return self.value.bit_length() - 1

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def coefficient(self, i: int) -> int:
        return (self.value >> i) & 1

    def __xor__(self, other: "PolyLike") -> "BitPolynomial":
        return BitPolynomial(self.value ^ _as_int(other))

    __add__ = __xor__
    __sub__ = __xor__

    def __mul__(self, other: "PolyLike") -> "BitPolynomial":
        return clmul(self, other)

    def __mod__(self, other: "PolyLike") -> "BitPolynomial":
        return mod_reduce(self, other)

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"BitPolynomial({self.value:#x})"

    def __str__(self) -> str:
        if self.value == 0:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            if self.coefficient(i):
                terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
        return " + ".join(terms)

    @classmethod
    def from_exponents(cls, *exponents: int) -> "BitPolynomial":
        """Build sum of x^e for the given exponents (repeats cancel)."""
        value = 0
        for e in exponents:
            value ^= 1 << e
        return cls(value)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitPolynomial":
        """Little-endian bytes: bit 0 of byte 0 is the constant coefficient."""
        return cls(int.from_bytes(data, "little"))

    def to_bytes(self, length: int = None) -> bytes:
        if length is None:
            length = max(1, (self.value.bit_length() + 7) // 8)
        return self.value.to_bytes(length, "little")


PolyLike = Union[BitPolynomial, int]

ZERO = BitPolynomial(0)
ONE = BitPolynomial(1)
X = BitPolynomial(0b10)


def _as_int(p: PolyLike) -> int:
    if isinstance(p, BitPolynomial):
        return p.value
    if isinstance(p, (int, np.integer)) and p >= 0:
        return int(p)
    raise FieldError(f"not a binary polynomial: {p!r}")


def _mask(bits: int) -> int:
    return (1 << bits) - 1


# --- carry-less multiplication ------------------------------------------------

def _spread_byte(b: int) -> int:
    r = 0
    for i in range(8):
        if (b >> i) & 1:
            r |= 1 << (2 * i)
    return r


_SPREAD = tuple(_spread_byte(b).to_bytes(2, "little") for b in range(256))


def _square(a: int) -> int:
    # Squaring over GF(2) interleaves a zero after every coefficient.
    if a == 0:
        return 0
    raw = a.to_bytes((a.bit_length() + 7) // 8, "little")
    return int.from_bytes(b"".join(_SPREAD[b] for b in raw), "little")


def _window_table(a: int) -> list[int]:
    table = [0] * 256
    for w in range(1, 256):
        table[w] = (table[w >> 1] << 1) ^ (a if w & 1 else 0)
    return table


def _clmul_table(table: list[int], b: int) -> int:
    acc = 0
    raw = b.to_bytes((b.bit_length() + 7) // 8, "little")
    for j, byte in enumerate(raw):
        if byte:
            acc ^= table[byte] << (8 * j)
    return acc


def _clmul_base(a: int, b: int) -> int:
    # b is the shorter operand
    if b.bit_length() <= 64:
        acc = 0
        i = 0
        while b:
            if b & 1:
                acc ^= a << i
            b >>= 1
            i += 1
        return acc
    return _clmul_table(_window_table(a), b)


def _karatsuba(a: int, b: int, threshold: int) -> int:
    m = max(a.bit_length(), b.bit_length()) // 2
    low = _mask(m)
    a0, a1 = a & low, a >> m
    b0, b1 = b & low, b >> m
    z0 = _clmul(a0, b0, threshold)
    z2 = _clmul(a1, b1, threshold)
    z1 = _clmul(a0 ^ a1, b0 ^ b1, threshold) ^ z0 ^ z2
    return z0 ^ (z1 << m) ^ (z2 << (2 * m))


def _clmul(a: int, b: int, threshold: int = None) -> int:
    if a == 0 or b == 0:
        return 0
    if a.bit_length() < b.bit_length():
        a, b = b, a
    if threshold is None:
        threshold = get_settings().karatsuba_threshold_words * 64
    if b.bit_length() > threshold:
        return _karatsuba(a, b, threshold)
    return _clmul_base(a, b)


def clmul(a: PolyLike, b: PolyLike) -> BitPolynomial:
    """Carry-less product in GF(2)[x].

    Bit k of the result is the parity of sum_{i+j=k} a_i b_j.
    """
    return BitPolynomial(_clmul(_as_int(a), _as_int(b)))


# --- division -------------------------------------------------------------------

def _reverse(p: int, degree: int) -> int:
    """Reverse the coefficient order of p viewed as a polynomial of the given degree."""
    return int(format(p, f"0{degree + 1}b")[::-1], 2)


def _series_inverse(f: int, precision: int) -> int:
    """Inverse of f modulo x^precision; f must have constant term 1."""
    g = 1
    prec = 1
    while prec < precision:
        prec = min(2 * prec, precision)
        # Newton step g <- f * g^2 (signs vanish in characteristic 2)
        g = _clmul(f & _mask(prec), _square(g)) & _mask(prec)
    return g


def _poly_divmod(a: int, b: int) -> tuple[int, int]:
    db = b.bit_length() - 1
    if db < 0:
        raise FieldError("zero modulus")
    da = a.bit_length() - 1
    if da < db:
        return 0, a
    k = da - db + 1
    if k <= 64:
        q = 0
        while a.bit_length() - 1 >= db:
            shift = a.bit_length() - 1 - db
            q |= 1 << shift
            a ^= b << shift
        return q, a

    inv = _series_inverse(_reverse(b, db), k)
    q_rev = _clmul(_reverse(a, da) & _mask(k), inv) & _mask(k)
    q = _reverse(q_rev, k - 1)
    return q, a ^ _clmul(q, b)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, _poly_divmod(a, b)[1]
    return a


def mod_reduce(p: PolyLike, m: PolyLike) -> BitPolynomial:
    """Return p mod m in GF(2)[x]."""
    return BitPolynomial(_poly_divmod(_as_int(p), _as_int(m))[1])


def poly_gcd(a: PolyLike, b: PolyLike) -> BitPolynomial:
    return BitPolynomial(_gcd(_as_int(a), _as_int(b)))


class _BarrettReducer:
    """Reduction modulo a fixed polynomial m of degree n.

    mu = floor(x^{2n} / m); for deg p < 2n the quotient is exactly
    ((p >> n) * mu) >> n.
    """

    __slots__ = ("modulus", "n", "mu", "_threshold", "_mu_table", "_m_table")

    def __init__(self, modulus: int):
        n = modulus.bit_length() - 1
        if n < 1:
            raise FieldError("degree zero")
        self.modulus = modulus
        self.n = n
        self.mu = _poly_divmod(1 << (2 * n), modulus)[0]
        self._threshold = get_settings().karatsuba_threshold_words * 64
        if n <= self._threshold:
            self._mu_table = _window_table(self.mu)
            self._m_table = _window_table(modulus)
        else:
            self._mu_table = self._m_table = None

    def _mul_mu(self, b: int) -> int:
        if self._mu_table is not None and b.bit_length() > 64:
            return _clmul_table(self._mu_table, b)
        return _clmul(self.mu, b, self._threshold)

    def _mul_m(self, b: int) -> int:
        if self._m_table is not None and b.bit_length() > 64:
            return _clmul_table(self._m_table, b)
        return _clmul(self.modulus, b, self._threshold)

    def reduce(self, p: int) -> int:
        n = self.n
        if p.bit_length() <= n:
            return p
        if p.bit_length() > 2 * n:
            return _poly_divmod(p, self.modulus)[1]
        q = self._mul_mu(p >> n) >> n
        r = p ^ self._mul_m(q)
        if r.bit_length() > n:
            r = _poly_divmod(r, self.modulus)[1]
        return r


# --- irreducibility ---------------------------------------------------------------

def _prime_factors(k: int) -> list[int]:
    factors = []
    p = 2
    while p * p <= k:
        if k % p == 0:
            factors.append(p)
            while k % p == 0:
                k //= p
        p += 1
    if k > 1:
        factors.append(k)
    return factors


def _rabin(m: int) -> bool:
    k = m.bit_length() - 1
    reducer = _BarrettReducer(m)
    x_mod = reducer.reduce(0b10)
    checkpoints = {k // p for p in _prime_factors(k)}
    powers = {}

    h = x_mod
    for i in range(1, k + 1):
        h = reducer.reduce(_square(h))
        if i in checkpoints:
            powers[i] = h
    if h != x_mod:
        return False
    return all(_gcd(m, powers[i] ^ x_mod) == 1 for i in checkpoints)


def is_irreducible(m: PolyLike) -> bool:
    """Rabin test.

    m of degree k is irreducible iff x^{2^k} = x mod m and
    gcd(x^{2^{k/p}} - x, m) = 1 for every prime p dividing k.
    """
    m = _as_int(m)
    if m.bit_length() - 1 < 1:
        raise FieldError("degree zero")
    return _rabin(m)


def _has_small_factor(m: int, rounds: int) -> bool:
    # First Ben-Or rounds: a factor of degree i divides x^{2^i} - x.
    reducer = _BarrettReducer(m)
    h = 0b10
    for _ in range(rounds):
        h = reducer.reduce(_square(h))
        if _gcd(m, h ^ 0b10) != 1:
            return True
    return False


@lru_cache(maxsize=None)
def _smallest_irreducible(degree: int) -> int:
    if degree == 1:
        return 0b10
    top = 1 << degree
    rounds = min(degree // 2, 16)
    for tail in range(1, top, 2):
        m = top | tail
        if bin(m).count("1") % 2 == 0:  # divisible by x + 1
            continue
        if _has_small_factor(m, rounds):
            continue
        if _rabin(m):
            logger.debug("irreducible_found", degree=degree, modulus=hex(m))
            return m
    raise FieldError(f"no irreducible polynomial of degree {degree}")  # unreachable


def smallest_irreducible(degree: int) -> BitPolynomial:
    """Lexicographically smallest irreducible polynomial of the given degree.

    Deterministic and memoized per process; the memo is guarded by the
    lock inside ``functools.lru_cache``.
    """
    if degree < 1:
        raise FieldError(f"degree must be at least 1, got {degree}")
    return BitPolynomial(_smallest_irreducible(degree))


# --- fields ------------------------------------------------------------------

@dataclass(frozen=True)
class FieldContext:
    """Concrete representation of GF(2^n) as GF(2)[x] / (modulus)."""

    n: int
    modulus: BitPolynomial
    check: bool = field(default=True, compare=False, repr=False)
    _reducer: _BarrettReducer = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        modulus = BitPolynomial(_as_int(self.modulus))
        object.__setattr__(self, "modulus", modulus)
        if modulus.degree != self.n:
            raise FieldError(f"modulus degree {modulus.degree} does not match n={self.n}")
        if self.check and not is_irreducible(modulus):
            raise FieldError(f"modulus {modulus!r} is reducible")
        object.__setattr__(self, "_reducer", _BarrettReducer(modulus.value))

    @classmethod
    def for_degree(cls, n: int) -> "FieldContext":
        return field_for_degree(n)

    @property
    def order(self) -> int:
        return 1 << self.n

    def contains(self, a: PolyLike) -> bool:
        return _as_int(a).bit_length() <= self.n

    def reduce(self, p: int) -> int:
        return self._reducer.reduce(p)

    def mul(self, a: int, b: int) -> int:
        """Unchecked product of two reduced elements (integers)."""
        return self._reducer.reduce(_clmul(a, b))

    def square(self, a: int) -> int:
        return self._reducer.reduce(_square(a))


@lru_cache(maxsize=None)
def field_for_degree(n: int) -> FieldContext:
    """GF(2^n) over the smallest irreducible modulus of degree n."""
    return FieldContext(n, smallest_irreducible(n), check=False)


def _checked(a: PolyLike, ctx: FieldContext) -> int:
    value = _as_int(a)
    if value.bit_length() > ctx.n:
        raise FieldError("element out of field")
    return value


def gf_mul(a: PolyLike, b: PolyLike, ctx: FieldContext) -> BitPolynomial:
    """Product in GF(2^n)."""
    return BitPolynomial(ctx.mul(_checked(a, ctx), _checked(b, ctx)))


def gf_pow(a: PolyLike, e: int, ctx: FieldContext) -> BitPolynomial:
    """a^e by left-to-right square-and-multiply; a^0 = 1."""
    if e < 0:
        raise FieldError("negative exponent")
    base = _checked(a, ctx)
    result = 1
    for bit in format(e, "b"):
        result = ctx.square(result)
        if bit == "1":
            result = ctx.mul(result, base)
    return BitPolynomial(result)


def gf_inv(a: PolyLike, ctx: FieldContext) -> BitPolynomial:
    """Multiplicative inverse via a^(2^n - 2)."""
    if _checked(a, ctx) == 0:
        raise FieldError("zero has no inverse")
    return gf_pow(a, (1 << ctx.n) - 2, ctx)


def gf_mul_array(xs: np.ndarray, alpha: int, ctx: FieldContext) -> np.ndarray:
    """Multiply every element of ``xs`` by ``alpha`` in GF(2^n), n <= 32.

    Vectorized path used by exhaustive enumeration.
    """
    if ctx.n > 32:
        raise FieldError("vectorized field arithmetic supports n <= 32")
    xs = np.asarray(xs, dtype=np.uint64)
    alpha = _checked(alpha, ctx)
    acc = np.zeros_like(xs)
    shift = 0
    while alpha:
        if alpha & 1:
            acc ^= xs << np.uint64(shift)
        alpha >>= 1
        shift += 1

    modulus = np.uint64(ctx.modulus.value)
    one = np.uint64(1)
    for d in range(2 * ctx.n - 2, ctx.n - 1, -1):
        bit = (acc >> np.uint64(d)) & one
        acc ^= bit * (modulus << np.uint64(d - ctx.n))
    return acc
