"""Hash family descriptors and seeds."""

import enum
import math
from fractions import Fraction
from typing import Any, Optional

from pydantic import BaseModel, model_validator

from app.errors import FamilyError


class FamilyKind(str, enum.Enum):
    """Hash family constructions."""
    MULTIPLY = "multiply"
    POLYNOMIAL = "polynomial"
    CONCATENATED = "concatenated"


class HashFamilyDescriptor(BaseModel):
    """Full description of a (delta-almost) two-universal family.

    Canonical text form is ``kind:n:l[:k[:r]]``:
    ``multiply:n:l``, ``polynomial:n:l:k:r`` (l = k, r = ceil(n/k)) and
    ``concatenated:n:l:k``.
    """

    kind: FamilyKind
    n: int
    ell: int
    k: Optional[int] = None
    r: Optional[int] = None

    class Config:
        frozen = True

    @model_validator(mode="before")
    @classmethod
    def _derive_blocks(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("r") is None and data.get("k"):
            try:
                kind = FamilyKind(data.get("kind"))
            except ValueError:
                return data
            if kind == FamilyKind.POLYNOMIAL:
                data = {**data, "r": -(-int(data["n"]) // int(data["k"]))}
        return data

    @model_validator(mode="after")
    def _check_shape(self) -> "HashFamilyDescriptor":
        if self.n < 1:
            raise FamilyError("input length must be positive")
        if not 1 <= self.ell <= self.n:
            raise FamilyError("output longer than input" if self.ell > self.n else "output length must be positive")

        if self.kind == FamilyKind.MULTIPLY:
            if self.k is not None or self.r is not None:
                raise FamilyError("multiply family takes no k or r")
            return self

        if self.k is None or self.k < 1:
            raise FamilyError(f"{self.kind.value} family needs a field degree k >= 1")
        blocks = -(-self.n // self.k)

        if self.kind == FamilyKind.POLYNOMIAL:
            if self.ell != self.k:
                raise FamilyError("polynomial family outputs exactly k bits")
            if self.r != blocks:
                raise FamilyError(f"block count must be ceil(n/k) = {blocks}")
        else:
            if self.r is not None:
                raise FamilyError("concatenated family derives r from n and k")
            if self.ell > self.k:
                raise FamilyError("intermediate width too small")
        return self

    @property
    def blocks(self) -> int:
        """Number of k-bit input blocks (1 for the multiply family)."""
        if self.kind == FamilyKind.MULTIPLY:
            return 1
        return -(-self.n // self.k)

    @property
    def seed_bits(self) -> int:
        if self.kind == FamilyKind.MULTIPLY:
            return self.n
        if self.kind == FamilyKind.POLYNOMIAL:
            return self.k
        return 2 * self.k

    @property
    def delta(self) -> Fraction:
        """Collision bound of the construction, capped at 1."""
        if self.kind == FamilyKind.MULTIPLY:
            value = Fraction(1, 2**self.ell)
        elif self.kind == FamilyKind.POLYNOMIAL:
            value = Fraction(self.blocks - 1, 2**self.k)
        else:
            value = Fraction(self.blocks - 1, 2**self.k) + Fraction(1, 2**self.ell)
        return min(value, Fraction(1))

    @property
    def size(self) -> int:
        """Number of functions in the family."""
        return 2**self.seed_bits

    def format(self) -> str:
        parts = [self.kind.value, str(self.n), str(self.ell)]
        if self.kind == FamilyKind.POLYNOMIAL:
            parts += [str(self.k), str(self.r)]
        elif self.kind == FamilyKind.CONCATENATED:
            parts.append(str(self.k))
        return ":".join(parts)

    def __str__(self) -> str:
        return self.format()

    @classmethod
    def parse(cls, text: str) -> "HashFamilyDescriptor":
        """Parse the canonical text form (kind names are case-insensitive)."""
        fields = [p.strip() for p in text.strip().split(":")]
        try:
            kind = FamilyKind(fields[0].lower())
            numbers = [int(p) for p in fields[1:]]
        except (ValueError, IndexError) as e:
            raise FamilyError(f"malformed family descriptor {text!r}") from e

        expected = {FamilyKind.MULTIPLY: (2, 2), FamilyKind.POLYNOMIAL: (3, 4), FamilyKind.CONCATENATED: (3, 3)}
        low, high = expected[kind]
        if not low <= len(numbers) <= high:
            raise FamilyError(f"malformed family descriptor {text!r}")
        names = ["n", "ell", "k", "r"]
        return cls(kind=kind, **dict(zip(names, numbers)))

    @classmethod
    def multiply(cls, n: int, ell: int) -> "HashFamilyDescriptor":
        return cls(kind=FamilyKind.MULTIPLY, n=n, ell=ell)

    @classmethod
    def polynomial(cls, n: int, k: int) -> "HashFamilyDescriptor":
        return cls(kind=FamilyKind.POLYNOMIAL, n=n, ell=k, k=k)

    @classmethod
    def concatenated(cls, n: int, ell: int, k: int) -> "HashFamilyDescriptor":
        return cls(kind=FamilyKind.CONCATENATED, n=n, ell=ell, k=k)

    @classmethod
    def for_short_seed(cls, n: int, ell: int, eps: float) -> "HashFamilyDescriptor":
        """Concatenated family with the intermediate degree of the short-seed construction."""
        from app.services.lhl_bounds import short_seed_k

        return cls.concatenated(n, ell, short_seed_k(n, ell, eps))


class Seed(BaseModel):
    """Seed bits of a hash function, stored as an integer of ``length`` bits."""

    value: int
    length: int

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_range(self) -> "Seed":
        if self.length < 0 or self.value < 0 or self.value.bit_length() > self.length:
            raise FamilyError(f"seed value does not fit in {self.length} bits")
        return self

    @classmethod
    def from_hex(cls, text: str, length: int) -> "Seed":
        """Parse a big-endian hex string holding exactly ``length`` seed bits.

        The string has ceil(length/4) digits; unused high bits must be zero.
        """
        digits = text.strip().lower()
        if digits.startswith("0x"):
            digits = digits[2:]
        expected = math.ceil(length / 4)
        if len(digits) != expected:
            raise FamilyError(f"seed needs {expected} hex digits for {length} bits, got {len(digits)}")
        try:
            value = int(digits, 16)
        except ValueError as e:
            raise FamilyError(f"seed is not hexadecimal: {text!r}") from e
        return cls(value=value, length=length)

    def to_hex(self) -> str:
        return format(self.value, f"0{math.ceil(self.length / 4)}x")

    def split(self, k: int) -> tuple[int, int]:
        """(alpha_1, alpha_2): alpha_1 is the low k bits, alpha_2 the next k bits."""
        if self.length != 2 * k:
            raise FamilyError(f"seed must hold two {k}-bit elements")
        return self.value & ((1 << k) - 1), self.value >> k

    @classmethod
    def join(cls, alpha1: int, alpha2: int, k: int) -> "Seed":
        return cls(value=alpha1 | (alpha2 << k), length=2 * k)

    def matches(self, desc: HashFamilyDescriptor) -> bool:
        return self.length == desc.seed_bits
