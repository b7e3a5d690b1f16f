from fractions import Fraction

import numpy as np
import pytest

from app.errors import BudgetExceededError, FamilyError
from app.models.family import FamilyKind, HashFamilyDescriptor, Seed
from app.services import hash_families


def test_descriptor_parse_and_format():
    desc = HashFamilyDescriptor.parse("Polynomial:9:4:4")
    assert desc.kind == FamilyKind.POLYNOMIAL
    assert desc.r == 3
    assert desc.format() == "polynomial:9:4:4:3"
    assert HashFamilyDescriptor.parse(desc.format()) == desc
    assert HashFamilyDescriptor.parse("concatenated:16:2:7").seed_bits == 14


@pytest.mark.parametrize("text", [
    "multiply:4",
    "multiply:4:5",
    "multiply:4:0",
    "polynomial:8:3:4:2",
    "polynomial:8:4:4:3",
    "concatenated:8:5:4",
    "sponge:8:4",
    "multiply:four:2",
])
def test_descriptor_rejects_malformed(text):
    with pytest.raises(FamilyError):
        HashFamilyDescriptor.parse(text)


def test_descriptor_delta():
    assert HashFamilyDescriptor.multiply(8, 3).delta == Fraction(1, 8)
    assert HashFamilyDescriptor.polynomial(12, 4).delta == Fraction(2, 16)
    assert HashFamilyDescriptor.concatenated(16, 2, 4).delta == Fraction(3, 16) + Fraction(1, 4)
    assert HashFamilyDescriptor.polynomial(4, 1).delta == 1


def test_seed_hex_round_trip_and_split():
    seed = Seed.from_hex("0x23", 8)
    assert seed.value == 0x23
    assert seed.to_hex() == "23"
    assert seed.split(4) == (3, 2)
    assert Seed.join(3, 2, 4) == seed


@pytest.mark.parametrize("text,length", [("123", 8), ("1f", 4), ("zz", 8)])
def test_seed_hex_rejects_bad_input(text, length):
    with pytest.raises(FamilyError):
        Seed.from_hex(text, length)


def test_multiply_hash_example():
    desc = HashFamilyDescriptor.multiply(4, 2)
    assert hash_families.evaluate(desc, 0b0011, Seed(value=0b0111, length=4)).value == 0b01


def test_multiply_zero_seed_collapses():
    desc = HashFamilyDescriptor.multiply(8, 4)
    assert all(hash_families.evaluate(desc, x, Seed(value=0, length=8)).value == 0 for x in range(256))


def test_polynomial_hash_horner_order():
    desc = HashFamilyDescriptor.polynomial(8, 4)
    # x_1 = 0x1 (low block), x_2 = 0x2: x_1 * alpha + x_2
    assert hash_families.evaluate(desc, 0x21, Seed(value=3, length=4)).value == 1
    assert hash_families.evaluate(desc, 0x21, Seed(value=0, length=4)).value == 2


def test_concatenated_hash_composes_stages():
    desc = HashFamilyDescriptor.concatenated(8, 2, 4)
    inner = hash_families.poly_hash(0x21, Seed(value=3, length=4), 4, 8).value
    assert inner == 1
    assert hash_families.evaluate(desc, 0x21, Seed.join(3, 2, 4)).value == 2


def test_evaluate_rejects_bad_input_and_seed():
    desc = HashFamilyDescriptor.multiply(4, 2)
    with pytest.raises(FamilyError):
        hash_families.evaluate(desc, 0x10, Seed(value=1, length=4))
    with pytest.raises(FamilyError):
        hash_families.evaluate(desc, 1, Seed(value=1, length=8))


@pytest.mark.parametrize("text", ["multiply:6:3", "polynomial:9:4:4:3", "concatenated:7:2:3"])
def test_vectorized_evaluation_matches_scalar(text):
    desc = HashFamilyDescriptor.parse(text)
    for seed_value in (0, 1, 5, desc.size - 1):
        seed = Seed(value=seed_value, length=desc.seed_bits)
        out = hash_families.evaluate_all(desc, seed_value)
        assert [int(z) for z in out] == [hash_families.evaluate(desc, x, seed).value for x in range(2**desc.n)]


def test_audit_multiply_is_exactly_two_universal():
    desc = HashFamilyDescriptor.multiply(4, 2)
    assert hash_families.audit_collision_prob(desc) == Fraction(1, 4)
    assert hash_families.theoretical_delta(desc) == Fraction(1, 4)


def test_audit_polynomial_within_bound():
    assert hash_families.audit_collision_prob(HashFamilyDescriptor.polynomial(8, 4)) == Fraction(1, 16)
    assert hash_families.audit_collision_prob(HashFamilyDescriptor.polynomial(9, 4)) <= Fraction(1, 8)


def test_audit_concatenated_within_bound():
    desc = HashFamilyDescriptor.concatenated(6, 2, 3)
    assert hash_families.audit_collision_prob(desc) <= desc.delta


def test_audit_budget():
    with pytest.raises(BudgetExceededError) as info:
        hash_families.audit_collision_prob(HashFamilyDescriptor.multiply(4, 2), budget=100)
    assert info.value.required == 2**4 * 2**8
    with pytest.raises(BudgetExceededError):
        hash_families.check_budget(1, budget=0)


def test_colliding_seeds():
    desc = HashFamilyDescriptor.multiply(4, 2)
    assert hash_families.colliding_seeds(desc, 3, 5) == 4
    assert hash_families.colliding_seeds(desc, 3, 3) == 16


def test_evaluate_all_on_subset():
    desc = HashFamilyDescriptor.multiply(8, 8)
    out = hash_families.evaluate_all(desc, 0x83, np.array([0x57, 0x01]))
    assert [int(z) for z in out] == [0xC1, 0x83]


def test_polynomial_and_multiply_hashes_are_linear_in_the_input():
    rng = np.random.default_rng(21)
    for _ in range(200):
        x, y = (int(v) for v in rng.integers(0, 2**40, size=2))
        alpha = Seed(value=int(rng.integers(0, 2**8)), length=8)
        assert (
            hash_families.poly_hash(x ^ y, alpha, 8, 40).value
            == hash_families.poly_hash(x, alpha, 8, 40).value ^ hash_families.poly_hash(y, alpha, 8, 40).value
        )
        beta = Seed(value=int(rng.integers(0, 2**40)), length=40)
        assert (
            hash_families.multiply_hash(x ^ y, beta, 12).value
            == hash_families.multiply_hash(x, beta, 12).value ^ hash_families.multiply_hash(y, beta, 12).value
        )


def test_every_pair_collides_on_exactly_two_to_n_minus_l_seeds():
    desc = HashFamilyDescriptor.multiply(5, 3)
    for x in range(32):
        for x_prime in range(x + 1, 32):
            assert hash_families.colliding_seeds(desc, x, x_prime) == 2 ** (5 - 3)


def test_concatenated_hash_equals_composition_on_random_inputs():
    n, ell, k = 100, 6, 10
    desc = HashFamilyDescriptor.concatenated(n, ell, k)
    rng = np.random.default_rng(1000)
    for _ in range(1000):
        x = int.from_bytes(rng.bytes(13), "little") & ((1 << n) - 1)
        alpha1, alpha2 = (int(v) for v in rng.integers(0, 2**k, size=2))
        inner = hash_families.poly_hash(x, Seed(value=alpha1, length=k), k, n).value
        composed = hash_families.multiply_hash(inner, Seed(value=alpha2, length=k), ell).value
        assert hash_families.evaluate(desc, x, Seed.join(alpha1, alpha2, k)).value == composed
