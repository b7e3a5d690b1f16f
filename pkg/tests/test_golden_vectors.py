"""Committed extractor vectors, checked against the library and a schoolbook reference."""

import json
import math
import random
from pathlib import Path

import pytest

from app.api.commands import CliConfig, cmd_extract
from app.models.family import FamilyKind, HashFamilyDescriptor, Seed
from app.services import hash_families

VECTORS = json.loads((Path(__file__).parent / "data" / "golden_vectors.json").read_text())


def ref_mul(a: int, b: int, modulus: int) -> int:
    degree = modulus.bit_length() - 1
    product = 0
    while b:
        if b & 1:
            product ^= a
        b >>= 1
        a <<= 1
        if a >> degree:
            a ^= modulus
    return product


def ref_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def ref_smallest_irreducible(degree: int) -> int:
    for m in range(1 << degree, 1 << (degree + 1)):
        if all(ref_mod(m, d) for d in range(2, 1 << (degree // 2 + 1))):
            return m
    raise AssertionError("unreachable")


def ref_extract(desc: HashFamilyDescriptor, x: int, seed: int) -> int:
    if desc.kind == FamilyKind.MULTIPLY:
        return ref_mul(x, seed, ref_smallest_irreducible(desc.n)) & ((1 << desc.ell) - 1)
    k = desc.k
    modulus = ref_smallest_irreducible(k)
    alpha = seed & ((1 << k) - 1)
    blocks = [(x >> (k * i)) & ((1 << k) - 1) for i in range(math.ceil(desc.n / k))]
    value = 0
    for i, block in enumerate(blocks):
        # x_1 alpha^{r-1} + ... + x_r
        value ^= ref_mul(block, ref_pow(alpha, len(blocks) - 1 - i, modulus), modulus)
    if desc.kind == FamilyKind.POLYNOMIAL:
        return value
    return ref_mul(value, seed >> k, modulus) & ((1 << desc.ell) - 1)


def ref_pow(a: int, e: int, modulus: int) -> int:
    out = 1
    for _ in range(e):
        out = ref_mul(out, a, modulus)
    return out


@pytest.mark.parametrize("vector", VECTORS, ids=[f"{v['family']}-{i}" for i, v in enumerate(VECTORS)])
def test_library_reproduces_vector(vector):
    desc = HashFamilyDescriptor.parse(vector["family"])
    seed = Seed.from_hex(vector["seed_hex"], desc.seed_bits)
    x = int.from_bytes(bytes.fromhex(vector["input_hex"]), "little")
    out = hash_families.evaluate(desc, x, seed).to_bytes(math.ceil(desc.ell / 8))
    assert out.hex() == vector["output_hex"]


@pytest.mark.parametrize("vector", VECTORS, ids=[f"{v['family']}-{i}" for i, v in enumerate(VECTORS)])
def test_reference_reproduces_vector(vector):
    desc = HashFamilyDescriptor.parse(vector["family"])
    seed = int(vector["seed_hex"], 16)
    x = int.from_bytes(bytes.fromhex(vector["input_hex"]), "little")
    assert ref_extract(desc, x, seed) == int.from_bytes(bytes.fromhex(vector["output_hex"]), "little")


def test_cli_reproduces_vectors_byte_for_byte(tmp_path):
    for i, vector in enumerate(VECTORS):
        source = tmp_path / f"in{i}.bin"
        source.write_bytes(bytes.fromhex(vector["input_hex"]))
        out = tmp_path / f"out{i}.bin"
        config = CliConfig(command="extract", family=vector["family"], seed_hex=vector["seed_hex"], input_path=source, output_path=out)
        assert cmd_extract(config).exit_code == 0
        assert out.read_bytes().hex() == vector["output_hex"]


def test_long_input_vector_is_committed():
    vector = next(v for v in VECTORS if v["family"] == "concatenated:1024:8:12")
    desc = HashFamilyDescriptor.parse(vector["family"])
    data = bytes.fromhex(vector["input_hex"])
    assert len(data) * 8 == desc.n
    x = int.from_bytes(data, "little")
    seed = Seed.from_hex(vector["seed_hex"], desc.seed_bits)
    assert hash_families.evaluate(desc, x, seed).value == int(vector["output_hex"], 16)
    assert ref_extract(desc, x, seed.value) == int(vector["output_hex"], 16)


def test_long_input_concatenated_matches_reference():
    rng = random.Random(2024)
    desc = HashFamilyDescriptor.concatenated(1024, 8, 12)
    x = rng.getrandbits(1024)
    for _ in range(3):
        seed = rng.getrandbits(desc.seed_bits)
        got = hash_families.evaluate(desc, x, Seed(value=seed, length=desc.seed_bits)).value
        assert got == ref_extract(desc, x, seed)
