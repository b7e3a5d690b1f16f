import math
from fractions import Fraction

import numpy as np
import pytest

from app.errors import BoundError
from app.models.bounds import BoundQuery
from app.services import lhl_bounds


def test_classical_delta():
    assert lhl_bounds.classical_delta(80, 100) == pytest.approx(0.5 * 2.0**-10, rel=1e-12)
    assert lhl_bounds.classical_delta(100, 100) == pytest.approx(0.5)
    assert lhl_bounds.classical_delta(120, 100) == 1.0


def test_extractable_bits():
    assert lhl_bounds.extractable_bits(100, 2.0**-11) == 80
    assert lhl_bounds.extractable_bits(10, 2.0**-20) == 0
    with pytest.raises(BoundError):
        lhl_bounds.extractable_bits(100, 0.0)
    with pytest.raises(BoundError):
        lhl_bounds.extractable_bits(100, 0.75)


def test_two_universal_bound_adds_smoothing():
    assert lhl_bounds.thm_two_universal_delta(80, 100, 0.01) == pytest.approx(0.01 + 0.5 * 2.0**-10)
    with pytest.raises(BoundError):
        lhl_bounds.thm_two_universal_delta(80, 100, -0.1)


def test_extreme_parameters_do_not_overflow():
    tiny = lhl_bounds.thm_two_universal_delta(1000, 1e6, 0.0)
    assert 0.0 <= tiny < 1e-300
    assert lhl_bounds.thm_two_universal_delta(10**6, 10, 0.0) == 1.0
    value = lhl_bounds.thm_almost_delta(4000, Fraction(1, 2**4000) * Fraction(101, 100), 5000.0, 0.0, 0.01)
    assert math.isfinite(value)
    assert value == pytest.approx(0.01 + 0.5 * math.sqrt(0.01), rel=1e-6)


def test_almost_delta_direct_evaluation():
    value = lhl_bounds.thm_almost_delta(4, Fraction(1, 8), 20.0, 0.0, 0.05)
    expected = 0.05 + 0.5 * math.sqrt(1.0 + 2.0**-16 * (2.0 / 0.05**2 + 1.0))
    assert value == pytest.approx(expected, rel=1e-12)


def test_almost_delta_floors_negative_radicand():
    # 2^l * delta - 1 < 0 and the smoothing term is negligible
    value = lhl_bounds.thm_almost_delta(4, Fraction(1, 32), 200.0, 0.0, 0.1)
    assert value == pytest.approx(0.1)


def test_almost_delta_rejects_bad_smoothing():
    with pytest.raises(BoundError):
        lhl_bounds.thm_almost_delta(4, Fraction(1, 8), 20.0, 0.0, 0.0)


def test_general_delta_reduces_to_two_universal():
    delta, eps_star = lhl_bounds.general_delta(10, Fraction(1, 2**10), 30.0)
    assert eps_star == 0.0
    assert delta == lhl_bounds.classical_delta(10, 30.0)


def test_general_delta_beats_dense_grid():
    ell, hmin = 10, 30.0
    delta = Fraction(1, 2**ell) * Fraction(101, 100)
    best, eps_star = lhl_bounds.general_delta(ell, delta, hmin)
    grid = [lhl_bounds.thm_almost_delta(ell, delta, hmin, 0.0, 2.0**t) for t in np.linspace(-30.0, 0.0, 3001)]
    assert best <= min(grid) + 1e-9
    assert 0.0 < eps_star <= 1.0
    assert best == pytest.approx(lhl_bounds.thm_almost_delta(ell, delta, hmin, 0.0, eps_star), rel=1e-9)


def test_general_delta_classical_form():
    value = lhl_bounds.general_delta_classical(4, Fraction(1, 8), 20.0)
    assert value == pytest.approx(0.5 * math.sqrt(1.0 + 2.0**-16))


def test_classical_form_is_a_lower_reference():
    ell, delta = 4, Fraction(1, 8)
    for hmin in (8.0, 20.0, 40.0):
        reference = lhl_bounds.general_delta_classical(ell, delta, hmin)
        assert reference <= lhl_bounds.general_delta(ell, delta, hmin)[0] + 1e-12
        assert reference <= lhl_bounds.thm_almost_delta(ell, delta, hmin, 0.0, 0.1) + 1e-12


def test_short_seed_parameters_large_input():
    report = lhl_bounds.short_seed_params(2**20, 256, 2.0**-32)
    assert report.k == 332
    assert report.s == 664
    assert report.r == math.ceil(2**20 / 332)
    assert report.s_statement == 662
    assert report.s_discrepancy == 2
    assert report.delta2 == 2.0**-256
    assert report.delta1 == pytest.approx((report.r - 1) / 2.0**332)
    assert report.family == "concatenated:1048576:256:332"
    assert report.delta is None


def test_short_seed_distance_bound():
    eps = 2.0**-20
    report = lhl_bounds.short_seed_params(2**20, 256, eps, hmin=400.0)
    tail = 0.5 * math.sqrt(2.0 ** (256 - 400) * (2.0 / eps**2 + 1.0))
    assert report.delta == pytest.approx(3 * eps + tail, rel=1e-9)
    assert report.delta_tight <= report.delta
    assert report.distinguish_success == pytest.approx(0.5 + 0.5 * report.delta)


@pytest.mark.parametrize("n,ell,eps", [(16, 16, 0.5), (16, 0, 0.5), (16, 4, 0.0), (16, 4, 1.5)])
def test_short_seed_rejects_bad_arguments(n, ell, eps):
    with pytest.raises(BoundError):
        lhl_bounds.short_seed_k(n, ell, eps)


def test_short_seed_family_is_within_its_collision_bound():
    report = lhl_bounds.short_seed_params(64, 4, 0.25)
    assert report.k == math.floor(4 + 4 + 4)
    assert report.delta1 + report.delta2 <= 2.0**-4 * (1 + 4 * 0.25**2)


def test_distinguishing_advantage():
    assert lhl_bounds.distinguishing_advantage(0.0) == 0.5
    assert lhl_bounds.distinguishing_advantage(2.0) == 1.0


def test_evaluate_dispatch():
    two_universal = lhl_bounds.evaluate(BoundQuery(ell=80, hmin=100))
    assert two_universal.eps_star == 0.0
    assert two_universal.delta == pytest.approx(0.5 * 2.0**-10)

    fixed = lhl_bounds.evaluate(BoundQuery(ell=4, hmin=20, delta=Fraction(1, 8), eps_bar=0.05))
    assert fixed.eps_star == 0.05
    assert fixed.delta == lhl_bounds.thm_almost_delta(4, Fraction(1, 8), 20, 0.0, 0.05)

    optimized = lhl_bounds.evaluate(BoundQuery(ell=4, hmin=20, delta=Fraction(1, 8)))
    assert optimized.delta <= fixed.delta + 1e-12


def test_bound_query_validation():
    with pytest.raises(BoundError):
        BoundQuery(ell=0, hmin=10)
    with pytest.raises(BoundError):
        BoundQuery(ell=4, hmin=10, delta=0.0)
    with pytest.raises(BoundError):
        BoundQuery(ell=4, hmin=10, eps=-1.0)


def test_report_dict_keeps_core_keys():
    data = lhl_bounds.evaluate(BoundQuery(ell=80, hmin=100)).to_dict()
    assert {"delta", "eps_star", "k", "s", "delta1", "delta2"} <= set(data)
    assert data["k"] is None
    assert "family" not in data


def _nondecreasing(values, slack=1e-12):
    return all(b >= a - slack for a, b in zip(values, values[1:]))


def _nonincreasing(values, slack=1e-12):
    return _nondecreasing([-v for v in values], slack)


def test_bounds_are_monotone_in_min_entropy():
    hmins = list(np.linspace(0.0, 120.0, 61))
    delta = Fraction(3, 2**12)
    assert _nonincreasing([lhl_bounds.classical_delta(10, h) for h in hmins])
    assert _nonincreasing([lhl_bounds.thm_two_universal_delta(10, h, 0.01) for h in hmins])
    assert _nonincreasing([lhl_bounds.thm_almost_delta(10, delta, h, 0.0, 0.1) for h in hmins])
    assert _nonincreasing([lhl_bounds.general_delta(10, delta, h)[0] for h in hmins], slack=1e-9)
    assert _nonincreasing([lhl_bounds.short_seed_bound(10, h, 2.0**-8) for h in hmins])
    assert _nondecreasing([lhl_bounds.extractable_bits(h, 2.0**-10) for h in hmins])


def test_bounds_are_monotone_in_key_length_and_collision_bound():
    assert _nondecreasing([lhl_bounds.classical_delta(ell, 64.0) for ell in range(1, 80)])
    deltas = [Fraction(m, 2**16) for m in range(16, 400, 8)]
    assert _nondecreasing([lhl_bounds.thm_almost_delta(12, d, 40.0, 0.0, 0.05) for d in deltas])
    assert _nondecreasing([lhl_bounds.general_delta(12, d, 40.0)[0] for d in deltas], slack=1e-9)
    assert _nondecreasing([lhl_bounds.general_delta_classical(12, d, 40.0) for d in deltas])
    assert _nondecreasing([lhl_bounds.extractable_bits(100.0, d) for d in np.linspace(1e-6, 0.5, 50)])


def test_short_seed_degree_is_monotone():
    assert _nondecreasing([lhl_bounds.short_seed_k(n, 64, 2.0**-20) for n in (128, 256, 1000, 4096, 2**20)])
    assert _nonincreasing([lhl_bounds.short_seed_k(2**16, 64, eps) for eps in (2.0**-40, 2.0**-20, 1e-3, 0.1, 1.0)])
