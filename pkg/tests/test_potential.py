import numpy as np
import pytest

from magicangles.errors import InvalidPotential
from magicangles.lattice import OMEGA, SQRT3, Z_S, complex_from_rect
from magicangles.potential import (STANDARD, PotentialSpec, bracket_field, bracket_sum,
                                   check_symmetries, dU_at_origin, eval_dU, eval_fn,
                                   eval_from_shifts, eval_U, eval_U_rect, fourier_shifts,
                                   mu_potential, parse_potential)


@pytest.mark.parametrize("n", [1, -2, 4, 7])
def test_fn_vanishes_at_origin(n):
    assert abs(eval_fn(n, 0)) < 1e-15


def test_f1_at_stacking_point():
    assert abs(eval_fn(1, Z_S) - 3) < 1e-13


def test_f1_rotation():
    z = 1 + 1j
    assert abs(eval_fn(1, OMEGA * z) - OMEGA * eval_fn(1, z)) < 1e-13


def test_U_values():
    assert abs(eval_U(STANDARD, 0)) < 1e-15
    assert abs(eval_U(STANDARD, Z_S) - 3) < 1e-13
    assert abs(eval_U(PotentialSpec({1: 1, -2: -1.96}), 0)) < 1e-15


@pytest.mark.parametrize("spec", [STANDARD, PotentialSpec({1: 1, 4: 0.15}), mu_potential(0.3 + 0.2j)])
def test_symmetries(spec):
    assert check_symmetries(spec, 50)["max"] < 1e-12


@pytest.mark.parametrize("bad", [{2: 1.0}, {0: 1.0}, {1.5: 1.0}])
def test_illegal_keys(bad):
    with pytest.raises(InvalidPotential):
        PotentialSpec(bad)


@pytest.mark.parametrize("coeffs, expected", [
    ({1: 1}, 1.0), ({1: 1, -2: 0.5}, 0.0), ({1: 1, -2: -0.75, 4: 0.15}, 3.1)])
def test_bracket_sum(coeffs, expected):
    assert abs(bracket_sum(PotentialSpec(coeffs)) - expected) < 1e-14


def test_bracket_field_small_z():
    assert bracket_field(STANDARD, 0) == 0
    val = bracket_field(STANDARD, 0.1)
    assert 0 < val and abs(val / 0.0675 - 1) < 0.2
    r = np.linspace(0.01, 0.2, 20)[:, None] * np.exp(2j * np.pi * np.arange(64) / 64)
    assert np.all(bracket_field(STANDARD, r) > 0)


def test_derivative_matches_finite_difference(rng):
    spec = PotentialSpec({1: 1, -2: 0.4, 4: 0.1j})
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    h = 1e-6
    # Wirtinger derivative (d/dx - i d/dy) / 2: U depends on z and conj(z).
    dx = (eval_U(spec, z + h) - eval_U(spec, z - h)) / (2 * h)
    dy = (eval_U(spec, z + 1j * h) - eval_U(spec, z - 1j * h)) / (2 * h)
    fd = (dx - 1j * dy) / 2
    assert np.allclose(eval_dU(spec, z), fd, atol=1e-7)
    assert abs(dU_at_origin(STANDARD) - 1.5) < 1e-15
    assert abs(eval_dU(STANDARD, 0) - 1.5) < 1e-15


def test_fourier_shifts_standard():
    plus = dict(fourier_shifts(STANDARD, 1))
    assert plus == pytest.approx({(-1, -1): SQRT3, (2, -1): SQRT3 * OMEGA, (-1, 2): SQRT3 * OMEGA**2})
    minus = dict(fourier_shifts(STANDARD, -1))
    assert minus == pytest.approx({(1, 1): SQRT3, (-2, 1): SQRT3 * OMEGA, (1, -2): SQRT3 * OMEGA**2})


def test_fourier_shifts_mu_term():
    mu = 0.7
    shifts = dict(fourier_shifts(PotentialSpec({-2: mu})))
    assert shifts == pytest.approx({(2, 2): SQRT3 * mu, (-4, 2): SQRT3 * OMEGA * mu,
                                    (2, -4): SQRT3 * OMEGA**2 * mu})


@pytest.mark.parametrize("reflect", [1, -1])
def test_shifts_reproduce_potential(rng, reflect):
    spec = PotentialSpec({1: 1, -2: 0.3 - 0.1j, 4: 0.2})
    y1, y2 = rng.uniform(0, 2 * np.pi, (2, 30))
    direct = eval_U(spec, complex_from_rect(y1, y2), reflect)
    assert np.allclose(eval_from_shifts(fourier_shifts(spec, reflect), y1, y2), direct, atol=1e-12)
    assert np.allclose(eval_U_rect(spec, y1, y2, reflect), direct)


def test_json_round_trip():
    spec = PotentialSpec({1: 1, -2: 0.25 - 0.5j})
    assert PotentialSpec.from_json(spec.to_json()) == spec
    with pytest.raises(InvalidPotential):
        PotentialSpec.from_json('{"nope": 1}')


def test_parse_presets():
    assert parse_potential("std") is STANDARD
    assert parse_potential("mu=0.5").coeffs == {1: 1 + 0j, -2: 0.5 + 0j}
    with pytest.raises(InvalidPotential):
        parse_potential("mu=abc")
    with pytest.raises(InvalidPotential):
        parse_potential("other")
    assert STANDARD.is_standard and STANDARD.is_real
    assert not mu_potential(1j).is_real
