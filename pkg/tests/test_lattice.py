import numpy as np
import pytest

from magicangles.lattice import (GEOMETRY, K_STAR, OMEGA, SQRT3, Z_S, KPoint, complex_from_rect,
                                 is_dual_lattice_point, kpoint_from_complex, kpoint_from_coords,
                                 pairing, rect_from_complex)


def test_omega_identities():
    assert abs(OMEGA**3 - 1) < 1e-15
    assert abs(1 + OMEGA + OMEGA**2) < 1e-15


def test_duality_pairing():
    g1, g2 = GEOMETRY.gamma_basis
    d1, d2 = GEOMETRY.dual_basis
    for a in range(-2, 3):
        for b in range(-2, 3):
            gamma = a * g1 + b * g2
            for c, d in [(1, 0), (0, 1), (2, -3)]:
                val = pairing(gamma, c * d1 + d * d2) / (2 * np.pi)
                assert abs(val - round(val)) < 1e-12


def test_k_star_equidistant():
    assert abs(abs(K_STAR) - 1 / 3) < 1e-15
    assert abs(abs(K_STAR - 1 / SQRT3) - 1 / 3) < 1e-15


@pytest.mark.parametrize("coords, expected", [
    ((0, 0), 0),
    ((1, 0), OMEGA**2 / SQRT3),
    ((0.5, 0), OMEGA**2 / (2 * SQRT3)),
])
def test_kpoint_from_coords(coords, expected):
    assert abs(kpoint_from_coords(*coords).k - expected) < 1e-15


def test_half_point_value():
    k = kpoint_from_coords(0.5, 0).k
    assert abs(k - (-0.14433756729740643 - 0.25j)) < 1e-15


def test_coords_round_trip(rng):
    for k1, k2 in rng.uniform(-3, 3, (20, 2)):
        kp = kpoint_from_complex(kpoint_from_coords(k1, k2).k)
        assert np.allclose(kp.coords, (k1, k2), atol=1e-13)


def test_inconsistent_coords_rejected():
    with pytest.raises(ValueError):
        KPoint(0.1 + 0j, (1.0, 0.0))


def test_negated():
    kp = kpoint_from_coords(0.3, -0.2).negated()
    assert kp.coords == (-0.3, 0.2)


@pytest.mark.parametrize("z, expected", [(0, (0.0, 0.0)), (2j * OMEGA, (1.0, 0.0))])
def test_rect_coordinates(z, expected):
    assert np.allclose(rect_from_complex(z), expected, atol=1e-15)


def test_stacking_point_rect_coordinates():
    # z_S = 2 i w y1 + 2 i w^2 y2 is solved by (-2 pi / 9, 2 pi / 9).
    y = rect_from_complex(Z_S)
    assert np.allclose(y, (-2 * np.pi / 9, 2 * np.pi / 9), atol=1e-14)
    assert abs(complex_from_rect(*y) - Z_S) < 1e-14


def test_rect_vectorised(rng):
    z = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    y1, y2 = rect_from_complex(z)
    assert np.allclose(complex_from_rect(y1, y2), z, atol=1e-14)


@pytest.mark.parametrize("k, member", [
    (0, True),
    (OMEGA**2 / (2 * SQRT3), False),
    (OMEGA**2 / SQRT3 + OMEGA / SQRT3, True),
])
def test_dual_lattice_membership(k, member):
    assert is_dual_lattice_point(kpoint_from_complex(k)) is member
