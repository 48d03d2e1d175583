import warnings

import numpy as np
import pytest

from magicangles.errors import BadTau, PoleAtLattice, ValidationError
from magicangles.lattice import OMEGA, Z_S, kpoint_from_coords
from magicangles.theta import (TAU_PRIME, ThetaParams, bloch_recipe, eval_kernel, flip,
                               greens_function, kernel_vector, alternative_prefactor_ratio,
                               sector_projector, theta, theta_p, theta_zero, wronskian,
                               wronskian_value)

ALPHA1_REFINED = 0.5856635583969314


def _draws(rng, n=100):
    a, b = rng.uniform(-1, 1, (2, n))
    z = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    return a, b, z


def _rel(x, y):
    return np.abs(x - y) / np.maximum(np.abs(y), 1e-300)


def test_periodicity_in_one(rng):
    for a, b, z in zip(*_draws(rng)):
        assert _rel(theta(a, b, z + 1), np.exp(2j * np.pi * a) * theta(a, b, z)) < 1e-12


def test_quasi_periodicity_in_tau(rng):
    tau = OMEGA
    for a, b, z in zip(*_draws(rng)):
        lhs = theta(a, b, z + tau)
        rhs = np.exp(-2j * np.pi * (z + b) - 1j * np.pi * tau) * theta(a, b, z)
        assert _rel(lhs, rhs) < 1e-12


def test_characteristic_shifts(rng):
    for a, b, z in zip(*_draws(rng)):
        assert _rel(theta(a + 1, b, z), theta(a, b, z)) < 1e-12
        assert _rel(theta(a, b + 1, z), np.exp(2j * np.pi * a) * theta(a, b, z)) < 1e-12


def test_vectorised_and_params(rng):
    a, b, z = 0.2, -0.3, rng.standard_normal(6) + 1j * rng.standard_normal(6)
    vec = theta(a, b, z)
    assert np.allclose(vec, [theta(a, b, w) for w in z], rtol=1e-15)
    assert theta_p(ThetaParams(a, b, z[0])) == theta(a, b, z[0])


def test_derivative_matches_finite_difference():
    z, h = 0.3 + 0.1j, 1e-5
    fd = (theta(0.1, 0.2, z + h) - theta(0.1, 0.2, z - h)) / (2 * h)
    assert abs(theta(0.1, 0.2, z, order=1) - fd) < 1e-8 * abs(fd)


def test_bad_tau():
    with pytest.raises(BadTau):
        theta(0, 0, 0, tau=1.0)
    with pytest.raises(BadTau):
        ThetaParams(0, 0, 0, -1j)
    with pytest.raises(BadTau):
        theta_zero(0, 0, 0.5 - 1j, 1, 0)


def test_zero_at_origin():
    assert abs(theta(0.5, 0.5, 0.0)) < 1e-13


def test_zero_locations():
    assert abs(theta_zero(0.5, 0.5, OMEGA, 1, 0)) < 1e-15
    z = theta_zero(-1 / 6, 1 / 6, OMEGA, 1, 0)
    assert abs(z - (2 / 3 * OMEGA + 1 / 3)) < 1e-15
    assert theta_zero(0.3, 0.1, OMEGA, 1, 0) == pytest.approx(theta_zero(1.3, 0.1, OMEGA, 2, 0), abs=1e-15)
    for n, m in [(0, 0), (1, 2), (-1, 1)]:
        w = theta_zero(0.2, -0.1, OMEGA, n, m)
        scale = abs(theta(0.2, -0.1, w, order=1))
        assert abs(theta(0.2, -0.1, w)) < 1e-12 * scale


def test_sector_projector_is_projection():
    p = sector_projector(4)
    assert np.allclose(p * p, p)
    assert p[81 // 2] == 1


def test_kernel_at_zero_alpha():
    u = kernel_vector(6, 0.0)
    e1 = np.zeros_like(u.coeffs)
    e1[0, 6, 6] = 1
    assert np.array_equal(u.coeffs, e1)
    vals = eval_kernel(u, np.array([0.3, 1 + 2j, -4j]))
    assert np.allclose(vals[0], 1) and np.allclose(vals[1], 0)
    assert wronskian_value(u) == 1


def test_kernel_at_alpha_one():
    u = kernel_vector(16, 1.0)
    assert u.sigma_min < 1e-9
    assert u.projection_change < 1e-8
    assert abs(np.linalg.norm(u.flat) - 1) < 1e-14
    c = u.coeffs[0, 16, 16]
    assert c.real > 0 and abs(c.imag) < 1e-15 * c.real


def test_warns_near_magic():
    with pytest.warns(RuntimeWarning, match="magic"):
        kernel_vector(16, ALPHA1_REFINED)


# The vanishing is a rotation symmetry that the square window breaks, so each
# alpha is paired with a truncation that resolves its kernel vector.
@pytest.mark.parametrize("alpha, N", [(0.3, 16), (1.0, 24), (2.0, 32), (ALPHA1_REFINED, 16)])
def test_second_component_vanishes_at_stacking_points(alpha, N):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = kernel_vector(N, alpha)
    grid = np.linspace(0, 2 * np.pi, 40)
    from magicangles.lattice import complex_from_rect
    y1, y2 = np.meshgrid(grid, grid)
    sup = np.max(np.abs(eval_kernel(u, complex_from_rect(y1, y2))))
    assert np.all(np.abs(eval_kernel(u, np.array([Z_S, -Z_S]))[1]) < 1e-8 * sup)


def test_kernel_vanishes_at_stacking_point_near_magic():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = kernel_vector(16, ALPHA1_REFINED)
    from magicangles.lattice import complex_from_rect
    grid = np.linspace(0, 2 * np.pi, 40)
    y1, y2 = np.meshgrid(grid, grid)
    sup = np.max(np.abs(eval_kernel(u, complex_from_rect(y1, y2))))
    assert np.max(np.abs(eval_kernel(u, Z_S))) / sup < 1e-3


def test_wronskian_constant_at_alpha_one():
    _, defect = wronskian(kernel_vector(24, 1.0))
    assert defect < 1e-8


def test_wronskian_defect_tracks_residual():
    us = [kernel_vector(16, a) for a in (0.2, 0.5, 1.0, 2.0)]
    defects = [wronskian(u)[1] for u in us]
    assert np.all(np.diff(defects) > 0)
    assert np.all(np.diff([u.sigma_min for u in us[1:]]) > 0)


def test_wronskian_vanishes_at_magic_parameter():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert abs(wronskian_value(kernel_vector(16, ALPHA1_REFINED))) < 1e-3


@pytest.mark.filterwarnings("ignore:alpha is close to a magic value")
def test_wronskian_sign_change():
    v0 = wronskian_value(kernel_vector(16, 0.58))
    v1 = wronskian_value(kernel_vector(16, 0.59))
    assert abs(v0.imag) < 1e-12 and abs(v1.imag) < 1e-12
    assert v0.real * v1.real < 0


def test_flip_is_involution_up_to_sign():
    u = kernel_vector(8, 0.7)
    assert np.allclose(flip(flip(u)).coeffs, -u.coeffs)


def test_recipe_trivial_momentum():
    u = kernel_vector(16, 1.0)
    res = bloch_recipe(u, (0, 0))
    z = np.array([0.3 + 0.2j, -1.1j])
    base = flip(u) if res.used_flip else u
    assert np.allclose(res.function(z), eval_kernel(base, z), atol=1e-13)
    assert res.residual < 1e-10


def test_recipe_at_magic_parameter():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        u = kernel_vector(16, ALPHA1_REFINED)
    assert bloch_recipe(u, (0.5, 0)).residual < 1e-2


def test_recipe_fails_off_magic():
    assert bloch_recipe(kernel_vector(16, 1.0), (0.5, 0)).residual > 0.1


def test_greens_quasi_periodicity(rng):
    kp = kpoint_from_coords(0.3, 0.15)
    a = TAU_PRIME
    for z in rng.uniform(-3, 3, 10) + 1j * rng.uniform(-3, 3, 10):
        phase = np.exp(-0.5j * (np.conj(kp.k) * a + kp.k * np.conj(a)))
        assert abs(greens_function(kp, z + a) - phase * greens_function(kp, z)) < 1e-10 * abs(greens_function(kp, z))


def test_greens_residue():
    kp = kpoint_from_coords(0.3, 0.15)
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    z = 0.1 * np.exp(1j * t)
    integral = np.sum(greens_function(kp, z) * 1j * z) * (2 * np.pi / 400)
    assert abs(integral / (2j * np.pi) - 1j / (2 * np.pi)) < 1e-8


def test_greens_holomorphic_off_lattice():
    kp = kpoint_from_coords(0.3, 0.15)
    z, h = 1 + 1j, 1e-4
    dx = (greens_function(kp, z + h) - greens_function(kp, z - h)) / (2 * h)
    dy = (greens_function(kp, z + 1j * h) - greens_function(kp, z - 1j * h)) / (2 * h)
    assert abs((dx + 1j * dy) / 2) < 1e-8


def test_greens_errors():
    with pytest.raises(PoleAtLattice):
        greens_function((0.3, 0.1), 0.0)
    with pytest.raises(ValidationError):
        greens_function((1, 0), 0.5)


def test_alternative_prefactor_is_k_dependent():
    r1 = alternative_prefactor_ratio((0.3, 0.15))
    r2 = alternative_prefactor_ratio((0.1, 0.4))
    assert abs(r1 - r2) > 1e-3
