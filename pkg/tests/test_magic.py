import json

import numpy as np
import pytest

from magicangles.errors import FlatObjective, InsufficientData, ValidationError
from magicangles.lattice import K_STAR, kpoint_from_complex
from magicangles.magic import (ResonantEntry, ResonantSet, fundamental_grid, k_independence_check,
                               magic_alphas, refine_alpha, resonant_set, symmetry_check)
from magicangles.potential import PotentialSpec, mu_potential

KSTAR = kpoint_from_complex(K_STAR)


@pytest.fixture(scope="module")
def rs16():
    return resonant_set(16, (0.5, 0), count=30)


def test_first_magic_value(rs16):
    assert abs(rs16.magic[0].alpha.real - 0.585663) < 1e-6


def test_entries_sorted_with_both_signs(rs16):
    mods = np.abs(rs16.alphas)
    assert np.all(np.diff(mods) >= -1e-9)
    assert all(e.multiplicity >= 1 for e in rs16.entries)
    for e in rs16.entries:
        assert np.min(np.abs(rs16.alphas + e.alpha)) < 1e-9 * abs(e.alpha)


def test_zero_potential_gives_empty_set():
    rs = resonant_set(4, (0.5, 0), PotentialSpec({}), count=5)
    assert rs.entries == []
    with pytest.raises(InsufficientData):
        magic_alphas(rs, 1)


def test_reduced_source_requires_standard():
    with pytest.raises(ValidationError):
        resonant_set(4, (0.5, 0), mu_potential(0.2), source="B_reduced")
    with pytest.raises(ValidationError):
        resonant_set(4, (1, 0))


def test_full_and_reduced_sources_agree():
    red = resonant_set(12, (0.5, 0), count=10).magic[0].alpha
    full = resonant_set(12, (0.5, 0), count=10, source="T_full").magic[0].alpha
    assert abs(red - full) < 1e-8


def test_stability_in_N(rs16):
    rs12 = resonant_set(12, (0.5, 0), count=30)
    for a, b in zip(rs12.magic[:3], rs16.magic[:3]):
        assert abs(a.alpha - b.alpha) < 1e-6


def test_cluster_spread(rs16):
    for e in rs16.entries:
        assert e.residual < 1e-8


def test_magic_alphas_gaps():
    rs = resonant_set(32, (0.5, 0), count=20)
    (a1, g1), (a2, _) = magic_alphas(rs, 2)
    assert abs(g1 - 1.635519) < 1e-6
    assert abs(a2 - a1 - g1) < 1e-15


def _synthetic(alphas):
    return ResonantSet([ResonantEntry(complex(a), 1, "T_full", 0.0, "high") for a in alphas],
                       4, (0.5, 0.0), "T_full")


def test_magic_alphas_small_sets():
    assert magic_alphas(_synthetic([0.5857]), 1) == [(0.5857, None)]
    with pytest.raises(InsufficientData):
        magic_alphas(_synthetic([0.5857]), 2)


def test_refine_alpha():
    assert abs(refine_alpha(0.5857, 16, KSTAR, 0.01) - 0.585663) < 1e-6
    assert refine_alpha(0.5857, 16, KSTAR, 0.0) == 0.5857
    with pytest.raises(FlatObjective):
        refine_alpha(1.2, 16, KSTAR, 0.01)
    with pytest.raises(ValidationError):
        refine_alpha(-1.0, 16, KSTAR, 0.01)


@pytest.mark.parametrize("j", [0, 1, 2])
def test_refine_matches_eigenvalue_route(rs16, j):
    a = rs16.magic[j].alpha.real
    assert abs(refine_alpha(a, 16, KSTAR, 0.01) - a) < 1e-5


def test_refine_third_value_at_larger_truncation(rs16):
    a = rs16.magic[2].alpha.real
    assert abs(refine_alpha(a, 32, KSTAR, 0.01) - a) < 1e-5


def test_k_independence_validation():
    with pytest.raises(ValidationError):
        k_independence_check(1.0, [], 8)
    with pytest.raises(ValidationError):
        k_independence_check(1.0, [(0, 0)], 8)
    grid = fundamental_grid(3)
    assert len(grid) == 9 and (0.5, 0.5) in grid


def test_k_independence_threads_agree():
    grid = fundamental_grid(2)
    a = k_independence_check(1.0, grid, 8, threads=1).norms
    b = k_independence_check(1.0, grid, 8, threads=3).norms
    assert a == b


def test_symmetry_on_small_sets():
    assert symmetry_check([0.5857, -0.5857], exempt_boundary=False).passed
    assert not symmetry_check([0.5857, 0.3], exempt_boundary=False).passed


def test_symmetry_skipped_for_complex_coefficients():
    rs = resonant_set(6, (0.5, 0), PotentialSpec({1: 1, -2: 0.3j}), count=6)
    rep = symmetry_check(rs)
    assert rep.skipped and not rep.passed and rep.notice


def test_json_and_csv(rs16):
    data = json.loads(rs16.to_json())
    assert data["N"] == 16 and data["k"] == [0.5, 0.0]
    assert {"re", "im", "mult", "confidence"} <= set(data["alphas"][0])
    assert rs16.to_csv().startswith("re,im,mult\n")
