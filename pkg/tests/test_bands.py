import numpy as np
import pytest
import scipy.sparse as sp

from magicangles.bands import (SqueezeReport, alpha_grid, band_path, band_spectrum, bloch_operator,
                               default_path, hamiltonian, protected_mode_check,
                               pseudospectrum_grid, resolvent_scan_alpha, squeeze_check)
from magicangles.errors import ValidationError
from magicangles.fourier_ops import build_D_alpha
from magicangles.lattice import K_STAR, OMEGA, SQRT3, kpoint_from_coords
from magicangles.potential import PotentialSpec

ALPHA1_REFINED = 0.5856635583969314


def test_sign_convention():
    kp = kpoint_from_coords(0.3, -0.1)
    a = bloch_operator(6, kp, 1.2).toarray()
    b = build_D_alpha(6, (-0.3, 0.1), 1.2).toarray()
    assert np.array_equal(a, b)


def test_free_bands_at_origin():
    e = band_spectrum(4, 0j, 0.0, count=3)
    assert e[0] == 0 and e[1] == 0 and e[2] > 0.1


def test_rows_sorted_nonnegative():
    table = band_path(8, default_path(5), 1.0, count=3)
    assert table.bands.shape == (5, 3)
    assert np.all(table.bands >= 0)
    assert np.all(np.diff(table.bands, axis=1) >= 0)


def test_single_point_path():
    table = band_path(8, [K_STAR], 2.0, count=2)
    assert np.allclose(table.bands[0], band_spectrum(8, K_STAR, 2.0, count=2))
    with pytest.raises(ValidationError):
        band_path(8, [], 2.0)


def test_free_path_vanishes_at_origin():
    path = default_path(5)
    assert abs(path[2].k) < 1e-15
    table = band_path(6, path, 0.0)
    assert table.bands[2, 0] < 1e-15
    # Away from the origin the free band is |k| times sqrt 3 / sqrt 3 = |k|.
    assert table.bands[0, 0] == pytest.approx(abs(path[0].k))


def test_default_path_geometry():
    path = default_path(3)
    assert abs(path[0].k + OMEGA / (2 * SQRT3)) < 1e-15
    assert abs(path[-1].k - OMEGA / (2 * SQRT3)) < 1e-15


@pytest.mark.parametrize("N", [3, 5])
def test_hermitian_cross_check(rng, N):
    for _ in range(2):
        kp = kpoint_from_coords(*rng.uniform(-0.5, 0.5, 2))
        alpha = rng.uniform(0, 3)
        ev = np.linalg.eigvalsh(hamiltonian(N, kp, alpha).toarray())
        bands = band_spectrum(N, kp, alpha, count=4)
        pos = np.sort(ev[ev > -1e-12])[:4]
        assert np.allclose(pos, bands, atol=1e-10)
        assert np.allclose(np.sort(ev), -np.sort(ev)[::-1], atol=1e-10)


def test_flat_band_at_refined_parameter():
    for kp in [K_STAR, kpoint_from_coords(0.2, 0.7), kpoint_from_coords(0.45, 0.1)]:
        assert band_spectrum(32, kp, ALPHA1_REFINED)[0] < 1e-6


@pytest.mark.slow
def test_bands_default_path_squeezed():
    table = band_path(32, default_path(), 5.0)
    assert table.bands[:, 0].max() <= 10 * np.exp(-5)


def test_bands_converged_in_N():
    assert abs(band_spectrum(48, K_STAR, 5.0)[0] - band_spectrum(64, K_STAR, 5.0)[0]) < 1e-8


def test_squeeze_report():
    rep = squeeze_check(K_STAR, [0.0, 3.0], 24)
    assert isinstance(rep, SqueezeReport)
    assert rep.rows[0]["bound"] == 10 and rep.rows[0]["pass"]
    assert rep.passed
    with pytest.raises(ValidationError):
        squeeze_check(K_STAR, [-1.0], 8)


def test_squeeze_report_without_bracket_condition():
    rep = squeeze_check(K_STAR, [2.0, 4.0], 16, spec=PotentialSpec({1: 1, -2: 0.5}))
    assert len(rep.rows) == 2 and all("E" in r for r in rep.rows)


def _local_maxima(scan):
    a = np.array(scan)
    v = a[:, 1]
    idx = [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]
    return a[idx]


@pytest.mark.slow
def test_resolvent_scan_peaks():
    scan = resolvent_scan_alpha(K_STAR, alpha_grid(0, 3, 0.01), 32)
    peaks = _local_maxima(scan)
    assert len(peaks) == 2
    assert abs(peaks[0, 0] - 0.5857) <= 0.01
    assert abs(peaks[1, 0] - 2.2212) <= 0.01


def test_resolvent_scan_envelope():
    scan = resolvent_scan_alpha(K_STAR, alpha_grid(3, 6, 0.25), 32)
    for a, logn in scan:
        assert logn >= np.log(0.1) + a


def test_alpha_grid():
    assert alpha_grid(1, 0, 0.1).size == 0
    assert resolvent_scan_alpha(K_STAR, alpha_grid(1, 0, 0.1), 8) == []
    assert np.allclose(alpha_grid(0, 1, 0.25), [0, 0.25, 0.5, 0.75, 1])
    with pytest.raises(ValidationError):
        alpha_grid(0, 1, 0)


def test_resolvent_scan_threads_agree():
    alphas = [0.5, 1.0, 1.5]
    assert resolvent_scan_alpha(K_STAR, alphas, 8, threads=1) == resolvent_scan_alpha(K_STAR, alphas, 8, threads=2)


def test_pseudospectrum_free_operator():
    # Window around 0 and 1/sqrt 3 (both in the dual lattice).
    grid = pseudospectrum_grid(0.0, (-0.05, 0.65, -0.05, 0.05), 15, 6, level=1e2)
    d = np.minimum(np.abs(grid.k_re + 1j * grid.k_im), np.abs(grid.k_re + 1j * grid.k_im - 1 / SQRT3))
    # sigma_min of the free operator is |k - gamma*|, so the marked set is the 1e-2 discs.
    assert np.array_equal(grid.marked, d <= 1e-2 + 1e-15)
    assert grid.to_csv().startswith("k_re,k_im,lognorm\n")


def test_pseudospectrum_flat_band_marks_everything():
    grid = pseudospectrum_grid(ALPHA1_REFINED, (-0.3, 0.3, -0.3, 0.3), 3, 32, level=1e2)
    assert grid.marked.all()


def test_pseudospectrum_infinite_level():
    grid = pseudospectrum_grid(0.0, (-0.1, 0.1, -0.1, 0.1), 3, 4, level=np.inf)
    assert grid.marked.sum() == 1 and grid.marked[1, 1]
    with pytest.raises(ValidationError):
        pseudospectrum_grid(0.0, (0, 1, 0, 1), 1, 4)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, 2.5])
def test_protected_mode(alpha):
    assert protected_mode_check(alpha, 16) < 1e-10


def test_protected_mode_at_magic_parameter():
    assert protected_mode_check(ALPHA1_REFINED, 16) < 1e-10


def test_csv():
    table = band_path(4, [K_STAR], 1.0, count=2)
    lines = table.to_csv().splitlines()
    assert lines[0] == "alpha,k1,k2,j,E" and len(lines) == 3
