"""Bloch bands, resolvent scans, pseudospectra and squeezing checks.

Sign convention: the Bloch operator is ``D(alpha) - k``.  Since the builder
produces ``D(alpha) + k`` from dual coordinates, bands at ``k`` use the
coordinates ``(-k1, -k2)``.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.sparse as sp

from ._pool import pmap
from .errors import ValidationError
from .fourier_ops import build_D_alpha
from .lattice import OMEGA, SQRT3, KPoint, kpoint_from_complex, kpoint_from_coords
from .potential import STANDARD
from .spectral import resolvent_norm, smallest_singular

SQUEEZE_C0 = 10.0
SQUEEZE_C1 = 1.0


def _kp(kp):
    if isinstance(kp, KPoint):
        return kp.with_coords()
    if isinstance(kp, complex):
        return kpoint_from_complex(kp)
    return kpoint_from_coords(*kp)


def bloch_operator(N, kp, alpha, spec=STANDARD):
    """Truncation of ``D(alpha) - k``."""
    kp = _kp(kp)
    return build_D_alpha(N, kp.negated(), alpha, spec)


def band_spectrum(N, kp, alpha, count=1, spec=STANDARD):
    """``count`` smallest band energies ``E_j(k, alpha)``, ascending."""
    op = bloch_operator(N, kp, alpha, spec)
    return [s for s, _ in smallest_singular(op, count)]


@dataclass
class BandTable:
    kpath: List[KPoint]
    alpha: float
    bands: np.ndarray
    N_used: int

    def to_csv(self):
        lines = ["alpha,k1,k2,j,E"]
        for kp, row in zip(self.kpath, self.bands):
            for j, e in enumerate(row):
                lines.append(f"{self.alpha!r},{kp.k1!r},{kp.k2!r},{j},{float(e)!r}")
        return "\n".join(lines) + "\n"


def default_path(steps=41):
    """``k = t omega / sqrt(3)`` for ``t`` in ``[-1/2, 1/2]``."""
    return [kpoint_from_complex(t * OMEGA / SQRT3) for t in np.linspace(-0.5, 0.5, steps)]


def band_path(N, path, alpha, count=1, spec=STANDARD):
    if not path:
        raise ValidationError("path must be non-empty")
    path = [_kp(k) for k in path]
    bands = np.array([band_spectrum(N, k, alpha, count, spec) for k in path])
    return BandTable(path, float(alpha), bands, int(N))


@dataclass
class SqueezeReport:
    k: complex
    c0: float
    c1: float
    N: int
    rows: list = field(default_factory=list)

    @property
    def violations(self):
        return [r for r in self.rows if not r["pass"]]

    @property
    def passed(self):
        return not self.violations


def squeeze_check(kp, alphas, N, c0=SQUEEZE_C0, c1=SQUEEZE_C1, spec=STANDARD, count=1):
    """Compare the lowest ``count`` bands with ``c0 exp(-c1 alpha)``."""
    kp = _kp(kp)
    rep = SqueezeReport(kp.k, c0, c1, int(N))
    for a in alphas:
        if a < 0:
            raise ValidationError("alphas must be non-negative")
        bound = c0 * np.exp(-c1 * a)
        energies = band_spectrum(N, kp, a, count, spec)
        rep.rows.append({"alpha": float(a), "E": [float(e) for e in energies], "bound": float(bound),
                         "pass": bool(max(energies) <= bound)})
    return rep


def resolvent_scan_alpha(kp, alphas, N, spec=STANDARD, threads=1):
    """``[(alpha, log ||(D(alpha) - k)^{-1}||), ...]`` over the given alphas."""
    kp = _kp(kp)
    alphas = [float(a) for a in alphas]
    norms = pmap(lambda a: resolvent_norm(bloch_operator(N, kp, a, spec)), alphas, threads)
    return [(a, float(np.log(r))) for a, r in zip(alphas, norms)]


def alpha_grid(start, stop, step):
    """Inclusive grid used by the scans; empty when ``stop < start``."""
    if step <= 0:
        raise ValidationError("step must be positive")
    if stop < start:
        return np.zeros(0)
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


@dataclass
class PseudospectrumGrid:
    k_re: np.ndarray
    k_im: np.ndarray
    lognorm: np.ndarray
    marked: np.ndarray
    level: float

    def to_csv(self):
        lines = ["k_re,k_im,lognorm"]
        for i in range(self.k_re.size):
            lines.append(f"{float(self.k_re.flat[i])!r},{float(self.k_im.flat[i])!r},{float(self.lognorm.flat[i])!r}")
        return "\n".join(lines) + "\n"


def pseudospectrum_grid(alpha, k_window, resolution, N, level=1e2, spec=STANDARD, threads=1):
    """Resolvent norm of ``D(alpha) - k`` on a rectangular grid of complex ``k``.

    Parameters
    ----------
    k_window : (re_min, re_max, im_min, im_max)
    level : float
        Points with resolvent norm ``>= level`` are marked.
    """
    if resolution < 2:
        raise ValidationError("resolution must be >= 2")
    re0, re1, im0, im1 = k_window
    kr, ki = np.meshgrid(np.linspace(re0, re1, resolution), np.linspace(im0, im1, resolution),
                         indexing="xy")

    def point(idx):
        kp = kpoint_from_complex(complex(kr[idx], ki[idx]))
        return np.log(resolvent_norm(bloch_operator(N, kp, alpha, spec)))

    logn = np.array(pmap(point, np.ndindex(kr.shape), threads)).reshape(kr.shape)
    marked = logn >= np.log(level) if np.isfinite(level) else np.isinf(logn)
    return PseudospectrumGrid(kr, ki, logn, marked, float(level))


def protected_mode_check(alpha, N, spec=STANDARD):
    """``sigma_min`` of the truncated ``D(alpha)`` at ``k = 0``."""
    op = build_D_alpha(N, (0.0, 0.0), alpha, spec)
    return smallest_singular(op, 1)[0][0]


def hamiltonian(N, kp, alpha, spec=STANDARD):
    """Four-block Hermitian ``[[0, (D - k)^*], [D - k, 0]]`` (small-N cross-checks only)."""
    d = bloch_operator(N, kp, alpha, spec).matrix
    return sp.bmat([[None, d.conj().T], [d, None]], format="csr")
