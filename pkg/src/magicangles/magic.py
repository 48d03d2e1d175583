"""Resonant set ``A`` (reciprocals of eigenvalues of ``T_k``) and the real magic set."""

import json
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ._pool import pmap
from .bands import _kp, bloch_operator
from .errors import FlatObjective, InsufficientData, ValidationError
from .fourier_ops import build_D_alpha, build_reduced_B, build_T
from .lattice import is_dual_lattice_point
from .potential import STANDARD
from .spectral import EigenRequest, eigs, resolvent_norm, sigma_min

CLUSTER_RTOL = 1e-6
REAL_RTOL = 1e-7
LOW_CONFIDENCE_ABS = 8.0
GOLDEN_ITERS = 40
FLAT_TOL = 1e-3


@dataclass
class ResonantEntry:
    alpha: complex
    multiplicity: int
    source: str
    residual: float
    confidence: str

    @property
    def is_magic(self):
        a = self.alpha
        return a.real > 0 and abs(a.imag) <= REAL_RTOL * abs(a)


@dataclass
class ResonantSet:
    entries: List[ResonantEntry]
    N_used: int
    kpoint: Tuple[float, float]
    source: str
    is_real_potential: bool = True

    @property
    def alphas(self):
        return np.array([e.alpha for e in self.entries])

    @property
    def magic(self):
        """Positive real entries sorted ascending."""
        return sorted((e for e in self.entries if e.is_magic), key=lambda e: e.alpha.real)

    def to_dict(self):
        return {
            "alphas": [{"re": e.alpha.real, "im": e.alpha.imag, "mult": e.multiplicity,
                        "confidence": e.confidence} for e in self.entries],
            "N": self.N_used,
            "k": list(self.kpoint),
            "source": self.source,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self):
        rows = ["re,im,mult"]
        rows += [f"{e.alpha.real!r},{e.alpha.imag!r},{e.multiplicity}" for e in self.entries]
        return "\n".join(rows) + "\n"


def _cluster(values, residuals):
    """Group eigenvalues closer than ``CLUSTER_RTOL`` relative; returns (mean, count, max residual)."""
    order = np.lexsort((values.imag, values.real, -np.abs(values)))
    clusters = []
    for i in order:
        v = values[i]
        for c in clusters:
            if abs(v - c[0]) <= CLUSTER_RTOL * max(abs(v), abs(c[0])):
                c[1].append(v)
                c[2] = max(c[2], residuals[i])
                break
        else:
            clusters.append([v, [v], residuals[i]])
    return [(complex(np.mean(c[1])), len(c[1]), float(c[2])) for c in clusters]


def _sort_key(e):
    a = e.alpha
    return (round(abs(a), 10), round(a.real, 10), round(a.imag, 10))


def resonant_set(N, kp, spec=STANDARD, count=20, source=None):
    """Reciprocal eigenvalues of the truncated ``T_k``.

    Parameters
    ----------
    source : {"B_reduced", "T_full", None}
        ``None`` selects ``B_reduced`` for the standard potential.  ``B_reduced``
        eigenvalues ``lambda`` give ``alpha = +-1/sqrt(lambda)``.
    """
    kp = _kp(kp)
    if is_dual_lattice_point(kp):
        raise ValidationError("k must not lie in the dual lattice")
    if source is None:
        source = "B_reduced" if spec.is_standard else "T_full"
    if source == "B_reduced" and not spec.is_standard:
        raise ValidationError("the reduced operator exists only for the standard potential")
    if source not in ("B_reduced", "T_full"):
        raise ValidationError(f"unknown source {source!r}")
    op = build_reduced_B(N, kp) if source == "B_reduced" else build_T(N, kp, spec)
    entries = []
    if op.matrix.nnz:
        count = min(count, op.shape[0] - 1)
        res = eigs(op, EigenRequest("largest_magnitude", count=count, tol=1e-8))
        vals = res.values
        resid = np.array([p.residual for p in res.pairs])
        keep = np.abs(vals) > 1e-12 * max(1.0, np.max(np.abs(vals)))
        for lam, mult, r in _cluster(vals[keep], resid[keep]):
            roots = [1 / np.sqrt(lam), -1 / np.sqrt(lam)] if source == "B_reduced" else [1 / lam]
            for a in roots:
                conf = "low" if abs(a) > LOW_CONFIDENCE_ABS else "high"
                entries.append(ResonantEntry(complex(a), mult, source, r, conf))
    entries.sort(key=_sort_key)
    return ResonantSet(entries, int(N), kp.coords, source, spec.is_real)


def magic_alphas(rs, jmax):
    """First ``jmax`` positive real entries with the gaps to their successors."""
    mags = [e.alpha.real for e in rs.magic]
    if not mags:
        raise InsufficientData("resonant set has no positive real entries")
    if len(mags) < jmax:
        raise InsufficientData(f"only {len(mags)} positive real entries, {jmax} requested")
    out = []
    for j in range(jmax):
        gap = mags[j + 1] - mags[j] if j + 1 < len(mags) else None
        out.append((mags[j], gap))
    return out


def _objective(N, kp, spec):
    def f(alpha):
        s = sigma_min(build_D_alpha(N, kp, alpha, spec))
        return math.log(max(s, 1e-300))
    return f


def refine_alpha(alpha0, N, kp, window, spec=STANDARD, iters=GOLDEN_ITERS):
    """Minimise ``log sigma_min(D_k(alpha))`` over ``[alpha0 - window, alpha0 + window]``.

    Golden-section search with ``iters`` iterations.

    Raises
    ------
    FlatObjective
        If the sampled objective varies by less than ``1e-3`` or the minimiser
        sits on the window edge, i.e. the window holds no interior resonance.
    """
    if alpha0 <= 0:
        raise ValidationError("alpha0 must be positive")
    if window < 0:
        raise ValidationError("window must be non-negative")
    if window == 0:
        return float(alpha0)
    kp = _kp(kp)
    f = _objective(N, kp, spec)
    lo, hi = alpha0 - window, alpha0 + window
    invphi = (math.sqrt(5) - 1) / 2
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    samples = [f(lo), fc, fd, f(hi)]
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
            samples.append(fc)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
            samples.append(fd)
    best = (lo + hi) / 2
    spread = max(samples) - min(samples)
    edge = min(best - (alpha0 - window), (alpha0 + window) - best) < 1e-3 * window
    if spread < FLAT_TOL or edge:
        raise FlatObjective(f"no interior resonance in [{alpha0 - window}, {alpha0 + window}] "
                            f"(objective spread {spread:.3g}, edge={edge})")
    return float(best)


@dataclass
class KIndependenceReport:
    alpha: float
    N: int
    norms: List[float]

    @property
    def min_norm(self):
        return min(self.norms)


def fundamental_grid(n=3):
    """``n x n`` dual-coordinate grid avoiding the dual lattice: ``(i + 1/2) / n``."""
    pts = (np.arange(n) + 0.5) / n
    return [(float(a), float(b)) for a in pts for b in pts]


def k_independence_check(alpha, kgrid, N, spec=STANDARD, threads=1):
    """Resolvent norms ``||(D(alpha) - k)^{-1}||`` over ``kgrid``; see ``min_norm``."""
    if not kgrid:
        raise ValidationError("kgrid must be non-empty")
    kps = [_kp(k) for k in kgrid]
    if any(is_dual_lattice_point(kp) for kp in kps):
        raise ValidationError("grid points must avoid the dual lattice")
    norms = pmap(lambda kp: float(resolvent_norm(bloch_operator(N, kp, alpha, spec))), kps, threads)
    return KIndependenceReport(float(alpha), int(N), norms)


@dataclass
class SymmetryReport:
    checked: int
    unmatched: List[complex] = field(default_factory=list)
    skipped: bool = False
    notice: str = ""

    @property
    def passed(self):
        return not self.skipped and not self.unmatched


def symmetry_check(rs_or_alphas, first=None, rtol=1e-5, exempt_boundary=True):
    """Check that ``-alpha`` and ``conj(alpha)`` accompany every ``alpha``.

    Entries whose partner would fall beyond the largest computed modulus are
    exempt, since the truncated list can cut a symmetric orbit.
    """
    if isinstance(rs_or_alphas, ResonantSet):
        if not rs_or_alphas.is_real_potential:
            return SymmetryReport(0, skipped=True, notice="complex coefficients: symmetry not implied")
        alphas = rs_or_alphas.alphas
    else:
        alphas = np.asarray(rs_or_alphas, dtype=complex)
    pool = alphas
    test = alphas if first is None else alphas[:first]
    rmax = np.max(np.abs(pool)) if pool.size else 0.0
    unmatched = []
    for a in test:
        if exempt_boundary and abs(a) >= rmax * (1 - 1e-3):
            continue
        for partner in (-a, np.conj(a)):
            if np.min(np.abs(pool - partner)) > rtol * abs(a):
                unmatched.append(complex(a))
                break
    return SymmetryReport(len(test), unmatched)
