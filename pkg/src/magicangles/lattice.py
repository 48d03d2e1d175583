"""Hexagonal moire lattice, its dual, and coordinate changes.

Conventions
-----------
* ``omega = exp(2 pi i / 3)``.
* Periodicity lattice ``Gamma = 4 pi (i omega Z + i omega^2 Z)``.
* Dual lattice ``Gamma* = (omega Z + omega^2 Z) / sqrt(3)``.
* Bloch momenta carry dual coordinates ``(k1, k2)`` with
  ``k = (omega^2 k1 - omega k2) / sqrt(3)``.
* Rectangular coordinates ``(y1, y2)`` on the torus ``R^2 / 2 pi Z^2`` with
  ``z = 2 i omega y1 + 2 i omega^2 y2``.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

OMEGA = np.exp(2j * np.pi / 3)
SQRT3 = np.sqrt(3.0)
LATTICE_TOL = 1e-12


@dataclass(frozen=True)
class ExactPoint:
    """A special point stored both as a float and as an exact expression."""

    value: complex
    expr: str


@dataclass(frozen=True)
class LatticeGeometry:
    gamma_basis: Tuple[complex, complex] = (4j * np.pi * OMEGA, 4j * np.pi * OMEGA**2)
    dual_basis: Tuple[complex, complex] = (OMEGA / SQRT3, OMEGA**2 / SQRT3)
    gamma3_basis: Tuple[complex, complex] = (4j * np.pi * OMEGA / 3, 4j * np.pi * OMEGA**2 / 3)
    omega: complex = OMEGA
    z_S: ExactPoint = ExactPoint(4 * SQRT3 * np.pi / 9, "4*sqrt(3)*pi/9")
    k_star: ExactPoint = ExactPoint(1 / (2 * SQRT3) + 1j / 6, "1/(2*sqrt(3)) + i/6")


GEOMETRY = LatticeGeometry()
Z_S = GEOMETRY.z_S.value
K_STAR = GEOMETRY.k_star.value


def pairing(gamma, kappa):
    """Real pairing ``(gamma conj(kappa) + conj(gamma) kappa) / 2``."""
    return float(np.real(gamma * np.conj(kappa)))


def _coords_from_complex(k):
    # Solve k = (w^2 k1 - w k2)/sqrt3 for real (k1, k2).
    a = np.array([[np.real(OMEGA**2), -np.real(OMEGA)],
                  [np.imag(OMEGA**2), -np.imag(OMEGA)]]) / SQRT3
    k1, k2 = np.linalg.solve(a, [np.real(k), np.imag(k)])
    return float(k1), float(k2)


@dataclass(frozen=True)
class KPoint:
    """Bloch momentum with optional dual-lattice coordinates."""

    k: complex
    coords: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.coords is not None:
            k1, k2 = self.coords
            ref = (OMEGA**2 * k1 - OMEGA * k2) / SQRT3
            if abs(ref - self.k) >= 1e-14 * max(1.0, abs(ref)) + 1e-14:
                raise ValueError("KPoint coords inconsistent with complex value")

    def with_coords(self):
        """Return a copy with coordinates populated."""
        if self.coords is not None:
            return self
        return KPoint(self.k, _coords_from_complex(self.k))

    @property
    def k1(self):
        return self.with_coords().coords[0]

    @property
    def k2(self):
        return self.with_coords().coords[1]

    def negated(self):
        kc = self.with_coords()
        return KPoint(-kc.k, (-kc.coords[0], -kc.coords[1]))


def kpoint_from_coords(k1, k2):
    """Build a :class:`KPoint` from dual coordinates.

    Examples
    --------
    >>> kpoint_from_coords(1, 0).k == OMEGA**2 / np.sqrt(3)
    True
    """
    k1 = float(k1)
    k2 = float(k2)
    return KPoint((OMEGA**2 * k1 - OMEGA * k2) / SQRT3, (k1, k2))


def kpoint_from_complex(k):
    """Build a :class:`KPoint` from its complex value, solving for the coordinates."""
    k = complex(k)
    return KPoint(k, _coords_from_complex(k))


_RECT = np.array([[np.real(2j * OMEGA), np.real(2j * OMEGA**2)],
                  [np.imag(2j * OMEGA), np.imag(2j * OMEGA**2)]])
_RECT_INV = np.linalg.inv(_RECT)


def rect_from_complex(z):
    """Rectangular coordinates ``(y1, y2)`` with ``z = 2 i omega y1 + 2 i omega^2 y2``.

    Vectorised: accepts scalars or arrays and returns a pair of like-shaped values.
    """
    z = np.asarray(z, dtype=np.complex128)
    y1 = _RECT_INV[0, 0] * z.real + _RECT_INV[0, 1] * z.imag
    y2 = _RECT_INV[1, 0] * z.real + _RECT_INV[1, 1] * z.imag
    if z.ndim == 0:
        return float(y1), float(y2)
    return y1, y2


def complex_from_rect(y1, y2):
    """Inverse of :func:`rect_from_complex`."""
    return 2j * OMEGA * np.asarray(y1) + 2j * OMEGA**2 * np.asarray(y2)


def is_dual_lattice_point(kp, tol=LATTICE_TOL):
    """True iff ``kp`` lies in ``Gamma*`` to absolute tolerance ``tol``."""
    k1, k2 = kp.with_coords().coords
    return abs(k1 - round(k1)) < tol and abs(k2 - round(k2)) < tol
