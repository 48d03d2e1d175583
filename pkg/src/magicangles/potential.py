"""Chiral tunnelling potentials ``U = sum_n a_n f_n`` with ``n = 1 mod 3``.

``f_n(z) = sum_{k=0}^{2} omega^k exp((n/2)(z conj(omega)^k - conj(z) omega^k))``
and ``f_n(z) = f_1(n z)``.  In rectangular coordinates ``y`` (see
:mod:`magicangles.lattice`) ``f_n`` has the three Fourier frequencies
``(-n, -n)``, ``(2n, -n)`` and ``(-n, 2n)`` with weights ``1, omega, omega^2``.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import InvalidPotential
from .lattice import OMEGA, SQRT3, complex_from_rect

_ROT = OMEGA ** np.arange(3)


@dataclass(frozen=True)
class PotentialSpec:
    """Finitely supported coefficient map ``n -> a_n``.

    Parameters
    ----------
    coeffs : dict
        Integer keys with ``n % 3 == 1``; complex values.
    """

    coeffs: Dict[int, complex] = field(default_factory=lambda: {1: 1.0})

    def __post_init__(self):
        clean = {}
        for n, a in dict(self.coeffs).items():
            if isinstance(n, bool) or int(n) != n:
                raise InvalidPotential(f"coefficient index {n!r} is not an integer")
            n = int(n)
            if n % 3 != 1:
                raise InvalidPotential(f"coefficient index {n} is not 1 mod 3")
            clean[n] = complex(a)
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def n_max(self):
        return max((abs(n) for n in self.coeffs), default=0)

    @property
    def is_real(self):
        return all(a.imag == 0 for a in self.coeffs.values())

    @property
    def is_standard(self):
        return self.coeffs == {1: 1.0 + 0j}

    def to_json(self):
        return json.dumps({"coeffs": {str(n): [a.real, a.imag] for n, a in self.coeffs.items()}},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        try:
            raw = data["coeffs"]
            coeffs = {int(n): complex(v[0], v[1]) for n, v in raw.items()}
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidPotential(f"malformed potential JSON: {exc}") from exc
        return cls(coeffs)

    def label(self):
        return ";".join(f"{n}:{a.real:.17g}{a.imag:+.17g}j" for n, a in self.coeffs.items())


STANDARD = PotentialSpec({1: 1.0})


def standard():
    return STANDARD


def mu_potential(mu):
    """``U + mu f_{-2}``, the one-parameter family used for deformations."""
    return PotentialSpec({1: 1.0, -2: mu})


def parse_potential(text):
    """Parse ``std`` or ``mu=<float>``."""
    text = text.strip()
    if text == "std":
        return STANDARD
    if text.startswith("mu="):
        try:
            return mu_potential(float(text[3:]))
        except ValueError as exc:
            raise InvalidPotential(f"bad mu value in {text!r}") from exc
    raise InvalidPotential(f"unknown potential preset {text!r}")


def _exponents(n, z):
    z = np.asarray(z, dtype=np.complex128)
    conj_rot = np.conj(_ROT)
    return 0.5 * n * (z[..., None] * conj_rot - np.conj(z)[..., None] * _ROT)


def eval_fn(n, z):
    """Evaluate ``f_n`` at ``z`` by its three-term definition."""
    val = np.sum(_ROT * np.exp(_exponents(n, z)), axis=-1)
    return complex(val) if np.ndim(val) == 0 else val


def eval_dfn(n, z):
    """Wirtinger derivative ``d f_n / dz`` evaluated term by term."""
    val = 0.5 * n * np.sum(np.exp(_exponents(n, z)), axis=-1)
    return complex(val) if np.ndim(val) == 0 else val


def eval_U(spec, z, reflect=1):
    """``U(z)`` for ``reflect=+1`` or ``U(-z)`` for ``reflect=-1``."""
    z = reflect * np.asarray(z, dtype=np.complex128)
    val = sum(a * eval_fn(n, z) for n, a in spec.coeffs.items())
    return complex(val) if np.ndim(val) == 0 else val


def eval_dU(spec, z):
    """``(d U / d z)(z)``."""
    val = sum(a * eval_dfn(n, z) for n, a in spec.coeffs.items())
    return complex(val) if np.ndim(val) == 0 else val


def check_symmetries(spec, samples=50, seed=0):
    """Maximal defects of the translation and rotation identities of ``U``.

    Checks ``U(z + a) = conj(omega) U(z)`` for ``a = (4/3) pi i omega^l``,
    ``l = 1, 2`` and ``U(omega z) = omega U(z)`` at pseudo-random points.

    Returns
    -------
    dict
        ``{"translation": float, "rotation": float, "max": float, "samples": int}``
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-6, 6, samples) + 1j * rng.uniform(-6, 6, samples)
    uz = eval_U(spec, z)
    trans = 0.0
    for ell in (1, 2):
        a = 4j * np.pi * OMEGA**ell / 3
        trans = max(trans, float(np.max(np.abs(eval_U(spec, z + a) - np.conj(OMEGA) * uz))))
    rot = float(np.max(np.abs(eval_U(spec, OMEGA * z) - OMEGA * uz)))
    return {"translation": trans, "rotation": rot, "max": max(trans, rot), "samples": samples}


def bracket_sum(spec):
    """``sum_n n Re(a_n)``; the squeezing condition requires it to be non-zero."""
    return float(sum(n * a.real for n, a in spec.coeffs.items()))


def dU_at_origin(spec):
    """``(d U / d z)(0) = (3/2) sum_n n a_n``."""
    return 1.5 * complex(sum(n * a for n, a in spec.coeffs.items()))


def bracket_field(spec, z):
    """Magnitude of the semiclassical bracket ``|Im(conj(sqrt V) dV/dz)|``.

    ``V(z) = U(z) U(-z)``; with the Wirtinger derivative
    ``dV/dz = U'(z) U(-z) - U(z) U'(-z)``.  The magnitude does not depend on
    the branch of the square root.
    """
    z = np.asarray(z, dtype=np.complex128)
    up, um = eval_U(spec, z), eval_U(spec, -z)
    v = up * um
    dv = eval_dU(spec, z) * um - up * eval_dU(spec, -z)
    val = np.abs(np.imag(np.conj(np.sqrt(v)) * dv))
    return float(val) if val.ndim == 0 else val


def fourier_shifts(spec, reflect=1):
    """Fourier frequencies and weights of ``sqrt(3) U(reflect * z)`` in ``y``-coordinates.

    Returns
    -------
    list of ((int, int), complex)
        ``sqrt(3) U(+-z(y)) = sum w exp(i <s, y>)`` over the returned pairs.
    """
    out: List[Tuple[Tuple[int, int], complex]] = []
    for n, a in spec.coeffs.items():
        for (s1, s2), w in (((-n, -n), 1.0), ((2 * n, -n), OMEGA), ((-n, 2 * n), OMEGA**2)):
            out.append(((reflect * s1, reflect * s2), SQRT3 * w * a))
    return out


def eval_from_shifts(shifts, y1, y2):
    """Evaluate ``sum w exp(i <s, y>) / sqrt(3)``; used to cross-check :func:`fourier_shifts`."""
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    return sum(w * np.exp(1j * (s1 * y1 + s2 * y2)) for (s1, s2), w in shifts) / SQRT3


def eval_U_rect(spec, y1, y2, reflect=1):
    return eval_U(spec, complex_from_rect(y1, y2), reflect)
