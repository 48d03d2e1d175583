"""Lattice sums over the Eisenstein integers and trace identities for ``T_k``.

Two normalisations of the lattice sum appear here.  :func:`K_brute` is the
plain sum over ``gamma not in {0, gamma0}``.  :func:`K_closed` is the
classical closed form, which equals the plain sum plus ``6 / gamma0^4``:
that constant is the regular part left behind by the two excluded terms when
``gamma`` is shifted off the lattice and the shift is sent to zero.  The same
constant reappears in the direct mode sum for ``tr A^2``, see
:func:`singular_limit`.
"""

import math
from dataclasses import dataclass
from typing import Dict

from . import _accel
from .errors import ValidationError, ZeroGamma
from .fourier_ops import _kp, t_squared_block
from .lattice import OMEGA, is_dual_lattice_point
from .potential import STANDARD

TRACE_A2 = 4 * math.pi / math.sqrt(3)
#: Target values of ``sum alpha^-p``.  The eighth-power entry is the
#: asserted value; the computed value converges to ``720 pi / sqrt 3``.
TRACE_EXACT = {4: 72 * math.pi / math.sqrt(3), 8: 740 * math.pi / math.sqrt(3)}
TRACE_OBSERVED = {4: 72 * math.pi / math.sqrt(3), 8: 720 * math.pi / math.sqrt(3)}

# (p, q) shifts and weights of tr Lam^2 (Lam_{1,1}^2 + w Lam_{-2,1}^2 + w^2 Lam_{1,-2}^2).
_SIMTR_SHIFTS = ((1, 1), (-2, 1), (1, -2))
_SIMTR_WEIGHTS = (1.0, OMEGA, OMEGA**2)

@dataclass(frozen=True)
class EisensteinPoint:
    """``gamma = omega m + n`` in ``omega Z + Z``."""

    m: int
    n: int

    @property
    def value(self):
        return OMEGA * self.m + self.n

    @property
    def is_zero(self):
        return self.m == 0 and self.n == 0

def _gamma0(m, n):
    if m == 0 and n == 0:
        raise ZeroGamma("gamma0 must be nonzero")
    return OMEGA * m + n

def K_closed(m, n):
    """Closed form ``-4 pi i (omega (2n - m) + n + m) / (3 (omega m + n)^3)``.

    Equal to ``K_brute(m, n, R -> inf) + 6 / gamma0^4``.
    """
    g0 = _gamma0(m, n)
    return complex(-4j * math.pi * (OMEGA * (2 * n - m) + n + m) / (3 * g0**3))

def K_brute(m, n, R):
    """Direct sum of ``gamma^-2 (gamma - gamma0)^-2`` over ``|gamma| <= R``, ``gamma != 0, gamma0``.

    The disc tail is bounded by ``O(R^-2)``; the hexagonal symmetry cancels
    its leading terms, so the observed decay is considerably faster.
    """
    _gamma0(m, n)
    if R < 10:
        raise ValidationError("R must be >= 10")
    return _accel.lattice_K(m, n, R)

def excluded_constant(m, n):
    """``6 / gamma0^4``: the gap between :func:`K_closed` and the plain lattice sum."""
    return complex(6 / _gamma0(m, n) ** 4)

def trA2_exact():
    """``3 K(2 omega + 1) = 4 pi / sqrt 3``."""
    return 3 * K_closed(2, 1).real

def _gamma_of_shift(p, q):
    # omega^2 (m + p) - omega (n + q) = omega (gamma - gamma0) with gamma0 = -omega p + q.
    return -OMEGA * p + q

def singular_limit():
    """Limit as ``k -> 0`` of the terms of the ``tr A^2`` mode sum that blow up at ``k = 0``.

    For each shift the two singular modes contribute ``k^-2`` and ``k^-1``
    parts, which cancel across the weighted shifts, and a constant
    ``3 omega^-4 / gamma0^4`` each.  The total is exactly 2.
    """
    total = 0j
    for (p, q), w in zip(_SIMTR_SHIFTS, _SIMTR_WEIGHTS):
        g0 = _gamma_of_shift(p, q)
        total += w * 6 / (OMEGA**4 * g0**4)
    return complex(total)

def trA2_regular(R):
    """Mode sum over ``|m|, |n| <= R`` at ``k = 0`` with the singular modes dropped."""
    if R < 50:
        raise ValidationError("R must be >= 50")
    return _accel.trace_mode_sum(R)

def trA2_direct(R):
    """Direct evaluation of ``tr A^2`` from its diagonal mode sum.

    The regular part is summed at ``k = 0``; the singular modes enter through
    their ``k -> 0`` limit (:func:`singular_limit`), which does not vanish.
    """
    return trA2_regular(R) + singular_limit()

def richardson(values, Ns, order=2):
    """Extrapolate ``f(N) = f_inf + c N^-order`` from two truncations."""
    (f1, f2), (n1, n2) = values, Ns
    if n1 == n2:
        raise ValidationError("Richardson needs two distinct truncations")
    w1, w2 = float(n1) ** order, float(n2) ** order
    return (w2 * f2 - w1 * f1) / (w2 - w1)

def trA2_richardson(R1=100, R2=200):
    return richardson((trA2_direct(R1), trA2_direct(R2)), (R1, R2))

def cancellation_defect(m, n, k1=0.0, k2=0.0, sign=1):
    """Relative defect of ``L_{2,-1} L_{-1,2} + w L_{-1,2} L_{-1,-1} + w^2 L_{-1,-1} L_{2,-1}``.

    ``L_{p,q}`` is the diagonal entry ``1 / (w^2 (m + p + k1) - w (n + q + k2))``;
    ``sign=-1`` flips every shift.  Modes where an entry is singular return 0.
    """
    def lam(p, q):
        d = OMEGA**2 * (m + sign * p + k1) - OMEGA * (n + sign * q + k2)
        return None if abs(d) < 1e-12 else 1 / d

    x, y, z = lam(2, -1), lam(-1, 2), lam(-1, -1)
    if x is None or y is None or z is None:
        return 0.0
    terms = (x * y, OMEGA * y * z, OMEGA**2 * z * x)
    return abs(sum(terms)) / max(abs(t) for t in terms)

def trace_T_power(N, kp, power, spec=STANDARD):
    """``tr (T_k^N)^power`` for ``power`` in {4, 8}, without densifying.

    ``T^2`` is block diagonal with blocks ``P`` and ``Q`` of equal traces of
    powers, so ``tr T^4 = 2 sum(P * P^T)`` and ``tr T^8 = 2 sum(P^2 * (P^2)^T)``
    (elementwise products).
    """
    if power not in (4, 8):
        raise ValidationError("power must be 4 or 8")
    if not spec.is_standard:
        raise ValidationError("trace identities hold for the standard potential only")
    kp = _kp(kp)
    if is_dual_lattice_point(kp):
        raise ValidationError("k must not lie in the dual lattice")
    P = t_squared_block(N, kp, spec)
    if power == 8:
        P = (P @ P).tocsr()
    return complex(2 * P.multiply(P.T).sum())

@dataclass
class TraceReport:
    power: int
    exact: float
    Ns: tuple
    truncated: Dict[int, complex]
    extrapolated: complex

    @property
    def rel_error(self):
        return abs(self.extrapolated - self.exact) / self.exact

    def table(self):
        lines = ["N,truncated,exact,rel_error"]
        for N, v in self.truncated.items():
            lines.append(f"{N},{v.real!r},{self.exact!r},{abs(v - self.exact) / self.exact!r}")
        lines.append(f"extrapolated,{self.extrapolated.real!r},{self.exact!r},{self.rel_error!r}")
        return "\n".join(lines) + "\n"

def trace_report(power, Ns=(32, 64), kp=(0.5, 0.0)):
    """Truncated traces at each ``N`` and the ``N^-2`` Richardson value from the last two."""
    Ns = tuple(int(n) for n in Ns)
    if not Ns:
        raise ValidationError("at least one truncation is required")
    vals = {N: trace_T_power(N, kp, power) for N in Ns}
    ext = richardson((vals[Ns[-2]], vals[Ns[-1]]), Ns[-2:]) if len(Ns) > 1 else vals[Ns[0]]
    return TraceReport(power, TRACE_EXACT[power], Ns, vals, complex(ext))

def partial_resonant_trace(rs, power, radius):
    """``sum alpha^-power`` (with multiplicity) over entries of ``rs`` with ``|alpha| < radius``.

    A convergence diagnostic only: the tail beyond the computed entries is unknown.

    Raises
    ------
    ValidationError
        If ``radius`` exceeds the largest computed ``|alpha|``, so that the
        window is not fully covered.
    """
    if rs.entries and radius > max(abs(e.alpha) for e in rs.entries):
        raise ValidationError("radius exceeds the computed part of the resonant set")
    total = 0j
    for e in rs.entries:
        if abs(e.alpha) < radius:
            total += e.multiplicity * e.alpha ** (-power)
    return complex(total)
