"""Jacobi theta functions, kernel vectors, the Wronskian test and the Bloch recipe.

``theta_{a,b}(z | tau) = sum_n exp(pi i (a + n)^2 tau + 2 pi i (n + a)(z + b))``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from .bands import _kp, bloch_operator
from .errors import BadTau, DegenerateKernel, PoleAtLattice, PoleOnGrid, ValidationError
from .fourier_ops import Truncation, build_D_alpha
from .lattice import OMEGA, Z_S, complex_from_rect, rect_from_complex
from .potential import STANDARD
from .spectral import smallest_singular

TAIL_DIGITS = 17
TAU_PRIME = 4j * np.pi * OMEGA


def _halfwidth(tau):
    # exp(-pi Im(tau) d^2) < 10^-17 beyond distance d from the peak; three extra
    # terms absorb the polynomial growth of derivatives.
    return int(math.ceil(math.sqrt(TAIL_DIGITS * math.log(10) / (math.pi * tau.imag)))) + 3


@dataclass(frozen=True)
class ThetaParams:
    a: float
    b: float
    z: complex
    tau: complex = OMEGA

    def __post_init__(self):
        if complex(self.tau).imag <= 0:
            raise BadTau("Im tau must be positive")


def theta(a, b, z, tau=OMEGA, order=0):
    """``theta_{a,b}(z | tau)`` or its ``order``-th ``z``-derivative (vectorised in ``z``)."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise BadTau("Im tau must be positive")
    z_arr = np.asarray(z, dtype=np.complex128)
    val = _accel.theta_series(a, b, z_arr.ravel(), tau, _halfwidth(tau), order).reshape(z_arr.shape)
    return complex(val) if val.ndim == 0 else val


def theta_p(p, order=0):
    return theta(p.a, p.b, p.z, p.tau, order)


def theta_zero(a, b, tau, n, m):
    """Zero ``z_{n,m} = (n - 1/2 - a) tau + 1/2 - b - m``."""
    tau = complex(tau)
    if tau.imag <= 0:
        raise BadTau("Im tau must be positive")
    return (n - 0.5 - a) * tau + 0.5 - b - m


# ---------------------------------------------------------------------------
# Kernel vector at k = 0
# ---------------------------------------------------------------------------

def sector_projector(N):
    """Diagonal of the projector onto the sector containing ``e_1``.

    Obtained by averaging the nine translations ``L_a`` (twisted by
    ``diag(omega^{a1 + a2}, 1)``) against the character ``omega^{a1 + a2}``.
    A translation by ``a`` shifts ``y`` by ``(2 pi a1 / 3, 2 pi a2 / 3)``.
    """
    m, n = Truncation(N).mode_grid()
    acc = np.zeros(2 * m.size, dtype=np.complex128)
    for a1 in range(3):
        for a2 in range(3):
            phase = OMEGA ** (m * a1 + n * a2)
            twist = OMEGA ** (a1 + a2)
            action = np.concatenate([twist * phase, phase])
            acc += np.conj(twist) * action
    return np.real_if_close(acc / 9, tol=1000).real


@dataclass
class KernelVector:
    coeffs: np.ndarray  # shape (2, 2N+1, 2N+1)
    alpha: float
    N: int
    sector: str
    sigma_min: float
    projection_change: float

    @property
    def flat(self):
        return self.coeffs.reshape(-1)


def kernel_vector(N, alpha, spec=STANDARD, warn_near_magic=True):
    """Unit kernel vector of ``D(alpha)`` at ``k = 0`` in the sector of ``e_1``.

    The two smallest right singular vectors are projected onto the sector and
    the dominant combination is kept; the phase makes the ``(0, 0)`` coefficient
    of the first component real and positive.
    """
    op = build_D_alpha(N, (0.0, 0.0), alpha, spec)
    pairs = smallest_singular(op, 2)
    basis = np.column_stack([v for _, v in pairs])
    proj = sector_projector(N)[:, None] * basis
    _, s, vh = np.linalg.svd(proj, full_matrices=False)
    if pairs[1][0] < 1e-8 and s[1] > 0.5:
        raise DegenerateKernel("two independent near-kernel vectors in the sector")
    w = vh[0].conj()
    raw = basis @ w
    u = proj @ w
    change = float(np.linalg.norm(u - raw) / np.linalg.norm(raw))
    u = u / np.linalg.norm(u)
    L = 2 * N + 1
    c00 = u[N * L + N]
    if abs(c00) == 0:
        raise DegenerateKernel("kernel vector has no constant mode; phase undefined")
    u = u * (abs(c00) / c00)
    sig = float(np.linalg.norm(op.matrix @ u))
    kv = KernelVector(u.reshape(2, L, L), float(alpha), int(N), "rho_{1,0}", sig, change)
    if warn_near_magic and abs(wronskian_value(kv)) < 1e-2:
        warnings.warn("alpha is close to a magic value: non-normality limits how accurately "
                      "the kernel vector is resolved", RuntimeWarning, stacklevel=2)
    return kv


def eval_kernel(u, z):
    """Spinor components ``(psi_1(z), psi_2(z))``; ``z`` may be an array."""
    z = np.asarray(z, dtype=np.complex128)
    y1, y2 = rect_from_complex(z.ravel())
    y1 = np.atleast_1d(y1)
    y2 = np.atleast_1d(y2)
    out = np.stack([_accel.fourier_synthesis(u.coeffs[c], y1, y2) for c in range(2)])
    return out.reshape((2,) + z.shape)


def wronskian_value(u, z=0.0):
    p = eval_kernel(u, np.array([z, -z]))
    return complex(p[0, 0] * p[0, 1] + p[1, 0] * p[1, 1])


def default_zgrid(n=5, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 2 * np.pi, (2, n * n))
    return complex_from_rect(y[0], y[1])


def wronskian(u, zgrid=None):
    """``v = psi_1(z) psi_1(-z) + psi_2(z) psi_2(-z)`` on ``zgrid``.

    Returns
    -------
    (complex, float)
        Mean value and maximal deviation from it.
    """
    zgrid = default_zgrid() if zgrid is None else np.asarray(zgrid, dtype=np.complex128)
    p = eval_kernel(u, zgrid)
    q = eval_kernel(u, -zgrid)
    v = p[0] * q[0] + p[1] * q[1]
    mean = complex(np.mean(v))
    return mean, float(np.max(np.abs(v - mean)))


def flip(u):
    """``E u(z) = (-psi_2(-z), psi_1(-z))`` as a kernel vector (Fourier modes negated)."""
    c = u.coeffs
    out = np.stack([-c[1][::-1, ::-1], c[0][::-1, ::-1]])
    return KernelVector(out, u.alpha, u.N, "rho_{1,0}*E", u.sigma_min, u.projection_change)


# ---------------------------------------------------------------------------
# Bloch recipe and Green's function
# ---------------------------------------------------------------------------

def _recipe_factor(k1, k2, z):
    kc = (OMEGA**2 * k1 - OMEGA * k2) / np.sqrt(3)
    zeta = 3 * z / TAU_PRIME
    num = theta(-1 / 6 + k1 / 3, 1 / 6 - k2 / 3, zeta)
    den = theta(-1 / 6, 1 / 6, zeta)
    return np.exp(0.5j * (z * np.conj(kc) + np.conj(z) * kc)) * num / den


def _pole_distance(y1, y2):
    # Poles of the quotient sit at -z_S + Gamma_3, i.e. y = (2pi/9, -2pi/9) + (2pi/3) Z^2.
    py1, py2 = rect_from_complex(-Z_S)
    step = 2 * np.pi / 3
    d1 = np.abs((y1 - py1 + step / 2) % step - step / 2)
    d2 = np.abs((y2 - py2 + step / 2) % step - step / 2)
    return np.hypot(d1, d2)


@dataclass
class RecipeResult:
    function: object
    residual: float
    used_flip: bool
    grid: int


def bloch_recipe(u, kp, spec=STANDARD, grid=None):
    """Build ``u_k`` from a kernel vector via the theta-quotient recipe.

    The quotient's denominator vanishes on ``-z_S + Gamma_3``, so the recipe is
    applied to whichever of ``u`` and ``E u`` is smaller at ``-z_S``.

    Returns
    -------
    RecipeResult
        ``function(z)`` evaluates ``u_k``; ``residual`` is
        ``||(D(alpha) - k) P u_k|| / ||P u_k||`` with ``P`` the Fourier projection.
    """
    kp = _kp(kp)
    k1, k2 = kp.coords
    uf = flip(u)
    at = np.abs(eval_kernel(u, -Z_S))
    af = np.abs(eval_kernel(uf, -Z_S))
    used_flip = bool(np.max(af) < np.max(at))
    base = uf if used_flip else u
    N = u.N

    def fn(z):
        z = np.asarray(z, dtype=np.complex128)
        return _recipe_factor(k1, k2, z) * eval_kernel(base, z)

    M = grid or 4 * N + 4
    if M % 9 == 0:
        M += 1
    g = 2 * np.pi * np.arange(M) / M
    y1, y2 = np.meshgrid(g, g, indexing="ij")
    if np.min(_pole_distance(y1, y2)) < 1e-10:
        raise PoleOnGrid("recipe denominator vanishes on a grid node")
    vals = fn(complex_from_rect(y1, y2))
    L = 2 * N + 1
    modes = np.arange(-N, N + 1) % M
    coeffs = np.empty((2, L, L), dtype=np.complex128)
    for c in range(2):
        f = np.fft.fft2(vals[c]) / M**2
        coeffs[c] = f[np.ix_(modes, modes)]
    vec = coeffs.reshape(-1)
    op = bloch_operator(N, kp, u.alpha, spec)
    res = float(np.linalg.norm(op.matrix @ vec) / np.linalg.norm(vec))
    return RecipeResult(fn, res, used_flip, M)


def greens_function(kp, z):
    """Quasi-periodic Green's function of ``2 D_zbar - k`` with residue ``i / (2 pi)`` on ``Gamma``.

    Uses the dual coordinates of ``kp`` in the convention ``k = (omega^2 k1 - omega k2)/sqrt 3``
    and the normalisation
    ``c = i theta'_{1/2,1/2}(0) / (2 pi tau' theta_{1/2-k1, 1/2+k2}(0))``, ``tau' = 4 pi i omega``.
    """
    kp = _kp(kp)
    k1, k2 = kp.coords
    if abs(k1 - round(k1)) < 1e-12 and abs(k2 - round(k2)) < 1e-12:
        raise ValidationError("k must not lie in the dual lattice")
    z = np.asarray(z, dtype=np.complex128)
    y1, y2 = rect_from_complex(z)
    t1, t2 = np.asarray(y1) / (2 * np.pi), np.asarray(y2) / (2 * np.pi)
    if np.any(np.hypot(t1 - np.round(t1), t2 - np.round(t2)) * 2 * np.pi < 1e-8):
        raise PoleAtLattice("z lies on the period lattice")
    c = 1j * theta(0.5, 0.5, 0.0, order=1) / (2 * np.pi * TAU_PRIME * theta(0.5 - k1, 0.5 + k2, 0.0))
    val = c * theta(0.5 - k1, 0.5 + k2, z / TAU_PRIME) / theta(0.5, 0.5, z / TAU_PRIME)
    return complex(val) if np.ndim(val) == 0 else val


def alternative_prefactor_ratio(kp):
    """Ratio between an alternative closed-form prefactor and the normalisation above.

    The alternative is
    ``exp(-pi i k1^2 + 2 pi i k1 (1/2 + k2)) theta'(0) / (2 pi i theta_{1/2,1/2}(omega k1 + k2))``;
    a ratio different from 1 means that prefactor does not produce residue ``i/(2 pi)``.
    """
    kp = _kp(kp)
    k1, k2 = kp.coords
    alt = (np.exp(-1j * np.pi * k1**2 + 2j * np.pi * k1 * (0.5 + k2)) * theta(0.5, 0.5, 0.0, order=1)
           / (2j * np.pi * theta(0.5, 0.5, OMEGA * k1 + k2)))
    ours = 1j * theta(0.5, 0.5, 0.0, order=1) / (2 * np.pi * TAU_PRIME * theta(0.5 - k1, 0.5 + k2, 0.0))
    return complex(alt / ours)
