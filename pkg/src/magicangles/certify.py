"""A-posteriori certification of the first three magic parameters.

Truncation errors of the symmetry-reduced operator ``B = B_k`` (at
``k = (1/2, 0)``) are controlled by Schatten-norm bounds; the eigenvalue
``alpha_j^-8`` of ``B^4`` is localised by a resolvent bound on a circle.
Every step is deterministic (fixed circle sampling, fixed start vectors),
so the required truncations are reproducible exactly.  Every certificate is "rigorous
modulo the solver": smallest singular values and eigenpairs come from
floating-point LAPACK/SuperLU computations that are trusted, not verified.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._pool import pmap
from .errors import BadN, CertificationFailed, EigenvalueNotIsolated, ValidationError
from .fourier_ops import build_reduced_B, project_B4, zero_pad
from .spectral import EigenRequest, eigs, sigma_min

#: Reference magic parameters used as circle centres.
ALPHA_REF = (0.585663, 2.221182, 3.7514055)
#: Isolation radii of ``alpha_j^-8`` in the spectrum of ``B^4`` (given constants).
ISOLATION_RADIUS = (72.2, 0.0017, 2.383e-5)
CERT_K = (0.5, 0.0)
J_THRESHOLD = 0.5
REDUCED_CONSTANT = 10.23
DISCLOSURE = ("rigorous modulo floating-point smallest singular values (SuperLU/LAPACK) "
              "and the ARPACK eigenpair; no interval arithmetic")


def rho(N, p, j):
    """``prod_{l<p} (1 - (2l + j)/N)^(-1 + 2j/p)``."""
    if p < 1 or N <= 2 * (p - 1) + j:
        raise BadN(f"rho needs N > 2(p-1)+j, got N={N}, p={p}, j={j}")
    expo = -1.0 + 2.0 * j / p
    out = 1.0
    for ell in range(p):
        out *= (1.0 - (2 * ell + j) / N) ** expo
    return out


def schatten_tail_bound(N, p):
    """``(trace-norm bound, operator-norm bound)`` for ``T^p - Pi_N T^p Pi_N``."""
    if p < 3 or N < 2 * p:
        raise BadN(f"need N >= 2p >= 6, got N={N}, p={p}")
    trace = 4 * math.pi * 54 ** (p / 2) * rho(N, p, 1) / (math.sqrt(3) * (p - 2) * N ** (p - 2))
    op = 6**p * 2 * rho(N, p, 0) * float(N) ** (-p)
    return trace, op


def reduced_B4_bounds(N):
    """``(sixth root of the trace-norm bound, operator-norm bound)`` for ``B^4``."""
    if N <= 15:
        raise BadN(f"reduced bounds need N > 15, got {N}")
    return (REDUCED_CONSTANT * rho(N, 8, 1) ** (1 / 6) / N,
            6**8 * 2 * rho(N, 8, 0) * float(N) ** (-8))


def _op_factor(N):
    return 2 * 6**8 * rho(N, 8, 0) * float(N) ** (-8)


@dataclass
class CircleResult:
    C: float
    C0: float
    J: int
    mu: complex
    sine_term: float
    gap: float


def _nearest_eigs(B, target, count=2):
    res = eigs(B, EigenRequest("nearest_shift", count=count, sigma=target, tol=1e-8))
    return res.values


def circle_norm(epsilon, N_probe, beta, J_init=10, kp=CERT_K, threads=1):
    """Resolvent bound of ``Pi_N B^4 Pi_N`` on the circle of radius ``epsilon`` around ``mu``.

    ``mu`` is the eigenvalue nearest ``beta^-8``.  ``J`` doubles from
    ``J_init`` until ``2 eps C0 sin(pi / 2J) <= 1/2``; the returned bound is
    ``C = C0 / (1 - 2 eps C0 sin(pi / 2J))``.

    Raises
    ------
    EigenvalueNotIsolated
        If a second eigenvalue lies within ``2 epsilon`` of ``mu``.
    """
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    if J_init < 1:
        raise ValidationError("J_init must be positive")
    B = project_B4(N_probe, kp).matrix.tocsc()
    near = _nearest_eigs(B, beta ** (-8))
    mu = complex(near[0])
    gap = float(abs(near[1] - mu)) if len(near) > 1 else math.inf
    if gap <= 2 * epsilon:
        raise EigenvalueNotIsolated(f"second eigenvalue at distance {gap:.3g} <= 2 eps = {2 * epsilon:.3g}")
    eye = sp.identity(B.shape[0], format="csc")

    def inv_sigma(lam):
        return 1.0 / sigma_min((B - lam * eye).tocsc())

    J = int(J_init)
    while True:
        lams = mu + epsilon * np.exp(2j * np.pi * np.arange(J) / J)
        vals = pmap(inv_sigma, lams, threads)
        C0 = max(vals)
        d = 2 * C0 * epsilon * math.sin(math.pi / (2 * J))
        if d <= J_THRESHOLD:
            break
        J *= 2
    return CircleResult(C0 / (1 - d), C0, J, mu, d, gap)


@dataclass
class Certificate:
    target_index: int
    delta: float
    beta: float
    epsilon: float
    epsilon_branch: str
    N_probe: int
    N_required: int
    M: int
    J: int
    C_N_eps: float
    mu: complex
    status: str = "probe_only"
    backward_error: Optional[float] = None
    checks: dict = field(default_factory=dict)
    disclosure: str = DISCLOSURE

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["mu"] = [self.mu.real, self.mu.imag]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _check_target(j):
    if j not in (1, 2, 3):
        raise ValidationError("target index must be 1, 2 or 3")


def epsilon_for(delta, j):
    """``(epsilon, branch)`` with ``epsilon = min(rad_j / 5, beta^-8 - (beta + delta)^-8)``."""
    beta = ALPHA_REF[j - 1]
    from_delta = beta ** (-8) - (beta + delta) ** (-8)
    cap = ISOLATION_RADIUS[j - 1] / 5
    return (cap, "isolation_cap") if cap < from_delta else (from_delta, "delta")


def _required_N(C, epsilon):
    """Smallest ``M`` with the operator-norm condition, then the smallest ``N >= M`` with the trace condition."""
    M = 16
    c0 = C * _op_factor(M)
    while c0 > J_THRESHOLD:
        M += 1
        c0 = C * _op_factor(M)
    N = M
    ce = C / (1 - c0)
    c1 = REDUCED_CONSTANT * rho(N, 8, 1) ** (1 / 6)
    while (ce * C * epsilon) ** (1 / 6) * c1 > N:
        N += 1
        c1 = REDUCED_CONSTANT * rho(N, 8, 1) ** (1 / 6)
    return M, N


def guarantee(delta, j, N_probe=16, threads=1):
    """Truncation ``N`` for which the computed ``alpha_j`` is within ``delta``.

    The circle bound is measured at ``N_probe`` only, so the result carries
    ``status="probe_only"`` until :func:`verify_guarantee` repeats the
    measurement at the returned ``N``.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    _check_target(j)
    beta = ALPHA_REF[j - 1]
    eps, branch = epsilon_for(delta, j)
    circ = circle_norm(eps, N_probe, beta, threads=threads)
    M, N = _required_N(circ.C, eps)
    return Certificate(j, float(delta), beta, eps, branch, int(N_probe), N, M, circ.J, circ.C, circ.mu,
                       checks={"probe_sine_term": circ.sine_term, "probe_gap": circ.gap})


def verify_guarantee(cert, threads=1):
    """Repeat the circle bound at ``cert.N_required`` and check every inequality there.

    Raises
    ------
    CertificationFailed
        Naming the first violated inequality.
    """
    N, eps = cert.N_required, cert.epsilon
    try:
        circ = circle_norm(eps, N, cert.beta, threads=threads)
    except EigenvalueNotIsolated as exc:
        raise CertificationFailed(str(exc), "isolation") from exc
    C = circ.C
    checks = {"C_N_eps": C, "J": circ.J, "gap": circ.gap}
    checks["sine_term"] = circ.sine_term
    if circ.sine_term > J_THRESHOLD:
        raise CertificationFailed("circle sampling too coarse", "2 eps C0 sin(pi/2J) <= 1/2")
    if N <= 15:
        raise CertificationFailed(f"N={N} below the domain of the truncation bounds", "N > 15")
    op_term = C * _op_factor(N)
    checks["op_term"] = op_term
    if op_term >= J_THRESHOLD:
        raise CertificationFailed(f"operator-norm term {op_term:.3g} >= 1/2", "C rho0 / N^8 < 1/2")
    tr_term = eps * C * C * (REDUCED_CONSTANT * rho(N, 8, 1) ** (1 / 6) / N) ** 6 / (1 - op_term)
    checks["trace_term"] = tr_term
    if tr_term > 1:
        raise CertificationFailed(f"trace term {tr_term:.3g} > 1", "eps C^2 rho1 / N^6 (1 - d) <= 1")
    if circ.gap <= 2 * eps:
        raise CertificationFailed("eigenvalue not isolated", "isolation")
    out = dataclasses.replace(cert, status="certified", C_N_eps=C, J=circ.J, mu=circ.mu,
                              checks={**cert.checks, **{f"verify_{k}": v for k, v in checks.items()}})
    return out


def backward_error(N_small, N_large, j, operator="B"):
    """``||B_large v - lam v|| / ||v||`` for an eigenpair of ``B_small`` padded by zeros.

    Parameters
    ----------
    operator : {"B", "B4"}
        ``"B"`` uses the reduced operator and the eigenvalue nearest
        ``alpha_j^-2`` (the default); ``"B4"`` uses the projected
        ``B^4`` and ``alpha_j^-8``.
    """
    _check_target(j)
    if N_small > N_large:
        raise BadN("N_small must not exceed N_large")
    alpha = ALPHA_REF[j - 1]
    if operator == "B":
        build, target = build_reduced_B, alpha ** (-2)
    elif operator == "B4":
        build, target = project_B4, alpha ** (-8)
    else:
        raise ValidationError("operator must be 'B' or 'B4'")
    B1 = build(N_small, CERT_K).matrix
    pair = eigs(B1, EigenRequest("nearest_shift", count=1, sigma=target)).pairs[0]
    v = zero_pad(pair.vector, N_small, N_large)
    B2 = B1 if N_small == N_large else build(N_large, CERT_K).matrix
    return float(np.linalg.norm(B2 @ v - pair.value * v) / np.linalg.norm(v))
