"""Eigenvalue and smallest-singular-value solvers for complex non-Hermitian matrices.

Small problems are solved densely with LAPACK; large sparse problems use
ARPACK (shift-invert through a sparse LU for eigenvalues near a shift) and
block inverse iteration on ``A^* A`` through one sparse LU for the smallest
singular values.
"""

import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotConverged, SingularShift, ValidationError

DENSE_LIMIT = 5000
DENSE_PREFERRED = 600
SINGULAR_SENTINEL = 1e-14
SHIFT_PERTURBATION = 1e-8


@dataclass(frozen=True)
class EigenRequest:
    """What to compute.

    ``mode`` is ``"largest_magnitude"`` or ``"nearest_shift"`` (then ``sigma`` is used).
    ``tol`` is a residual bound relative to ``max(1, ||A||_1)``.
    """

    mode: str = "largest_magnitude"
    count: int = 1
    sigma: Optional[complex] = None
    tol: float = 1e-10
    max_iter: Optional[int] = None

    def __post_init__(self):
        if self.mode not in ("largest_magnitude", "nearest_shift"):
            raise ValidationError(f"unknown eigen mode {self.mode!r}")
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if self.mode == "nearest_shift" and self.sigma is None:
            raise ValidationError("nearest_shift requires sigma")


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float
    condition: Optional[float] = None


@dataclass
class EigenResult:
    pairs: List[EigenPair] = field(default_factory=list)
    converged: bool = True
    method: str = "dense"

    @property
    def values(self):
        return np.array([p.value for p in self.pairs])

    @property
    def vectors(self):
        return np.column_stack([p.vector for p in self.pairs]) if self.pairs else np.zeros((0, 0))


def _norm1(a):
    if sp.issparse(a):
        return float(abs(a).sum(axis=0).max()) if a.nnz else 0.0
    return float(np.abs(a).sum(axis=0).max()) if a.size else 0.0


def _order(vals, req):
    if req.mode == "largest_magnitude":
        key = -np.abs(vals)
    else:
        key = np.abs(vals - req.sigma)
    # Stable tie-break on (re, im) for reproducible output.
    return np.lexsort((vals.imag, vals.real, np.round(key, 12)))


def _finish(a, vals, vecs, req, method, conds=None):
    scale = max(1.0, _norm1(a))
    idx = _order(vals, req)[:req.count]
    pairs = []
    for i in idx:
        v = vecs[:, i]
        v = v / np.linalg.norm(v)
        res = float(np.linalg.norm(a @ v - vals[i] * v))
        pairs.append(EigenPair(complex(vals[i]), v, res, None if conds is None else float(conds[i])))
    bad = [p.residual for p in pairs if p.residual > req.tol * scale]
    if bad:
        raise NotConverged(f"{len(bad)} eigenpairs above residual tolerance", [p.residual for p in pairs])
    return EigenResult(pairs, True, method)


def _dense_eigs(a, req):
    dense = a.toarray() if sp.issparse(a) else np.asarray(a)
    vals, left, right = sla.eig(dense, left=True, right=True)
    left = left / np.linalg.norm(left, axis=0)
    right = right / np.linalg.norm(right, axis=0)
    overlap = np.abs(np.einsum("ij,ij->j", left.conj(), right))
    with np.errstate(divide="ignore"):
        conds = np.where(overlap > 0, 1.0 / overlap, np.inf)
    return _finish(dense, vals, right, req, "dense", conds)


def eigs(matrix, req=None, perturb_singular_shift=True):
    """Selected eigenpairs of a square matrix.

    Parameters
    ----------
    matrix : ndarray or sparse matrix or TruncatedOperator
    req : EigenRequest
    perturb_singular_shift : bool
        On an exactly singular shift-invert factorisation, retry once with
        ``sigma * (1 + 1e-8)`` instead of raising :class:`SingularShift`.

    Returns
    -------
    EigenResult
        Unit-norm eigenvectors with residuals ``||A v - lambda v||``.  Dense
        solves also report eigenvalue condition numbers ``1 / |y^* x|``.
    """
    req = req or EigenRequest()
    a = getattr(matrix, "matrix", matrix)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValidationError("matrix must be square")
    if req.count > n:
        raise ValidationError("count exceeds matrix dimension")
    if n <= DENSE_PREFERRED or req.count >= n - 2 or not sp.issparse(a):
        if n > DENSE_LIMIT and not sp.issparse(a):
            raise ValidationError("dense input above the dense size limit")
        return _dense_eigs(a, req)
    a = a.tocsc()
    ncv = min(n, max(2 * req.count + 1, 20, req.count + 40))
    # Fixed start vector: ARPACK otherwise seeds itself randomly, which makes
    # repeated runs differ in the last bits.
    v0 = np.random.default_rng(0).standard_normal(n).astype(np.result_type(a.dtype, np.float64))
    kwargs = dict(k=req.count, ncv=ncv, tol=0, maxiter=req.max_iter, v0=v0)
    try:
        if req.mode == "largest_magnitude":
            vals, vecs = spla.eigs(a, which="LM", **kwargs)
        else:
            sigma = complex(req.sigma)
            try:
                vals, vecs = spla.eigs(a, sigma=sigma, which="LM", **kwargs)
            except RuntimeError as exc:
                if not perturb_singular_shift:
                    raise SingularShift(str(exc)) from exc
                sigma = sigma * (1 + SHIFT_PERTURBATION) if sigma != 0 else SHIFT_PERTURBATION
                vals, vecs = spla.eigs(a, sigma=sigma, which="LM", **kwargs)
    except spla.ArpackNoConvergence as exc:
        if n <= DENSE_LIMIT:
            return _dense_eigs(a, req)
        raise NotConverged(f"ARPACK did not converge: {exc}") from exc
    try:
        return _finish(a, vals, vecs, req, "arpack")
    except NotConverged:
        if n <= DENSE_LIMIT:
            return _dense_eigs(a, req)
        raise


# ---------------------------------------------------------------------------
# Smallest singular values
# ---------------------------------------------------------------------------

def _is_diagonal(a):
    if not sp.issparse(a):
        return False
    coo = a.tocoo()
    return bool(np.all(coo.row == coo.col))


def _dense_smallest(a, count):
    dense = a.toarray() if sp.issparse(a) else np.asarray(a)
    _, s, vh = sla.svd(dense)
    out = []
    for i in range(1, count + 1):
        out.append((float(s[-i]), vh[-i].conj()))
    return out


def _singular_residuals(a, ah, s, v, floor):
    # Backward residual ||A^* u - s v|| with u = A v / s.  A Ritz value below
    # ``floor`` is itself a backward error bound (||A v|| = s), so it counts as converged.
    av = a @ v
    out = np.zeros(v.shape[1])
    for i in range(v.shape[1]):
        if s[i] > floor:
            out[i] = np.linalg.norm(ah @ (av[:, i] / s[i]) - s[i] * v[:, i])
    return out


def _converged(a, ah, s_all, v, norm, tol):
    """Per-value convergence of the wanted Ritz triplets.

    Returns ``(ok, at_noise)``.  A value is ``ok`` when its backward residual
    is below ``tol * norm`` or when the Kato-Temple estimate ``r^2 / gap`` on
    ``A^* A`` bounds the relative error of ``s^2`` by ``tol``; ``gap`` is
    measured to the first Ritz value outside the value's cluster.  The second
    route covers tiny values, whose backward residual is inflated by ``1 / s``.
    ``at_noise`` flags eigen-residuals ``r`` at the rounding level of ``A^* A``.
    """
    count = v.shape[1]
    s = s_all[:count]
    ok = _singular_residuals(a, ah, s, v, 1e-12 * norm) <= tol * norm
    r = np.linalg.norm(ah @ (a @ v) - v * s**2, axis=0)
    for i in range(count):
        outside = s_all[s_all > s[i] * (1 + 1e-6) + 1e-14 * norm]
        if outside.size:
            gap = outside[0] ** 2 - s[i] ** 2
            ok[i] |= r[i] ** 2 / gap <= tol * s[i] ** 2
    return ok, r <= 64 * np.finfo(float).eps * norm**2


def _sparse_smallest(a, count, max_iter=60):
    """Smallest singular triplets by block inverse iteration; returns ``(pairs, converged)``."""
    a = a.tocsc()
    n = a.shape[0]
    norm = max(1.0, _norm1(a))
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        lu = spla.splu(a, permc_spec="COLAMD")

    # Block inverse iteration on A^* A followed by Rayleigh-Ritz on A X.  Unlike
    # Lanczos on the inverse, this keeps full accuracy for every wanted value
    # even when the smallest ones are many orders of magnitude apart.
    p = min(n, count + 6)
    rng = np.random.default_rng(12345)
    x, _ = np.linalg.qr(rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p)))
    ah = a.conj().T.tocsr()
    prev = None
    settled = False
    for it in range(max_iter):
        y = lu.solve(lu.solve(x, trans="H"))
        x, _ = np.linalg.qr(y)
        _, s_all, vh = np.linalg.svd(a @ x, full_matrices=False)
        s_all = s_all[::-1]
        s = s_all[:count]
        v = (x @ vh.conj().T)[:, ::-1][:, :count]
        if it >= 2:
            settled = prev is not None and np.allclose(s, prev, rtol=1e-10, atol=1e-14 * norm)
            ok, _ = _converged(a, ah, s_all, v, norm, 1e-12)
            if np.all(ok):
                break
            if settled:
                loose, noise = _converged(a, ah, s_all, v, norm, 1e-10)
                if np.all(loose | noise):
                    break
        prev = s
    # Values that stopped moving with a residual at rounding level cannot be
    # improved further in double precision and are accepted.
    final, noise = _converged(a, ah, s_all, v, norm, 1e-9)
    pairs = [(float(s[i]), v[:, i] / np.linalg.norm(v[:, i])) for i in range(count)]
    return pairs, bool(np.all(final | (settled & noise)))


def smallest_singular(matrix, count=1, method="auto"):
    """``count`` smallest singular values with right singular vectors, ascending.

    Parameters
    ----------
    matrix : ndarray, sparse matrix or TruncatedOperator
    count : int
    method : {"auto", "dense", "sparse"}

    Returns
    -------
    list of (float, ndarray)
    """
    a = getattr(matrix, "matrix", matrix)
    n = a.shape[0]
    if count < 1 or count > n:
        raise ValidationError("count out of range")
    if _is_diagonal(a):
        d = np.asarray(a.diagonal())
        idx = np.lexsort((np.arange(n), np.abs(d)))[:count]
        out = []
        for i in idx:
            v = np.zeros(n, dtype=np.complex128)
            v[i] = 1.0
            out.append((float(abs(d[i])), v))
        return out
    use_dense = method == "dense" or (method == "auto" and (n <= DENSE_PREFERRED or not sp.issparse(a)))
    if use_dense:
        if n > DENSE_LIMIT:
            raise ValidationError("dense singular values requested above the dense size limit")
        return _dense_smallest(a, count)
    try:
        out, ok = _sparse_smallest(sp.csc_matrix(a), count)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        if n <= DENSE_LIMIT:
            return _dense_smallest(a, count)
        raise NotConverged(f"sparse smallest singular value failed: {exc}") from exc
    if not ok:
        if n <= DENSE_LIMIT:
            return _dense_smallest(a, count)
        raise NotConverged("smallest singular triplets above residual tolerance")
    return out


def sigma_min(matrix, method="auto"):
    return smallest_singular(matrix, 1, method)[0][0]


def resolvent_norm(matrix, lam=0.0, method="auto"):
    """``||(A - lam I)^{-1}|| = 1 / sigma_min(A - lam I)``; ``inf`` when ``sigma_min < 1e-14``."""
    a = getattr(matrix, "matrix", matrix)
    if lam != 0:
        if sp.issparse(a):
            a = (a - lam * sp.identity(a.shape[0], format="csr")).tocsr()
        else:
            a = np.asarray(a) - lam * np.eye(a.shape[0])
    s = sigma_min(a, method)
    return np.inf if s < SINGULAR_SENTINEL else 1.0 / s
