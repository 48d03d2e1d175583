"""Truncated Fourier-space operators.

Scalar functions on the torus are expanded as ``sum c[m, n] exp(i (m y1 + n y2))``
with ``(m, n)`` in the window ``[-N, N]^2``.  The linear index is
``(m + N)(2N + 1) + (n + N)`` (``m`` is the slow index, which matches
``scipy.sparse.kron`` with ``m`` acting through the first factor).

Multiplication by ``exp(i <s, y>)`` sends mode ``q`` to ``q + s``; in matrix
form the entry sits at row ``p`` and column ``p - s``.  Modes that leave the
window are dropped.

All two-block operators stack the spinor components as ``[psi_1; psi_2]``.
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np
import scipy.sparse as sp

from . import _accel
from .errors import BadTruncation, SingularDk, ValidationError
from .lattice import OMEGA, SQRT3, KPoint, kpoint_from_coords
from .potential import STANDARD, fourier_shifts

SINGULAR_TOL = 1e-12
KINDS = ("Dk", "Vplus", "Vminus", "Dalpha", "T", "Breduced", "B4projected")


@dataclass(frozen=True)
class Truncation:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise BadTruncation(f"truncation must be a non-negative integer, got {self.N!r}")

    @property
    def side(self):
        return 2 * self.N + 1

    @property
    def dim_scalar(self):
        return self.side**2

    def index(self, m, n):
        return (np.asarray(m) + self.N) * self.side + (np.asarray(n) + self.N)

    def modes(self, lin):
        lin = np.asarray(lin)
        return lin // self.side - self.N, lin % self.side - self.N

    def mode_grid(self):
        """Arrays ``(m, n)`` in linear-index order."""
        r = np.arange(-self.N, self.N + 1)
        m, n = np.meshgrid(r, r, indexing="ij")
        return m.ravel(), n.ravel()


@dataclass(frozen=True)
class TruncatedOperator:
    """Sparse matrix plus the grid metadata needed to interpret it."""

    matrix: sp.csr_matrix
    trunc: Truncation
    blocks: int
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown operator kind {self.kind!r}")
        expected = self.blocks * self.trunc.dim_scalar
        if self.matrix.shape != (expected, expected):
            raise ValidationError(f"matrix shape {self.matrix.shape} != {expected}")

    @property
    def N(self):
        return self.trunc.N

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self):
        return self.matrix.toarray()


def _as_trunc(N):
    return N if isinstance(N, Truncation) else Truncation(int(N))


def _coords(kp):
    if isinstance(kp, KPoint):
        kp = kp.with_coords()
        return kp.coords
    k1, k2 = kp
    return float(k1), float(k2)


def _kp(kp):
    if isinstance(kp, KPoint):
        return kp.with_coords()
    return kpoint_from_coords(*kp)


def dk_diagonal(N, k1, k2):
    """Diagonal of the free operator: ``omega^2 (m + k1) - omega (n + k2)``."""
    m, n = Truncation(N).mode_grid()
    return OMEGA**2 * (m + k1) - OMEGA * (n + k2)


def build_Dk(N, kp):
    """Diagonal free Dirac operator on the window (no ``1/sqrt(3)`` factor)."""
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    d = dk_diagonal(tr.N, k1, k2)
    return TruncatedOperator(sp.diags(d, format="csr"), tr, 1, "Dk", {"k": (k1, k2)})


def shift_matrix(N, shifts):
    """Sparse matrix of ``sum w exp(i <s, y>)`` for ``shifts = [((s1, s2), w), ...]``."""
    tr = _as_trunc(N)
    dim = tr.dim_scalar
    if not shifts:
        return sp.csr_matrix((dim, dim), dtype=np.complex128)
    s = np.array([sh for sh, _ in shifts], dtype=np.int64)
    w = np.array([wt for _, wt in shifts], dtype=np.complex128)
    rows, cols, vals = _accel.shift_coo(tr.N, s, w)
    return sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()


def build_V(N, spec=STANDARD, reflect=1):
    """Multiplication by ``sqrt(3) U(reflect * z)`` on the window."""
    tr = _as_trunc(N)
    kind = "Vplus" if reflect > 0 else "Vminus"
    mat = shift_matrix(tr, fourier_shifts(spec, reflect))
    return TruncatedOperator(mat, tr, 1, kind, {"spec": spec})


def build_D_alpha(N, kp, alpha, spec=STANDARD):
    """``(1/sqrt 3) [[Dk, alpha V+], [alpha V-, Dk]]`` on the window."""
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    d = sp.diags(dk_diagonal(tr.N, k1, k2))
    vp = build_V(tr, spec, 1).matrix
    vm = build_V(tr, spec, -1).matrix
    mat = sp.bmat([[d, alpha * vp], [alpha * vm, d]], format="csr") / SQRT3
    mat.eliminate_zeros()
    return TruncatedOperator(mat, tr, 2, "Dalpha",
                             {"k": (k1, k2), "alpha": complex(alpha), "spec": spec})


def _inverse_dk(tr, k1, k2):
    d = dk_diagonal(tr.N, k1, k2)
    if np.min(np.abs(d)) < SINGULAR_TOL:
        raise SingularDk(f"free operator singular at k=({k1}, {k2}); k lies in the dual lattice")
    return sp.diags(1.0 / d)


def build_T(N, kp, spec=STANDARD):
    """``[[0, Dk^-1 V+], [Dk^-1 V-, 0]]``; the ``sqrt(3)`` factors cancel."""
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    dinv = _inverse_dk(tr, k1, k2)
    up = (dinv @ build_V(tr, spec, 1).matrix).tocsr()
    lo = (dinv @ build_V(tr, spec, -1).matrix).tocsr()
    mat = sp.bmat([[None, up], [lo, None]], format="csr")
    if mat.nnz == 0:
        mat = sp.csr_matrix(mat.shape, dtype=np.complex128)
    return TruncatedOperator(mat, tr, 2, "T", {"k": (k1, k2), "spec": spec})


def t_squared_block(N, kp, spec=STANDARD):
    """Upper-left block of ``T^2``: ``Dk^-1 V+ Dk^-1 V-`` (scalar-space matrix)."""
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    dinv = _inverse_dk(tr, k1, k2)
    return (dinv @ build_V(tr, spec, 1).matrix @ dinv @ build_V(tr, spec, -1).matrix).tocsr()


# ---------------------------------------------------------------------------
# Symmetry-reduced operator (standard potential only)
# ---------------------------------------------------------------------------

def downsize_index(n_small, n_large):
    """Linear indices of the centered ``(2 n_small + 1)^2`` block inside the ``n_large`` grid."""
    n1, n2 = max(n_small, n_large), min(n_small, n_large)
    dn = n1 - n2
    L = 2 * n1 + 1
    return np.arange(L * L).reshape(L, L)[dn:dn + 2 * n2 + 1, dn:dn + 2 * n2 + 1].ravel()


def _reduced_resolvent(kc, N, j):
    # Inverse of the diagonal  w^2 (m - j/6) - w (n - j/6) - (w^2 Re k - w Im k).
    L = 2 * N + 1
    kk = np.arange(-N, N + 1) - j / 6
    diag = (OMEGA**2 * np.repeat(kk, L) - OMEGA * np.tile(kk, L)
            - (OMEGA**2 * kc.real - OMEGA * kc.imag))
    if np.min(np.abs(diag)) < SINGULAR_TOL:
        raise SingularDk("reduced resolvent is singular at this k")
    return sp.diags(1.0 / diag)


def _reduced_B_matrix(kc, N):
    N0, N = N, N + 2
    L = 2 * N + 1
    rp = _reduced_resolvent(kc, N, 1)
    rm = _reduced_resolvent(kc, N, -1)
    j1 = sp.diags(np.ones(L - 1), 1)
    eye = sp.identity(L)
    vp = sp.identity(L * L) + OMEGA**2 * sp.kron(eye, j1.T) + OMEGA * sp.kron(j1.T, eye)
    vm = sp.identity(L * L) + OMEGA**2 * sp.kron(eye, j1) + OMEGA * sp.kron(j1, eye)
    b = (rp @ vp @ rm @ vm / 3).tocsr()
    ix = downsize_index(N0, N)
    return b[ix][:, ix].tocsr()


def build_reduced_B(N, kp):
    """Symmetry-reduced truncation of ``B_k = 3 A_k`` for the standard potential.

    The quasi-momentum enters as the complex number ``k1 + i k2`` built from the
    dual coordinates, which is how the reduced recipe parametrises it.  The
    operator is assembled on the ``N + 2`` window and then cut to the centered
    ``(2N + 1)^2`` block, so the retained rows are exact.
    """
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    mat = _reduced_B_matrix(complex(k1, k2), tr.N)
    return TruncatedOperator(mat, tr, 1, "Breduced", {"k": (k1, k2)})


def project_B4(N, kp):
    """``Pi_N B^4 Pi_N`` without truncation error beyond that of ``B`` itself.

    Each factor of ``B`` moves Fourier support by at most two modes per side,
    so ``B_{N+8}^2`` cut to ``N+4``, sandwiched by ``B_{N+4}`` and cut to ``N``
    equals the exact projection.
    """
    tr = _as_trunc(N)
    k1, k2 = _coords(kp)
    kc = complex(k1, k2)
    b8 = _reduced_B_matrix(kc, tr.N + 8)
    b4 = _reduced_B_matrix(kc, tr.N + 4)
    ix = downsize_index(tr.N + 4, tr.N + 8)
    sq = (b8 @ b8).tocsr()[ix][:, ix]
    full = (b4 @ sq @ b4).tocsr()
    ix = downsize_index(tr.N, tr.N + 4)
    return TruncatedOperator(full[ix][:, ix].tocsr(), tr, 1, "B4projected", {"k": (k1, k2)})


def downsize(op, N_target):
    """Restrict an operator to the centered window ``[-N_target, N_target]^2`` (per block)."""
    if N_target > op.N:
        raise BadTruncation(f"cannot downsize N={op.N} to larger N={N_target}")
    if N_target < 0:
        raise BadTruncation("target truncation must be non-negative")
    ix = downsize_index(N_target, op.N)
    big = op.trunc.dim_scalar
    full_ix = np.concatenate([ix + b * big for b in range(op.blocks)])
    mat = op.matrix.tocsr()[full_ix][:, full_ix].tocsr()
    return TruncatedOperator(mat, Truncation(N_target), op.blocks, op.kind, dict(op.params))


def zero_pad(vec, n_small, n_large, blocks=1):
    """Embed a vector on the ``n_small`` window into the ``n_large`` window by zeros."""
    ix = downsize_index(n_small, n_large)
    small = (2 * n_small + 1) ** 2
    big = (2 * n_large + 1) ** 2
    out = np.zeros(blocks * big, dtype=np.complex128)
    for b in range(blocks):
        out[b * big + ix] = vec[b * small:(b + 1) * small]
    return out


# ---------------------------------------------------------------------------
# Text dump for cross-language diffing
# ---------------------------------------------------------------------------

def dump_operator(op, path):
    """Write ``# kind N k1 k2 alpha`` then ``row col re im`` lines (0-based, row-major order)."""
    k1, k2 = op.params.get("k", (0.0, 0.0))
    alpha = complex(op.params.get("alpha", 0.0))
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {op.kind} {op.N} {float(k1)!r} {float(k2)!r} {alpha.real!r}{alpha.imag:+}j {op.blocks}\n")
        for i in order:
            v = coo.data[i]
            fh.write(f"{coo.row[i]} {coo.col[i]} {float(v.real)!r} {float(v.imag)!r}\n")


def load_operator(path):
    """Inverse of :func:`dump_operator` (potential metadata is not stored)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) < 6 or header[0] != "#":
            raise ValidationError("malformed operator dump header")
        kind, N = header[1], int(header[2])
        k1, k2, alpha = float(header[3]), float(header[4]), complex(header[5])
        blocks = int(header[6]) if len(header) > 6 else (2 if kind in ("Dalpha", "T") else 1)
        data = np.loadtxt(fh, ndmin=2)
    dim = blocks * (2 * N + 1) ** 2
    if data.size:
        mat = sp.coo_matrix((data[:, 2] + 1j * data[:, 3],
                             (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(dim, dim))
    else:
        mat = sp.coo_matrix((dim, dim), dtype=np.complex128)
    params = {"k": (k1, k2)}
    if alpha != 0:
        params["alpha"] = alpha
    return TruncatedOperator(mat.tocsr(), Truncation(N), blocks, kind, params)
