"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import from ``MAGICANGLES_BACKEND``
(``numba`` or ``numpy``; default ``numba`` when it can be imported) and can
be switched at runtime with :func:`set_backend`.  Both paths compute the
same quantities; the test-suite checks them against each other.
"""

import os

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    nb = None

OMEGA = np.exp(2j * np.pi / 3)

_ENV_FLAG = "MAGICANGLES_BACKEND"


def _initial_backend():
    requested = os.environ.get(_ENV_FLAG, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{_ENV_FLAG} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and nb is None:
        return "numpy"
    return requested


_backend = _initial_backend()


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels; returns the previous backend."""
    global _backend
    name = name.lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and nb is None:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous


if nb is not None:
    njit = nb.njit(cache=True, fastmath=False)
else:  # pragma: no cover
    def njit(fn):
        return fn


# ---------------------------------------------------------------------------
# Jacobi theta series
# ---------------------------------------------------------------------------

@njit
def _theta_numba(a, b, z, tau, halfwidth, order):
    out = np.empty(z.shape[0], dtype=np.complex128)
    two_pi_i = 2j * np.pi
    for p in range(z.shape[0]):
        zp = z[p]
        center = np.rint(-zp.imag / tau.imag - a)
        acc = 0j
        for j in range(-halfwidth, halfwidth + 1):
            na = center + j + a
            term = np.exp(1j * np.pi * na * na * tau + two_pi_i * na * (zp + b))
            for _ in range(order):
                term *= two_pi_i * na
            acc += term
        out[p] = acc
    return out


def _theta_numpy(a, b, z, tau, halfwidth, order):
    center = np.rint(-z.imag / tau.imag - a)
    offsets = np.arange(-halfwidth, halfwidth + 1)
    na = center[:, None] + offsets[None, :] + a
    terms = np.exp(1j * np.pi * na * na * tau + 2j * np.pi * na * (z[:, None] + b))
    if order:
        terms = terms * (2j * np.pi * na) ** order
    return terms.sum(axis=1)


def theta_series(a, b, z, tau, halfwidth, order=0):
    """Sum the theta series (or its ``order``-th z-derivative) at each point of ``z``."""
    z = np.ascontiguousarray(np.asarray(z, dtype=np.complex128).ravel())
    if _backend == "numba":
        return _theta_numba(float(a), float(b), z, complex(tau), int(halfwidth), int(order))
    return _theta_numpy(float(a), float(b), z, complex(tau), int(halfwidth), int(order))


# ---------------------------------------------------------------------------
# Lattice sums over omega*Z + Z
# ---------------------------------------------------------------------------

@njit
def _lattice_K_numba(m0, n0, radius):
    w = np.exp(2j * np.pi / 3)
    g0 = w * m0 + n0
    r2 = radius * radius
    amax = int(np.ceil(2.0 * radius / np.sqrt(3.0))) + 1
    acc = 0j
    for a in range(-amax, amax + 1):
        for b in range(-amax, amax + 1):
            if a * a - a * b + b * b > r2:
                continue
            if (a == 0 and b == 0) or (a == m0 and b == n0):
                continue
            g = w * a + b
            d = g - g0
            acc += 1.0 / (g * g * d * d)
    return acc


def _lattice_K_numpy(m0, n0, radius):
    g0 = OMEGA * m0 + n0
    r2 = radius * radius
    amax = int(np.ceil(2.0 * radius / np.sqrt(3.0))) + 1
    b = np.arange(-amax, amax + 1)
    acc = 0j
    for a in range(-amax, amax + 1):
        keep = (a * a - a * b + b * b) <= r2
        keep &= ~((a == 0) & (b == 0))
        keep &= ~((a == m0) & (b == n0))
        g = OMEGA * a + b[keep]
        d = g - g0
        acc += np.sum(1.0 / (g * g * d * d))
    return acc


def lattice_K(m0, n0, radius):
    """Disc-truncated sum of g^-2 (g - g0)^-2 over g in omega*Z + Z, g0 = omega*m0 + n0."""
    if _backend == "numba":
        return complex(_lattice_K_numba(int(m0), int(n0), float(radius)))
    return complex(_lattice_K_numpy(int(m0), int(n0), float(radius)))


# Shifts (p, q) and weights of the three terms of tr Lam^2 (Lam_{1,1}^2 + w Lam_{-2,1}^2
# + w^2 Lam_{1,-2}^2) at zero quasi-momentum.
_TRACE_SHIFTS = np.array([[1, 1], [-2, 1], [1, -2]], dtype=np.int64)
_TRACE_WEIGHTS = np.array([1.0, OMEGA, OMEGA**2], dtype=np.complex128)


@njit
def _trace_modes_numba(R, shifts, weights):
    w = np.exp(2j * np.pi / 3)
    w2 = w * w
    acc = 0j
    for m in range(-R, R + 1):
        row = 0j
        for n in range(-R, R + 1):
            if m == 0 and n == 0:
                continue
            lam = 1.0 / (w2 * m - w * n)
            lam2 = lam * lam
            for s in range(3):
                ms = m + shifts[s, 0]
                ns = n + shifts[s, 1]
                if ms == 0 and ns == 0:
                    continue
                ls = 1.0 / (w2 * ms - w * ns)
                row += weights[s] * lam2 * ls * ls
        acc += row
    return acc


def _trace_modes_numpy(R, shifts, weights):
    n = np.arange(-R, R + 1)
    w2 = OMEGA**2
    acc = 0j
    for m in range(-R, R + 1):
        den = w2 * m - OMEGA * n
        ok = den != 0
        lam2 = np.zeros(n.shape, dtype=np.complex128)
        lam2[ok] = 1.0 / den[ok] ** 2
        row = 0j
        for s in range(3):
            ds = w2 * (m + shifts[s, 0]) - OMEGA * (n + shifts[s, 1])
            oks = ok & (ds != 0)
            row += weights[s] * np.sum(lam2[oks] / ds[oks] ** 2)
        acc += row
    return acc


def trace_mode_sum(R):
    """Square-window mode sum for tr A^2 at k = 0 with singular terms removed."""
    if _backend == "numba":
        return complex(_trace_modes_numba(int(R), _TRACE_SHIFTS, _TRACE_WEIGHTS))
    return complex(_trace_modes_numpy(int(R), _TRACE_SHIFTS, _TRACE_WEIGHTS))


# ---------------------------------------------------------------------------
# Fourier synthesis on the square torus R^2 / 2 pi Z^2
# ---------------------------------------------------------------------------

@njit
def _synth_numba(coeffs, N, y1, y2):
    L = 2 * N + 1
    out = np.empty(y1.shape[0], dtype=np.complex128)
    e1 = np.empty(L, dtype=np.complex128)
    e2 = np.empty(L, dtype=np.complex128)
    for p in range(y1.shape[0]):
        for j in range(L):
            e1[j] = np.exp(1j * (j - N) * y1[p])
            e2[j] = np.exp(1j * (j - N) * y2[p])
        acc = 0j
        for i in range(L):
            rowacc = 0j
            for j in range(L):
                rowacc += coeffs[i, j] * e2[j]
            acc += e1[i] * rowacc
        out[p] = acc
    return out


def _synth_numpy(coeffs, N, y1, y2, chunk=4096):
    modes = np.arange(-N, N + 1)
    out = np.empty(y1.shape[0], dtype=np.complex128)
    for start in range(0, y1.shape[0], chunk):
        sl = slice(start, start + chunk)
        e1 = np.exp(1j * np.outer(y1[sl], modes))
        e2 = np.exp(1j * np.outer(y2[sl], modes))
        out[sl] = np.einsum("pi,ij,pj->p", e1, coeffs, e2)
    return out


def fourier_synthesis(coeffs, y1, y2):
    """Evaluate sum_{m,n} c[m,n] exp(i (m y1 + n y2)) for a centered (2N+1)^2 coefficient array."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    N = (coeffs.shape[0] - 1) // 2
    y1 = np.ascontiguousarray(np.asarray(y1, dtype=np.float64).ravel())
    y2 = np.ascontiguousarray(np.asarray(y2, dtype=np.float64).ravel())
    if _backend == "numba":
        return _synth_numba(coeffs, N, y1, y2)
    return _synth_numpy(coeffs, N, y1, y2)


# ---------------------------------------------------------------------------
# Sparse shift-operator assembly
# ---------------------------------------------------------------------------

@njit
def _shift_coo_numba(N, shifts, weights):
    L = 2 * N + 1
    nnz_max = shifts.shape[0] * L * L
    rows = np.empty(nnz_max, dtype=np.int64)
    cols = np.empty(nnz_max, dtype=np.int64)
    vals = np.empty(nnz_max, dtype=np.complex128)
    k = 0
    for s in range(shifts.shape[0]):
        s1 = shifts[s, 0]
        s2 = shifts[s, 1]
        for m in range(-N, N + 1):
            mc = m - s1
            if mc < -N or mc > N:
                continue
            for n in range(-N, N + 1):
                nc = n - s2
                if nc < -N or nc > N:
                    continue
                rows[k] = (m + N) * L + (n + N)
                cols[k] = (mc + N) * L + (nc + N)
                vals[k] = weights[s]
                k += 1
    return rows[:k], cols[:k], vals[:k]


def _shift_coo_numpy(N, shifts, weights):
    L = 2 * N + 1
    m, n = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1), indexing="ij")
    m, n = m.ravel(), n.ravel()
    rows, cols, vals = [], [], []
    for (s1, s2), wgt in zip(shifts, weights):
        mc, nc = m - s1, n - s2
        ok = (np.abs(mc) <= N) & (np.abs(nc) <= N)
        rows.append((m[ok] + N) * L + (n[ok] + N))
        cols.append((mc[ok] + N) * L + (nc[ok] + N))
        vals.append(np.full(ok.sum(), wgt, dtype=np.complex128))
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0, dtype=np.complex128)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def shift_coo(N, shifts, weights):
    """COO triplets of the multiplication operator sum_s w_s exp(i<y, s>) on the window [-N, N]^2.

    Row index (m, n) couples to column (m, n) - s; columns falling outside
    the window are dropped (no wraparound).
    """
    shifts = np.ascontiguousarray(np.asarray(shifts, dtype=np.int64).reshape(-1, 2))
    weights = np.ascontiguousarray(np.asarray(weights, dtype=np.complex128).ravel())
    if _backend == "numba":
        return _shift_coo_numba(int(N), shifts, weights)
    return _shift_coo_numpy(int(N), shifts, weights)
