"""Symmetric eigensolvers.

``eigh_tridiagonal_ql`` reduces a dense symmetric matrix to tridiagonal form
with Householder reflections and then runs the implicit-shift QL iteration,
accumulating the rotations into the eigenvector matrix.  ``lanczos_lowest``
finds the smallest eigenpairs of a sparse symmetric operator with a Lanczos
process that fully reorthogonalizes and locks converged Ritz vectors, so
repeated eigenvalues are recovered with their multiplicities.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure Python fallback
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

MAX_QL_SWEEPS = 60


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, index: int | None = None, residual: float | None = None):
        super().__init__(message)
        self.index = index
        self.residual = residual


def householder_tridiagonal(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (diag, offdiag, Q) with Q.T @ a @ Q tridiagonal."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    vs = []
    for k in range(n - 2):
        x = a[k + 1:, k]
        sigma = np.linalg.norm(x)
        if sigma == 0.0:
            vs.append(None)
            continue
        alpha = -sigma if x[0] >= 0 else sigma
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            vs.append(None)
            continue
        v /= vnorm
        sub = a[k + 1:, k + 1:]
        p = sub @ v
        w = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))
        a[k + 1, k] = a[k, k + 1] = alpha
        a[k + 2:, k] = 0.0
        a[k, k + 2:] = 0.0
        vs.append(v)
    q = np.eye(n)
    for k in range(n - 3, -1, -1):
        v = vs[k]
        if v is None:
            continue
        blk = q[k + 1:, k + 1:]
        blk -= 2.0 * np.outer(v, v @ blk)
    d = np.diag(a).copy()
    e = np.zeros(n)
    if n > 1:
        e[:n - 1] = np.diag(a, -1)
    return d, e, q


@njit(cache=True)
def _tql(d, e, zt, max_sweeps):
    """Implicit QL on tridiagonal (d, e) with e[n-1] = 0.

    Rotations are applied to the rows of ``zt`` (eigenvectors as rows).
    Returns -1 on success or the index that failed to converge.
    """
    n = d.shape[0]
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_sweeps:
                return l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            early = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                for k in range(zt.shape[1]):
                    f = zt[i + 1, k]
                    zt[i + 1, k] = s * zt[i, k] + c * f
                    zt[i, k] = c * zt[i, k] - s * f
                i -= 1
            if early:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def eigh_tridiagonal_ql(a: np.ndarray, max_sweeps: int = MAX_QL_SWEEPS):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of symmetric ``a``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    d, e, q = householder_tridiagonal(a)
    zt = np.ascontiguousarray(q.T)
    bad = _tql(d, e, zt, max_sweeps)
    if bad >= 0:
        raise ConvergenceError(f"QL iteration did not converge at index {bad}", index=bad)
    order = np.argsort(d, kind="stable")
    return d[order], zt[order].T.copy()


def lanczos_lowest(matvec, n: int, m: int, tol: float = 1e-10, krylov_dim: int = 120,
                   max_restarts: int = 400, seed: int = 0):
    """Smallest ``m`` eigenpairs of a symmetric operator of size ``n``.

    Each pass builds a Krylov basis from a random start orthogonal to the
    locked vectors, reorthogonalizing every new vector twice against the
    basis and the locked set.  A single Krylov space sees only one direction
    per eigenspace, so each pass locks at most its lowest Ritz pair, once
    its residual ``||A y - theta y||`` is below ``tol``.  After ``m`` pairs
    are locked, one more converged pass must not find anything lower.
    Returns (values, vectors, residuals).
    """
    if m < 1:
        raise ValueError("need m >= 1")
    m = min(m, n)
    rng = np.random.default_rng(seed)
    locked_vals: list[float] = []
    locked = np.zeros((n, 0))
    best = np.inf
    start = None
    confirmed = False
    for _ in range(max_restarts):
        free = n - locked.shape[1]
        if len(locked_vals) >= m and (confirmed or free == 0):
            break
        theta, y, r = _lanczos_pass(matvec, n, min(krylov_dim, free), locked, rng, start)
        best = min(best, r)
        if r > tol:
            start = y
            continue
        start = None
        if len(locked_vals) >= m and theta >= sorted(locked_vals)[m - 1] - tol:
            confirmed = True
            continue
        locked = np.column_stack([locked, y])
        locked_vals.append(float(theta))
    else:
        raise ConvergenceError(
            f"Lanczos did not settle {m} eigenpairs; best residual {best:.3e}", residual=best)
    vals = np.array(locked_vals)
    order = np.argsort(vals, kind="stable")[:m]
    vals, vecs = vals[order], locked[:, order]
    res = np.array([np.linalg.norm(matvec(vecs[:, c]) - vals[c] * vecs[:, c]) for c in range(m)])
    return vals, vecs, res


def _deflate(v: np.ndarray, locked: np.ndarray) -> np.ndarray:
    for _pass in range(2):
        v = v - locked @ (locked.T @ v)
    return v


def _lanczos_pass(matvec, n, k, locked, rng, start):
    """One Lanczos run; returns the lowest Ritz value, its vector and residual."""
    q = _deflate(rng.standard_normal(n) if start is None else start, locked)
    nq = np.linalg.norm(q)
    if nq < 1e-8:
        q = _deflate(rng.standard_normal(n), locked)
        nq = np.linalg.norm(q)
    basis = np.zeros((n, k))
    images = np.zeros((n, k))
    basis[:, 0] = q / nq
    steps = k
    for j in range(k):
        w = matvec(basis[:, j])
        images[:, j] = w
        w = w.copy()
        for _pass in range(2):
            w -= basis[:, :j + 1] @ (basis[:, :j + 1].T @ w)
            w -= locked @ (locked.T @ w)
        if j + 1 == k:
            break
        b = np.linalg.norm(w)
        if b <= 1e-12 * max(1.0, np.linalg.norm(images[:, j])):
            steps = j + 1
            break
        basis[:, j + 1] = w / b
    basis, images = basis[:, :steps], images[:, :steps]
    proj = basis.T @ images
    theta, s = eigh_tridiagonal_ql(0.5 * (proj + proj.T))
    y = _deflate(basis @ s[:, 0], locked)
    y /= np.linalg.norm(y)
    r = float(np.linalg.norm(matvec(y) - theta[0] * y))
    return float(theta[0]), y, r
