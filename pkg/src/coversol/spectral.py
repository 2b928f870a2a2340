"""Measure-weighted graph Laplacians on tower levels and their spectra.

On level i the operator is

    (L f)(v) = (1 / rho(v)) * sum over edges e = (v, u) of w_e (f(v) - f(u)),

where rho(v) = mu_base(base vertex of v) is the local density of the level
measure: mu_i = rho / |Gamma_i|.  Using the local density rather than mu_i
itself keeps L_j P* = P* L_i exact between levels, and L is self-adjoint for
mu_i because the two differ by a constant.  Eigenproblems are solved in the
symmetric form S = M^{1/2} L M^{-1/2} with M = diag(mu_i); eigenvectors are
mapped back by M^{-1/2}, which makes them mu-orthonormal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .eigen import eigh_tridiagonal_ql, lanczos_lowest
from .measure import level_measure, pullback_matrix
from .report import Report
from .tower import CoverTower, WeightedGraph

DENSE_CAP = 4096
CLUSTER_TOL = 1e-8


class OperatorCheckError(RuntimeError):
    """A freshly built Laplacian failed one of its structural checks."""


def combinatorial_laplacian(graph: WeightedGraph) -> sparse.csr_matrix:
    """sum_e w_e (f(v) - f(u)) as a sparse symmetric matrix; loops contribute nothing."""
    n = graph.vertex_count
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    keep = u != v
    u, v, w = u[keep], v[keep], graph.weights[keep]
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([u, v, v, u])
    vals = np.concatenate([w, w, -w, -w])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class LaplaceOperator:
    level: int
    matrix: sparse.csr_matrix
    mu: np.ndarray
    density: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.mu)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f

    @cached_property
    def symmetric(self) -> sparse.csr_matrix:
        """S = M^{1/2} L M^{-1/2}, symmetric in the Euclidean inner product."""
        r = np.sqrt(self.mu)
        s = sparse.diags(r) @ self.matrix @ sparse.diags(1.0 / r)
        return ((s + s.T) * 0.5).tocsr()

    @cached_property
    def norm(self) -> float:
        """Gershgorin bound on the spectral radius of L."""
        return float(np.max(np.abs(self.symmetric).sum(axis=1))) if self.dimension else 0.0

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return np.sum(f * np.conj(g) * self.mu)


def laplacian(tower: CoverTower, i: int, verify: bool = True, seed: int = 0) -> LaplaceOperator:
    """Laplacian of level i (level 0 is the base graph)."""
    graph = tower.base if i == 0 else tower.level(i).graph
    mu = level_measure(tower, i).weights.astype(float)
    density = mu * (1 if i == 0 else tower.order(i))
    mat = (sparse.diags(1.0 / density) @ combinatorial_laplacian(graph)).tocsr()
    op = LaplaceOperator(i, mat, mu, density)
    if verify:
        rep = operator_checks(op, seed=seed)
        if not rep.passed:
            raise OperatorCheckError(str(rep))
    return op


def operator_checks(op: LaplaceOperator, trials: int = 100, seed: int = 0) -> Report:
    rng = np.random.default_rng(seed)
    n = op.dimension
    f = rng.standard_normal((n, trials)) + 1j * rng.standard_normal((n, trials))
    g = rng.standard_normal((n, trials)) + 1j * rng.standard_normal((n, trials))
    lf, lg = op.matrix @ f, op.matrix @ g
    w = op.mu[:, None]
    asym = np.abs(np.sum(lf * np.conj(g) * w, 0) - np.sum(f * np.conj(lg) * w, 0))
    scale = np.sqrt(np.sum(np.abs(f) ** 2 * w, 0) * np.sum(np.abs(g) ** 2 * w, 0))
    rep = Report(f"Laplacian at level {op.level}")
    rep.bound("self-adjoint <Lf,g> = <f,Lg>", float(np.max(asym / scale)), 1e-13 * (1 + op.norm))
    quad = np.real(np.sum(lf * np.conj(f) * w, 0)) / np.sum(np.abs(f) ** 2 * w, 0)
    rep.bound("nonnegative <Lf,f> >= 0", float(max(0.0, -quad.min())), 1e-13 * (1 + op.norm))
    rep.bound("L(constant) = 0", float(np.max(np.abs(op.matrix @ np.ones(n)))), 1e-13 * (1 + op.norm))
    return rep


@dataclass(frozen=True, eq=False)
class SpectrumLevel:
    """Eigenpairs of one level; ``eigenvectors`` columns are mu-orthonormal."""

    level: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    mu: np.ndarray
    norm: float
    complete: bool = True
    solver: str = "dense"
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def cluster_tol(self) -> float:
        return CLUSTER_TOL * (1 + self.norm)

    def clusters(self) -> list[tuple[float, np.ndarray]]:
        return cluster(self.eigenvalues, self.cluster_tol)

    def projector(self, omega) -> np.ndarray:
        """Spectral projector onto clusters whose value lies in ``omega`` (an IntervalSet)."""
        cols = [idx for value, idx in self.clusters() if omega.contains(value)]
        idx = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
        v = self.eigenvectors[:, idx]
        return (v * 1.0) @ (v.T * self.mu[None, :])


def cluster(values: np.ndarray, tol: float) -> list[tuple[float, np.ndarray]]:
    """Group sorted values into runs whose consecutive gaps are <= tol.

    The representative is the run mean, snapped to exactly 0 when within tol of 0.
    """
    values = np.asarray(values)
    order = np.argsort(values, kind="stable")
    out: list[tuple[float, np.ndarray]] = []
    start = 0
    for k in range(1, len(order) + 1):
        if k == len(order) or values[order[k]] - values[order[k - 1]] > tol:
            idx = order[start:k]
            rep = float(np.mean(values[idx]))
            if abs(rep) <= tol:
                rep = 0.0
            out.append((rep, idx))
            start = k
    return out


def eigendecompose(op: LaplaceOperator, dense_cap: int = DENSE_CAP) -> SpectrumLevel:
    """Full spectrum through the self-contained tridiagonal QL solver."""
    n = op.dimension
    if n > dense_cap:
        raise ValueError(f"level {op.level} has {n} vertices, above the dense cap {dense_cap}")
    vals, y = eigh_tridiagonal_ql(op.symmetric.toarray())
    vecs = y / np.sqrt(op.mu)[:, None]
    res = residuals(op, vals, vecs)
    return SpectrumLevel(op.level, vals, vecs, res, op.mu, op.norm, True, "dense")


def lowest_eigenpairs(op: LaplaceOperator, m: int, tol: float = 1e-10,
                      krylov_dim: int = 120, seed: int = 0) -> SpectrumLevel:
    """The m smallest eigenpairs by restarted Lanczos with locking."""
    s = op.symmetric
    vals, y, _ = lanczos_lowest(lambda x: s @ x, op.dimension, m, tol=tol,
                                krylov_dim=krylov_dim, seed=seed)
    vecs = y / np.sqrt(op.mu)[:, None]
    res = residuals(op, vals, vecs)
    return SpectrumLevel(op.level, vals, vecs, res, op.mu, op.norm, m >= op.dimension,
                         "iterative", {"m": m, "tol": tol})


def residuals(op: LaplaceOperator, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """mu-norms of L v - lambda v for every pair."""
    r = op.matrix @ vecs - vecs * vals[None, :]
    return np.sqrt(np.sum(np.abs(r) ** 2 * op.mu[:, None], axis=0))


def spectrum_checks(spec: SpectrumLevel, op: LaplaceOperator | None = None) -> Report:
    """Certificates for a computed spectrum; residuals are recomputed when ``op`` is given."""
    rep = Report(f"spectrum at level {spec.level}")
    norm = spec.norm
    res = spec.residuals if op is None else residuals(op, spec.eigenvalues, spec.eigenvectors)
    rep.bound("eigenvalues >= -1e-12", float(max(0.0, -spec.eigenvalues.min(initial=0.0))), 1e-12)
    rep.bound("residuals <= 1e-9 (1 + ||L||)", float(res.max(initial=0.0)), 1e-9 * (1 + norm))
    v = spec.eigenvectors
    gram = v.T @ (v * spec.mu[:, None])
    rep.bound("mu-orthonormal", float(np.abs(gram - np.eye(len(gram))).max(initial=0.0)), 1e-10)
    if spec.complete and op is not None:
        tr = float(op.matrix.diagonal().sum())
        rep.bound("sum of eigenvalues = trace", abs(spec.eigenvalues.sum() - tr) / max(1.0, abs(tr)), 1e-8)
        total = v @ (v.T * spec.mu[None, :])
        rep.bound("sum of projectors = identity",
                  float(np.abs(total - np.eye(len(total))).max(initial=0.0)), 1e-9)
    return rep


def check_commutation(tower: CoverTower, i: int, j: int) -> float:
    """max over basis vectors e of ||L_j P* e - P* L_i e|| (Euclidean)."""
    if i > j:
        raise ValueError("need i <= j")
    if i == j:
        return 0.0
    lj, li = laplacian(tower, j, verify=False), laplacian(tower, i, verify=False)
    p = pullback_matrix(tower, j, i)
    diff = (lj.matrix @ p - p @ li.matrix).tocsc()
    if diff.nnz == 0:
        return 0.0
    return float(np.sqrt(np.asarray(diff.multiply(diff).sum(axis=0))).max())


def lift_eigenfunction(value: float, vector: np.ndarray, tower: CoverTower, i: int, j: int):
    """Pull an eigenpair of level i back to level j; returns (value, vector, residual)."""
    lifted = vector[tower.down_map(j, i)]
    op = laplacian(tower, j, verify=False)
    return value, lifted, float(residuals(op, np.array([value]), lifted[:, None])[0])


def multiset_gap(small: np.ndarray, large: np.ndarray, tol: float) -> float:
    """Max pairing distance embedding ``small`` into ``large`` (inf if impossible).

    Both are sorted; each value of ``small`` is paired with a distinct value
    of ``large`` within ``tol`` by a two-pointer sweep.
    """
    small, large = np.sort(small), np.sort(large)
    worst, k = 0.0, 0
    for a in small:
        while k < len(large) and large[k] < a - tol:
            k += 1
        if k == len(large) or abs(large[k] - a) > tol:
            return float("inf")
        worst = max(worst, abs(large[k] - a))
        k += 1
    return worst


def spectral_containment(lower: SpectrumLevel, upper: SpectrumLevel, tol: float = 1e-8) -> float:
    return multiset_gap(lower.eigenvalues, upper.eigenvalues, tol)


def solver_agreement(op: LaplaceOperator, m: int, tol: float = 1e-10,
                     dense: SpectrumLevel | None = None) -> float:
    """Largest gap between the m lowest dense and iterative eigenvalues."""
    dense = dense or eigendecompose(op)
    it = lowest_eigenpairs(op, m, tol)
    return float(np.max(np.abs(dense.eigenvalues[:m] - it.eigenvalues)))


def tower_spectra(tower: CoverTower, depth: int | None = None) -> list[SpectrumLevel]:
    depth = tower.depth if depth is None else depth
    return [eigendecompose(laplacian(tower, i)) for i in range(1, depth + 1)]
