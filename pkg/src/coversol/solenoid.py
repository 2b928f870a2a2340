"""Telescoping decomposition, truncated resolution of the identity, and spectra.

For a tower truncated at depth k, the level-k function space splits into
mutually orthogonal pieces P*_{k,i}(V_i), i = 1..k, where V_1 is the whole
level-1 space and V_i is the orthogonal complement of the pulled-back
level-(i-1) functions W_i.  Each L_i preserves V_i, so its restriction has a
"new" spectrum; together they account for the whole spectrum of L_k.  The
projection-valued measure

    E(omega) f = sum_i P*_{k,i} E^i(omega)|_{V_i} Q_i f

is assembled piece by piece and compared against the direct spectral
projector of L_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .eigen import eigh_tridiagonal_ql
from .groups import lcm_ladder, sl2_chain
from .measure import LevelFunction, averaging_matrix, pullback_adjoint, pullback_matrix
from .report import Report
from .spectral import (CLUSTER_TOL, LaplaceOperator, SpectrumLevel, cluster, eigendecompose,
                       laplacian, lowest_eigenpairs)
from .tower import CoverTower, VoltageAssignment, WeightedGraph, build_tower

MAX_INTERVALS = 64


class TelescopeError(RuntimeError):
    """Internal inconsistency: pulled-back basis lost rank or dimensions disagree."""


# -- interval sets -----------------------------------------------------------

@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint half-open intervals [a, b), sorted by a."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if len(ivs) > MAX_INTERVALS:
            raise ValueError(f"at most {MAX_INTERVALS} intervals are allowed, got {len(ivs)}")
        for a, b in ivs:
            if math.isnan(a) or math.isnan(b) or not a < b:
                raise ValueError(f"malformed interval [{a}, {b})")
        for (a0, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def around(cls, x: float, radius: float) -> "IntervalSet":
        return cls(((x - radius, x + radius),))

    def contains(self, x: float) -> bool:
        return any(a <= x < b for a, b in self.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalSet(tuple(sorted(out)))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        merged: list[list[float]] = []
        for a, b in sorted(self.intervals + other.intervals):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return IntervalSet(tuple((a, b) for a, b in merged))

    def is_disjoint(self, other: "IntervalSet") -> bool:
        return not self.intersect(other).intervals

    def __bool__(self) -> bool:
        return bool(self.intervals)


def random_interval_set(rng: np.random.Generator, lo: float, hi: float,
                        max_count: int = 4) -> IntervalSet:
    """Random union of up to ``max_count`` intervals with endpoints in [lo, hi]."""
    count = int(rng.integers(1, max_count + 1))
    pts = np.sort(rng.uniform(lo, hi, 2 * count))
    ivs = [(pts[2 * j], pts[2 * j + 1]) for j in range(count) if pts[2 * j] < pts[2 * j + 1]]
    return IntervalSet(tuple(ivs))


def split_interval_set(omega: IntervalSet, rng: np.random.Generator, parts: int) -> list[IntervalSet]:
    """Partition omega into ``parts`` disjoint interval sets at random cut points."""
    cuts = []
    for a, b in omega.intervals:
        lo, hi = max(a, -1e6), min(b, 1e6)
        cuts.extend(rng.uniform(lo, hi, parts - 1).tolist())
    cuts = sorted(cuts)
    pieces: list[list[tuple[float, float]]] = [[] for _ in range(parts)]
    for a, b in omega.intervals:
        edges = [a] + [c for c in cuts if a < c < b] + [b]
        for k, (x, y) in enumerate(zip(edges, edges[1:])):
            if x < y:
                pieces[int(rng.integers(parts))].append((x, y))
    out = []
    for p in pieces:
        acc = IntervalSet()
        for iv in p:
            acc = acc.union(IntervalSet((iv,)))
        out.append(acc)
    return out


# -- telescoping decomposition ----------------------------------------------

@dataclass(frozen=True, eq=False)
class TelescopePiece:
    """W_i and V_i of one level plus the spectrum of L_i restricted to V_i.

    Bases are stored in function coordinates and are mu_i-orthonormal.
    """

    level: int
    w_basis: np.ndarray
    v_basis: np.ndarray
    new_eigenvalues: np.ndarray
    new_vectors: np.ndarray
    mu: np.ndarray
    norm: float

    @property
    def dim_w(self) -> int:
        return self.w_basis.shape[1]

    @property
    def dim_v(self) -> int:
        return self.v_basis.shape[1]

    def v_projector(self) -> np.ndarray:
        return self.v_basis @ (self.v_basis.T * self.mu[None, :])

    def clusters(self):
        return cluster(self.new_eigenvalues, CLUSTER_TOL * (1 + self.norm))


@dataclass(frozen=True, eq=False)
class TelescopeDecomposition:
    pieces: tuple[TelescopePiece, ...]

    @property
    def depth(self) -> int:
        return len(self.pieces)

    def piece(self, i: int) -> TelescopePiece:
        return self.pieces[i - 1]

    def new_spectrum(self, k: int | None = None) -> np.ndarray:
        k = self.depth if k is None else k
        return np.sort(np.concatenate([p.new_eigenvalues for p in self.pieces[:k]]))


def _orthonormal_complement(w: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the complement of the orthonormal columns ``w``."""
    r = w.shape[1]
    if r == 0:
        return np.eye(n)
    q, _ = np.linalg.qr(w, mode="complete")
    v = q[:, r:]
    v = v - w @ (w.T @ v)   # second orthogonalization pass
    v, _ = np.linalg.qr(v)
    return v


def telescope(tower: CoverTower, spectra: Sequence[SpectrumLevel]) -> TelescopeDecomposition:
    """Split every level into pulled-back functions W_i and new functions V_i."""
    pieces = []
    for i in range(1, len(spectra) + 1):
        op = laplacian(tower, i, verify=False)
        n = op.dimension
        root = np.sqrt(op.mu)
        if i == 1:
            w_tilde = np.zeros((n, 0))
        else:
            prev = spectra[i - 2]
            if not prev.complete:
                raise TelescopeError(f"level {i - 1} spectrum is partial; W_{i} needs a full basis")
            w_fun = prev.eigenvectors[tower.down_map(i, i - 1)]
            w_tilde = w_fun * root[:, None]
            gram = w_tilde.T @ w_tilde
            if np.abs(gram - np.eye(len(gram))).max() > 1e-8:
                raise TelescopeError(f"pulled-back basis at level {i} is not orthonormal "
                                     f"(defect {np.abs(gram - np.eye(len(gram))).max():.2e})")
        v_tilde = _orthonormal_complement(w_tilde, n)
        if w_tilde.shape[1] + v_tilde.shape[1] != n:
            raise TelescopeError(f"rank deficiency at level {i}")
        s = op.symmetric
        compressed = v_tilde.T @ (s @ v_tilde)
        vals, y = eigh_tridiagonal_ql(0.5 * (compressed + compressed.T))
        pieces.append(TelescopePiece(
            i, w_tilde / root[:, None], v_tilde / root[:, None], vals,
            (v_tilde @ y) / root[:, None], op.mu, op.norm))
    return TelescopeDecomposition(tuple(pieces))


def telescope_checks(decomp: TelescopeDecomposition, tower: CoverTower) -> Report:
    rep = Report("telescoping decomposition")
    for p in decomp.pieces:
        i = p.level
        n = tower.level(i).vertex_count
        below = 0 if i == 1 else tower.level(i - 1).vertex_count
        rep.add(f"level {i}: dim W + dim V = dim", p.dim_w + p.dim_v == n, p.dim_w + p.dim_v, n)
        rep.add(f"level {i}: dim V = dim(level) - dim(level below)", p.dim_v == n - below, p.dim_v)
        cross = p.w_basis.T @ (p.v_basis * p.mu[:, None])
        rep.bound(f"level {i}: W orthogonal to V", float(np.abs(cross).max(initial=0.0)), 1e-10)
        op = laplacian(tower, i, verify=False)
        lv = op.matrix @ p.v_basis
        leak = lv - p.v_basis @ (p.v_basis.T @ (lv * p.mu[:, None]))
        rep.bound(f"level {i}: L maps V into V", float(np.abs(leak).max(initial=0.0)), 1e-9)
    return rep


def new_spectrum_multiset_check(decomp: TelescopeDecomposition,
                                spectra: Sequence[SpectrumLevel], k: int) -> float:
    """Sorted-pair distance between spec(L_k) and the union of new spectra up to k.

    Raises TelescopeError when the cardinalities differ.
    """
    union = decomp.new_spectrum(k)
    full = np.sort(spectra[k - 1].eigenvalues)
    if len(union) != len(full):
        raise TelescopeError(f"level {k}: {len(full)} eigenvalues but {len(union)} new eigenvalues")
    return float(np.max(np.abs(union - full), initial=0.0))


# -- resolution of the identity ---------------------------------------------

@dataclass(eq=False)
class SpectralMeasureTrunc:
    """E(omega) on level-k functions assembled from the V_i pieces, i <= k."""

    tower: CoverTower
    decomp: TelescopeDecomposition
    depth: int
    exclude: frozenset = frozenset()
    _terms: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        k = self.depth
        for p in self.decomp.pieces[:k]:
            if p.level in self.exclude:
                continue
            pull = pullback_matrix(self.tower, k, p.level)
            avg = averaging_matrix(self.tower, k, p.level).toarray()
            to_v = p.v_projector() @ avg                 # Q_i: level k -> V_i
            coeff = p.new_vectors.T @ (to_v * p.mu[:, None])
            self._terms.append((p, pull, coeff))

    @property
    def dimension(self) -> int:
        return self.tower.level(self.depth).vertex_count

    @property
    def mu(self) -> np.ndarray:
        return self.decomp.piece(self.depth).mu

    def _sum(self, weight: Callable[[float], float]) -> np.ndarray:
        n = self.dimension
        out = np.zeros((n, n))
        for p, pull, coeff in self._terms:
            for value, idx in p.clusters():
                wgt = weight(value)
                if wgt == 0:
                    continue
                out += wgt * (pull @ (p.new_vectors[:, idx] @ coeff[idx]))
        return out

    def operator(self, omega: IntervalSet) -> np.ndarray:
        return self._sum(lambda lam: 1.0 if omega.contains(lam) else 0.0)

    def integrate(self, fn: Callable[[float], float]) -> np.ndarray:
        """sum over clusters of fn(lambda) E({lambda})."""
        return self._sum(fn)

    def apply(self, omega: IntervalSet, f: np.ndarray) -> np.ndarray:
        """E(omega) f evaluated step by step on one level-k function."""
        k = self.depth
        out = np.zeros(self.dimension, dtype=np.result_type(f, float))
        for p, _, _ in self._terms:
            g = LevelFunction(k, f)
            q = f if p.level == k else pullback_adjoint(g, self.tower, p.level).values
            q = p.v_projector() @ q
            idx = [ix for value, ix in p.clusters() if omega.contains(value)]
            if idx:
                cols = p.new_vectors[:, np.concatenate(idx)]
                q = cols @ (cols.T @ (q * p.mu))
            else:
                q = np.zeros_like(q)
            out += q if p.level == k else q[self.tower.down_map(k, p.level)]
        return out

    def cluster_values(self) -> np.ndarray:
        vals = [v for p, _, _ in self._terms for v, _ in p.clusters()]
        return np.sort(np.array(vals))


def assemble_resolution(decomp: TelescopeDecomposition, tower: CoverTower, k: int,
                        omega: IntervalSet) -> np.ndarray:
    return SpectralMeasureTrunc(tower, decomp, k).operator(omega)


def direct_resolution(spectrum: SpectrumLevel, omega: IntervalSet) -> np.ndarray:
    """Sum of the level-k eigenprojectors whose eigenvalue lies in omega."""
    return spectrum.projector(omega)


def _rel(diff: np.ndarray, ref: float) -> float:
    return float(np.abs(diff).max(initial=0.0)) / max(1.0, ref)


def pvm_axioms_check(measure: SpectralMeasureTrunc, trials: int = 20, seed: int = 0,
                     tol: float = 1e-9) -> Report:
    """Empty set, whole line, multiplicativity, additivity and the first-moment identity."""
    rng = np.random.default_rng(seed)
    rep = Report(f"projection-valued measure at depth {measure.depth}")
    n = measure.dimension
    top = float(measure.cluster_values().max(initial=0.0)) + 1.0
    rep.bound("E(empty) = 0", _rel(measure.operator(IntervalSet.empty()), 1.0), tol)
    rep.bound("E(R) = id", _rel(measure.operator(IntervalSet.real_line()) - np.eye(n), 1.0), tol)
    mult = add = 0.0
    for _ in range(trials):
        a = random_interval_set(rng, -0.5, top)
        b = random_interval_set(rng, -0.5, top)
        ea, eb = measure.operator(a), measure.operator(b)
        mult = max(mult, _rel(ea @ eb - measure.operator(a.intersect(b)), np.abs(ea).max()))
        parts = split_interval_set(a, rng, int(rng.integers(2, 5)))
        add = max(add, _rel(ea - sum(measure.operator(p) for p in parts), np.abs(ea).max()))
    rep.bound("E(a) E(b) = E(a & b)", mult, tol)
    rep.bound("E(a | b) = E(a) + E(b) for disjoint a, b", add, tol)
    op = laplacian(measure.tower, measure.depth, verify=False)
    moment = measure.integrate(lambda lam: lam)
    worst = 0.0
    mu = measure.mu
    for _ in range(trials):
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lhs = np.sum((op.matrix @ f) * np.conj(u) * mu)
        rhs = np.sum((moment @ f) * np.conj(u) * mu)
        scale = (1 + op.norm) * math.sqrt(np.sum(abs(f) ** 2 * mu) * np.sum(abs(u) ** 2 * mu))
        worst = max(worst, abs(lhs - rhs) / scale)
    rep.bound("<L f, u> = sum lambda <E({lambda}) f, u>", worst, tol)
    return rep


def pullback_spectral_commute_check(tower: CoverTower, spectra: Sequence[SpectrumLevel],
                                    i: int, omega: IntervalSet) -> float:
    """max-entry of P*_{i+1,i} E^i(omega) - E^{i+1}(omega) P*_{i+1,i}."""
    pull = pullback_matrix(tower, i + 1, i)
    lhs = pull @ direct_resolution(spectra[i - 1], omega)
    rhs = direct_resolution(spectra[i], omega) @ pull
    return float(np.abs(lhs - rhs).max(initial=0.0))


# -- spectra of the truncated solenoid --------------------------------------

@dataclass(frozen=True)
class SpectrumPoint:
    value: float
    first_level: int
    multiplicity: int


@dataclass(frozen=True, eq=False)
class SolenoidSpectrum:
    points: tuple[SpectrumPoint, ...]
    depth: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def __len__(self) -> int:
        return len(self.points)


def _merge_union(levels: Iterable[tuple[int, list[tuple[float, int]]]], tol: float):
    points: list[SpectrumPoint] = []
    for lvl, clusters in levels:
        known = np.array([p.value for p in points])
        for value, mult in clusters:
            if len(known) and np.min(np.abs(known - value)) <= tol:
                continue
            points.append(SpectrumPoint(value, lvl, mult))
    return tuple(sorted(points, key=lambda p: (p.value, p.first_level)))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 or len(b) == 0:
        return 0.0 if len(a) == len(b) else math.inf
    a, b = np.sort(a), np.sort(b)

    def one_side(x, y):
        pos = np.clip(np.searchsorted(y, x), 1, len(y) - 1) if len(y) > 1 else np.zeros(len(x), int)
        d = np.abs(x - y[pos])
        if len(y) > 1:
            d = np.minimum(d, np.abs(x - y[pos - 1]))
        return d.max()

    return float(max(one_side(a, b), one_side(b, a)))


def solenoid_spectrum(spectra: Sequence[SpectrumLevel], decomp: TelescopeDecomposition | None = None,
                      depth: int | None = None, tol: float = CLUSTER_TOL) -> SolenoidSpectrum:
    """Union of level spectra up to ``depth`` with first-appearance provenance.

    When ``decomp`` is given the union of new spectra is computed as well and
    the Hausdorff distance between the two routes is recorded.
    """
    k = len(spectra) if depth is None else depth
    by_level = [(s.level, [(v, len(ix)) for v, ix in s.clusters()]) for s in spectra[:k]]
    points = _merge_union(by_level, tol)
    diag: dict = {"route": "level spectra"}
    if decomp is not None:
        new = _merge_union([(p.level, [(v, len(ix)) for v, ix in p.clusters()])
                            for p in decomp.pieces[:k]], tol)
        diag["new_spectra_points"] = len(new)
        diag["route_hausdorff"] = hausdorff(np.array([p.value for p in points]),
                                            np.array([p.value for p in new]))
    return SolenoidSpectrum(points, k, diag)


def density_report(spec: SolenoidSpectrum, lam_max: float, eps: float,
                   zero_tol: float = 1e-8) -> dict:
    """Largest gap of the spectrum inside [0, lam_max], including both ends.

    The window counts as eps-dense when that gap is at most eps.
    """
    if not lam_max > 0 or not eps > 0:
        raise ValueError("need lam_max > 0 and eps > 0")
    vals = spec.values
    inside = np.sort(vals[(vals >= -zero_tol) & (vals <= lam_max)])
    grid = np.concatenate([[0.0], np.clip(inside, 0.0, None), [lam_max]])
    gaps = np.diff(grid)
    at = int(np.argmax(gaps))
    positive = inside[(inside > zero_tol) & (inside < lam_max)]
    return {
        "depth": spec.depth,
        "lambda_max": lam_max,
        "epsilon": eps,
        "points_in_window": int(len(inside)),
        "max_gap": float(gaps[at]),
        "max_gap_between": (float(grid[at]), float(grid[at + 1])),
        "dense": bool(gaps[at] <= eps),
        "infimum_positive": float(positive[0]) if len(positive) else None,
    }


def circle_frequencies(level: int, lam_max: float) -> list[Fraction]:
    """Exact frequencies k / l(level + 1) with (2 pi k / l)^2 <= lam_max."""
    circumference = lcm_ladder(level + 1)
    kmax = int(circumference * math.sqrt(lam_max) / (2 * math.pi)) + 1
    out = []
    for k in range(kmax + 1):
        q = Fraction(k, circumference)
        if (2 * math.pi * float(q)) ** 2 <= lam_max:
            out.append(q)
    return out


def circle_tower_analytic(depth: int, lam_max: float) -> SolenoidSpectrum:
    """Closed-form spectrum of the flat circle tower R / l(n+1) Z, n = 1..depth.

    Eigenvalues are (2 pi k / L)^2; frequencies are merged exactly as
    fractions before the final squaring.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    first: dict[Fraction, int] = {}
    counts = []
    for n in range(1, depth + 1):
        freqs = circle_frequencies(n, lam_max)
        counts.append(len(freqs))
        for q in freqs:
            first.setdefault(q, n)
    points = tuple(SpectrumPoint((2 * math.pi * float(q)) ** 2, lvl, 1 if q == 0 else 2)
                   for q, lvl in sorted(first.items()))
    return SolenoidSpectrum(points, depth, {"route": "closed form",
                                            "circumferences": [lcm_ladder(n + 1) for n in range(1, depth + 1)],
                                            "level_counts": counts})


# -- congruence tower gap table ---------------------------------------------

ANALOG_NOTE = ("Discrete analog only: spectral gaps of Cayley graphs of SL(2, Z/l(n)Z) "
               "with generators S, T. These numbers do not bear on Selberg's 1/4 conjecture.")


@dataclass(frozen=True)
class GapRow:
    level: int
    modulus: int
    vertices: int
    lambda_1: float
    running_inf: float
    solver: str
    dense_agreement: float | None
    residual: float


def congruence_tower(depth: int) -> CoverTower:
    base = WeightedGraph.from_lists(1, [(0, 0, 1.0), (0, 0, 1.0)], [1])
    return build_tower(base, VoltageAssignment(["S", "T"]), sl2_chain(depth))


def _first_nonzero(spec: SpectrumLevel) -> tuple[float, float]:
    tol = spec.cluster_tol
    for val, res in zip(spec.eigenvalues, spec.residuals):
        if val > tol:
            return float(val), float(res)
    return 0.0, float(spec.residuals.max())


def selberg_gap_report(depth: int, m: int = 5, tol: float = 1e-10,
                       dense_limit: int = 512) -> list[GapRow]:
    """lambda_1 per level of the SL(2, Z/l(n)Z) Cayley-graph tower and its running infimum.

    Every level is solved iteratively; levels with at most ``dense_limit``
    vertices are also solved densely and the m lowest eigenvalues compared.
    """
    tower = congruence_tower(depth)
    rows = []
    running = math.inf
    for i in range(1, depth + 1):
        op: LaplaceOperator = laplacian(tower, i)
        it = lowest_eigenpairs(op, min(m, op.dimension), tol)
        lam, res = _first_nonzero(it)
        agree = None
        solver = "iterative"
        if op.dimension <= dense_limit:
            dense = eigendecompose(op)
            agree = float(np.max(np.abs(dense.eigenvalues[:len(it)] - it.eigenvalues)))
            solver = "dense+iterative"
        running = min(running, lam)
        rows.append(GapRow(i, tower.level(i).group.modulus, op.dimension, lam, running,
                           solver, agree, res))
    return rows
