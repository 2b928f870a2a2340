"""Level measures, inner products and the pullback / fiber-average pair.

The fiber of level i over a base vertex x carries the normalized counting
measure of Gamma_i scaled by the base mass, so mu_i(v) = mu_base(x) / |Gamma_i|.
Passing ``exact=True`` computes measures as fractions; level 0 is the base.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse

from .tower import CoverTower


class LevelMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LevelMeasure:
    level: int
    weights: np.ndarray

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    def total(self):
        return sum(self.weights.tolist(), Fraction(0)) if self.exact else float(np.sum(self.weights))

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class LevelFunction:
    level: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))

    def __len__(self) -> int:
        return len(self.values)


def _vertex_count(tower: CoverTower, i: int) -> int:
    return tower.base.vertex_count if i == 0 else tower.level(i).vertex_count


def level_measure(tower: CoverTower, i: int, exact: bool = False) -> LevelMeasure:
    if exact:
        base = tower.base.exact_measure
        if base is None:
            base = tuple(Fraction(float(m)) for m in tower.base.vertex_measure)
        base = np.array(base, dtype=object)
        if i == 0:
            return LevelMeasure(0, base)
        order = tower.order(i)
        return LevelMeasure(i, np.array([m / order for m in base[tower.down_map(i, 0)]],
                                        dtype=object))
    if i == 0:
        return LevelMeasure(0, tower.base.vertex_measure.copy())
    return LevelMeasure(i, tower.base.vertex_measure[tower.down_map(i, 0)] / tower.order(i))


def fiber_size(tower: CoverTower, j: int, i: int) -> int:
    """Degree of P_{j,i}; level 0 is the base."""
    lo = 1 if i == 0 else tower.order(i)
    return tower.order(j) // lo


def measure_consistency(tower: CoverTower, i: int, j: int, exact: bool = False):
    """Largest gap between mu_j and the measure induced from mu_i with fibers of size |G_j|/|G_i|."""
    if i > j:
        raise ValueError("need i <= j")
    direct = level_measure(tower, j, exact).weights
    lower = level_measure(tower, i, exact).weights
    induced = lower[tower.down_map(j, i)]
    d = fiber_size(tower, j, i)
    if exact:
        return max((abs(a / d - b) for a, b in zip(induced, direct)), default=Fraction(0))
    return float(np.max(np.abs(induced / d - direct)))


def _check(f: LevelFunction, mu: LevelMeasure) -> None:
    if f.level != mu.level:
        raise LevelMismatchError(f"function on level {f.level}, measure on level {mu.level}")
    if len(f) != len(mu):
        raise LevelMismatchError(f"function has {len(f)} values, level has {len(mu)} vertices")


def inner_product(f: LevelFunction, g: LevelFunction, mu: LevelMeasure):
    """<f, g> = sum_v f(v) conj(g(v)) mu(v)."""
    _check(f, mu)
    _check(g, mu)
    if f.values.dtype == object or g.values.dtype == object or mu.exact:
        return sum((a * np.conjugate(b) * m for a, b, m in
                    zip(f.values.tolist(), g.values.tolist(), mu.weights.tolist())), Fraction(0))
    return np.sum(f.values * np.conj(g.values) * mu.weights)


def integral(f: LevelFunction, mu: LevelMeasure):
    _check(f, mu)
    if f.values.dtype == object or mu.exact:
        return sum((a * m for a, m in zip(f.values.tolist(), mu.weights.tolist())), Fraction(0))
    return np.sum(f.values * mu.weights)


def norm(f: LevelFunction, mu: LevelMeasure, p: float = 2.0) -> float:
    """L^p norm for p >= 1."""
    _check(f, mu)
    if p < 1:
        raise ValueError("L^p norms need p >= 1")
    vals = np.abs(f.values.astype(complex))
    return float(np.sum(vals**p * mu.weights.astype(float)) ** (1.0 / p))


def pullback_matrix(tower: CoverTower, j: int, i: int) -> sparse.csr_matrix:
    """Sparse 0/1 matrix of P*_{j,i}: level-i functions to level-j functions."""
    rows = np.arange(_vertex_count(tower, j))
    cols = tower.down_map(j, i) if j > 0 else rows
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)),
                             shape=(len(rows), _vertex_count(tower, i)))


def averaging_matrix(tower: CoverTower, j: int, i: int) -> sparse.csr_matrix:
    """Fiber average from level j to level i; the mu-adjoint of the pullback."""
    return (pullback_matrix(tower, j, i).T / fiber_size(tower, j, i)).tocsr()


def pullback(f: LevelFunction, tower: CoverTower, j: int) -> LevelFunction:
    """(P* f)(v) = f(P_{j,i}(v)) for f on level i < j."""
    i = f.level
    if not i < j <= tower.depth:
        raise ValueError(f"cannot pull back from level {i} to level {j}")
    if len(f) != _vertex_count(tower, i):
        raise LevelMismatchError("function length does not match its level")
    return LevelFunction(j, f.values[tower.down_map(j, i)])


def pullback_adjoint(g: LevelFunction, tower: CoverTower, i: int) -> LevelFunction:
    """(Q g)(y) = average of g over the fiber of level g.level above y."""
    j = g.level
    if not 0 <= i < j:
        raise ValueError(f"cannot average from level {j} to level {i}")
    if len(g) != _vertex_count(tower, j):
        raise LevelMismatchError("function length does not match its level")
    down = tower.down_map(j, i)
    d = fiber_size(tower, j, i)
    if g.values.dtype == object:
        sums = [Fraction(0)] * _vertex_count(tower, i)
        for y, val in zip(down.tolist(), g.values.tolist()):
            sums[y] += val
        return LevelFunction(i, np.array([s / d for s in sums], dtype=object))
    out = np.zeros(_vertex_count(tower, i), dtype=np.result_type(g.values, float))
    np.add.at(out, down, g.values)
    return LevelFunction(i, out / d)


def density_rank(tower: CoverTower, k: int) -> dict:
    """Rank data for the finite analog of density of pulled-back functions.

    Stacks the pullbacks to level k of the indicator functions of every level
    i <= k and reports the rank of each block and of the whole stack.  The
    stack has full rank exactly when pullbacks span the level-k space.
    """
    blocks = [pullback_matrix(tower, k, i).toarray() for i in range(0, k + 1)]
    ranks = [int(np.linalg.matrix_rank(b)) for b in blocks]
    full = int(np.linalg.matrix_rank(np.hstack(blocks)))
    n = _vertex_count(tower, k)
    return {"level": k, "dimension": n, "block_ranks": ranks,
            "block_dimensions": [_vertex_count(tower, i) for i in range(0, k + 1)],
            "stacked_rank": full, "full": full == n}
