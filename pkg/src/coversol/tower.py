"""Towers of regular covers built as derived graphs of a voltage assignment.

A base multigraph carries one group element (voltage) per edge, recorded in
a fixed direction u -> v; traversing v -> u uses the inverse.  Level i of
the tower is the derived graph over Gamma_i: vertices are pairs (v, g),
stored as ``v * |Gamma_i| + g``, and the edge e = (u, v) lifts to
(u, g) -- (v, g * alpha(e)) for every g.  The deck group acts on the left,
h . (v, g) = (v, h * g), which commutes with every lifted edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .groups import DeckChain, FiniteGroup
from .report import Report


class DisconnectedCoverError(ValueError):
    """The derived graph splits into several components."""


def _as_fraction(x: Any) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite multigraph with positive edge weights and vertex measure.

    Loops and parallel edges are allowed.  ``exact_measure`` keeps the
    vertex measure as fractions when the graph was built from exact data.
    """

    vertex_count: int
    edges: np.ndarray
    weights: np.ndarray
    vertex_measure: np.ndarray
    exact_measure: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.asarray(self.vertex_measure, dtype=float).reshape(-1)
        if self.vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        if len(weights) != len(edges):
            raise ValueError("one weight per edge is required")
        if len(mu) != self.vertex_count:
            raise ValueError("one measure value per vertex is required")
        if len(edges) and (edges.min() < 0 or edges.max() >= self.vertex_count):
            raise ValueError("edge endpoint outside the vertex range")
        if np.any(~(weights > 0)):
            raise ValueError("edge weights must be positive")
        if np.any(~(mu > 0)):
            raise ValueError("vertex measures must be positive")
        for name, arr in (("edges", edges), ("weights", weights), ("vertex_measure", mu)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_lists(cls, vertex_count: int, edges: Sequence[tuple], measure: Sequence | None = None):
        """Build from ``[(u, v, w), ...]`` and a measure list (default all ones).

        Measure entries may be ints, floats, Fractions or ``"p/q"`` strings;
        they are kept exactly alongside the float copy.
        """
        if measure is None:
            measure = [1] * vertex_count
        exact = tuple(_as_fraction(m) for m in measure)
        uv = [(int(e[0]), int(e[1])) for e in edges]
        w = [float(e[2]) if len(e) > 2 else 1.0 for e in edges]
        return cls(vertex_count, np.array(uv, dtype=np.int64).reshape(-1, 2),
                   np.array(w), np.array([float(m) for m in exact]), exact)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def darts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(tail, head, weight) for both directions of every edge."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        return (np.concatenate([u, v]), np.concatenate([v, u]),
                np.concatenate([self.weights, self.weights]))

    def component_labels(self) -> np.ndarray:
        n = self.vertex_count
        adj = coo_matrix((np.ones(self.edge_count), (self.edges[:, 0], self.edges[:, 1])),
                         shape=(n, n))
        return connected_components(adj, directed=False)[1]

    def is_connected(self) -> bool:
        return len(np.unique(self.component_labels())) == 1


@dataclass(frozen=True)
class VoltageAssignment:
    """One group-element literal per base edge, read in the stored u -> v direction."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def in_group(self, group: FiniteGroup) -> np.ndarray:
        """Element indices of the voltages in ``group`` (ValueError if any is not a member)."""
        out = np.empty(len(self.values), dtype=np.int64)
        for k, lit in enumerate(self.values):
            try:
                out[k] = group.index(lit)
            except ValueError as exc:
                raise ValueError(f"voltage on edge {k}: {exc}") from None
        return out

    @staticmethod
    def reverse(group: FiniteGroup, alpha: int) -> int:
        return group.inv(alpha)


@dataclass(frozen=True, eq=False)
class CoverLevel:
    """One level of the tower: the derived graph over ``group``."""

    index: int
    group: FiniteGroup
    graph: WeightedGraph
    base_count: int
    voltages: np.ndarray
    down: np.ndarray | None = None

    @property
    def vertex_count(self) -> int:
        return self.graph.vertex_count

    @cached_property
    def base_vertex(self) -> np.ndarray:
        return np.arange(self.vertex_count) // self.group.order

    @cached_property
    def element(self) -> np.ndarray:
        return np.arange(self.vertex_count) % self.group.order

    def vertex(self, base_vertex: int, element: int) -> int:
        return base_vertex * self.group.order + element

    def deck(self, h: int) -> np.ndarray:
        """Vertex permutation of the deck transformation h: (v, g) -> (v, h g)."""
        return self.base_vertex * self.group.order + self.group.left_mul(h)[self.element]

    def deck_table(self) -> np.ndarray:
        return np.stack([self.deck(h) for h in range(self.group.order)])


def derive_cover(base: WeightedGraph, voltages: Sequence[int], group: FiniteGroup,
                 index: int = 1, down: np.ndarray | None = None) -> CoverLevel:
    """Derived graph of ``base`` under voltage indices in ``group``.

    Raises DisconnectedCoverError naming the subgroup generated by the
    closed-walk voltages when the result is not connected.
    """
    voltages = np.asarray(voltages, dtype=np.int64)
    if len(voltages) != base.edge_count:
        raise ValueError("one voltage per base edge is required")
    if np.any((voltages < 0) | (voltages >= group.order)):
        raise ValueError("voltage index outside the group")
    if not base.is_connected():
        raise ValueError("the base graph must be connected")
    order = group.order
    gs = np.arange(order)
    us, vs = [], []
    for (u, v), alpha in zip(base.edges, voltages):
        us.append(u * order + gs)
        vs.append(v * order + group.right_mul(int(alpha)))
    edges = np.stack([np.concatenate(us), np.concatenate(vs)], axis=1) if us \
        else np.zeros((0, 2), dtype=np.int64)
    weights = np.repeat(base.weights, order)
    mu = np.repeat(base.vertex_measure / order, order)
    graph = WeightedGraph(base.vertex_count * order, edges, weights, mu)
    labels = graph.component_labels()
    if len(np.unique(labels)) > 1:
        local = local_group(base, voltages, group)
        sub = group.generated(local)
        raise DisconnectedCoverError(
            f"derived graph over {group!r} has {len(np.unique(labels))} components: "
            f"the voltages generate a subgroup of order {len(sub)} "
            f"(index {order // len(sub)})")
    return CoverLevel(index, group, graph, base.vertex_count, voltages, down)


def local_group(base: WeightedGraph, voltages: np.ndarray, group: FiniteGroup) -> list[int]:
    """Voltages of the fundamental closed walks at vertex 0 (spanning-tree normalized)."""
    n = base.vertex_count
    pot = np.full(n, -1, dtype=np.int64)   # voltage of the tree path 0 -> v
    pot[0] = group.identity
    tree = np.zeros(base.edge_count, dtype=bool)
    changed = True
    while changed:
        changed = False
        for k, (u, v) in enumerate(base.edges):
            a = int(voltages[k])
            if pot[u] >= 0 and pot[v] < 0:
                pot[v] = group.mul(int(pot[u]), a)
                tree[k] = changed = True
            elif pot[v] >= 0 and pot[u] < 0:
                pot[u] = group.mul(int(pot[v]), group.inv(a))
                tree[k] = changed = True
    out = []
    for k, (u, v) in enumerate(base.edges):
        if not tree[k]:
            walk = group.mul(group.mul(int(pot[u]), int(voltages[k])), group.inv(int(pot[v])))
            out.append(walk)
    return out


@dataclass(frozen=True, eq=False)
class CoverTower:
    """Levels X_1 <- X_2 <- ... <- X_k over a common base graph."""

    base: WeightedGraph
    voltage: VoltageAssignment
    chain: DeckChain
    levels: tuple[CoverLevel, ...] = field(default=())

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, i: int) -> CoverLevel:
        if not 1 <= i <= self.depth:
            raise IndexError(f"level {i} outside 1..{self.depth}")
        return self.levels[i - 1]

    def order(self, i: int) -> int:
        return self.level(i).group.order

    def down_map(self, j: int, i: int) -> np.ndarray:
        """Composite covering map P_{j,i} from level j vertices to level i vertices.

        ``i = 0`` means the base graph.
        """
        if i > j:
            raise ValueError("covering maps go from higher to lower levels")
        if i == 0:
            return self.level(j).base_vertex.copy()
        table = np.arange(self.level(j).vertex_count)
        for k in range(j, i, -1):
            table = self.level(k).down[table]
        return table

    def direct_map(self, j: int, i: int) -> np.ndarray:
        """P_{j,i} computed in one step from the chain's composite projection."""
        lj = self.level(j)
        proj = self.chain.projection_table(j, i)
        return lj.base_vertex * self.order(i) + proj[lj.element]

    def truncate(self, depth: int) -> "CoverTower":
        return CoverTower(self.base, self.voltage, self.chain.truncate(depth), self.levels[:depth])


def build_tower(base: WeightedGraph, voltage: VoltageAssignment, chain: DeckChain) -> CoverTower:
    """Derive every level of ``chain`` with voltages pushed down from the top group."""
    top = voltage.in_group(chain.top)
    levels: list[CoverLevel] = []
    for i in range(1, chain.depth + 1):
        group = chain.group(i)
        alpha = chain.projection_table(chain.depth, i)[top]
        down = None
        if i > 1:
            below = chain.group(i - 1)
            q = chain.projections[i - 2]
            ids = np.arange(base.vertex_count * group.order)
            down = (ids // group.order) * below.order + q[ids % group.order]
        try:
            levels.append(derive_cover(base, alpha, group, i, down))
        except DisconnectedCoverError as exc:
            raise DisconnectedCoverError(f"level {i}: {exc}") from None
    return CoverTower(base, voltage, chain, tuple(levels))


def fiber(tower: CoverTower, i: int, x: int) -> np.ndarray:
    """Vertices of level i lying over base vertex x."""
    if not 0 <= x < tower.base.vertex_count:
        raise IndexError(f"base vertex {x} outside 0..{tower.base.vertex_count - 1}")
    return np.flatnonzero(tower.down_map(i, 0) == x)


def fiber_over(tower: CoverTower, j: int, i: int, y: int) -> np.ndarray:
    """Vertices of level j lying over vertex y of level i."""
    if not 0 <= y < tower.level(i).vertex_count:
        raise IndexError(f"vertex {y} outside level {i}")
    return np.flatnonzero(tower.down_map(j, i) == y)


def _dart_keys(tail, head, w):
    order = np.lexsort((w, head, tail))
    return tail[order], head[order], w[order]


def check_covering(tower: CoverTower, i: int) -> Report:
    """Edge-star bijectivity and map composition for level i."""
    rep = Report(f"covering map at level {i}")
    lvl = tower.level(i)
    below = tower.base if i == 1 else tower.level(i - 1).graph
    down = tower.down_map(i, i - 1)
    rep.add("vertex count = |Gamma_i| * base count",
            lvl.vertex_count == lvl.group.order * tower.base.vertex_count, lvl.vertex_count)
    t, h, w = lvl.graph.darts()
    mine = _dart_keys(t, down[h], w)
    bt, bh, bw = below.darts()
    # each dart of the lower level, repeated over the fiber of its tail
    tails, heads, ws = [], [], []
    for x in range(below.vertex_count):
        fib = np.flatnonzero(down == x)
        sel = bt == x
        tails.append(np.repeat(fib, np.count_nonzero(sel)))
        heads.append(np.tile(bh[sel], len(fib)))
        ws.append(np.tile(bw[sel], len(fib)))
    theirs = _dart_keys(np.concatenate(tails), np.concatenate(heads), np.concatenate(ws))
    same = len(mine[0]) == len(theirs[0]) and all(np.array_equal(a, b) for a, b in zip(mine, theirs))
    rep.add("edge stars map bijectively with weights", same)
    for j in range(1, i - 1):
        for k in range(j + 1, i):
            ok = np.array_equal(tower.down_map(k, j)[tower.down_map(i, k)], tower.down_map(i, j))
            rep.add(f"P_{{{k},{j}}} o P_{{{i},{k}}} = P_{{{i},{j}}}", ok)
    for j in range(0, i):
        if j >= 1:
            rep.add(f"P_{{{i},{j}}} matches the chain projection",
                    np.array_equal(tower.down_map(i, j), tower.direct_map(i, j)))
    return rep


def check_principal(tower: CoverTower, i: int, deck: np.ndarray | None = None) -> Report:
    """Deck group of level i acts freely and transitively on fibers, preserving edges.

    ``deck`` overrides the action table (rows indexed by group element).
    """
    rep = Report(f"principal bundle at level {i}")
    lvl = tower.level(i)
    grp = lvl.group
    table = lvl.deck_table() if deck is None else np.asarray(deck)
    base_of = lvl.base_vertex
    rep.add("deck action preserves fibers", bool(np.all(base_of[table] == base_of[None, :])))
    if i > 1:
        down = lvl.down
        q = tower.chain.projections[i - 2]
        lower = tower.level(i - 1).deck_table()
        ok = all(np.array_equal(down[table[hh]], lower[q[hh]][down]) for hh in range(grp.order))
        rep.add("deck action is equivariant with the covering map", ok)
    edges = lvl.graph.edges
    w = lvl.graph.weights

    def keys(e):
        lo, hi = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
        o = np.lexsort((w, hi, lo))
        return np.stack([lo[o], hi[o]], axis=1), w[o]

    ref_e, ref_w = keys(edges)
    preserved = True
    for hh in range(grp.order):
        img = table[hh][edges]
        e2, w2 = keys(img)
        if not (np.array_equal(e2, ref_e) and np.array_equal(w2, ref_w)):
            preserved = False
            break
    rep.add("deck action preserves edges and weights", preserved)
    ident = np.arange(lvl.vertex_count)
    fixes = table != ident[None, :]
    others = np.delete(np.arange(grp.order), grp.identity)
    free = bool(np.all(fixes[others])) if len(others) else True
    rep.add("action is free", free)
    transitive = True
    for x in range(tower.base.vertex_count):
        v0 = lvl.vertex(x, 0)
        orbit = np.unique(table[:, v0])
        if not np.array_equal(orbit, np.flatnonzero(base_of == x)):
            transitive = False
            break
    rep.add("action is transitive on every fiber", transitive)
    return rep
