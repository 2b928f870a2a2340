"""Named example towers and a seeded generator of random small towers."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .groups import DeckChain, cyclic_chain, modular_chain, symmetric_chain
from .tower import (CoverTower, DisconnectedCoverError, VoltageAssignment, WeightedGraph,
                    build_tower)


def loop_tower(depth: int = 3) -> CoverTower:
    """One vertex with one loop over the cyclic chain: levels are cycles C_2, C_6, C_12, ..."""
    base = WeightedGraph.from_lists(1, [(0, 0, 1)])
    return build_tower(base, VoltageAssignment([1]), cyclic_chain(depth))


def square_tower() -> CoverTower:
    """C_2 covered by C_4: the base is a double edge, the cover a 4-cycle."""
    base = WeightedGraph.from_lists(1, [(0, 0, 1)])
    return build_tower(base, VoltageAssignment([1]), modular_chain([2, 4]))


def _chains() -> list[tuple[str, DeckChain]]:
    return [
        ("cyclic l-chain", cyclic_chain(3)),
        ("cyclic 2-power chain", modular_chain([2, 4, 8, 16])),
        ("SL(2) mod 2 and 4", modular_chain([2, 4], "sl2")),
        ("symmetric S2 S3 S4", symmetric_chain()),
    ]


CHAIN_NAMES = [name for name, _ in _chains()]


def random_base(rng: np.random.Generator, vertices: int) -> WeightedGraph:
    """Connected multigraph: random spanning tree plus extra edges and loops."""
    edges = []
    for v in range(1, vertices):
        edges.append((int(rng.integers(v)), v))
    for _ in range(int(rng.integers(1, vertices + 2))):
        u, v = (int(x) for x in rng.integers(vertices, size=2))
        edges.append((u, v))
    weights = rng.choice([0.5, 1.0, 1.0, 2.0, 3.0], size=len(edges))
    measure = [Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4))) for _ in range(vertices)]
    return WeightedGraph.from_lists(vertices, [(u, v, w) for (u, v), w in zip(edges, weights)],
                                    measure)


def random_tower(seed: int, chain_index: int | None = None, max_vertices: int = 6,
                 attempts: int = 200) -> tuple[str, CoverTower]:
    """A random connected tower; voltages are redrawn until every level is connected."""
    rng = np.random.default_rng(seed)
    chains = _chains()
    name, chain = chains[seed % len(chains) if chain_index is None else chain_index]
    top = chain.top
    for _ in range(attempts):
        base = random_base(rng, int(rng.integers(2, max_vertices + 1)))
        volts = [top.element(int(rng.integers(top.order))) for _ in range(base.edge_count)]
        try:
            return name, build_tower(base, VoltageAssignment(volts), chain)
        except DisconnectedCoverError:
            continue
    raise RuntimeError(f"no connected tower found for seed {seed}")


def corpus(size: int = 20, seed: int = 0) -> list[tuple[str, CoverTower]]:
    return [random_tower(seed + k) for k in range(size)]
