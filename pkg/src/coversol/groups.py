"""Finite deck groups and nested chains of quotient maps.

Three families are supported: cyclic groups Z/mZ, the congruence quotients
SL(2, Z/mZ) generated by S = [[0, -1], [1, 0]] and T = [[1, 1], [0, 1]], and
permutation groups given by generators.  Every group is materialized as an
indexed element list so that products, inverses and quotient maps become
integer array lookups.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .report import Report

INT_CAP = 2**63 - 1
ELEMENT_CAP = 200_000
EXHAUSTIVE_PAIRS = 5000
SAMPLED_PAIRS = 10_000
_TABLE_LIMIT = 2048


class GroupCapError(ValueError):
    """A group would exceed the enumeration cap or the integer cap."""


def lcm_ladder(k: int, cap: int = INT_CAP) -> int:
    """Least common multiple of 2, 3, ..., k.

    Raises OverflowError instead of returning a value above ``cap``.
    """
    if k < 2:
        raise ValueError(f"lcm_ladder needs k >= 2, got {k}")
    out = 1
    for j in range(2, k + 1):
        out = out * j // math.gcd(out, j)
        if out > cap:
            raise OverflowError(f"lcm(2..{k}) exceeds the integer cap {cap}")
    return out


def prime_factors(m: int) -> list[int]:
    ps, p = [], 2
    while p * p <= m:
        if m % p == 0:
            ps.append(p)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        ps.append(m)
    return ps


def sl2_order(m: int) -> int:
    """|SL(2, Z/mZ)| = m^3 prod_{p | m} (1 - p^-2)."""
    if m == 1:
        return 1
    num, den = m**3, 1
    for p in prime_factors(m):
        num *= p * p - 1
        den *= p * p
    return num // den


class FiniteGroup:
    """A finite group with materialized, indexed elements.

    Elements are stored as rows of an integer array.  Subclasses provide the
    row product, the row inverse, and the literal parser.
    """

    kind = "abstract"

    def __init__(self, rows: np.ndarray, generators: np.ndarray, identity: np.ndarray,
                 cap: int = ELEMENT_CAP):
        self.cap = cap
        self._identity = np.asarray(identity, dtype=np.int64)
        self._generators = np.asarray(generators, dtype=np.int64).reshape(-1, self.width)
        if rows is None:
            rows = self._closure(self._generators)
        self._set_rows(np.asarray(rows, dtype=np.int64).reshape(-1, self.width))

    # -- subclass hooks -------------------------------------------------
    width = 1

    def _mul_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inv_rows(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _codes(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def coerce(self, literal: Any) -> np.ndarray:
        """Parse a literal into an element row, raising ValueError if invalid."""
        raise NotImplementedError

    def to_literal(self, row: np.ndarray) -> Any:
        raise NotImplementedError

    # -- storage --------------------------------------------------------
    def _set_rows(self, rows: np.ndarray) -> None:
        codes = self._codes(rows)
        order = np.argsort(codes, kind="stable")
        self.rows = rows[order]
        self.rows.setflags(write=False)
        self._sorted_codes = codes[order]

    def _closure(self, gens: np.ndarray) -> np.ndarray:
        seen_codes = self._codes(self._identity[None, :])
        frontier = self._identity[None, :]
        found = [frontier]
        total = 1
        while len(frontier):
            cand = np.concatenate([self._mul_rows(frontier, g[None, :]) for g in gens]) \
                if len(gens) else frontier[:0]
            codes = self._codes(cand)
            codes, first = np.unique(codes, return_index=True)
            fresh = ~np.isin(codes, seen_codes)
            frontier = cand[first[fresh]]
            if len(frontier) == 0:
                break
            seen_codes = np.union1d(seen_codes, codes[fresh])
            found.append(frontier)
            total += len(frontier)
            if total > self.cap:
                raise GroupCapError(
                    f"{self.kind} group exceeds the element cap {self.cap}")
        return np.concatenate(found)

    @property
    def order(self) -> int:
        return len(self.rows)

    def __len__(self) -> int:
        return self.order

    @cached_property
    def identity(self) -> int:
        return int(self.lookup(self._identity[None, :])[0])

    @property
    def generators(self) -> list[int]:
        return [int(i) for i in self.lookup(self._generators)]

    def lookup(self, rows: np.ndarray, strict: bool = True) -> np.ndarray:
        """Indices of the given element rows (-1 for non-members if not strict)."""
        codes = self._codes(np.asarray(rows, dtype=np.int64).reshape(-1, self.width))
        idx = np.searchsorted(self._sorted_codes, codes)
        idx = np.minimum(idx, self.order - 1)
        ok = self._sorted_codes[idx] == codes
        if strict and not ok.all():
            raise ValueError(f"element not in this {self.kind} group")
        return np.where(ok, idx, -1)

    def index(self, literal: Any) -> int:
        return int(self.lookup(self.coerce(literal)[None, :])[0])

    def element(self, i: int) -> Any:
        return self.to_literal(self.rows[i])

    # -- arithmetic on indices --------------------------------------------
    def mul(self, a: int, b: int) -> int:
        if self._table is not None:
            return int(self._table[a, b])
        return int(self.lookup(self._mul_rows(self.rows[[a]], self.rows[[b]]))[0])

    def inv(self, a: int) -> int:
        return int(self.inverse_table[a])

    @cached_property
    def inverse_table(self) -> np.ndarray:
        return self.lookup(self._inv_rows(self.rows))

    @cached_property
    def _table(self) -> np.ndarray | None:
        if self.order > _TABLE_LIMIT:
            return None
        table = np.empty((self.order, self.order), dtype=np.int32)
        for a in range(self.order):
            table[a] = self.lookup(self._mul_rows(self.rows[[a]], self.rows))
        return table

    def left_mul(self, a: int) -> np.ndarray:
        """Index array of a*g over all g."""
        if self._table is not None:
            return self._table[a].astype(np.int64)
        return self.lookup(self._mul_rows(self.rows[[a]], self.rows))

    def right_mul(self, a: int) -> np.ndarray:
        """Index array of g*a over all g."""
        if self._table is not None:
            return self._table[:, a].astype(np.int64)
        return self.lookup(self._mul_rows(self.rows, self.rows[[a]]))

    def generated(self, elems: Sequence[int]) -> np.ndarray:
        """Sorted indices of the subgroup generated by ``elems``."""
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        frontier = np.array([self.identity])
        maps = [self.right_mul(int(e)) for e in elems]
        while len(frontier):
            nxt = np.unique(np.concatenate([m[frontier] for m in maps])) if maps \
                else np.empty(0, dtype=np.int64)
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return np.flatnonzero(seen)

    def describe_subgroup(self, elems: Sequence[int]) -> str:
        sub = self.generated(elems)
        return f"subgroup of order {len(sub)} in {self!r}"

    def __repr__(self) -> str:
        return f"{type(self).__name__}(order={self.order})"


class CyclicGroup(FiniteGroup):
    kind = "cyclic"
    width = 1

    def __init__(self, modulus: int, cap: int = ELEMENT_CAP):
        if modulus < 1:
            raise ValueError("modulus must be positive")
        if modulus > cap:
            raise GroupCapError(f"cyclic group of order {modulus} exceeds the element cap {cap}")
        self.modulus = modulus
        super().__init__(np.arange(modulus).reshape(-1, 1), [[1 % modulus]], [0], cap)

    def _mul_rows(self, a, b):
        return (a + b) % self.modulus

    def _inv_rows(self, a):
        return (-a) % self.modulus

    def _codes(self, rows):
        return rows[:, 0]

    def coerce(self, literal):
        if isinstance(literal, bool) or not isinstance(literal, (int, np.integer)):
            raise ValueError(f"cyclic voltage must be an integer, got {literal!r}")
        return np.array([int(literal) % self.modulus])

    def to_literal(self, row):
        return int(row[0])

    def __repr__(self):
        return f"Z/{self.modulus}Z"


S_MATRIX = ((0, -1), (1, 0))
T_MATRIX = ((1, 1), (0, 1))
_NAMED = {"S": S_MATRIX, "T": T_MATRIX, "I": ((1, 0), (0, 1)),
          "-I": ((-1, 0), (0, -1))}


class SL2Group(FiniteGroup):
    """SL(2, Z/mZ) generated by the reductions of S and T."""

    kind = "sl2"
    width = 4

    def __init__(self, modulus: int, cap: int = ELEMENT_CAP):
        if modulus < 2:
            raise ValueError("SL(2, Z/mZ) needs m >= 2")
        expected = sl2_order(modulus)
        if expected > cap:
            raise GroupCapError(
                f"SL(2, Z/{modulus}Z) has order {expected}, above the element cap {cap}")
        self.modulus = modulus
        gens = np.array([self._flat(S_MATRIX), self._flat(T_MATRIX)])
        super().__init__(None, gens, [1, 0, 0, 1 % modulus], cap)

    def _flat(self, mat) -> np.ndarray:
        return np.array([mat[0][0], mat[0][1], mat[1][0], mat[1][1]], dtype=np.int64) % self.modulus

    def _mul_rows(self, x, y):
        a, b, c, d = x[:, 0], x[:, 1], x[:, 2], x[:, 3]
        e, f, g, h = y[:, 0], y[:, 1], y[:, 2], y[:, 3]
        return np.stack([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
                        axis=1) % self.modulus

    def _inv_rows(self, x):
        return np.stack([x[:, 3], -x[:, 1], -x[:, 2], x[:, 0]], axis=1) % self.modulus

    def _codes(self, rows):
        m = self.modulus
        return ((rows[:, 0] * m + rows[:, 1]) * m + rows[:, 2]) * m + rows[:, 3]

    def coerce(self, literal):
        if isinstance(literal, str):
            if literal not in _NAMED:
                raise ValueError(f"unknown matrix name {literal!r}")
            literal = _NAMED[literal]
        try:
            (a, b), (c, d) = literal
            vals = [int(a), int(b), int(c), int(d)]
        except (TypeError, ValueError):
            raise ValueError(f"sl2 voltage must be a 2x2 integer matrix, got {literal!r}") from None
        row = np.array(vals, dtype=np.int64) % self.modulus
        if (row[0] * row[3] - row[1] * row[2]) % self.modulus != 1 % self.modulus:
            raise ValueError(f"matrix {literal!r} does not have determinant 1 mod {self.modulus}")
        return row

    def to_literal(self, row):
        return ((int(row[0]), int(row[1])), (int(row[2]), int(row[3])))

    def __repr__(self):
        return f"SL(2,Z/{self.modulus}Z)"


class PermutationGroup(FiniteGroup):
    """Permutations of {0..n-1} under composition (g*h)(x) = g(h(x))."""

    kind = "permutation"

    def __init__(self, degree: int, generators: Sequence[Sequence[int]],
                 cap: int = ELEMENT_CAP):
        if degree < 1:
            raise ValueError("degree must be positive")
        self.degree = degree
        self.width = degree
        gens = np.array([self.coerce(g) for g in generators], dtype=np.int64).reshape(-1, degree)
        super().__init__(None, gens, np.arange(degree), cap)

    def _mul_rows(self, x, y):
        shape = (max(len(x), len(y)), self.degree)
        return np.take_along_axis(np.broadcast_to(x, shape), np.broadcast_to(y, shape), axis=1)

    def _inv_rows(self, x):
        out = np.empty_like(x)
        np.put_along_axis(out, x, np.arange(self.degree)[None, :].repeat(len(x), 0), axis=1)
        return out

    def _codes(self, rows):
        if self.degree > 15:
            raise GroupCapError("permutation degree above 15 overflows the element codes")
        weights = self.degree ** np.arange(self.degree - 1, -1, -1, dtype=np.int64)
        return rows @ weights

    def coerce(self, literal):
        try:
            row = np.array([int(v) for v in literal], dtype=np.int64)
        except (TypeError, ValueError):
            raise ValueError(f"permutation literal must be a list of integers, got {literal!r}") from None
        if len(row) != self.degree or sorted(row.tolist()) != list(range(self.degree)):
            raise ValueError(f"{literal!r} is not a permutation of 0..{self.degree - 1}")
        return row

    def to_literal(self, row):
        return tuple(int(v) for v in row)

    def __repr__(self):
        return f"PermutationGroup(degree={self.degree}, order={self.order})"


def _reduction_map(src: FiniteGroup, dst: FiniteGroup) -> np.ndarray:
    """Entrywise reduction mod dst.modulus, for cyclic and sl2 groups."""
    return dst.lookup(src.rows % dst.modulus)


def _extend_generator_map(src: FiniteGroup, dst: FiniteGroup,
                          images: Sequence[int]) -> np.ndarray:
    """Extend generators[k] -> images[k] to a homomorphism table src -> dst.

    Walks the right Cayley graph of src; every edge g -> g*s is checked, so a
    correspondence that is not a homomorphism is rejected.
    """
    gens = src.generators
    if len(gens) != len(images):
        raise ValueError("generator correspondence has mismatched lengths")
    table = np.full(src.order, -1, dtype=np.int64)
    table[src.identity] = dst.identity
    right = [src.right_mul(s) for s in gens]
    queue = deque([src.identity])
    while queue:
        g = queue.popleft()
        for k, s in enumerate(gens):
            h = int(right[k][g])
            img = dst.mul(int(table[g]), int(images[k]))
            if table[h] < 0:
                table[h] = img
                queue.append(h)
            elif table[h] != img:
                raise ValueError(
                    f"generator correspondence {src!r} -> {dst!r} is not a homomorphism")
    return table


@dataclass(frozen=True)
class DeckChain:
    """Finite truncation Gamma_1 <- Gamma_2 <- ... <- Gamma_k of the deck group.

    ``projections[i]`` maps element indices of ``levels[i + 1]`` to indices
    of ``levels[i]`` (0-based storage; level numbers in the API are 1-based).
    """

    levels: tuple[FiniteGroup, ...]
    projections: tuple[np.ndarray, ...]
    kind: str = "custom"

    def __post_init__(self):
        if len(self.projections) != len(self.levels) - 1:
            raise ValueError("need exactly one projection between consecutive levels")

    @property
    def depth(self) -> int:
        return len(self.levels)

    def group(self, i: int) -> FiniteGroup:
        """Deck group of level i (1-based)."""
        if not 1 <= i <= self.depth:
            raise IndexError(f"level {i} outside 1..{self.depth}")
        return self.levels[i - 1]

    @property
    def orders(self) -> list[int]:
        return [g.order for g in self.levels]

    @property
    def kernel_sizes(self) -> list[int]:
        out = []
        for i, proj in enumerate(self.projections):
            out.append(int(np.count_nonzero(proj == self.levels[i].identity)))
        return out

    @property
    def top(self) -> FiniteGroup:
        return self.levels[-1]

    def projection_table(self, src: int, dst: int) -> np.ndarray:
        """Composite quotient map Gamma_src -> Gamma_dst as an index table."""
        if dst > src:
            raise ValueError("projections only go down the chain")
        table = np.arange(self.group(src).order)
        for j in range(src - 1, dst - 1, -1):
            table = self.projections[j - 1][table]
        return table

    def truncate(self, depth: int) -> "DeckChain":
        if not 1 <= depth <= self.depth:
            raise ValueError(f"cannot truncate a depth-{self.depth} chain to {depth}")
        return DeckChain(self.levels[:depth], self.projections[:depth - 1], self.kind)


def cyclic_chain(depth: int, cap: int = ELEMENT_CAP) -> DeckChain:
    """Z/l(2) <- Z/l(3) <- ... <- Z/l(depth+1) with reduction maps."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return modular_chain([lcm_ladder(n + 1) for n in range(1, depth + 1)], "cyclic", cap)


def sl2_chain(depth: int, cap: int = ELEMENT_CAP) -> DeckChain:
    """SL(2, Z/l(n+1)) for n = 1..depth with entrywise reduction maps."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    moduli = [lcm_ladder(n + 1) for n in range(1, depth + 1)]
    for m in moduli:
        if sl2_order(m) > cap:
            raise GroupCapError(
                f"SL(2, Z/{m}Z) has order {sl2_order(m)}, above the element cap {cap}")
    return modular_chain(moduli, "sl2", cap)


def modular_chain(moduli: Sequence[int], kind: str = "cyclic",
                  cap: int = ELEMENT_CAP) -> DeckChain:
    """Chain of cyclic or sl2 groups over a divisibility chain of moduli."""
    moduli = [int(m) for m in moduli]
    if not moduli:
        raise ValueError("need at least one modulus")
    for a, b in zip(moduli, moduli[1:]):
        if b % a:
            raise ValueError(f"modulus {a} does not divide {b}")
    if kind == "cyclic":
        levels = [CyclicGroup(m, cap) for m in moduli]
    elif kind == "sl2":
        levels = [SL2Group(m, cap) for m in moduli]
    else:
        raise ValueError(f"unknown modular chain kind {kind!r}")
    projs = tuple(_reduction_map(levels[i + 1], levels[i]) for i in range(len(levels) - 1))
    return DeckChain(tuple(levels), projs, kind)


def permutation_chain(degrees: Sequence[int],
                      generators: Sequence[Sequence[Sequence[int]]],
                      cap: int = ELEMENT_CAP) -> DeckChain:
    """Chain of permutation groups; generator k of level i+1 maps to generator k of level i.

    >>> ch = permutation_chain([2, 3], [[[1, 0], [0, 1]], [[1, 0, 2], [1, 2, 0]]])
    >>> ch.orders
    [2, 6]
    """
    if len(degrees) != len(generators) or not degrees:
        raise ValueError("need one generator list per level")
    counts = {len(g) for g in generators}
    if len(counts) != 1:
        raise ValueError("every level needs the same number of generators")
    levels = [PermutationGroup(d, gens, cap) for d, gens in zip(degrees, generators)]
    projs = []
    for i in range(len(levels) - 1):
        images = levels[i].generators
        projs.append(_extend_generator_map(levels[i + 1], levels[i], images))
    return DeckChain(tuple(levels), tuple(projs), "permutation")


def symmetric_chain() -> DeckChain:
    """S_2 <- S_3 <- S_4: sign map, then the action of S_4 on the three pairings."""
    return permutation_chain(
        [2, 3, 4],
        [[[1, 0], [1, 0]],
         [[0, 2, 1], [2, 1, 0]],
         [[1, 0, 2, 3], [1, 2, 3, 0]]])


def chain_from_config(spec: dict, cap: int = ELEMENT_CAP) -> DeckChain:
    """Build a chain from ``{"kind": ..., "depth": N, ...}``."""
    kind, depth = spec["kind"], int(spec["depth"])
    if kind == "cyclic":
        if "moduli" in spec:
            moduli = list(spec["moduli"])
            if depth > len(moduli):
                raise ValueError(f"depth {depth} exceeds the {len(moduli)} listed moduli")
            return modular_chain(moduli[:depth], "cyclic", cap)
        return cyclic_chain(depth, cap)
    if kind == "sl2":
        if "moduli" in spec:
            moduli = list(spec["moduli"])
            if depth > len(moduli):
                raise ValueError(f"depth {depth} exceeds the {len(moduli)} listed moduli")
            return modular_chain(moduli[:depth], "sl2", cap)
        return sl2_chain(depth, cap)
    if kind == "permutation":
        levels = spec["levels"]
        if depth > len(levels):
            raise ValueError(f"depth {depth} exceeds the {len(levels)} listed levels")
        levels = levels[:depth]
        return permutation_chain([lv["degree"] for lv in levels],
                                 [lv["generators"] for lv in levels], cap)
    raise ValueError(f"unknown chain kind {kind!r}")


def _pairs(n: int, rng: np.random.Generator):
    if n <= EXHAUSTIVE_PAIRS:
        for g in range(n):
            yield g, np.arange(n)
    else:
        a = rng.integers(0, n, SAMPLED_PAIRS)
        b = rng.integers(0, n, SAMPLED_PAIRS)
        for g in np.unique(a):
            yield int(g), b[a == g]


def verify_chain(chain: DeckChain, seed: int = 0) -> Report:
    """Check the group axioms we rely on and that every projection is a surjective homomorphism."""
    rep = Report(f"chain ({chain.kind}, depth {chain.depth})")
    rng = np.random.default_rng(seed)
    for i, grp in enumerate(chain.levels, start=1):
        rep.add(f"level {i}: order matches enumeration",
                grp.order == len(np.unique(grp._sorted_codes)), grp.order)
        closure = grp.generated(grp.generators)
        rep.add(f"level {i}: generators generate", len(closure) == grp.order,
                len(closure), grp.order)
        inv = grp.inverse_table
        prods = grp.lookup(grp._mul_rows(grp.rows, grp.rows[inv]))
        rep.add(f"level {i}: inverses verified", bool(np.all(prods == grp.identity)))
    for i, proj in enumerate(chain.projections, start=1):
        lo, hi = chain.levels[i - 1], chain.levels[i]
        name = f"q_{i}: level {i + 1} -> {i}"
        rep.add(f"{name}: table shape", proj.shape == (hi.order,)
                and bool(np.all((proj >= 0) & (proj < lo.order))))
        if proj.shape != (hi.order,):
            continue
        rep.add(f"{name}: identity to identity", int(proj[hi.identity]) == lo.identity)
        bad = 0
        for g, hs in _pairs(hi.order, rng):
            lhs = proj[hi.left_mul(g)[hs]]
            rhs = lo.left_mul(int(proj[g]))[proj[hs]]
            bad += int(np.count_nonzero(lhs != rhs))
        rep.add(f"{name}: homomorphism", bad == 0, bad,
                detail="exhaustive" if hi.order <= EXHAUSTIVE_PAIRS else f"{SAMPLED_PAIRS} sampled pairs")
        counts = np.bincount(proj, minlength=lo.order)
        rep.add(f"{name}: surjective", bool(np.all(counts > 0)),
                int(np.count_nonzero(counts)), lo.order)
        kernel = int(counts[lo.identity])
        rep.add(f"{name}: |ker| * |lower| = |upper|", kernel * lo.order == hi.order
                and bool(np.all(counts == kernel)), kernel)
    return rep
