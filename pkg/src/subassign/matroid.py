"""Matroids given by independence oracles, and oblivious randomized rounding.

Only what the online continuous greedy needs: rank, greedy max-weight
independent sets, exchange queries, points of the matroid polytope kept as
explicit convex combinations, and swap rounding of such points.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import CapExceeded, GroundSet, InvalidInput, ValueOracle, all_subset_masks, TOL


class OracleIntegrityError(RuntimeError):
    """The independence oracle contradicted the matroid axioms."""


class Matroid:
    """Independence oracle on ground set ``0..n-1``."""

    def __init__(self, n: int):
        self.n = int(n)
        self._rank = None

    def is_independent(self, s: Iterable[int]) -> bool:
        raise NotImplementedError

    def rank(self) -> int:
        if self._rank is None:
            self._rank = len(self.max_weight_independent_set(np.ones(self.n)))
        return self._rank

    def max_weight_independent_set(self, w: Sequence[float]) -> frozenset:
        """Greedy over elements by decreasing weight (ties by id), skipping ``w <= 0``."""
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise InvalidInput(f"weight vector must have length {self.n}")
        order = np.lexsort((np.arange(self.n), -w))
        chosen: set[int] = set()
        for v in order:
            if w[v] <= 0:
                break
            if self.is_independent(chosen | {int(v)}):
                chosen.add(int(v))
        return frozenset(chosen)

    def exchange_element(self, a: Iterable[int], b: Iterable[int]) -> int:
        """Some ``x`` in ``b - a`` with ``a + x`` independent (smallest id)."""
        a, b = frozenset(a), frozenset(b)
        if len(a) >= len(b):
            raise InvalidInput("exchange needs |a| < |b|")
        for x in sorted(b - a):
            if self.is_independent(a | {x}):
                return x
        raise OracleIntegrityError(f"no exchange element from {sorted(b)} into {sorted(a)}")


class PartitionMatroid(Matroid):
    """At most one element per partition of a :class:`GroundSet`."""

    def __init__(self, ground: GroundSet):
        super().__init__(ground.n)
        self.ground = ground

    def is_independent(self, s):
        s = list(s)
        if not s:
            return True
        counts = np.bincount(self.ground.partition_of[s], minlength=self.ground.K)
        return bool(counts.max() <= 1)

    def rank(self):
        return sum(1 for p in self.ground.partitions if p)

    def max_weight_independent_set(self, w):
        # equivalent to the generic greedy: best positive weight per partition, lowest id on ties
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise InvalidInput(f"weight vector must have length {self.n}")
        out = []
        for p in self.ground.partitions:
            if p:
                j = int(np.argmax(w[p]))
                if w[p[j]] > 0:
                    out.append(p[j])
        return frozenset(out)


class UniformMatroid(Matroid):
    def __init__(self, n: int, r: int):
        super().__init__(n)
        if r < 0:
            raise InvalidInput("rank must be non-negative")
        self.r = int(r)

    def is_independent(self, s):
        return len(set(s)) <= self.r

    def rank(self):
        return min(self.r, self.n)


class FreeMatroid(UniformMatroid):
    def __init__(self, n: int):
        super().__init__(n, n)


class ExplicitMatroid(Matroid):
    """Independent sets are the subsets of the listed maximal sets."""

    def __init__(self, n: int, maximal: Sequence[Iterable[int]]):
        super().__init__(n)
        self.maximal = [frozenset(int(i) for i in b) for b in maximal] or [frozenset()]
        for b in self.maximal:
            if any(not 0 <= i < n for i in b):
                raise InvalidInput("maximal set mentions an unknown element")

    def is_independent(self, s):
        s = frozenset(s)
        return any(s <= b for b in self.maximal)


def check_matroid_axioms(m: Matroid, cap: int = 12) -> tuple[bool, str | None]:
    """Exhaustive check of the empty set, downward closure and exchange axioms."""
    if m.n > cap:
        raise CapExceeded(f"n = {m.n} exceeds cap {cap}")
    indep = [frozenset(np.flatnonzero(r).tolist()) for r in all_subset_masks(m.n)]
    indep = [s for s in indep if m.is_independent(s)]
    if frozenset() not in indep:
        return False, "empty set is not independent"
    family = set(indep)
    for b in indep:
        for x in b:
            if b - {x} not in family:
                return False, f"{sorted(b)} independent but {sorted(b - {x})} is not"
    for a, b in itertools.product(indep, indep):
        if len(a) < len(b) and not any(a | {x} in family for x in b - a):
            return False, f"exchange fails for a={sorted(a)}, b={sorted(b)}"
    return True, None


def independent_sets(m: Matroid, cap: int = 20) -> list[frozenset]:
    if m.n > cap:
        raise CapExceeded(f"n = {m.n} exceeds cap {cap}")
    out = []
    for row in all_subset_masks(m.n):
        s = frozenset(np.flatnonzero(row).tolist())
        if m.is_independent(s):
            out.append(s)
    return out


def brute_force_matroid_opt(oracle: ValueOracle, m: Matroid, cap: int = 20) -> tuple[frozenset, float]:
    sets = independent_sets(m, cap)
    masks = np.zeros((len(sets), m.n), dtype=bool)
    for r, s in enumerate(sets):
        masks[r, list(s)] = True
    vals = oracle.batch(masks)
    best = float(vals.max())
    winner = min((s for s, v in zip(sets, vals) if v >= best - 1e-12), key=lambda s: tuple(sorted(s)))
    return winner, oracle(winner)


@dataclass
class FractionalPoint:
    """Point of the matroid polytope stored as ``sum_i weight_i * chi(S_i)``."""

    n: int
    combo: list[tuple[frozenset, float]]

    def __post_init__(self):
        self.combo = [(frozenset(s), float(w)) for s, w in self.combo]
        if any(w <= 0 for _, w in self.combo):
            raise InvalidInput("combination weights must be positive")
        if self.total_weight > 1 + TOL:
            raise InvalidInput("combination weights sum to more than 1")

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, w in self.combo))

    @property
    def coords(self) -> np.ndarray:
        y = np.zeros(self.n)
        for s, w in self.combo:
            y[list(s)] += w
        return np.minimum(y, 1.0)

    def validate(self, m: Matroid) -> None:
        for s, _ in self.combo:
            if not m.is_independent(s):
                raise InvalidInput(f"{sorted(s)} is not independent")


def round_to_independent(m: Matroid, y: FractionalPoint, rng: np.random.Generator,
                         pad: bool = False) -> frozenset:
    """Swap rounding of a convex combination of independent sets.

    Each set is first completed to a basis of the rank-``d`` truncation of
    ``M`` plus ``d`` free dummy elements, so that all sets have equal size
    and the symmetric exchange property applies.  The two lightest sets are
    then merged repeatedly: while they differ, an element ``a`` of
    ``A - B`` is paired with some ``b`` of ``B - A`` such that both swaps are
    independent, and with probability ``w_A/(w_A+w_B)`` B takes ``a``,
    otherwise A takes ``b``.  Dummies are dropped at the end.  The result
    keeps every marginal ``Pr[v in S] = y_v`` and satisfies
    ``E f(S) >= F(y)`` for monotone submodular ``f``.

    Pass ``pad=True`` to fill a total weight below 1 with the empty set.
    """
    combo = list(y.combo)
    total = y.total_weight
    if pad and total < 1 - TOL:
        combo.append((frozenset(), 1.0 - total))
        total = 1.0
    if abs(total - 1.0) > TOL:
        raise InvalidInput(f"combination weights sum to {total}, expected 1")
    n, d = m.n, m.rank()

    def indep(s):
        return len(s) <= d and m.is_independent([x for x in s if x < n])

    heap = []
    for idx, (s, w) in enumerate(combo):
        if len(s) > d or not m.is_independent(s):
            raise InvalidInput(f"{sorted(s)} is not independent")
        base = set(s) | {n + j for j in range(d - len(s))}
        heapq.heappush(heap, (w, idx, base))
    counter = len(combo)
    while len(heap) > 1:
        wa, _, a_set = heapq.heappop(heap)
        wb, _, b_set = heapq.heappop(heap)
        merged = _merge_bases(a_set, wa, b_set, wb, indep, rng)
        heapq.heappush(heap, (wa + wb, counter, merged))
        counter += 1
    out = frozenset(x for x in heap[0][2] if x < n)
    assert m.is_independent(out)
    return out


def _merge_bases(a_set, wa, b_set, wb, indep, rng):
    a_set, b_set = set(a_set), set(b_set)
    p_keep_a = wa / (wa + wb)
    while a_set != b_set:
        a = min(a_set - b_set)
        for b in sorted(b_set - a_set):
            if indep((a_set - {a}) | {b}) and indep((b_set - {b}) | {a}):
                break
        else:
            raise OracleIntegrityError("no symmetric exchange between two bases")
        if rng.random() < p_keep_a:
            b_set = (b_set - {b}) | {a}
        else:
            a_set = (a_set - {a}) | {b}
    return a_set
