"""Offline assignment solvers: locally greedy and the colored-table greedy.

Colors and partitions are 0-based throughout.  A *colored set* is a set of
``(item, color)`` pairs; :func:`sample_colors` turns it into an assignment
given one color per partition, and :func:`color_averaged_value` averages
the objective over uniformly random color vectors.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .core import CapExceeded, GroundSet, InvalidInput, ValueOracle

ColoredItem = tuple  # (item id, color)


def beta(K: int, C: int) -> float:
    """Approximation factor ``1 - (1 - 1/C)^C - (K choose 2)/C`` (may be negative)."""
    if K < 1 or C < 1:
        raise InvalidInput("K and C must be at least 1")
    return 1.0 - (1.0 - 1.0 / C) ** C - math.comb(K, 2) / C


def sample_colors(ground: GroundSet, s: Iterable[ColoredItem], cvec) -> frozenset:
    """Items whose color matches the color chosen for their partition."""
    part = ground.partition_of
    return frozenset(x for x, c in s if cvec[part[x]] == c)


@dataclass
class ColoredTable:
    """One item per (partition, color) cell, filled colors-outer, partitions-inner."""

    K: int
    C: int
    cells: dict = field(default_factory=dict)  # (k, c) -> item id

    def pairs(self) -> frozenset:
        return frozenset((x, c) for (k, c), x in self.cells.items())

    def prefix(self, k: int, c: int) -> frozenset:
        """Cells filled before ``(k, c)``: all colors below ``c`` and partitions below ``k`` in color ``c``."""
        return frozenset((x, cc) for (kk, cc), x in self.cells.items() if cc < c or (cc == c and kk < k))

    def row(self, c: int) -> dict:
        return {k: x for (k, cc), x in self.cells.items() if cc == c}


class ArgmaxErrorInjector:
    """Additive argmax errors for the greedy steps.

    ``errors`` maps a partition ``k`` (locally greedy) or a cell ``(k, c)``
    (table greedy) to ``eps >= 0``.  A step with error ``eps`` returns the
    *worst* candidate whose value is within ``eps`` of the best one.
    """

    def __init__(self, errors: Mapping | Callable):
        self._errors = errors

    def eps(self, key) -> float:
        e = self._errors(key) if callable(self._errors) else self._errors.get(key, 0.0)
        e = float(e)
        if not np.isfinite(e) or e < 0:
            raise InvalidInput(f"injected error {e} must be finite and non-negative")
        return e

    def total(self, keys) -> float:
        return sum(self.eps(k) for k in keys)


def _select(values: list[float], eps: float) -> int:
    # exact argmax: first index with the strictly largest value
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    if eps <= 0:
        return best
    threshold = values[best] - eps
    pick = best
    for i, v in enumerate(values):
        if v >= threshold and v < values[pick]:
            pick = i
    return pick


def locally_greedy(ground: GroundSet, oracle: ValueOracle, order=None,
                   injector: ArgmaxErrorInjector | None = None) -> frozenset:
    """Fill positions one at a time with the item of largest ``f(current + s)``."""
    order = range(ground.K) if order is None else order
    if sorted(order) != list(range(ground.K)):
        raise InvalidInput("order must be a permutation of the partitions")
    current: frozenset = frozenset()
    for k in order:
        part = ground.partitions[k]
        if not part:
            continue
        values = [oracle(current | {x}) for x in part]
        eps = injector.eps(k) if injector else 0.0
        current = current | {part[_select(values, eps)]}
    return current


def color_averaged_value(oracle: ValueOracle, ground: GroundSet, s: Iterable[ColoredItem], C: int,
                         mode: str = "exact", rho: int = 1000, rng: np.random.Generator | None = None,
                         cap: int = 10**6, cache: dict | None = None, cvecs: np.ndarray | None = None) -> float:
    """Expected ``f(sample_colors(s, c))`` over uniform color vectors ``c``.

    ``exact`` groups the colors of each partition by the item subset they
    select, then enumerates the product of those outcomes; this equals the
    average over all ``C^K`` vectors.  ``sampled`` averages over ``rho``
    random vectors (or over the given ``cvecs``).
    """
    s = frozenset(s)
    K = ground.K
    if cache is None:
        cache = {}

    def f(t):
        v = cache.get(t)
        if v is None:
            v = cache[t] = oracle(t)
        return v

    if mode == "exact":
        if C ** K > cap:
            raise CapExceeded(f"C^K = {C ** K} exceeds exact-mode cap {cap}")
        by_part: list[dict] = [dict() for _ in range(K)]
        for x, c in s:
            if not 0 <= c < C:
                raise InvalidInput(f"color {c} outside palette of size {C}")
        for k in range(K):
            counts: dict = {}
            for c in range(C):
                out = frozenset(x for x, cc in s if cc == c and ground.partition_of[x] == k)
                counts[out] = counts.get(out, 0) + 1
            by_part[k] = counts
        total = 0.0
        for combo in itertools.product(*(d.items() for d in by_part)):
            prob = 1.0
            items: frozenset = frozenset()
            for out, cnt in combo:
                prob *= cnt / C
                items = items | out
            total += prob * f(items)
        return total
    if mode == "sampled":
        if cvecs is None:
            if rho < 1:
                raise InvalidInput("rho must be at least 1")
            if rng is None:
                raise InvalidInput("sampled mode needs an rng")
            cvecs = rng.integers(0, C, size=(rho, K))
        return float(np.mean([f(sample_colors(ground, s, cv)) for cv in cvecs]))
    raise InvalidInput(f"unknown estimator mode {mode!r}")


def tabular_greedy(ground: GroundSet, oracle: ValueOracle, C: int, rng: np.random.Generator,
                   estimator: str = "exact", rho: int = 1000,
                   injector: ArgmaxErrorInjector | None = None, cap: int = 10**6):
    """Build the ``K x C`` colored table greedily, then sample an assignment.

    Each cell ``(k, c)`` takes the item ``x`` of ``P_k`` maximising the
    color-averaged value of the table so far plus ``(x, c)``.  In sampled
    mode every cell compares its candidates on one shared batch of ``rho``
    color vectors.  Returns ``(table, assignment)``.
    """
    if C < 1:
        raise InvalidInput("C must be at least 1")
    if estimator == "exact" and C ** ground.K > cap:
        warnings.warn(f"C^K = {C ** ground.K} exceeds cap {cap}; falling back to sampled estimator",
                      RuntimeWarning, stacklevel=2)
        estimator = "sampled"
    table = ColoredTable(ground.K, C)
    cache: dict = {}
    current: set = set()
    for c in range(C):
        for k in range(ground.K):
            part = ground.partitions[k]
            if not part:
                continue
            cvecs = rng.integers(0, C, size=(rho, ground.K)) if estimator == "sampled" else None
            values = [color_averaged_value(oracle, ground, current | {(x, c)}, C, estimator,
                                           cap=cap, cache=cache, cvecs=cvecs) for x in part]
            eps = injector.eps((k, c)) if injector else 0.0
            x = part[_select(values, eps)]
            table.cells[(k, c)] = x
            current.add((x, c))
    cvec = rng.integers(0, C, size=ground.K)
    return table, sample_colors(ground, table.pairs(), cvec)
