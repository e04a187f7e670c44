"""Ground sets, assignments, value oracles and brute-force verifiers.

Items are dense integer ids ``0..n-1``.  Every item belongs to exactly one
partition (position) ``0..K-1``; an assignment is a ``frozenset`` of item
ids and is *feasible* when it holds at most one item per partition.

Value oracles are callables on sets of item ids.  Each oracle also offers
``batch(masks)``, which evaluates many sets given as rows of a boolean
matrix; the built-in families implement it with array arithmetic so the
online algorithms can score whole candidate lists in one call.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

TOL = 1e-9

Assignment = frozenset


class InvalidInput(ValueError):
    """Raised for malformed arguments (unknown ids, infeasible sets, ...)."""


class CapExceeded(RuntimeError):
    """Raised when an exhaustive computation would exceed its size cap."""


@dataclass(frozen=True)
class Item:
    id: int
    partition: int


@dataclass
class GroundSet:
    """Disjoint partitions ``P_0..P_{K-1}`` covering item ids ``0..n-1``."""

    partitions: list[list[int]]
    partition_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.partitions = [sorted(int(i) for i in p) for p in self.partitions]
        if not self.partitions:
            raise InvalidInput("ground set needs at least one partition")
        ids = [i for p in self.partitions for i in p]
        if len(set(ids)) != len(ids):
            raise InvalidInput("partitions are not disjoint")
        if sorted(ids) != list(range(len(ids))):
            raise InvalidInput("item ids must be exactly 0..n-1")
        self.partition_of = np.empty(len(ids), dtype=np.int64)
        for k, p in enumerate(self.partitions):
            self.partition_of[p] = k

    @classmethod
    def grid(cls, K: int, per_partition: int) -> "GroundSet":
        """``K`` partitions of equal size; item ``k*per_partition + j`` sits in ``P_k``."""
        return cls([list(range(k * per_partition, (k + 1) * per_partition)) for k in range(K)])

    @property
    def K(self) -> int:
        return len(self.partitions)

    @property
    def n(self) -> int:
        return len(self.partition_of)

    @property
    def items(self) -> list[Item]:
        return [Item(i, int(self.partition_of[i])) for i in range(self.n)]

    def check_ids(self, s: Iterable[int]) -> None:
        for i in s:
            if not (0 <= int(i) < self.n):
                raise InvalidInput(f"unknown item id {i}")

    def mask(self, s: Iterable[int]) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(s)] = True
        return m

    def feasible_sets(self, cap: int = 10**6) -> Iterable[frozenset]:
        """All feasible assignments, empty slots included."""
        size = math.prod(len(p) + 1 for p in self.partitions)
        if size > cap:
            raise CapExceeded(f"{size} feasible assignments exceed cap {cap}")
        choices = [[None] + p for p in self.partitions]
        for combo in itertools.product(*choices):
            yield frozenset(i for i in combo if i is not None)

    def count_feasible(self) -> int:
        return math.prod(len(p) + 1 for p in self.partitions)


def is_feasible(ground: GroundSet, s: Iterable[int]) -> bool:
    s = list(s)
    ground.check_ids(s)
    counts = np.bincount(ground.partition_of[s], minlength=ground.K) if s else np.zeros(1)
    return bool(np.all(counts <= 1))


def sets_to_masks(sets: Sequence[Iterable[int]], n: int) -> np.ndarray:
    masks = np.zeros((len(sets), n), dtype=bool)
    for r, s in enumerate(sets):
        masks[r, list(s)] = True
    return masks


# ---------------------------------------------------------------------------
# Value oracles


class ValueOracle:
    """Set function ``f: 2^V -> R>=0`` over item ids ``0..n-1``.

    Subclasses implement :meth:`value` (on a frozenset) and may override
    :meth:`batch`.  ``monotone`` and ``submodular`` are declarations; use
    :func:`check_monotone_submodular` to verify them on small instances.
    """

    monotone = True
    submodular = True

    def __init__(self, n: int):
        self.n = int(n)

    def value(self, s: frozenset) -> float:
        raise NotImplementedError

    def __call__(self, s: Iterable[int]) -> float:
        return float(self.value(s if isinstance(s, frozenset) else frozenset(s)))

    def batch(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=bool)
        return np.array([self.value(frozenset(np.flatnonzero(m).tolist())) for m in masks], dtype=float)

    @property
    def value_bound(self) -> float:
        """Largest single-item marginal ``max_v f({v}) - f(empty)``."""
        single = self.batch(np.eye(self.n, dtype=bool)) if self.n else np.zeros(0)
        base = self(frozenset())
        return float(max(single.max(initial=base) - base, 0.0))

    @property
    def max_value(self) -> float:
        """Upper bound on ``f`` over all subsets (``f(V)`` for monotone f)."""
        if self.monotone:
            return self(frozenset(range(self.n)))
        return float(self.batch(all_subset_masks(self.n)).max())


class FunctionOracle(ValueOracle):
    """Wrap a plain Python callable ``fn(frozenset) -> float``."""

    def __init__(self, fn: Callable[[frozenset], float], n: int, *, monotone=False, submodular=False):
        super().__init__(n)
        self.fn = fn
        self.monotone = monotone
        self.submodular = submodular

    def value(self, s):
        return float(self.fn(s))


class WeightedCoverage(ValueOracle):
    """``f(S) = sum of weights of universe elements covered by some item of S``."""

    def __init__(self, weights: Sequence[float], covers: Sequence[Iterable[int]]):
        super().__init__(len(covers))
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights < 0):
            raise InvalidInput("coverage weights must be non-negative")
        self.cover = np.zeros((self.n, len(self.weights)), dtype=bool)
        for i, els in enumerate(covers):
            els = [int(e) for e in els]
            if any(not 0 <= e < len(self.weights) for e in els):
                raise InvalidInput(f"item {i} covers an element without a weight")
            self.cover[i, els] = True
        self._cover_f = self.cover.astype(float)

    def value(self, s):
        if not s:
            return 0.0
        return float(self.weights[self.cover[list(s)].any(axis=0)].sum())

    def batch(self, masks):
        masks = np.asarray(masks, dtype=float)
        return ((masks @ self._cover_f) > 0) @ self.weights

    @property
    def max_value(self):
        return float(self.weights[self.cover.any(axis=0)].sum())


class SeparablePositional(ValueOracle):
    """Modular objective: one non-negative value per (item, position) pair."""

    def __init__(self, values: Sequence[float]):
        super().__init__(len(values))
        self.values = np.asarray(values, dtype=float)
        if np.any(self.values < 0):
            raise InvalidInput("values must be non-negative")

    def value(self, s):
        return float(self.values[list(s)].sum()) if s else 0.0

    def batch(self, masks):
        return np.asarray(masks, dtype=float) @ self.values


CONCAVE = {
    "min1": lambda x: np.minimum(x, 1.0),
    "linear": lambda x: np.asarray(x, dtype=float),
    "sqrt": np.sqrt,
    "log1p": np.log1p,
}


class ConcaveOverIntersection(ValueOracle):
    """``f(S) = sum_u w_u * g(|S & U_u|)`` for nondecreasing concave ``g``.

    Each user set ``U_u`` is given directly as item ids, i.e. the
    (ad, position) pairs ``A_u x I_u`` the user cares about.
    """

    def __init__(self, n: int, users: Sequence[tuple[Iterable[int], float]], concave: str = "min1"):
        super().__init__(n)
        if concave not in CONCAVE:
            raise InvalidInput(f"unknown concave function {concave!r}; choose from {sorted(CONCAVE)}")
        self.concave = concave
        self._g = CONCAVE[concave]
        self.member = np.zeros((n, len(users)), dtype=float)
        self.user_weights = np.zeros(len(users))
        for u, (items, w) in enumerate(users):
            if w < 0:
                raise InvalidInput("user weights must be non-negative")
            self.member[list(items), u] = 1.0
            self.user_weights[u] = w

    def value(self, s):
        return float(self.batch(sets_to_masks([s], self.n))[0])

    def batch(self, masks):
        counts = np.asarray(masks, dtype=float) @ self.member
        return self._g(counts) @ self.user_weights


class DiscountedPositional(ValueOracle):
    """Position-discounted value of an inner objective ``g`` on blogs.

    ``f(S) = sum_k gamma^k (g(S^[k]) - g(S^[k-1]))`` with positions numbered
    from 1, where ``S^[k]`` is the set of blogs placed in positions ``1..k``.

    Parameters
    ----------
    ground : GroundSet
        Positions are the partitions, in index order.
    blog_of : sequence of int
        Blog id carried by each item.
    inner : ValueOracle
        Monotone submodular objective over blog ids.
    gamma : float
        Discount in ``(0, 1)``.
    """

    def __init__(self, ground: GroundSet, blog_of: Sequence[int], inner: ValueOracle, gamma: float = 0.8):
        super().__init__(ground.n)
        if not 0.0 < gamma < 1.0:
            raise InvalidInput("gamma must lie in (0, 1)")
        self.ground = ground
        self.gamma = float(gamma)
        self.inner = inner
        self.blog_of = np.asarray(blog_of, dtype=np.int64)
        if len(self.blog_of) != ground.n:
            raise InvalidInput("blog_of must give one blog per item")
        onehot = np.zeros((ground.n, inner.n), dtype=float)
        onehot[np.arange(ground.n), self.blog_of] = 1.0
        self._onehot = onehot
        # prefix[k] selects items in positions 0..k
        self._prefix = np.array([ground.partition_of <= k for k in range(ground.K)])
        self._disc = self.gamma ** np.arange(1, ground.K + 1)

    def value(self, s):
        return float(self.batch(sets_to_masks([s], self.n))[0])

    def batch(self, masks):
        masks = np.asarray(masks, dtype=bool)
        m = len(masks)
        g = np.empty((self.ground.K + 1, m))
        g[0] = self.inner.batch(np.zeros((m, self.inner.n), dtype=bool))
        for k in range(self.ground.K):
            blogs = ((masks & self._prefix[k]).astype(float) @ self._onehot) > 0
            g[k + 1] = self.inner.batch(blogs)
        return self._disc @ np.diff(g, axis=0)


def discounted_positional_value(ground: GroundSet, blog_of, inner: ValueOracle, gamma: float, s) -> float:
    """Discounted value of a feasible assignment; see :class:`DiscountedPositional`."""
    if not 0.0 < gamma < 1.0:
        raise InvalidInput("gamma must lie in (0, 1)")
    s = frozenset(s)
    if not is_feasible(ground, s):
        raise InvalidInput("assignment is infeasible")
    total, prev, blogs = 0.0, inner(frozenset()), set()
    for k, part in enumerate(ground.partitions):
        blogs |= {int(blog_of[i]) for i in s if i in part}
        cur = inner(frozenset(blogs))
        total += gamma ** (k + 1) * (cur - prev)
        prev = cur
    return total


class SumOracle(ValueOracle):
    """Pointwise sum of several oracles over the same ground set."""

    def __init__(self, parts: Sequence[ValueOracle]):
        super().__init__(parts[0].n)
        self.parts = list(parts)
        self.monotone = all(p.monotone for p in parts)
        self.submodular = all(p.submodular for p in parts)

    def value(self, s):
        return float(sum(p.value(s) for p in self.parts))

    def batch(self, masks):
        return np.sum([p.batch(masks) for p in self.parts], axis=0)


# ---------------------------------------------------------------------------
# Brute-force verification


def all_subset_masks(n: int) -> np.ndarray:
    """Row ``b`` is the characteristic vector of the subset with bitmask ``b``."""
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


@dataclass
class SubmodularityReport:
    monotone: bool
    submodular: bool
    witness: dict | None = None


def check_monotone_submodular(oracle: ValueOracle, ground: GroundSet | None = None, cap: int = 14,
                              tol: float = TOL) -> SubmodularityReport:
    """Exhaustively test monotonicity and diminishing returns.

    Uses the local characterisations, which are equivalent to the global
    definitions: ``f(A+s) >= f(A)`` for all ``A, s``, and
    ``f(A+s) + f(A+t) >= f(A+s+t) + f(A)`` for all ``A`` and ``s, t`` not in
    ``A``.  The first violating triple is returned as the witness.
    """
    n = ground.n if ground is not None else oracle.n
    if n > cap:
        raise CapExceeded(f"|V| = {n} exceeds brute-force cap {cap}")
    vals = oracle.batch(all_subset_masks(n))
    codes = np.arange(1 << n)
    witness = None
    monotone = True
    for s in range(n):
        without = codes[(codes >> s) & 1 == 0]
        gain = vals[without | (1 << s)] - vals[without]
        bad = np.flatnonzero(gain < -tol)
        if bad.size:
            monotone = False
            a = int(without[bad[0]])
            witness = {"kind": "monotone", "A": _bits(a, n), "s": s, "gain": float(gain[bad[0]])}
            break
    submodular = True
    for s in range(n):
        for t in range(s + 1, n):
            base = codes[((codes >> s) & 1 == 0) & ((codes >> t) & 1 == 0)]
            lhs = vals[base | (1 << s)] + vals[base | (1 << t)]
            rhs = vals[base | (1 << s) | (1 << t)] + vals[base]
            bad = np.flatnonzero(lhs < rhs - tol)
            if bad.size:
                submodular = False
                a = int(base[bad[0]])
                if witness is None:
                    witness = {"kind": "submodular", "A": _bits(a, n), "s": s, "t": t,
                               "excess": float(rhs[bad[0]] - lhs[bad[0]])}
                break
        if not submodular:
            break
    return SubmodularityReport(monotone, submodular, witness)


def _bits(code: int, n: int) -> list[int]:
    return [i for i in range(n) if code >> i & 1]


def _lex_key(s: frozenset) -> tuple:
    return tuple(sorted(s))


def brute_force_opt(oracle: ValueOracle, ground: GroundSet, cap: int = 10**6) -> tuple[frozenset, float]:
    """Exact maximiser of ``oracle`` over feasible assignments.

    Ties (within 1e-12) go to the lexicographically smallest sorted id tuple.
    """
    sets = list(ground.feasible_sets(cap))
    vals = oracle.batch(sets_to_masks(sets, ground.n))
    best = float(vals.max())
    tied = [s for s, v in zip(sets, vals) if v >= best - 1e-12]
    winner = min(tied, key=_lex_key)
    return winner, float(oracle(winner))
