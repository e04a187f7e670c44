"""Online algorithms: TGonline (full information and bandit) and online continuous greedy.

Both are driven by an explicit step/feedback protocol::

    alg = TGOnline(ground, colors=4, seed=7, reward_bound=1.0)
    for f_t in stream:
        played = alg.step()
        alg.feedback(f_t)

Calling ``feedback`` without a preceding ``step`` (or twice) raises
:class:`ProtocolError`.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .core import CapExceeded, GroundSet, InvalidInput, ValueOracle, all_subset_masks
from .experts import FollowThePerturbedLeader, RandomizedWeightedMajority
from .matroid import FractionalPoint, Matroid, round_to_independent
from .offline import sample_colors
from .rng import Streams


class ProtocolError(RuntimeError):
    """Step/feedback calls out of order."""


# ---------------------------------------------------------------------------
# Multilinear extension


@lru_cache(maxsize=8)
def _subset_masks(n: int) -> np.ndarray:
    return all_subset_masks(n)


def _inclusion_probs(masks: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.prod(np.where(masks, y, 1.0 - y), axis=1)


def _check_point(y, n) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise InvalidInput(f"point must have {n} coordinates")
    if np.any(y < 0) or np.any(y > 1):
        raise InvalidInput("point coordinates must lie in [0, 1]")
    return y


def multilinear_eval(oracle: ValueOracle, y, mode: str = "exact", rho: int = 10_000,
                     rng: np.random.Generator | None = None, cap: int = 20) -> float:
    """``F(y) = E f(S_y)`` where ``S_y`` contains each ``v`` independently w.p. ``y_v``."""
    y = _check_point(y, oracle.n)
    if mode == "exact":
        if oracle.n > cap:
            raise CapExceeded(f"n = {oracle.n} exceeds exact cap {cap}")
        masks = _subset_masks(oracle.n)
        probs = _inclusion_probs(masks, y)
        keep = probs > 0  # integral coordinates leave most subsets with zero mass
        return float(probs[keep] @ oracle.batch(masks[keep]))
    if mode == "mc":
        if rng is None:
            raise InvalidInput("Monte Carlo mode needs an rng")
        return float(oracle.batch(rng.random((rho, oracle.n)) < y).mean())
    raise InvalidInput(f"unknown mode {mode!r}")


def marginal(oracle: ValueOracle, y, mode: str = "exact", rho: int = 10_000,
             rng: np.random.Generator | None = None, cap: int = 20) -> np.ndarray:
    """``(Delta F(y))_v = E[f(S_y + v) - f(S_y)]`` for every coordinate."""
    y = _check_point(y, oracle.n)
    n = oracle.n
    if mode == "exact":
        if n > cap:
            raise CapExceeded(f"n = {n} exceeds exact cap {cap}")
        masks = _subset_masks(n)
        vals = oracle.batch(masks)
        base = _inclusion_probs(masks, y) @ vals
        out = np.empty(n)
        for v in range(n):
            yv = y.copy()
            yv[v] = 1.0
            out[v] = _inclusion_probs(masks, yv) @ vals - base
        return out
    if mode == "mc":
        if rng is None:
            raise InvalidInput("Monte Carlo mode needs an rng")
        samples = rng.random((rho, n)) < y
        base = oracle.batch(samples)
        out = np.empty(n)
        for v in range(n):
            with_v = samples.copy()
            with_v[:, v] = True
            out[v] = np.mean(oracle.batch(with_v) - base)
        return out
    raise InvalidInput(f"unknown mode {mode!r}")


def sample_marginal_estimate(oracle: ValueOracle, y, rng: np.random.Generator) -> np.ndarray:
    """Unbiased single-evaluation estimate of ``Delta F(y)``.

    Picks a coordinate ``v`` and a random set ``A ~ S_y`` and a fair coin
    ``X``; returns ``-2n f(A) e_v`` when ``X = 0`` and ``2n f(A + v) e_v``
    when ``X = 1``.
    """
    return sample_marginal_estimates(oracle, np.asarray(y, dtype=float)[None, :], rng)[0]


def sample_marginal_estimates(oracle: ValueOracle, ys: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent estimates for each row of ``ys``, one oracle evaluation per row (one batch call)."""
    ys = np.asarray(ys, dtype=float)
    m, n = ys.shape
    v = rng.integers(0, n, size=m)
    theta = rng.random((m, n))
    x = rng.integers(0, 2, size=m)
    sets = theta <= ys
    rows = np.arange(m)
    sets[rows, v] |= x.astype(bool)
    vals = oracle.batch(sets)
    out = np.zeros((m, n))
    out[rows, v] = np.where(x == 1, 2.0 * n * vals, -2.0 * n * vals)
    return out


# ---------------------------------------------------------------------------
# TGonline


def default_explore_rate(T: int, n: int, C: int, K: int) -> float:
    """``T^(-1/3) (|V| C K)^(1/3)``, capped at 1."""
    return min(1.0, (n * C * K / max(T, 1)) ** (1.0 / 3.0))


class TGOnline:
    """Online table greedy: one no-regret expert per (partition, color) cell.

    Parameters
    ----------
    ground : GroundSet
    colors : int
        Palette size ``C``.
    seed : int
        Root seed; experts, colors and exploration use separate named streams.
    reward_bound : float
        Upper bound on every ``f_t``; experts normalise rewards by it.
    expert_factory : callable, optional
        ``factory(n_actions, rng, bound)``; defaults to randomized weighted majority.
    bandit_scale : {"unit", "variance"} or float
        Common factor applied to the importance-weighted bandit estimate.
        ``"unit"`` (default) feeds the raw estimate.  ``"variance"`` multiplies it by
        ``1/sqrt(8 M)``, where ``M`` is the importance weight, which turns the
        experts' rate into ``sqrt(ln N / (t M))`` on raw estimates.  That
        rate suits estimates whose second moment is ``O(M)`` but whose range
        is ``M``.  Any constant factor leaves the estimate unbiased up to
        scale, at the cost of dividing the regret bound by that factor.
    """

    def __init__(self, ground: GroundSet, colors: int, seed: int, reward_bound: float = 1.0,
                 expert_factory=RandomizedWeightedMajority, bandit_scale="unit"):
        if colors < 1:
            raise InvalidInput("colors must be at least 1")
        self.ground = ground
        self.C = int(colors)
        self.reward_bound = float(reward_bound)
        if not (bandit_scale in ("variance", "unit") or (isinstance(bandit_scale, (int, float)) and bandit_scale > 0)):
            raise InvalidInput("bandit_scale must be 'variance', 'unit' or a positive number")
        self.bandit_scale = bandit_scale
        streams = Streams(seed)
        self.cells = [(k, c) for c in range(self.C) for k in range(ground.K) if ground.partitions[k]]
        self.experts = {(k, c): expert_factory(len(ground.partitions[k]), streams("experts", k, c), reward_bound)
                        for (k, c) in self.cells}
        self._color_rng = streams("colors")
        self._explore_rng = streams("explore")
        self.t = 0
        self._pending = None

    def _select_all(self) -> dict:
        return {kc: self.ground.partitions[kc[0]][e.select()] for kc, e in self.experts.items()}

    def _prefix_pairs(self, sel: dict, k: int, c: int) -> set:
        return {(x, cc) for (kk, cc), x in sel.items() if cc < c or (cc == c and kk < k)}

    def _begin(self):
        if self._pending is not None:
            raise ProtocolError("step called twice without feedback")

    # full information ------------------------------------------------------

    def step(self) -> frozenset:
        self._begin()
        sel = self._select_all()
        cvec = self._color_rng.integers(0, self.C, size=self.ground.K)
        played = sample_colors(self.ground, ((x, c) for (k, c), x in sel.items()), cvec)
        self._pending = ("full", sel, cvec)
        self.t += 1
        return played

    def feedback(self, oracle: ValueOracle) -> None:
        """Feed each cell ``(k, c)`` the value ``f_t(sample(G_prefix + x))`` of every ``x`` in ``P_k``."""
        if self._pending is None or self._pending[0] != "full":
            raise ProtocolError("feedback without a matching full-information step")
        _, sel, cvec = self._pending
        self._pending = None
        n = self.ground.n
        rows, spans = [], []
        running = np.zeros(n, dtype=bool)  # sample of the cells filled so far
        for (k, c) in self.cells:
            part = self.ground.partitions[k]
            start = len(rows)
            if cvec[k] == c:
                for x in part:
                    m = running.copy()
                    m[x] = True
                    rows.append(m)
            else:
                rows.append(running.copy())
            spans.append((start, len(rows)))
            if cvec[k] == c:
                running[sel[(k, c)]] = True
        vals = oracle.batch(np.array(rows))
        for (k, c), (a, b) in zip(self.cells, spans):
            r = vals[a:b]
            if b - a == 1:
                r = np.full(len(self.ground.partitions[k]), r[0])
            self.experts[(k, c)].update(r)

    # bandit ------------------------------------------------------------------

    def step_bandit(self, explore: float) -> frozenset:
        """Exploit w.p. ``1 - explore``; otherwise play a random cell's prefix plus a random item."""
        self._begin()
        if not 0.0 <= explore <= 1.0:
            raise InvalidInput("exploration probability must lie in [0, 1]")
        sel = self._select_all()
        cvec = self._color_rng.integers(0, self.C, size=self.ground.K)
        if self._explore_rng.random() < explore:
            k, c = self.cells[int(self._explore_rng.integers(len(self.cells)))]
            j = int(self._explore_rng.integers(len(self.ground.partitions[k])))
            pairs = self._prefix_pairs(sel, k, c) | {(self.ground.partitions[k][j], c)}
            played = sample_colors(self.ground, pairs, cvec)
            self._pending = ("explore", k, c, j, explore)
        else:
            played = sample_colors(self.ground, ((x, c) for (k, c), x in sel.items()), cvec)
            self._pending = ("exploit",)
        self.t += 1
        return played

    def _scale(self, weight: float) -> float:
        if self.bandit_scale == "unit":
            return 1.0
        if self.bandit_scale == "variance":
            return 1.0 / math.sqrt(8.0 * weight)
        return float(self.bandit_scale)

    @property
    def explored(self) -> bool:
        return self._pending is not None and self._pending[0] == "explore"

    def feedback_bandit(self, reward: float) -> None:
        """Importance-weighted estimate to the explored cell; zero feedback everywhere else."""
        if self._pending is None or self._pending[0] not in ("explore", "exploit"):
            raise ProtocolError("feedback without a matching bandit step")
        pending, self._pending = self._pending, None
        target = None
        if pending[0] == "explore":
            _, k, c, j, explore = pending
            target = (k, c)
            size = len(self.ground.partitions[k])
            est = np.zeros(size)
            weight = len(self.cells) * size / explore
            est[j] = float(reward) * weight * self._scale(weight)
            self.experts[target].update(est, validate=False)
        for kc, e in self.experts.items():
            if kc != target:
                e.skip()


# ---------------------------------------------------------------------------
# Online continuous greedy


class OnlineContinuousGreedy:
    """One follow-the-perturbed-leader expert per stage ``tau in {delta, 2 delta, ..., 1}``.

    ``value_bound`` is the single-item bound ``g`` and ``horizon`` the
    planned number of rounds; together they set the default perturbation
    scale ``sqrt(n g T)``.
    """

    def __init__(self, matroid: Matroid, delta: float, seed: int, value_bound: float = 1.0,
                 horizon: int = 1000, scale: float | None = None):
        stages = round(1.0 / delta) if delta > 0 else 0
        if stages < 1 or abs(stages * delta - 1.0) > 1e-9:
            raise InvalidInput("delta must be 1/m for a positive integer m")
        if horizon < 1:
            raise InvalidInput("horizon must be positive")
        self.matroid = matroid
        self.stages = stages
        self.delta = 1.0 / stages
        streams = Streams(seed)
        if scale is None:
            scale = FollowThePerturbedLeader.default_scale(matroid.n, value_bound, horizon)
        self.experts = [FollowThePerturbedLeader(matroid, scale, streams("experts", s)) for s in range(stages)]
        self._round_rng = streams("rounding")
        self._estimate_rng = streams("estimates")
        self.t = 0
        self._pending = None

    def step(self, rounding: bool = True):
        """Return ``(played set or None, fractional point)``."""
        if self._pending is not None:
            raise ProtocolError("step called twice without feedback")
        chosen = [e.select() for e in self.experts]
        y = FractionalPoint(self.matroid.n, [(s, self.delta) for s in chosen])
        played = round_to_independent(self.matroid, y, self._round_rng) if rounding else None
        self._pending = chosen
        self.t += 1
        return played, y

    def stage_points(self, chosen) -> np.ndarray:
        """Row ``s`` is ``y(s delta)``: delta times the indicator sum of earlier stages."""
        n = self.matroid.n
        ind = np.zeros((self.stages, n))
        for s, S in enumerate(chosen):
            ind[s, list(S)] = 1.0
        cum = np.cumsum(ind, axis=0) * self.delta
        points = np.zeros((self.stages, n))
        points[1:] = cum[:-1]
        return np.clip(points, 0.0, 1.0)

    def feedback(self, oracle: ValueOracle) -> None:
        if self._pending is None:
            raise ProtocolError("feedback without a matching step")
        chosen, self._pending = self._pending, None
        omegas = sample_marginal_estimates(oracle, self.stage_points(chosen), self._estimate_rng)
        for e, w in zip(self.experts, omegas):
            e.update(w, validate=False)


def ocg_offline_solve(oracle: ValueOracle, matroid: Matroid, epsilon: float, seed: int,
                      rounds: int | None = None, opt: float | None = None) -> frozenset:
    """Offline maximisation by running the online algorithm on ``f_t = f``.

    Uses ``delta = eps / 2d`` (rounded down to ``1/m``) and, unless ``rounds``
    is given, ``T = 4 d^2 n g / (eps^2 OPT^2)`` from the supplied ``opt``.
    One round is drawn uniformly and its fractional point is rounded.
    """
    if not 0.0 < epsilon < 1.0 - 1.0 / math.e:
        raise InvalidInput("epsilon must lie in (0, 1 - 1/e)")
    d, n, g = matroid.rank(), matroid.n, oracle.value_bound
    if rounds is None:
        if opt is None or opt <= 0:
            raise InvalidInput("need either rounds or a positive OPT estimate")
        rounds = math.ceil(4 * d * d * n * g / (epsilon ** 2 * opt ** 2))
    if rounds < 1:
        raise InvalidInput("number of rounds must be positive")
    stages = max(1, math.ceil(2 * max(d, 1) / epsilon))
    alg = OnlineContinuousGreedy(matroid, 1.0 / stages, seed, value_bound=g, horizon=rounds)
    pick = int(Streams(seed)("pick-round").integers(rounds))
    kept = None
    for t in range(rounds):
        _, y = alg.step(rounding=False)
        if t == pick:
            kept = y
        alg.feedback(oracle)
    return round_to_independent(matroid, kept, Streams(seed)("final-rounding"))
