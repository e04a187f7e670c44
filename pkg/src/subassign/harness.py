"""Simulation environments, regret accounting and reward traces."""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (CapExceeded, DiscountedPositional, GroundSet, InvalidInput, ValueOracle,
                   WeightedCoverage, sets_to_masks)
from .offline import locally_greedy
from .online import OnlineContinuousGreedy, TGOnline, default_explore_rate
from .matroid import Matroid
from .rng import Streams, stream

ONE_MINUS_INV_E = 1.0 - 1.0 / math.e


# ---------------------------------------------------------------------------
# Ad display model


@dataclass
class AdModel:
    """Cascade-style click model over ``positions`` slots.

    Users of each type scan the slots in order.  At a slot showing ad ``a``
    they click with ``p_click[user, type(a)]`` and leave; otherwise they
    abandon with probability ``p_abandon[user, slot]`` or move on.  An empty
    slot has click probability 0.  Item ``k * n_ads + a`` places ad ``a`` in
    slot ``k``.
    """

    positions: int
    ad_types: np.ndarray
    user_mix: np.ndarray
    p_click: np.ndarray  # (user type, ad type)
    p_abandon: np.ndarray  # (user type, position)

    def __post_init__(self):
        self.ad_types = np.asarray(self.ad_types, dtype=np.int64)
        self.user_mix = np.asarray(self.user_mix, dtype=float)
        self.p_click = np.asarray(self.p_click, dtype=float)
        self.p_abandon = np.asarray(self.p_abandon, dtype=float)
        for name in ("user_mix", "p_click", "p_abandon"):
            arr = getattr(self, name)
            if np.any(arr < 0) or np.any(arr > 1):
                raise InvalidInput(f"{name} entries must be probabilities")
        if abs(self.user_mix.sum() - 1.0) > 1e-9:
            raise InvalidInput("user mix must sum to 1")
        if self.p_abandon.shape != (len(self.user_mix), self.positions):
            raise InvalidInput("p_abandon must be (user types, positions)")

    @classmethod
    def default(cls, positions: int = 5, ads: int = 20) -> "AdModel":
        """Two equally frequent user types; half the ads of each type; click 0.5 on own type, 0.2 otherwise."""
        types = np.array([0] * (ads // 2) + [1] * (ads - ads // 2))
        return cls(positions=positions, ad_types=types, user_mix=[0.5, 0.5],
                   p_click=[[0.5, 0.2], [0.2, 0.5]],
                   p_abandon=np.array([[0.0] * positions, [0.5] * positions]))

    @property
    def n_ads(self) -> int:
        return len(self.ad_types)

    @property
    def ground(self) -> GroundSet:
        return GroundSet.grid(self.positions, self.n_ads)

    def ad_click_probs(self) -> np.ndarray:
        """(user type, ad) click probabilities."""
        return self.p_click[:, self.ad_types]


def ad_model_round(model: AdModel, assignment, rng: np.random.Generator) -> tuple[int, int | None]:
    """Simulate one user; returns ``(clicks, clicked position or None)``."""
    slot_ad = {}
    for item in assignment:
        k, a = divmod(int(item), model.n_ads)
        if k in slot_ad:
            raise InvalidInput(f"two ads assigned to position {k}")
        slot_ad[k] = a
    user = int(rng.choice(len(model.user_mix), p=model.user_mix))
    probs = model.ad_click_probs()[user]
    for k in range(model.positions):
        pc = probs[slot_ad[k]] if k in slot_ad else 0.0
        r = rng.random()
        if r < pc:
            return 1, k
        if r < pc + (1.0 - pc) * model.p_abandon[user, k]:
            return 0, None
    return 0, None


class AdModelOracle(ValueOracle):
    """Expected clicks of an assignment under :class:`AdModel`.

    Several ads in one slot (infeasible sets) are treated as one slot whose
    click probability is ``1 - prod(1 - p)`` over those ads.
    """

    def __init__(self, model: AdModel):
        super().__init__(model.positions * model.n_ads)
        self.model = model
        with np.errstate(divide="ignore"):
            self._log_miss = np.log1p(-model.ad_click_probs())  # (users, ads)

    def value(self, s):
        return float(self.batch(sets_to_masks([s], self.n))[0])

    def batch(self, masks):
        m = self.model
        masks = np.asarray(masks, dtype=float).reshape(-1, m.positions, m.n_ads)
        total = np.zeros(len(masks))
        for u, share in enumerate(m.user_mix):
            with np.errstate(invalid="ignore"):
                log_miss = np.nan_to_num(masks @ self._log_miss[u], nan=-np.inf)
            pc = 1.0 - np.exp(log_miss)  # (sets, positions)
            v = np.zeros(len(masks))
            for k in reversed(range(m.positions)):
                v = pc[:, k] + (1.0 - pc[:, k]) * (1.0 - m.p_abandon[u, k]) * v
            total += share * v
        return total

    @property
    def max_value(self):
        return 1.0


def ad_model_expected_reward(model: AdModel, assignment) -> float:
    return AdModelOracle(model)(assignment)


def ad_model_opt(model: AdModel) -> tuple[frozenset, float]:
    """Exact optimum by enumerating ad *classes*: ads with equal click rows are interchangeable."""
    probs = model.ad_click_probs()
    reps = {}
    for a in range(model.n_ads):
        reps.setdefault(tuple(probs[:, a]), a)
    choices = [None] + sorted(reps.values())
    oracle = AdModelOracle(model)
    sets = [frozenset(k * model.n_ads + a for k, a in enumerate(combo) if a is not None)
            for combo in itertools.product(choices, repeat=model.positions)]
    vals = oracle.batch(sets_to_masks(sets, oracle.n))
    i = int(np.argmax(vals))
    return sets[i], float(vals[i])


# ---------------------------------------------------------------------------
# Synthetic blog cascades


class BlogStream:
    """Reproducible daily discounted-coverage objectives over a fixed blog population.

    Blogs belong to ``topics`` topical clusters and have a fixed detection
    propensity; each day draws ``universe`` cascades with a topic and a
    size, and blog ``b`` detects cascade ``e`` with probability
    ``q_b * (0.9 if same topic else 0.1)``.  Day ``t`` wraps the coverage of
    that day's cascades (weights normalised to sum to 1) as a
    :class:`DiscountedPositional` over ``positions`` slots.
    """

    def __init__(self, seed: int, days: int, universe: int = 30, blogs: int = 8, positions: int = 5,
                 gamma: float = 0.8, topics: int = 3):
        if not 0.0 < gamma < 1.0:
            raise InvalidInput("gamma must lie in (0, 1)")
        self.seed, self.days, self.universe = int(seed), int(days), int(universe)
        self.blogs, self.positions, self.gamma, self.topics = int(blogs), int(positions), float(gamma), int(topics)
        rng = stream(seed, "blog-structure")
        self.blog_topic = np.arange(self.blogs) % self.topics
        self.propensity = rng.uniform(0.2, 0.8, self.blogs)
        self.ground = GroundSet.grid(self.positions, self.blogs)
        self.blog_of = np.arange(self.ground.n) % self.blogs

    def __len__(self):
        return self.days

    def cascades(self, t: int) -> WeightedCoverage:
        rng = stream(self.seed, "blog-day", t)
        topic = rng.integers(0, self.topics, self.universe)
        size = 1.0 + rng.geometric(0.3, self.universe)
        same = self.blog_topic[:, None] == topic[None, :]
        p = self.propensity[:, None] * np.where(same, 0.9, 0.1)
        detect = rng.random((self.blogs, self.universe)) < p
        return WeightedCoverage(size / size.sum(), [np.flatnonzero(row) for row in detect])

    def __getitem__(self, t: int) -> DiscountedPositional:
        if not 0 <= t < self.days:
            raise IndexError(t)
        return DiscountedPositional(self.ground, self.blog_of, self.cascades(t), self.gamma)

    @property
    def reward_bound(self) -> float:
        return self.gamma


def synthetic_blog_stream(seed: int, days: int, universe: int = 30, blogs: int = 8, positions: int = 5,
                          gamma: float = 0.8) -> BlogStream:
    return BlogStream(seed, days, universe, blogs, positions, gamma)


class StationaryStream:
    """``f_t = f`` for ``days`` rounds."""

    def __init__(self, oracle: ValueOracle, days: int):
        self.oracle, self.days = oracle, int(days)

    def __len__(self):
        return self.days

    def __getitem__(self, t):
        if not 0 <= t < self.days:
            raise IndexError(t)
        return self.oracle


# ---------------------------------------------------------------------------
# Regret accounting


def regret_1m1e(played: Sequence, oracles: Sequence[ValueOracle], ground: GroundSet,
                cap: int = 10**6) -> tuple[float, bool]:
    """``(1 - 1/e) max_S sum_t f_t(S) - sum_t f_t(S_t)``.

    Returns ``(regret, exact)``; when the feasible family exceeds ``cap`` the
    maximum is replaced by the locally greedy value on the summed objective
    and ``exact`` is False.
    """
    if len(played) != len(oracles):
        raise InvalidInput("need one played set per oracle")
    earned = sum(f(s) for f, s in zip(oracles, played))
    try:
        sets = list(ground.feasible_sets(cap))
    except CapExceeded:
        proxy = aggregate_greedy(ground, oracles)
        return ONE_MINUS_INV_E * sum(f(proxy) for f in oracles) - earned, False
    masks = sets_to_masks(sets, ground.n)
    cum = np.zeros(len(sets))
    for f in oracles:
        cum += f.batch(masks)
    return ONE_MINUS_INV_E * float(cum.max()) - earned, True


def aggregate_greedy(ground: GroundSet, oracles: Sequence[ValueOracle]) -> frozenset:
    """Locally greedy assignment for ``sum_t f_t``, scoring each partition with one batch call per distinct oracle."""
    counts: dict[int, list] = {}
    for f in oracles:
        counts.setdefault(id(f), [f, 0])[1] += 1
    current: set[int] = set()
    for part in ground.partitions:
        if not part:
            continue
        masks = np.zeros((len(part), ground.n), dtype=bool)
        masks[:, list(current)] = True
        masks[np.arange(len(part)), part] = True
        total = sum(c * f.batch(masks) for f, c in counts.values())
        current.add(part[int(np.argmax(total))])
    return frozenset(current)


def running_comparator(oracles: Sequence[ValueOracle], candidates: Sequence[frozenset], n: int) -> np.ndarray:
    """``max_S sum_{tau<=t} f_tau(S)`` for every prefix ``t``, over the candidate sets."""
    masks = sets_to_masks(list(candidates), n)
    cum = np.zeros(len(masks))
    out = np.empty(len(oracles))
    for t, f in enumerate(oracles):
        cum += f.batch(masks)
        out[t] = cum.max()
    return out


@dataclass
class RewardTrace:
    """Per-round records of one run."""

    seed: int
    rounds: list = field(default_factory=list)
    played: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    explored: list = field(default_factory=list)
    comparator: np.ndarray | None = None  # running max_S sum f_tau(S), or None
    exact_comparator: bool = True

    def record(self, t: int, played, reward: float, explored: bool = False) -> None:
        self.rounds.append(t)
        self.played.append(played)
        self.rewards.append(float(reward))
        self.explored.append(bool(explored))

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.rewards)

    @property
    def total(self) -> float:
        return float(np.sum(self.rewards))

    def regret(self) -> np.ndarray:
        if self.comparator is None:
            return np.full(len(self.rewards), np.nan)
        return ONE_MINUS_INV_E * self.comparator - self.cumulative

    def rows(self):
        cum, reg = self.cumulative, self.regret()
        for i, t in enumerate(self.rounds):
            yield t, self.rewards[i], cum[i], reg[i], int(self.explored[i])


CSV_HEADER = ["round", "reward", "cum_reward", "regret_1m1e", "explored_flag"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def write_traces(traces: Sequence[RewardTrace], out, labels: Sequence[dict] | None = None) -> None:
    """Write traces as CSV; ``labels`` adds leading columns (e.g. trial, algo) per trace."""
    writer = csv.writer(out, lineterminator="\n")
    extra = list(labels[0].keys()) if labels else []
    writer.writerow(extra + CSV_HEADER)
    for i, tr in enumerate(traces):
        lead = [str(v) for v in labels[i].values()] if labels else []
        for row in tr.rows():
            writer.writerow(lead + [_fmt(v) for v in row])


def traces_to_csv(traces, labels=None) -> str:
    buf = io.StringIO()
    write_traces(traces, buf, labels)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Experiment runners


def trial_seed(seed: int, trial: int) -> int:
    return int(stream(seed, "trial", trial).integers(0, 2**63 - 1))


def run_tg_online(ground: GroundSet, oracles, colors: int, seed: int, feedback: str = "full",
                  explore: float | None = None, reward_bound: float | None = None,
                  comparator_cap: int = 20_000) -> RewardTrace:
    """Run TGonline over a stream of objectives and record a trace.

    In bandit mode only ``f_t(played)`` is revealed.  The regret column uses
    the exact running comparator when the feasible family has at most
    ``comparator_cap`` members, and otherwise the locally greedy set on the
    summed objective (``exact_comparator`` is then False).
    """
    T = len(oracles)
    bound = reward_bound if reward_bound is not None else getattr(oracles, "reward_bound", None)
    if bound is None:
        bound = max(oracles[t].max_value for t in range(T))
    alg = TGOnline(ground, colors, seed, reward_bound=bound)
    if feedback == "bandit" and explore is None:
        explore = default_explore_rate(T, ground.n, colors, ground.K)
    trace = RewardTrace(seed)
    for t in range(T):
        f = oracles[t]
        if feedback == "full":
            s = alg.step()
            r = f(s)
            alg.feedback(f)
            trace.record(t + 1, s, r)
        elif feedback == "bandit":
            s = alg.step_bandit(explore)
            explored = alg.explored
            r = f(s)
            alg.feedback_bandit(r)
            trace.record(t + 1, s, r, explored)
        else:
            raise InvalidInput(f"unknown feedback mode {feedback!r}")
    _attach_comparator(trace, [oracles[t] for t in range(T)], ground, comparator_cap)
    return trace


def _attach_comparator(trace, oracles, ground, cap):
    if ground.count_feasible() <= cap:
        trace.comparator = running_comparator(oracles, list(ground.feasible_sets(cap)), ground.n)
        trace.exact_comparator = True
    else:
        proxy = aggregate_greedy(ground, oracles)
        trace.comparator = np.cumsum([f(proxy) for f in oracles])
        trace.exact_comparator = False


def run_ocg(matroid: Matroid, oracles, delta: float, seed: int, value_bound: float | None = None,
            candidates: Sequence[frozenset] | None = None) -> RewardTrace:
    """Run online continuous greedy with full-information feedback."""
    T = len(oracles)
    g = value_bound if value_bound is not None else max(oracles[t].value_bound for t in range(T))
    alg = OnlineContinuousGreedy(matroid, delta, seed, value_bound=max(g, 1e-12), horizon=T)
    trace = RewardTrace(seed)
    for t in range(T):
        f = oracles[t]
        s, _ = alg.step()
        trace.record(t + 1, s, f(s))
        alg.feedback(f)
    if candidates is not None:
        trace.comparator = running_comparator([oracles[t] for t in range(T)], candidates, matroid.n)
    return trace


def run_ad_sim(model: AdModel, algo: str, rounds: int, seed: int, colors: int = 1,
               explore: float | None = None, fixed: frozenset | None = None,
               bandit_scale="unit") -> RewardTrace:
    """One ad-display trial with bandit feedback (realised clicks).

    ``algo`` is ``tg`` (bandit TGonline), ``random`` (uniform ad per slot)
    or ``fixed`` (always the given assignment, default the locally greedy
    assignment for the expected-click objective).  User behaviour is drawn
    from the ``environment`` stream of ``seed``, so different algorithms run
    with the same seed see the same random users.
    """
    streams = Streams(seed)
    env = streams("environment")
    ground = model.ground
    _, opt = ad_model_opt(model)
    trace = RewardTrace(seed)
    if algo == "tg":
        alg = TGOnline(ground, colors, seed, reward_bound=1.0, bandit_scale=bandit_scale)
        if explore is None:
            explore = default_explore_rate(rounds, ground.n, colors, ground.K)
    elif algo == "random":
        pick = streams("random-policy")
    elif algo == "fixed":
        if fixed is None:
            fixed = locally_greedy(ground, AdModelOracle(model))
    else:
        raise InvalidInput(f"unknown algorithm {algo!r}")
    for t in range(rounds):
        explored = False
        if algo == "tg":
            s = alg.step_bandit(explore)
            explored = alg.explored
        elif algo == "random":
            s = frozenset(k * model.n_ads + int(a) for k, a in enumerate(pick.integers(0, model.n_ads, model.positions)))
        else:
            s = fixed
        clicks, _ = ad_model_round(model, s, env)
        if algo == "tg":
            alg.feedback_bandit(clicks)
        trace.record(t + 1, s, clicks, explored)
    trace.comparator = opt * np.arange(1, rounds + 1)
    return trace


def run_trials(fn: Callable, args_list: Sequence[tuple], workers: int = 1) -> list:
    """Run ``fn(*args)`` for each entry, in order; ``workers > 1`` uses processes."""
    if workers <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args_list)))
