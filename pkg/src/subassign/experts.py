"""No-regret subroutines used by the online algorithms.

All experts share a small protocol: ``select()`` returns an action and
``update(feedback)`` consumes one round of full-information feedback.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .core import InvalidInput, TOL
from .matroid import Matroid


class RandomizedWeightedMajority:
    """Exponential weights over ``n_actions`` with the anytime rate ``sqrt(8 ln N / t)``.

    Rewards are expected in ``[0, bound]`` and are divided by ``bound``
    before being accumulated.
    """

    def __init__(self, n_actions: int, rng: np.random.Generator, bound: float = 1.0):
        if n_actions < 1:
            raise InvalidInput("need at least one action")
        if bound <= 0:
            raise InvalidInput("reward bound must be positive")
        self.n = int(n_actions)
        self.bound = float(bound)
        self.rng = rng
        self.cum = np.zeros(self.n)
        self.t = 0

    @property
    def rate(self) -> float:
        return math.sqrt(8.0 * math.log(self.n) / (self.t + 1))

    def probabilities(self) -> np.ndarray:
        z = self.rate * (self.cum - self.cum.max())
        p = np.exp(z)
        return p / p.sum()

    def select(self) -> int:
        if self.n == 1:
            return 0
        cdf = np.cumsum(self.probabilities())
        return min(int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right")), self.n - 1)

    def update(self, rewards, validate: bool = True) -> None:
        r = np.asarray(rewards, dtype=float)
        if r.shape != (self.n,):
            raise InvalidInput(f"expected {self.n} rewards, got shape {r.shape}")
        if validate and (r.min() < -TOL or r.max() > self.bound + TOL):
            raise InvalidInput(f"rewards must lie in [0, {self.bound}]")
        self.cum += r / self.bound
        self.t += 1

    def skip(self) -> None:
        """Equivalent to an all-zero update."""
        self.t += 1


class FollowTheLeader:
    """Deterministic leader (lowest index on ties); useful as a test double."""

    def __init__(self, n_actions: int, *_, **__):
        self.n = int(n_actions)
        self.cum = np.zeros(self.n)
        self.t = 0

    def select(self) -> int:
        return int(np.argmax(self.cum))

    def update(self, rewards, validate: bool = True) -> None:
        self.cum += np.asarray(rewards, dtype=float)
        self.t += 1

    def skip(self) -> None:
        self.t += 1


class FollowThePerturbedLeader:
    """Online linear maximisation over the independent sets of a matroid.

    Each call to :meth:`select` draws a fresh perturbation with i.i.d.
    ``Uniform[0, scale]`` coordinates and returns the max-weight independent
    set under ``cumulative + perturbation``.
    """

    def __init__(self, matroid: Matroid, scale: float, rng: np.random.Generator, bound: float | None = None):
        if scale < 0:
            raise InvalidInput("perturbation scale must be non-negative")
        self.matroid = matroid
        self.scale = float(scale)
        self.rng = rng
        self.bound = bound
        self.w = np.zeros(matroid.n)
        self.t = 0

    @staticmethod
    def default_scale(n: int, g: float, horizon: int) -> float:
        return math.sqrt(n * g * horizon)

    def select(self) -> frozenset:
        return self.matroid.max_weight_independent_set(self.w + self.rng.uniform(0.0, self.scale, self.matroid.n))

    def update(self, feedback, validate: bool = True) -> None:
        fb = np.asarray(feedback, dtype=float)
        if validate and self.bound is not None and (fb.min() < -TOL or fb.max() > self.bound + TOL):
            raise InvalidInput(f"feedback coordinates must lie in [0, {self.bound}]")
        if not np.all(np.isfinite(fb)):
            raise InvalidInput("feedback must be finite")
        self.w += fb
        self.t += 1


class EstimatedFeedback:
    """Run ``inner`` on estimates of its rewards instead of the rewards themselves.

    ``estimator(rewards)`` returns the estimate fed to ``inner``.  If the
    estimates satisfy ``E[est] = gamma * reward + shift`` (shift common to all
    actions) the wrapped expert's expected regret is the inner bound divided
    by ``gamma``; with ``gamma = 1`` it is unchanged.
    """

    def __init__(self, inner, estimator: Callable[[np.ndarray], np.ndarray]):
        self.inner = inner
        self.estimator = estimator

    def select(self):
        return self.inner.select()

    def update(self, rewards, validate: bool = False) -> None:
        self.inner.update(self.estimator(np.asarray(rewards, dtype=float)), validate=False)

    def update_estimate(self, estimate) -> None:
        """Forward an already-formed estimate verbatim."""
        self.inner.update(estimate, validate=False)

    def __getattr__(self, name):
        return getattr(self.inner, name)


def noisy_scaled_estimator(rng: np.random.Generator, gamma: float = 1.0, noise: float = 0.0):
    """``gamma * reward + U(-noise, noise)`` per action."""
    if gamma <= 0:
        raise InvalidInput("gamma must be positive")

    def estimate(rewards):
        return gamma * rewards + rng.uniform(-noise, noise, size=rewards.shape)

    return estimate
