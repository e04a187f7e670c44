import sys

import numpy as np
import pytest

from subassign.core import GroundSet, WeightedCoverage
from subassign.instance import ALICE_BOB, parse_instance
from subassign.rng import stream


def random_coverage(seed, K=3, per=3, universe=6, p=0.35, name="coverage"):
    """Random weighted coverage on a K x per grid; items cover each element w.p. p."""
    rng = stream(seed, name)
    if np.ndim(per) == 0:
        per = [per] * K
    parts, nxt = [], 0
    for size in per:
        parts.append(list(range(nxt, nxt + size)))
        nxt += size
    w = rng.uniform(0.05, 1.0, universe)
    covers = [np.flatnonzero(rng.random(universe) < p) for _ in range(nxt)]
    return GroundSet(parts), WeightedCoverage(w, covers)


def random_small_instance(seed):
    """K <= 3, |P_k| <= 3, random weighted coverage."""
    rng = stream(seed, "shape")
    K = int(rng.integers(1, 4))
    per = rng.integers(1, 4, K).tolist()
    return random_coverage(seed, K, per, universe=int(rng.integers(2, 8)), p=float(rng.uniform(0.2, 0.6)))


@pytest.fixture
def alice_bob():
    return parse_instance(ALICE_BOB)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
