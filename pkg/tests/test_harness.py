import itertools
import math

import numpy as np
import pytest

from subassign.core import GroundSet, InvalidInput, SeparablePositional, brute_force_opt, check_monotone_submodular
from subassign.harness import (AdModel, AdModelOracle, RewardTrace, StationaryStream, ad_model_expected_reward,
                               ad_model_opt, ad_model_round, aggregate_greedy, regret_1m1e, run_ad_sim,
                               run_ocg, run_tg_online, running_comparator, synthetic_blog_stream,
                               traces_to_csv, trial_seed)
from subassign.matroid import PartitionMatroid, independent_sets
from subassign.rng import stream

from conftest import random_coverage


# ad model ------------------------------------------------------------------------


def test_sure_click_at_first_position():
    m = AdModel(3, [0, 1], [0.5, 0.5], np.ones((2, 2)), np.zeros((2, 3)))
    rng = stream(0, "users")
    for a in (0, 1):
        assert all(ad_model_round(m, {a}, rng) == (1, 0) for _ in range(20))


def test_empty_assignment_never_clicks():
    m = AdModel.default()
    rng = stream(0, "users")
    assert all(ad_model_round(m, set(), rng)[0] == 0 for _ in range(200))
    assert ad_model_expected_reward(m, set()) == 0.0


def test_round_rejects_two_ads_in_one_slot():
    m = AdModel.default()
    with pytest.raises(InvalidInput):
        ad_model_round(m, {0, 1}, stream(0, "u"))


def test_model_validation():
    with pytest.raises(InvalidInput):
        AdModel(2, [0], [0.5, 0.5], [[1.2, 0], [0, 0]], np.zeros((2, 2)))
    with pytest.raises(InvalidInput):
        AdModel(2, [0], [0.7, 0.7], [[1, 0], [0, 1]], np.zeros((2, 2)))
    with pytest.raises(InvalidInput):
        AdModel(2, [0], [0.5, 0.5], [[1, 0], [0, 1]], np.zeros((2, 3)))


def test_single_ad_first_position():
    m = AdModel.default()
    # ad 0 has type 1: 0.5 for same-type users, 0.2 for the others, mixed equally
    assert ad_model_expected_reward(m, {0}) == pytest.approx(0.5 * 0.5 + 0.5 * 0.2)


def scan_value(m, s):
    """Closed form by direct scan: sum_k p_k prod_{j<k} (1 - p_j)(1 - abandon_j)."""
    slot = {k: a for k, a in (divmod(x, m.n_ads) for x in s)}
    total = 0.0
    for u, share in enumerate(m.user_mix):
        reach, v = 1.0, 0.0
        for k in range(m.positions):
            p = m.p_click[u, m.ad_types[slot[k]]] if k in slot else 0.0
            v += reach * p
            reach *= (1 - p) * (1 - m.p_abandon[u, k])
        total += share * v
    return total


@pytest.mark.parametrize("seed", range(20))
def test_expected_reward_matches_scan_and_simulation(seed):
    m = AdModel.default()
    rng = stream(seed, "assignment")
    s = {k * m.n_ads + int(rng.integers(m.n_ads)) for k in range(m.positions) if rng.random() < 0.8}
    exact = ad_model_expected_reward(m, s)
    assert exact == pytest.approx(scan_value(m, s), abs=1e-12)
    users = stream(seed, "users")
    n = 100_000
    clicks = np.fromiter((ad_model_round(m, s, users)[0] for _ in range(n)), dtype=float, count=n)
    assert abs(clicks.mean() - exact) <= 3 * math.sqrt(exact * (1 - exact) / n) + 1e-12


def test_ad_objective_monotone_submodular_small():
    m = AdModel.default(positions=3, ads=4)
    rep = check_monotone_submodular(AdModelOracle(m), m.ground)
    assert rep.monotone and rep.submodular


def test_adding_later_ad_never_hurts():
    m = AdModel.default()
    base = {0, 25}
    assert ad_model_expected_reward(m, base | {3 * 20 + 7}) >= ad_model_expected_reward(m, base)


def test_ad_opt_matches_brute_force_small():
    m = AdModel.default(positions=3, ads=4)
    s, v = ad_model_opt(m)
    assert v == pytest.approx(brute_force_opt(AdModelOracle(m), m.ground)[1], abs=1e-12)


# blog stream ----------------------------------------------------------------------


def test_blog_stream_reproducible():
    a = synthetic_blog_stream(5, 4, universe=10, blogs=3, positions=2)
    b = synthetic_blog_stream(5, 4, universe=10, blogs=3, positions=2)
    sets = list(a.ground.feasible_sets())
    for t in range(4):
        assert [a[t](s) for s in sets] == [b[t](s) for s in sets]
    c = synthetic_blog_stream(6, 4, universe=10, blogs=3, positions=2)
    assert any(a[0](s) != c[0](s) for s in sets)


@pytest.mark.parametrize("seed", range(5))
def test_blog_days_are_submodular(seed):
    st = synthetic_blog_stream(seed, 3, universe=12, blogs=2, positions=5, gamma=0.8)
    for t in range(3):
        rep = check_monotone_submodular(st[t], st.ground)
        assert rep.monotone and rep.submodular
        assert st[t].max_value <= st.reward_bound + 1e-12


def test_blog_stream_errors():
    with pytest.raises(InvalidInput):
        synthetic_blog_stream(0, 3, gamma=1.0)
    with pytest.raises(IndexError):
        synthetic_blog_stream(0, 3)[3]


# regret ---------------------------------------------------------------------------


def test_regret_single_round_optimum():
    g, f = random_coverage(0, K=2, per=2)
    s, opt = brute_force_opt(f, g)
    r, exact = regret_1m1e([s], [f], g)
    assert exact and r == pytest.approx(-opt / math.e)


def test_regret_zero_functions():
    g = GroundSet([[0, 1], [2]])
    z = SeparablePositional([0.0, 0.0, 0.0])
    assert regret_1m1e([frozenset()] * 3, [z] * 3, g) == (0.0, True)


@pytest.mark.parametrize("seed", range(5))
def test_regret_matches_hand_enumeration(seed):
    g = GroundSet([[0, 1], [2, 3]])
    rng = stream(seed, "stream")
    fs = [SeparablePositional(rng.random(4)) for _ in range(3)]
    played = [frozenset({int(rng.integers(2)), 2 + int(rng.integers(2))}) for _ in range(3)]
    sets = [frozenset(x for x in c if x is not None) for c in itertools.product([None, 0, 1], [None, 2, 3])]
    best = max(sum(f(s) for f in fs) for s in sets)
    want = (1 - 1 / math.e) * best - sum(f(s) for f, s in zip(fs, played))
    got, exact = regret_1m1e(played, fs, g)
    assert exact and got == pytest.approx(want, abs=1e-12)


def test_regret_static_replay_identity():
    g, f = random_coverage(3, K=3, per=2)
    s, opt = brute_force_opt(f, g)
    T = 7
    r, _ = regret_1m1e([s] * T, [f] * T, g)
    assert r == pytest.approx(-T * opt / math.e)


def test_regret_proxy_flag():
    g = GroundSet.grid(4, 9)
    f = SeparablePositional(stream(0, "v").random(g.n))
    s = aggregate_greedy(g, [f])
    r, exact = regret_1m1e([s], [f], g, cap=100)
    assert not exact and r == pytest.approx(-f(s) / math.e)


def test_running_comparator_prefix_maxima():
    g, f = random_coverage(2, K=2, per=2)
    _, h = random_coverage(9, K=2, per=2)
    sets = list(g.feasible_sets())
    comp = running_comparator([f, h, f], sets, g.n)
    assert comp[0] == pytest.approx(brute_force_opt(f, g)[1])
    assert comp[2] == pytest.approx(max(2 * f(s) + h(s) for s in sets))


# traces and runners ----------------------------------------------------------------


def test_trace_cumulative_non_decreasing():
    g, f = random_coverage(1, K=2, per=3)
    tr = run_tg_online(g, StationaryStream(f, 50), 2, seed=1, reward_bound=f.max_value)
    assert np.all(np.diff(tr.cumulative) >= 0)
    assert tr.exact_comparator
    r, _ = regret_1m1e(tr.played, [f] * 50, g)
    assert tr.regret()[-1] == pytest.approx(r)


def test_csv_schema_and_determinism():
    g, f = random_coverage(1, K=2, per=3)
    runs = [run_tg_online(g, StationaryStream(f, 30), 2, seed=4, feedback="bandit", reward_bound=f.max_value)
            for _ in range(2)]
    a, b = traces_to_csv([runs[0]]), traces_to_csv([runs[1]])
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "round,reward,cum_reward,regret_1m1e,explored_flag"
    assert len(lines) == 31
    assert {ln.split(",")[-1] for ln in lines[1:]} <= {"0", "1"}


def test_csv_labels():
    tr = RewardTrace(0)
    tr.record(1, frozenset(), 1.0)
    text = traces_to_csv([tr], [{"trial": 3}])
    assert text.splitlines() == ["trial,round,reward,cum_reward,regret_1m1e,explored_flag", "3,1,1,1,nan,0"]


def test_ocg_runner():
    g, f = random_coverage(2, K=2, per=3)
    m = PartitionMatroid(g)
    tr = run_ocg(m, StationaryStream(f, 40), 0.25, seed=0, candidates=independent_sets(m))
    assert len(tr.rewards) == 40 and all(m.is_independent(s) for s in tr.played)
    assert np.isfinite(tr.regret()).all()


def test_ad_sim_policies():
    m = AdModel.default()
    for algo in ("tg", "random", "fixed"):
        tr = run_ad_sim(m, algo, 200, seed=trial_seed(1, 0), colors=2)
        assert len(tr.rewards) == 200 and set(tr.rewards) <= {0.0, 1.0}
        assert all(len(s) <= m.positions for s in tr.played)
    with pytest.raises(InvalidInput):
        run_ad_sim(m, "greedy", 10, seed=0)


def test_tg_bandit_beats_nothing_and_runs_in_order():
    g, f = random_coverage(2, K=2, per=3)
    tr = run_tg_online(g, StationaryStream(f, 100), 1, seed=0, feedback="bandit", explore=0.2,
                       reward_bound=f.max_value)
    assert tr.rounds == list(range(1, 101))
    assert 0 < sum(tr.explored) < 100
    with pytest.raises(InvalidInput):
        run_tg_online(g, StationaryStream(f, 5), 1, seed=0, feedback="partial", reward_bound=f.max_value)
