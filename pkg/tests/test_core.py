import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subassign.core import (CapExceeded, ConcaveOverIntersection, DiscountedPositional, FunctionOracle,
                            GroundSet, InvalidInput, SeparablePositional, SumOracle, WeightedCoverage,
                            all_subset_masks, brute_force_opt, check_monotone_submodular,
                            discounted_positional_value, is_feasible, sets_to_masks)
from subassign.rng import stream

from conftest import random_coverage


class Cardinality(WeightedCoverage):
    def __init__(self, n):
        super().__init__(np.ones(n), [[i] for i in range(n)])


# ground sets and feasibility ---------------------------------------------------


def test_is_feasible_examples():
    g = GroundSet([[0], [1]])
    assert is_feasible(g, {0, 1})
    assert not is_feasible(GroundSet([[0, 1]]), {0, 1})
    assert is_feasible(g, set())


def test_is_feasible_unknown_id():
    with pytest.raises(InvalidInput):
        is_feasible(GroundSet([[0], [1]]), {5})


@pytest.mark.parametrize("parts", [[[0, 1], [1, 2]], [[0, 2]], []])
def test_groundset_rejects_bad_partitions(parts):
    with pytest.raises(InvalidInput):
        GroundSet(parts)


def test_feasible_sets_counts_empty_slots():
    g = GroundSet([[0, 1], [2, 3, 4]])
    sets = list(g.feasible_sets())
    assert len(sets) == g.count_feasible() == 3 * 4
    assert len(set(sets)) == len(sets)
    assert all(is_feasible(g, s) for s in sets)


def test_feasible_sets_cap():
    with pytest.raises(CapExceeded):
        list(GroundSet.grid(4, 9).feasible_sets(cap=1000))


# oracle families ---------------------------------------------------------------


def test_coverage_on_three_items_is_monotone_submodular():
    f = WeightedCoverage([1.0, 2.0, 0.5], [[0, 1], [1], [2]])
    rep = check_monotone_submodular(f, GroundSet([[0], [1], [2]]))
    assert rep.monotone and rep.submodular and rep.witness is None


def test_square_of_cardinality_is_flagged():
    f = FunctionOracle(lambda s: float(len(s)) ** 2, 3)
    rep = check_monotone_submodular(f)
    assert rep.monotone
    assert not rep.submodular
    w = rep.witness
    assert w["kind"] == "submodular"
    a = frozenset(w["A"])
    s, t = w["s"], w["t"]
    assert f(a | {s}) + f(a | {t}) < f(a | {s, t}) + f(a)


def test_non_monotone_witness():
    f = FunctionOracle(lambda s: 1.0 if len(s) == 1 else 0.0, 2)
    rep = check_monotone_submodular(f)
    assert not rep.monotone and rep.witness["kind"] == "monotone"


def test_checker_cap():
    with pytest.raises(CapExceeded):
        check_monotone_submodular(Cardinality(15))


def test_local_check_agrees_with_pairwise_definition():
    # the pairwise definition over all A <= A', computed independently, on random set functions
    rng = stream(0, "local-vs-global")
    for _ in range(30):
        n = 4
        table = rng.random(1 << n) * rng.integers(0, 2)
        if rng.random() < 0.5:  # plant a coverage-like function so some cases are submodular
            cov = WeightedCoverage(rng.random(3), [np.flatnonzero(rng.random(3) < 0.5) for _ in range(n)])
            table = cov.batch(all_subset_masks(n))
        f = FunctionOracle(lambda s, t=table: float(t[sum(1 << i for i in s)]), n)
        rep = check_monotone_submodular(f)
        mono, sub = True, True
        for a, b in itertools.product(range(1 << n), repeat=2):
            if a & ~b:
                continue
            if table[a] > table[b] + 1e-9:
                mono = False
            for s in range(n):
                if not b >> s & 1:
                    if table[a | 1 << s] - table[a] < table[b | 1 << s] - table[b] - 1e-9:
                        sub = False
        assert (rep.monotone, rep.submodular) == (mono, sub)


def _families(seed):
    rng = stream(seed, "families")
    K, per = 3, 3
    g = GroundSet.grid(K, per)
    n = g.n
    cov = WeightedCoverage(rng.uniform(0, 1, 5), [np.flatnonzero(rng.random(5) < 0.4) for _ in range(n)])
    sep = SeparablePositional(rng.uniform(0, 1, n))
    users = [(np.flatnonzero(rng.random(n) < 0.4), float(rng.uniform(0, 1))) for _ in range(4)]
    conc = [ConcaveOverIntersection(n, users, name) for name in ("min1", "linear", "sqrt", "log1p")]
    blogs = WeightedCoverage(rng.uniform(0, 1, 4), [np.flatnonzero(rng.random(4) < 0.5) for _ in range(per)])
    disc = DiscountedPositional(g, np.arange(n) % per, blogs, gamma=float(rng.uniform(0.1, 0.95)))
    return g, [cov, sep, *conc, disc, SumOracle([cov, disc])]


@pytest.mark.parametrize("seed", range(100))
def test_builtin_families_are_monotone_submodular(seed):
    g, fams = _families(seed)
    for f in fams:
        rep = check_monotone_submodular(f, g)
        assert rep.monotone and rep.submodular, (type(f).__name__, rep.witness)
        assert f(frozenset()) >= 0


@pytest.mark.parametrize("seed", range(5))
def test_batch_matches_scalar(seed):
    g, fams = _families(seed)
    masks = all_subset_masks(g.n)[:: 7]
    for f in fams:
        direct = [f.value(frozenset(np.flatnonzero(m).tolist())) for m in masks]
        np.testing.assert_allclose(f.batch(masks), direct, atol=1e-12)


def test_value_bound_is_max_singleton():
    f = WeightedCoverage([1.0, 2.0, 0.5], [[0, 1], [1], [2]])
    assert f.value_bound == pytest.approx(3.0)
    assert f.max_value == pytest.approx(3.5)


@pytest.mark.parametrize("bad", [dict(weights=[-1.0], covers=[[0]]), dict(weights=[1.0], covers=[[3]])])
def test_coverage_rejects_bad_input(bad):
    with pytest.raises(InvalidInput):
        WeightedCoverage(**bad)


# discounted positional -----------------------------------------------------------


def test_discounted_cardinality_two_slots():
    g = GroundSet([[0], [1]])
    card = Cardinality(2)
    assert discounted_positional_value(g, [0, 1], card, 0.8, {0, 1}) == pytest.approx(0.8 + 0.64)
    assert discounted_positional_value(g, [0, 1], card, 0.8, set()) == 0.0


def test_discounted_duplicate_blog_adds_nothing():
    g = GroundSet([[0], [1]])
    cov = WeightedCoverage([0.3, 0.7], [[0, 1]])
    v = discounted_positional_value(g, [0, 0], cov, 0.8, {0, 1})
    assert v == pytest.approx(0.8 * cov({0}))


def test_discounted_two_by_two_is_submodular():
    g = GroundSet([[0, 1], [2, 3]])
    cov = WeightedCoverage([1.0, 1.0, 1.0], [[0, 1], [1, 2]])
    f = DiscountedPositional(g, [0, 1, 0, 1], cov, 0.8)
    rep = check_monotone_submodular(f, g)
    assert rep.monotone and rep.submodular


def test_discounted_oracle_matches_formula():
    g, cov = random_coverage(3, K=3, per=2)
    blogs = WeightedCoverage(np.ones(4), [[0, 1], [2], [1, 3]])
    blog_of = [0, 1, 2, 0, 1, 2]
    f = DiscountedPositional(g, blog_of, blogs, 0.8)
    for s in g.feasible_sets():
        assert f(s) == pytest.approx(discounted_positional_value(g, blog_of, blogs, 0.8, s), abs=1e-12)


def test_discounted_rejects_infeasible_and_bad_gamma():
    g = GroundSet([[0, 1]])
    card = Cardinality(2)
    with pytest.raises(InvalidInput):
        discounted_positional_value(g, [0, 1], card, 0.8, {0, 1})
    with pytest.raises(InvalidInput):
        discounted_positional_value(g, [0, 1], card, 1.0, {0})


# brute force -----------------------------------------------------------------------


def test_brute_force_alice_bob(alice_bob):
    s, v = brute_force_opt(alice_bob.oracle, alice_bob.ground)
    assert s == frozenset({0, 3})
    assert v == pytest.approx(1.0, abs=1e-12)


def test_brute_force_modular_same_partition():
    g = GroundSet([[0, 1]])
    s, v = brute_force_opt(SeparablePositional([3.0, 1.0]), g)
    assert s == {0} and v == 3.0


@pytest.mark.parametrize("seed", range(10))
def test_brute_force_matches_independent_enumeration(seed):
    g, f = random_coverage(seed, K=2, per=3)
    sets = [frozenset(x for x in combo if x is not None)
            for combo in itertools.product([None, 0, 1, 2], [None, 3, 4, 5])]
    assert len(sets) == 16
    best = max(f(s) for s in sets)
    assert brute_force_opt(f, g)[1] == pytest.approx(best, abs=1e-12)


def test_brute_force_tie_break_lexicographic():
    g = GroundSet([[0, 1], [2, 3]])
    f = SeparablePositional([1.0, 1.0, 1.0, 1.0])
    assert brute_force_opt(f, g)[0] == frozenset({0, 2})


def test_brute_force_cap():
    with pytest.raises(CapExceeded):
        brute_force_opt(SeparablePositional(np.ones(40)), GroundSet.grid(4, 10), cap=1000)


# property tests --------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_monotone_along_random_chains(seed, data):
    g, fams = _families(seed % 50)
    perm = data.draw(st.permutations(range(g.n)))
    for f in fams:
        chain, prev = set(), f(frozenset())
        for x in perm:
            chain.add(x)
            cur = f(chain)
            assert cur >= prev - 1e-9
            prev = cur


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.integers(0, 5), max_size=3), min_size=1, max_size=4))
def test_sets_to_masks_roundtrip(sets):
    masks = sets_to_masks(sets, 6)
    for row, s in zip(masks, sets):
        assert set(np.flatnonzero(row).tolist()) == set(s)
