"""Command-line front end: ``subassign <subcommand> ...``.

Every randomized subcommand requires ``--seed``.  CSV traces go to ``--out``
(default: standard output); the human-readable summary goes to standard
output, or to standard error when the CSV occupies standard output.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import nullcontext

import numpy as np

from . import harness
from .core import CapExceeded, InvalidInput, brute_force_opt, check_monotone_submodular
from .instance import ALICE_BOB, Instance, load_instance, parse_instance
from .matroid import PartitionMatroid, brute_force_matroid_opt, check_matroid_axioms
from .offline import beta, color_averaged_value, locally_greedy, tabular_greedy
from .online import ocg_offline_solve
from .rng import Streams

BUILTINS = {"alicebob": ALICE_BOB}
ONE_MINUS_INV_E = 1.0 - 1.0 / math.e


# argument types ----------------------------------------------------------------


def _bounded(kind, lo=None, hi=None, lo_open=False, hi_open=False, name="value"):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {name}: {text!r}") from None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            raise argparse.ArgumentTypeError(f"{name} must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and (v > hi or (hi_open and v == hi)):
            raise argparse.ArgumentTypeError(f"{name} must be {'<' if hi_open else '<='} {hi}")
        return v
    return conv


positive_int = _bounded(int, 1, name="count")
probability = _bounded(float, 0.0, 1.0, name="probability")


def delta_type(text):
    d = _bounded(float, 0.0, 1.0, lo_open=True, name="delta")(text)
    m = round(1.0 / d)
    if abs(m * d - 1.0) > 1e-9:
        raise argparse.ArgumentTypeError("delta must be 1/m for a positive integer m")
    return 1.0 / m


def seed_type(text):
    s = _bounded(int, 0, 2**64 - 1, name="seed")(text)
    return s


# helpers -----------------------------------------------------------------------


def _instance(args) -> Instance:
    if args.builtin:
        return parse_instance(BUILTINS[args.builtin])
    return load_instance(args.instance)


def _add_instance(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--instance", help="instance file (see the instance grammar in the README)")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="bundled example instance")


def _fmt(x) -> str:
    return format(float(x), ".6g")


class _Out:
    """CSV destination plus the stream the summary should use."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            self.csv, self.summary = sys.stdout, sys.stderr
            self._ctx = nullcontext()
        else:
            self._ctx = open(self.path, "w", newline="")
            self.csv, self.summary = self._ctx, sys.stdout
        return self

    def __exit__(self, *exc):
        if self.path not in (None, "-"):
            self._ctx.close()


def _opt_or_none(oracle, ground, cap=10**6):
    try:
        return brute_force_opt(oracle, ground, cap)
    except CapExceeded:
        return None


# subcommands -------------------------------------------------------------------


def cmd_offline(args) -> int:
    inst = _instance(args)
    ground, f = inst.ground, inst.oracle
    rng = Streams(args.seed)("offline")
    out = sys.stdout
    if args.algo == "local":
        s = locally_greedy(ground, f)
        print("algorithm: locally greedy", file=out)
        print(f"assignment: {sorted(s)}", file=out)
        print(f"value: {_fmt(f(s))}", file=out)
        bound_factor = 0.5
        print("bound: f(S) >= 0.5 * OPT", file=out)
    else:
        table, s = tabular_greedy(ground, f, args.colors, rng, estimator=args.estimator, rho=args.rho)
        print(f"algorithm: tabular greedy, C = {args.colors}", file=out)
        print("table: " + " ".join(f"({k},{c})->{x}" for (k, c), x in sorted(table.cells.items())), file=out)
        print(f"assignment: {sorted(s)}", file=out)
        print(f"value: {_fmt(f(s))}", file=out)
        try:
            F = color_averaged_value(f, ground, table.pairs(), args.colors, "exact")
            print(f"expected value over colors: {_fmt(F)}", file=out)
        except CapExceeded:
            pass
        bound_factor = beta(ground.K, args.colors)
        print(f"bound: E f(S) >= beta(K={ground.K}, C={args.colors}) * OPT = {_fmt(bound_factor)} * OPT", file=out)
        if args.colors == 1:
            # C = 1 replays locally greedy, which carries the stronger factor 1/2
            bound_factor = 0.5
            print("bound: C = 1 coincides with locally greedy, f(S) >= 0.5 * OPT", file=out)
    opt = _opt_or_none(f, ground)
    if opt is not None:
        print(f"OPT: {_fmt(opt[1])} at {sorted(opt[0])}", file=out)
        print(f"bound value: {_fmt(bound_factor * opt[1])}", file=out)
    else:
        print("OPT: unavailable (feasible family exceeds brute-force cap)", file=out)
    return 0


def _stream_from_args(args):
    if args.blog_stream:
        st = harness.synthetic_blog_stream(args.seed, args.rounds, universe=args.universe, blogs=args.blogs,
                                           positions=args.positions, gamma=args.gamma)
        return st.ground, st, PartitionMatroid(st.ground), st.reward_bound
    inst = _instance(args)
    return inst.ground, harness.StationaryStream(inst.oracle, args.rounds), inst.matroid, inst.oracle.max_value


def _add_stream(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--instance", help="stationary stream f_t = f from an instance file")
    g.add_argument("--builtin", choices=sorted(BUILTINS))
    g.add_argument("--blog-stream", action="store_true", help="synthetic discounted blog-coverage stream")
    p.add_argument("--universe", type=positive_int, default=30, help="cascades per day (blog stream)")
    p.add_argument("--blogs", type=positive_int, default=8)
    p.add_argument("--positions", type=positive_int, default=5)
    p.add_argument("--gamma", type=_bounded(float, 0.0, 1.0, True, True, "gamma"), default=0.8)


def cmd_tg_online(args) -> int:
    ground, stream, _, bound = _stream_from_args(args)
    trace = harness.run_tg_online(ground, stream, args.colors, args.seed, feedback=args.feedback,
                                  explore=args.explore, reward_bound=bound)
    with _Out(args.out) as o:
        harness.write_traces([trace], o.csv)
        T = len(trace.rewards)
        reg = trace.regret()[-1]
        print(f"rounds: {T}  colors: {args.colors}  feedback: {args.feedback}", file=o.summary)
        print(f"cumulative reward: {_fmt(trace.total)}  mean per round: {_fmt(trace.total / T)}", file=o.summary)
        kind = "exact comparator" if trace.exact_comparator else "locally greedy proxy comparator"
        print(f"(1-1/e)-regret: {_fmt(reg)}  per round: {_fmt(reg / T)}  ({kind})", file=o.summary)
        print(f"bound: E sum f_t(G_t) >= beta(K={ground.K}, C={args.colors}) * max_S sum f_t(S) - E[R], "
              f"beta = {_fmt(beta(ground.K, args.colors))}", file=o.summary)
    return 0


def cmd_ocg(args) -> int:
    ground, stream, matroid, _ = _stream_from_args(args)
    g = max(stream[t].value_bound for t in range(len(stream)))
    from .matroid import independent_sets
    try:
        cands = independent_sets(matroid)
    except CapExceeded:
        cands = None
    trace = harness.run_ocg(matroid, stream, args.delta, args.seed, value_bound=g, candidates=cands)
    d = matroid.rank()
    with _Out(args.out) as o:
        harness.write_traces([trace], o.csv)
        T = len(trace.rewards)
        print(f"rounds: {T}  delta: {_fmt(args.delta)}  rank d: {d}", file=o.summary)
        print(f"cumulative reward: {_fmt(trace.total)}  mean per round: {_fmt(trace.total / T)}", file=o.summary)
        if cands is not None:
            reg = trace.regret()[-1]
            print(f"(1-1/e)-regret: {_fmt(reg)}  per round: {_fmt(reg / T)}", file=o.summary)
        factor = ONE_MINUS_INV_E - d * args.delta
        print(f"bound: E sum f_t(S_t) >= (1 - 1/e - d*delta) * max_S sum f_t(S) - E[R], "
              f"factor = {_fmt(factor)}", file=o.summary)
    return 0


def cmd_ocg_offline(args) -> int:
    inst = _instance(args)
    f, m = inst.oracle, inst.matroid
    try:
        best = brute_force_matroid_opt(f, m)
    except CapExceeded:
        best = None
    opt = args.opt if args.opt is not None else (best[1] if best else None)
    if args.rounds is None and not opt:
        print("error: need --rounds or --opt (brute force unavailable)", file=sys.stderr)
        return 2
    s = ocg_offline_solve(f, m, args.epsilon, args.seed, rounds=args.rounds, opt=opt)
    print(f"assignment: {sorted(s)}")
    print(f"value: {_fmt(f(s))}")
    if best is not None:
        print(f"OPT: {_fmt(best[1])} at {sorted(best[0])}")
    factor = ONE_MINUS_INV_E - args.epsilon
    print(f"bound: E f(S) >= (1 - 1/e - eps) * OPT, factor = {_fmt(factor)}")
    return 0


def _ad_trial(positions, ads, algo, rounds, seed, colors, explore):
    model = harness.AdModel.default(positions, ads)
    return harness.run_ad_sim(model, algo, rounds, seed, colors=colors, explore=explore)


def cmd_ad_sim(args) -> int:
    model = harness.AdModel.default(args.positions, args.ads)
    _, opt = harness.ad_model_opt(model)
    jobs, labels = [], []
    for algo in args.algo:
        for i in range(args.trials):
            jobs.append((args.positions, args.ads, algo, args.rounds, harness.trial_seed(args.seed, i),
                         args.colors, args.explore))
            labels.append({"algo": algo, "trial": i})
    traces = harness.run_trials(_ad_trial, jobs, args.workers)
    with _Out(args.out) as o:
        harness.write_traces(traces, o.csv, labels)
        print(f"positions: {args.positions}  ads: {args.ads}  rounds: {args.rounds}  trials: {args.trials}  "
              f"colors: {args.colors}", file=o.summary)
        print(f"expected-click optimum per round: {_fmt(opt)}", file=o.summary)
        print("algo,mean_cum_reward,std_cum_reward", file=o.summary)
        for algo in args.algo:
            totals = np.array([tr.total for tr, lab in zip(traces, labels) if lab["algo"] == algo])
            sd = totals.std(ddof=1) if len(totals) > 1 else 0.0
            print(f"{algo},{_fmt(totals.mean())},{_fmt(sd)}", file=o.summary)
        K = args.positions
        print(f"bound (tg): E reward >= beta(K={K}, C={args.colors}) * optimum - E[R], "
              f"beta = {_fmt(beta(K, args.colors))}", file=o.summary)
    return 0


def cmd_check(args) -> int:
    inst = _instance(args)
    ok = True
    try:
        rep = check_monotone_submodular(inst.oracle, inst.ground, cap=args.cap)
        print(f"monotone: {rep.monotone}  submodular: {rep.submodular}")
        if rep.witness:
            print(f"witness: {rep.witness}")
        ok &= rep.monotone and rep.submodular
    except CapExceeded as exc:
        print(f"objective check skipped: {exc}")
    try:
        good, msg = check_matroid_axioms(inst.matroid, cap=args.cap)
        print(f"matroid axioms: {good}" + (f"  ({msg})" if msg else ""))
        ok &= good
    except CapExceeded as exc:
        print(f"matroid check skipped: {exc}")
    return 0 if ok else 1


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subassign", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("offline", help="locally greedy or tabular greedy on one instance")
    _add_instance(q)
    q.add_argument("--algo", choices=["tabular", "local"], default="tabular")
    q.add_argument("--colors", type=positive_int, default=1)
    q.add_argument("--estimator", choices=["exact", "sampled"], default="exact")
    q.add_argument("--rho", type=positive_int, default=1000)
    q.add_argument("--seed", type=seed_type, required=True)
    q.set_defaults(func=cmd_offline)

    q = sub.add_parser("tg-online", help="TGonline on a stream, CSV trace")
    _add_stream(q)
    q.add_argument("--colors", type=positive_int, default=1)
    q.add_argument("--rounds", type=positive_int, required=True)
    q.add_argument("--feedback", choices=["full", "bandit"], default="full")
    q.add_argument("--explore", type=probability, default=None, help="bandit exploration probability")
    q.add_argument("--seed", type=seed_type, required=True)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_tg_online)

    q = sub.add_parser("ocg", help="online continuous greedy on a stream, CSV trace")
    _add_stream(q)
    q.add_argument("--delta", type=delta_type, required=True)
    q.add_argument("--rounds", type=positive_int, required=True)
    q.add_argument("--seed", type=seed_type, required=True)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_ocg)

    q = sub.add_parser("ocg-offline", help="offline maximisation over a matroid via online continuous greedy")
    _add_instance(q)
    q.add_argument("--epsilon", type=_bounded(float, 0.0, ONE_MINUS_INV_E, True, True, "epsilon"), required=True)
    q.add_argument("--rounds", type=positive_int, default=None)
    q.add_argument("--opt", type=_bounded(float, 0.0, lo_open=True, name="opt"), default=None)
    q.add_argument("--seed", type=seed_type, required=True)
    q.set_defaults(func=cmd_ocg_offline)

    q = sub.add_parser("ad-sim", help="ad display simulation with bandit feedback")
    q.add_argument("--positions", type=positive_int, default=5)
    q.add_argument("--ads", type=_bounded(int, 2, name="ads"), default=20)
    q.add_argument("--rounds", type=positive_int, required=True)
    q.add_argument("--algo", nargs="+", choices=["tg", "random", "fixed"], default=["tg"])
    q.add_argument("--colors", type=positive_int, default=1)
    q.add_argument("--explore", type=probability, default=None)
    q.add_argument("--trials", type=positive_int, default=1)
    q.add_argument("--workers", type=positive_int, default=1)
    q.add_argument("--seed", type=seed_type, required=True)
    q.add_argument("--out", default="-")
    q.set_defaults(func=cmd_ad_sim)

    q = sub.add_parser("check", help="brute-force validation of an instance's objective and matroid")
    _add_instance(q)
    q.add_argument("--cap", type=positive_int, default=14)
    q.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
