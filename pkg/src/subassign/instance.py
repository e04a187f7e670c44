"""Plain-text instance files.

Grammar (version 1).  Blank lines and text after ``#`` are ignored; every
other line is whitespace-separated tokens::

    K n                      header: positions and item count
    id partition             n lines, ids 0..n-1, partitions 0..K-1
    objective <family> [p]   one objective block, family-specific lines follow
    matroid <kind> [r]       optional; defaults to the partition matroid

Objective families and their lines:

``objective coverage``
    ``weight e w`` (element ``e`` has weight ``w >= 0``) and
    ``cover id e1 e2 ...``.
``objective separable``
    ``value id v``.
``objective concave <min1|linear|sqrt|log1p>``
    ``user w id1 id2 ...`` (one user, weight ``w``, items it responds to).
``objective discounted <gamma>``
    ``weight e w``, ``bcover b e1 e2 ...`` (elements covered by blog ``b``)
    and ``blog id b`` (item ``id`` shows blog ``b``).

Matroid kinds: ``partition``, ``uniform r`` and ``explicit`` followed by
``basis id1 id2 ...`` lines listing the maximal independent sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .core import (CONCAVE, ConcaveOverIntersection, DiscountedPositional, GroundSet, InvalidInput,
                   SeparablePositional, ValueOracle, WeightedCoverage)
from .matroid import ExplicitMatroid, Matroid, PartitionMatroid, UniformMatroid

FORMAT_VERSION = 1


class ParseError(InvalidInput):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class Instance:
    ground: GroundSet
    oracle: ValueOracle
    matroid: Matroid
    family: str


def _lines(text: str):
    for i, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if toks:
            yield i, toks


def _num(tok, lineno, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(lineno, f"expected {kind.__name__}, got {tok!r}") from None


def parse_instance(text: str) -> Instance:
    lines = list(_lines(text))
    if not lines:
        raise ParseError(1, "empty instance")
    lineno, head = lines[0]
    if len(head) != 2:
        raise ParseError(lineno, "header must be 'K n'")
    K, n = _num(head[0], lineno, int), _num(head[1], lineno, int)
    if K < 1 or n < 0:
        raise ParseError(lineno, "need K >= 1 and n >= 0")
    if len(lines) < 1 + n:
        raise ParseError(lines[-1][0], f"expected {n} item lines")
    parts: list[list[int]] = [[] for _ in range(K)]
    seen = set()
    for lineno, toks in lines[1:1 + n]:
        if len(toks) != 2:
            raise ParseError(lineno, "item line must be 'id partition'")
        i, k = _num(toks[0], lineno, int), _num(toks[1], lineno, int)
        if not 0 <= i < n or i in seen:
            raise ParseError(lineno, f"item id {i} out of range or repeated")
        if not 0 <= k < K:
            raise ParseError(lineno, f"partition {k} out of range")
        seen.add(i)
        parts[k].append(i)
    ground = GroundSet(parts)

    def item(tok, ln):
        i = _num(tok, ln, int)
        if not 0 <= i < n:
            raise ParseError(ln, f"unknown item id {i}")
        return i

    family = None
    fparam = None
    obj_start = None
    mat_kind, mat_param, mat_line = "partition", None, None
    weights: dict[int, float] = {}
    covers: dict[int, list[int]] = {}
    values: dict[int, float] = {}
    users: list = []
    bcovers: dict[int, list[int]] = {}
    blog_of: dict[int, int] = {}
    bases: list = []
    section = None
    for lineno, toks in lines[1 + n:]:
        kw, args = toks[0], toks[1:]
        try:
            if kw == "objective":
                if family is not None:
                    raise ParseError(lineno, "only one objective block allowed")
                if not args:
                    raise ParseError(lineno, "objective needs a family")
                family, obj_start, section = args[0], lineno, "objective"
                if family in ("concave", "discounted"):
                    if len(args) != 2:
                        raise ParseError(lineno, f"objective {family} needs one parameter")
                    fparam = args[1] if family == "concave" else _num(args[1], lineno)
                elif family in ("coverage", "separable"):
                    if len(args) != 1:
                        raise ParseError(lineno, f"objective {family} takes no parameter")
                else:
                    raise ParseError(lineno, f"unknown objective family {family!r}")
            elif kw == "matroid":
                if mat_line is not None:
                    raise ParseError(lineno, "only one matroid block allowed")
                if not args or args[0] not in ("partition", "uniform", "explicit"):
                    raise ParseError(lineno, "matroid kind must be partition, uniform or explicit")
                mat_kind, mat_line, section = args[0], lineno, "matroid"
                if mat_kind == "uniform":
                    if len(args) != 2:
                        raise ParseError(lineno, "uniform matroid needs a rank")
                    mat_param = _num(args[1], lineno, int)
            elif kw == "basis":
                if section != "matroid" or mat_kind != "explicit":
                    raise ParseError(lineno, "basis lines belong to an explicit matroid block")
                bases.append([item(t, lineno) for t in args])
            elif section != "objective":
                raise ParseError(lineno, f"unexpected line {kw!r}")
            elif kw == "weight" and family in ("coverage", "discounted"):
                if len(args) != 2:
                    raise ParseError(lineno, "weight line must be 'weight e w'")
                e, w = _num(args[0], lineno, int), _num(args[1], lineno)
                if e < 0 or w < 0:
                    raise ParseError(lineno, "element ids and weights must be non-negative")
                weights[e] = w
            elif kw == "cover" and family == "coverage":
                if not args:
                    raise ParseError(lineno, "cover line needs an item id")
                covers.setdefault(item(args[0], lineno), []).extend(_num(t, lineno, int) for t in args[1:])
            elif kw == "value" and family == "separable":
                if len(args) != 2:
                    raise ParseError(lineno, "value line must be 'value id v'")
                values[item(args[0], lineno)] = _num(args[1], lineno)
            elif kw == "user" and family == "concave":
                if not args:
                    raise ParseError(lineno, "user line needs a weight")
                users.append(([item(t, lineno) for t in args[1:]], _num(args[0], lineno)))
            elif kw == "bcover" and family == "discounted":
                if not args:
                    raise ParseError(lineno, "bcover line needs a blog id")
                bcovers.setdefault(_num(args[0], lineno, int), []).extend(_num(t, lineno, int) for t in args[1:])
            elif kw == "blog" and family == "discounted":
                if len(args) != 2:
                    raise ParseError(lineno, "blog line must be 'blog id b'")
                blog_of[item(args[0], lineno)] = _num(args[1], lineno, int)
            else:
                raise ParseError(lineno, f"unexpected {kw!r} in objective {family}")
        except ParseError:
            raise
        except InvalidInput as exc:
            raise ParseError(lineno, str(exc)) from None

    if family is None:
        raise ParseError(lines[-1][0], "missing objective block")
    try:
        if family == "coverage":
            m = max([max(weights, default=-1)] + [max(c, default=-1) for c in covers.values()]) + 1
            w = [weights.get(e, 0.0) for e in range(m)]
            oracle = WeightedCoverage(w, [covers.get(i, []) for i in range(n)])
        elif family == "separable":
            oracle = SeparablePositional([values.get(i, 0.0) for i in range(n)])
        elif family == "concave":
            if fparam not in CONCAVE:
                raise InvalidInput(f"unknown concave function {fparam!r}")
            oracle = ConcaveOverIntersection(n, users, fparam)
        else:
            missing = [i for i in range(n) if i not in blog_of]
            if missing:
                raise InvalidInput(f"items {missing} have no blog line")
            nb = max(max(blog_of.values(), default=-1), max(bcovers, default=-1)) + 1
            m = max([max(weights, default=-1)] + [max(c, default=-1) for c in bcovers.values()]) + 1
            inner = WeightedCoverage([weights.get(e, 0.0) for e in range(m)], [bcovers.get(b, []) for b in range(nb)])
            oracle = DiscountedPositional(ground, [blog_of[i] for i in range(n)], inner, fparam)
    except InvalidInput as exc:
        raise ParseError(obj_start, str(exc)) from None

    if mat_kind == "partition":
        matroid: Matroid = PartitionMatroid(ground)
    elif mat_kind == "uniform":
        matroid = UniformMatroid(n, mat_param)
    else:
        if not bases:
            raise ParseError(mat_line, "explicit matroid needs basis lines")
        matroid = ExplicitMatroid(n, bases)
    return Instance(ground, oracle, matroid, family)


def load_instance(path) -> Instance:
    return parse_instance(Path(path).read_text())


ALICE_BOB = """\
# two positions, two ads; Alice (weight 0.45) only clicks ad 1 in the top slot,
# Bob (weight 0.55) clicks ad 2 anywhere
2 4
0 0   # ad1 @ position 1
1 0   # ad2 @ position 1
2 1   # ad1 @ position 2
3 1   # ad2 @ position 2
objective coverage
weight 0 0.45
weight 1 0.55
cover 0 0
cover 1 1
cover 2
cover 3 1
"""
