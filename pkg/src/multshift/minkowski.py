"""Exact prefix counts and the Minkowski dimension series."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

from .entropy import series_2d, series_tail
from .errors import DepthExceeded
from .fixedpoint import DimValue
from .schedule import ParamSchedule, build_schedule, delta
from .system import SystemSpec, check_shape, column_path, compile_system


class CountTable:
    """Memoised exact counts of admissible continuations.

    ``count(key, path)`` is the number of admissible ways to reveal the
    coordinates listed in ``path`` after a prefix with follower key ``key``;
    it equals the sum of the counts of the children.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.sys = compile_system(spec)
        self._memo = {}

    def count(self, key, path: tuple) -> int:
        if not path:
            return 1
        hit = self._memo.get((key, path))
        if hit is not None:
            return hit
        rest = path[1:]
        total = sum(self.count(child, rest) for _, child in self.sys.extend(key, path[0]))
        self._memo[(key, path)] = total
        return total

    def prefix_count(self, shape) -> int:
        shape = check_shape(shape, self.spec.d)
        return self.count(self.sys.root_key(), tuple(column_path(shape)))


def prefix_count(spec: SystemSpec, shape) -> int:
    """Number of admissible staircase prefixes of the given shape (exact).

    Full tuples are counted over automaton states.  In the staircase tail a
    position only fixes some coordinates, so the count is carried over the
    set of states still reachable (a subset construction); long tails then
    stay polynomial instead of growing with the number of tail words.
    """
    shape = check_shape(shape, spec.d)
    sys_ = compile_system(spec)
    dist = {sys_.start: 1}
    for _ in range(shape[0]):
        nxt = {}
        for s, w in dist.items():
            for a in sys_.alphabet:
                s2 = sys_.step(s, a)
                if s2 is not None:
                    nxt[s2] = nxt.get(s2, 0) + w
        dist = nxt
    sets = {}
    for s, w in dist.items():
        sets[frozenset((s,))] = sets.get(frozenset((s,)), 0) + w
    d = spec.d
    for k in range(shape[0] + 1, shape[-1] + 1):
        c0 = sum(1 for n in shape if n < k)
        heads = list(itertools.product(*(range(b) for b in spec.m[:c0])))
        tails = list(itertools.product(*(range(b) for b in spec.m[c0:d])))
        nxt = {}
        for states, w in sets.items():
            for pt in tails:
                reach = set()
                for s in states:
                    for h in heads:
                        s2 = sys_.step(s, h + pt)
                        if s2 is not None:
                            reach.add(s2)
                if reach:
                    key = frozenset(reach)
                    nxt[key] = nxt.get(key, 0) + w
        sets = nxt
    return sum(sets.values())


def _int_log(n: int) -> float:
    b = n.bit_length()
    if b < 1000:
        return math.log(n)
    shift = b - 60
    return math.log(n >> shift) + shift * math.log(2)


def minkowski_dimension(spec: SystemSpec, schedule: Optional[ParamSchedule] = None,
                        terms: int = 40) -> DimValue:
    """Log-count series for the Minkowski dimension with a certified tail.

    For a truncated explicit tree the series stops at the deepest available
    index and the tail bound starts there.
    """
    schedule = schedule or build_schedule(spec, warn=False)
    P = max(terms, schedule.p[1] + 1)
    lnb = math.log(spec.m[-1])
    rows = []
    last = 0
    try:
        for p in range(1, P + 1):
            block = []
            for pp, s, t in schedule.terms(p)[len(rows):]:
                shape = schedule.piece_shape(s, t, pp)
                lc = _int_log(prefix_count(spec, shape)) / lnb
                c = delta(schedule, s, t, pp)
                block.append({"p": pp, "s": s, "t": t, "delta": c, "shape": list(shape),
                              "log_count": lc, "contribution": c * lc})
            rows.extend(block)
            last = p
    except DepthExceeded:
        pass
    value = math.fsum(r["contribution"] for r in rows)
    if last >= schedule.p[1] + 1:
        tail = series_tail(spec, last)
    else:
        # unfinished early blocks: bound every missing weight by the full-shift value
        tail = series_tail(spec, schedule.p[1] + 1) + _early_tail(spec, schedule, last)
    upper = min(value + tail, float(spec.d))
    return DimValue(value, value, upper, {"terms": last, "tail": tail, "rows": rows})


def _early_tail(spec, schedule, last):
    C = sum(math.log(b) for b in spec.m) / math.log(spec.m[-1])
    out = 0.0
    for p, s, t in schedule.terms(schedule.p[1] + 1):
        if p > last:
            out += delta(schedule, s, t, p) * p * C
    return out


def minkowski_2d(spec: SystemSpec, terms: int = 40) -> float:
    """Two-dimensional three-family log-count series."""
    lnb = math.log(spec.m[-1])
    return series_2d(spec, lambda sh: _int_log(prefix_count(spec, sh)) / lnb, terms)


# ---------------------------------------------------------------------------
# Equality conditions


@dataclass
class EqualityReport:
    spherically_symmetric: bool
    x_count_independent_of_y: bool
    y_branching_constant: bool
    x_count_independent_of_past: bool
    depth: int
    exact: bool
    details: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return (self.spherically_symmetric and self.x_count_independent_of_y
                and self.y_branching_constant and self.x_count_independent_of_past)

    def as_dict(self) -> dict:
        return {"spherically_symmetric": self.spherically_symmetric,
                "x_count_independent_of_y": self.x_count_independent_of_y,
                "y_branching_constant": self.y_branching_constant,
                "x_count_independent_of_past": self.x_count_independent_of_past,
                "all_hold": self.all_hold, "depth": self.depth, "exact": self.exact,
                "details": self.details}


def _keys_along(sys_, start_keys, path):
    levels = [set(start_keys)]
    for c in path:
        nxt = set()
        for key in levels[-1]:
            nxt.update(k for _, k in sys_.extend(key, c))
        levels.append(nxt)
    return levels


def equality_conditions(spec: SystemSpec, schedule: Optional[ParamSchedule] = None,
                        depth: int = 8) -> EqualityReport:
    """The four conditions under which Hausdorff and Minkowski dimensions agree (d = 2).

    1. the tree of prefixes (k full tuples then j extra y digits) is
       spherically symmetric;
    2. the number of x_1 completing y_1..y_{j+1} does not depend on the y word;
    3. for p <= j the number of y_{p+1} extending y_1..y_p does not depend on it;
    4. for p >= 2 the number of x_p completing a prefix with p-1 full tuples
       and the y digits through p+j does not depend on that prefix.
    Each is checked for all prefixes up to ``depth`` full tuples; follower keys
    make the check exact once ``depth`` exceeds the number of keys.
    """
    if spec.d != 2:
        raise ValueError("equality conditions are two-dimensional")
    schedule = schedule or build_schedule(spec, warn=False)
    j = schedule.j[2]
    sys_ = compile_system(spec)
    root = sys_.root_key()
    details = {}

    # keys of y-only prefixes of length 0..j+1
    ylevels = _keys_along(sys_, [root], [1] * (j + 1))

    def counts(keys, c):
        return sorted({len(sys_.extend(k, c)) for k in keys})

    cond3 = []
    for p in range(1, j + 1):
        cond3.append(counts(ylevels[p], 1))
    details["y_branching"] = cond3
    c3 = all(len(v) <= 1 for v in cond3)

    c2_counts = counts(ylevels[j + 1], 0)
    details["x1_counts"] = c2_counts
    c2 = len(c2_counts) <= 1

    # vertices with k full tuples and j extra y digits; a tree edge adds one y then one x
    vertex_keys = set()
    for key in ylevels[j + 1]:
        vertex_keys.update(k for _, k in sys_.extend(key, 0))
    levels = [vertex_keys]
    for _ in range(depth - 1):
        nxt = set()
        for key in levels[-1]:
            for _, mid in sys_.extend(key, 1):
                nxt.update(k for _, k in sys_.extend(mid, 0))
        levels.append(nxt)
    sym = []
    c4 = []
    for lev in levels:
        branch = set()
        xcounts = set()
        for key in lev:
            total = 0
            for _, mid in sys_.extend(key, 1):
                n = len(sys_.extend(mid, 0))
                total += n
                xcounts.add(n)
            branch.add(total)
        sym.append(sorted(branch))
        c4.append(sorted(xcounts))
    details["branching"] = sym
    details["x_counts"] = c4
    c1 = all(len(v) <= 1 for v in sym)
    c4ok = all(len(v) <= 1 for v in c4)
    # once a level brings no new key, every later level repeats known keys
    exact = any(not (lev - set().union(*levels[:k])) for k, lev in enumerate(levels) if k > 0)
    return EqualityReport(c1, c2, c3, c4ok, depth, exact, details)
