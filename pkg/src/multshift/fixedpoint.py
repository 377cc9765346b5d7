"""Nonlinear fixed-point systems on trees of prefixes.

Vertices of the tree are staircase prefixes at chain levels N, N+d, ...
(see ``ParamSchedule.chi``).  Each vertex u carries a value t_u with

    t_u^E = sum_{a_1} ( sum_{a_2} ( ... ( sum_{a_d} t_{u a_1..a_d} )^{e_{d-1}} ... )^{e_1}

where the a_r run over the admissible next digits in reveal order.  The map
is monotone and homogeneous of degree 1/q, hence a 1/q-contraction for the
sup-norm of log t.  Vertices with equal follower keys carry equal values,
so the system is solved on the finite key quotient.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import mpmath

from .errors import DepthExceeded, EmptyOmega, NonContracting
from .schedule import ParamSchedule, build_schedule, omega_weights
from .system import SystemSpec, compile_system


@dataclass(frozen=True)
class DimValue:
    value: float
    lower: float
    upper: float
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper, "meta": self.meta}


def _lse(xs) -> float:
    hi = max(xs)
    if hi == -math.inf:
        return -math.inf
    return hi + math.log(math.fsum(math.exp(x - hi) for x in xs))


def _lse_mp(xs):
    hi = max(xs)
    return hi + mpmath.log(mpmath.fsum(mpmath.exp(x - hi) for x in xs))


class ChainTree:
    """Finite DAG of follower keys between consecutive tree levels.

    ``root[i]`` maps each key at chain level i (0..N-1) to its child keys;
    ``block[r]`` does the same inside a block, r = 0..d-1, where level 0
    and level d are tree vertices.
    """

    def __init__(self, spec: SystemSpec, schedule: ParamSchedule):
        self.spec = spec
        self.schedule = schedule
        self.sys = compile_system(spec)
        N, d = schedule.N, spec.d
        self.N, self.d = N, d
        chi = schedule.chi(N + d)
        self.root_coords = [c - 1 for c, _ in chi[:N]]
        self.block_coords = [c - 1 for c, _ in chi[N:N + d]]
        canon = self.sys.canonical

        self.root = [dict() for _ in range(N)]
        level = {canon(self.sys.root_key())}
        for i in range(N):
            nxt = set()
            for key in level:
                kids = tuple(canon(k) for _, k in self.sys.extend(key, self.root_coords[i]))
                self.root[i][key] = kids
                nxt.update(kids)
            level = nxt
        if not level:
            raise EmptyOmega("no admissible prefix at the first tree level")
        self.first = sorted(level, key=repr)

        self.block = [dict() for _ in range(d)]
        self.cut = set()
        todo = list(level)
        self.vertices = set()
        while todo:
            v = todo.pop()
            if v in self.vertices or v in self.cut:
                continue
            try:
                leaves = self._expand_block(v)
            except DepthExceeded:
                self.cut.add(v)
                continue
            self.vertices.add(v)
            todo.extend(k for k in leaves if k not in self.vertices and k not in self.cut)
        self.order = sorted(self.vertices, key=repr) + sorted(self.cut, key=repr)
        self.index = {k: n for n, k in enumerate(self.order)}

        # exponents applied to the children of each level
        self.root_exp = [schedule.exponent(i + 1) for i in range(N)]
        self.block_exp = [schedule.exponent(N + r + 1) for r in range(d)]
        self.E = schedule.outer_exponent
        T = schedule.tail_sums(N)
        self.omega1 = T[0]
        self.cap_log = d * math.log(spec.m[-1]) / (schedule.q * T[N - 1])

    def _expand_block(self, v):
        canon = self.sys.canonical
        level = {v}
        staged = [dict() for _ in range(self.d)]
        for r in range(self.d):
            nxt = set()
            for key in level:
                if key in self.block[r] or key in staged[r]:
                    kids = self.block[r].get(key, staged[r].get(key))
                else:
                    kids = tuple(canon(k) for _, k in self.sys.extend(key, self.block_coords[r]))
                    staged[r][key] = kids
                nxt.update(kids)
            level = nxt
        for r in range(self.d):
            self.block[r].update(staged[r])
        return level

    @property
    def degree(self) -> float:
        """Homogeneity degree of one application of the map."""
        prod = 1.0
        for e in self.block_exp:
            prod *= e
        return prod / self.E

    # evaluation in log space

    def block_sums(self, logt: dict, lse=_lse, exps=None) -> dict:
        """log of the nested block sum for every vertex."""
        exps = exps or self.block_exp
        vals = logt
        for r in range(self.d - 1, -1, -1):
            e = exps[r]
            new = {}
            for key, kids in self.block[r].items():
                new[key] = lse([e * vals[k] for k in kids])
            vals = new
        return vals

    def apply(self, logt: dict, cut_value, lse=_lse, exps=None, E=None) -> dict:
        full = dict(logt)
        for k in self.cut:
            full[k] = cut_value
        sums = self.block_sums(full, lse, exps)
        E = E or self.E
        out = {v: sums[v] / E for v in self.vertices}
        for k in self.cut:
            out[k] = cut_value
        return out

    def root_value(self, logt: dict) -> float:
        """log t_empty from the values at the first tree level."""
        vals = logt
        for i in range(self.N - 1, -1, -1):
            e = self.root_exp[i]
            new = {}
            for key, kids in self.root[i].items():
                new[key] = _lse([e * vals[k] for k in kids])
            vals = new
        return vals[self.sys.canonical(self.sys.root_key())]


@dataclass
class TVector:
    values: dict
    t_empty: float
    cap: float
    log_values: dict
    log_t_empty: float
    iterations: int
    residual: float
    max_ratio: float
    log_t_empty_bracket: tuple = (None, None)
    meta: dict = field(default_factory=dict)

    @property
    def t_root_map(self) -> dict:
        """Values at the first tree level (roots of the subtrees below t_empty)."""
        return {k: self.values[k] for k in self.meta.get("first", [])}


def apply_F(spec: SystemSpec, schedule: ParamSchedule, z: dict, tree: Optional[ChainTree] = None) -> dict:
    """One application of the fixed-point map to values ``z`` (key -> t)."""
    tree = tree or ChainTree(spec, schedule)
    if tree.degree >= 1:
        raise NonContracting(f"homogeneity degree {tree.degree} >= 1")
    logz = {k: math.log(v) for k, v in z.items()}
    out = tree.apply(logz, tree.cap_log)
    return {k: math.exp(v) for k, v in out.items()}


def _iterate(tree: ChainTree, start: float, cut_value: float, tol: float, max_iter: int, q: int):
    """Picard iteration in double precision.

    Successive log-sup steps must shrink by 1/q; the check allows for the
    rounding noise of one application, which dominates once steps are tiny.
    """
    logt = {k: start for k in tree.order}
    prev = None
    ratios = []
    it = 0
    diff = math.inf
    noise = 64 * sys.float_info.epsilon * (abs(start) + 1) * (tree.d + 1)
    while it < max_iter:
        new = tree.apply(logt, cut_value)
        diff = max((abs(new[k] - logt[k]) for k in new), default=0.0)
        if prev is not None and prev > 0:
            if prev > 1e6 * noise:
                ratios.append(diff / prev)
            if diff > (1.0 / q + 1e-12) * prev + noise:
                raise NonContracting(f"contraction ratio {diff / prev} exceeds 1/q at iteration {it}")
        logt = new
        it += 1
        prev = diff
        noise = 64 * sys.float_info.epsilon * (max(abs(v) for v in new.values()) + 1) * (tree.d + 1)
        if diff <= tol * (1 - 1.0 / q):
            break
    return logt, it, diff, (max(ratios) if ratios else 0.0), ratios


def contraction_certificate(spec: SystemSpec, schedule: Optional[ParamSchedule] = None,
                            iterations: int = 40, dps: int = 50) -> dict:
    """Per-iteration contraction ratios measured in extended precision.

    Runs the map from t = 1 and from t = cap with ``dps`` significant digits
    so that rounding cannot mask or fake a ratio.  Returns the largest ratio
    seen from either start and the final gap between both runs.
    """
    schedule = schedule or build_schedule(spec, warn=False)
    tree = ChainTree(spec, schedule)
    out = {"max_ratio": 0.0, "ratios_from_one": [], "ratios_from_cap": []}
    with mpmath.workdps(dps):
        exps = [mpmath.mpf(e) for e in tree.block_exp]
        E = mpmath.mpf(tree.E)
        floor = mpmath.mpf(10) ** (-(dps - 10))
        ends = []
        for name, start in (("ratios_from_one", mpmath.mpf(0)), ("ratios_from_cap", mpmath.mpf(tree.cap_log))):
            logt = {k: start for k in tree.order}
            prev = None
            for _ in range(iterations):
                new = tree.apply(logt, start, _lse_mp, exps, E)
                diff = max(abs(new[k] - logt[k]) for k in new)
                if prev is not None and prev > floor:
                    r = float(diff / prev)
                    out[name].append(r)
                    out["max_ratio"] = max(out["max_ratio"], r)
                logt, prev = new, diff
            ends.append(logt)
        out["gap"] = float(max(abs(ends[0][k] - ends[1][k]) for k in ends[0]))
    return out


def solve_t(spec: SystemSpec, schedule: Optional[ParamSchedule] = None, tol: float = 1e-12,
            max_iter: int = 10000, check_cap: bool = True) -> TVector:
    """Solve the fixed-point system on the follower-key quotient.

    Iterates from t = 1; with ``check_cap`` also from t = cap and records the
    distance between both limits.  For a truncated explicit tree the cut
    vertices are pinned to 1 and to the cap, giving a bracket for t_empty.
    """
    schedule = schedule or build_schedule(spec, warn=False)
    tree = ChainTree(spec, schedule)
    q = spec.q
    if tree.degree >= 1:
        raise NonContracting(f"homogeneity degree {tree.degree} >= 1")
    cap = tree.cap_log
    lo, it, res, ratio, ratios = _iterate(tree, 0.0, 0.0, tol, max_iter, q)
    meta = {"first": tree.first, "keys": len(tree.vertices), "cut": len(tree.cut),
            "degree": tree.degree, "ratios": ratios[:8]}
    bracket = (None, None)
    if tree.cut:
        hi, it2, res2, ratio2, _ = _iterate(tree, cap, cap, tol, max_iter, q)
        bracket = (tree.root_value(lo), tree.root_value(hi))
        logt = {k: 0.5 * (lo[k] + hi[k]) for k in lo}
        ratio = max(ratio, ratio2)
    else:
        logt = lo
        if check_cap:
            hi, it2, res2, ratio2, _ = _iterate(tree, cap, cap, tol, max_iter, q)
            meta["bidirectional_gap"] = max(abs(hi[k] - lo[k]) for k in lo)
            ratio = max(ratio, ratio2)
    lt0 = tree.root_value(logt)
    return TVector(
        values={k: math.exp(v) for k, v in logt.items()},
        t_empty=math.exp(lt0),
        cap=math.exp(cap),
        log_values=logt,
        log_t_empty=lt0,
        iterations=it,
        residual=res,
        max_ratio=ratio,
        log_t_empty_bracket=bracket,
        meta=meta,
    )


def hausdorff_dimension(spec: SystemSpec, schedule: Optional[ParamSchedule] = None,
                        tvec: Optional[TVector] = None, tol: float = 1e-12) -> DimValue:
    """omega_1 * log_{m_d}(t_empty), with bounds from the solver residual."""
    schedule = schedule or build_schedule(spec, warn=False)
    tvec = tvec or solve_t(spec, schedule, tol=tol)
    q = spec.q
    w1 = omega_weights(schedule)[0]
    lnm = math.log(spec.m[-1])
    value = w1 * tvec.log_t_empty / lnm
    err = w1 * tvec.residual / ((1 - 1 / q) * lnm)
    lo_b, hi_b = tvec.log_t_empty_bracket
    if lo_b is not None:
        lower, upper = w1 * lo_b / lnm - err, w1 * hi_b / lnm + err
    else:
        lower, upper = value - err, value + err
    meta = {"iterations": tvec.iterations, "residual": tvec.residual,
            "max_ratio": tvec.max_ratio, "keys": tvec.meta.get("keys")}
    return DimValue(value, lower, upper, meta)


# ---------------------------------------------------------------------------
# Dedicated two-dimensional system


def solve_t_2d(spec: SystemSpec, tol: float = 1e-13, max_iter: int = 10000):
    """Direct 2D system: vertices (x_1,y_1)..(x_k,y_k) y_{k+1}..y_{k+j}.

    t_u^{q^{j+1} g} = sum_{y'} ( sum_{x'} t_{u x' y'} )^{q^j g}
    t_empty = sum_{y_1} ( sum_{y_2} ( ... ( sum_{x_1} t )^{q^j g} ... )^{1/q} )^{1/q}
    Returns (t values keyed by (state, y-tail), t_empty).
    """
    if spec.d != 2:
        raise ValueError("two-dimensional systems only")
    sys_ = compile_system(spec)
    q, (m1, m2) = spec.q, spec.m
    g = math.log(m2) / math.log(m1)
    j = build_schedule(spec, warn=False).j[2]

    def ok(state, ys):
        return sys_.partial_ok(state, tuple((y,) for y in ys))

    def children(key):
        state, ys = key
        out = []
        for yn in range(m2):
            row = []
            for x in range(m1):
                if j == 0:
                    s2 = sys_.step(state, (x, yn))
                    tail = ()
                else:
                    s2 = sys_.step(state, (x, ys[0]))
                    tail = ys[1:] + (yn,)
                if s2 is not None and ok(s2, tail):
                    row.append((s2, tail))
            if row:
                out.append(row)
        return out

    # vertices at level 1: (x_1, y_1) y_2..y_{j+1}
    first = []
    for x in range(m1):
        for y in range(m2):
            s = sys_.step(sys_.start, (x, y))
            if s is None:
                continue
            for tail in _words(m2, j):
                if ok(s, tail):
                    first.append((s, tail))
    graph = {}
    todo = list(first)
    while todo:
        k = todo.pop()
        if k in graph:
            continue
        graph[k] = children(k)
        todo.extend(c for row in graph[k] for c in row if c not in graph)
    outer = q ** (j + 1) * g
    inner = q ** j * g
    logt = {k: 0.0 for k in graph}
    for _ in range(max_iter):
        new = {}
        for k, rows in graph.items():
            new[k] = _lse([inner * _lse([logt[c] for c in row]) for row in rows]) / outer
        diff = max(abs(new[k] - logt[k]) for k in graph)
        logt = new
        if diff <= tol * (1 - 1 / q):
            break

    def nested(ys):
        if len(ys) == j + 1:
            terms = []
            for x in range(m1):
                s = sys_.step(sys_.start, (x, ys[0]))
                if s is not None and ok(s, ys[1:]):
                    terms.append(logt[(s, ys[1:])])
            return inner * _lse(terms) if terms else -math.inf
        inner_terms = [nested(ys + (y,)) for y in range(m2)]
        inner_terms = [v for v in inner_terms if v > -math.inf]
        if not inner_terms:
            return -math.inf
        v = _lse(inner_terms)
        return v if not ys else v / q

    return {k: math.exp(v) for k, v in logt.items()}, math.exp(nested(()))


def _words(base, length):
    if length == 0:
        return [()]
    return [w + (y,) for w in _words(base, length - 1) for y in range(base)]
