"""Partition entropies and the entropy series giving dim_H(P_mu).

A partition of Omega is described by a staircase shape: coordinate c known
to depth shape[c].  The join of partitions into cylinders of the last k
coordinates (:func:`join_shape`) is again a staircase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .fixedpoint import DimValue
from .measures import FiberMeasure
from .schedule import ParamSchedule, build_schedule, delta
from .system import StaircasePrefix, SystemSpec, check_shape


def join_shape(d: int, depths: dict) -> tuple:
    """Shape of the join of the partitions {k: depth}, k = number of trailing coordinates."""
    shape = [0] * d
    for k, n in depths.items():
        if not 1 <= k <= d:
            raise ValueError(f"partition index {k} outside [1, {d}]")
        for c in range(d - k, d):
            shape[c] = max(shape[c], max(0, n))
    return tuple(shape)


def partition_entropy(spec: SystemSpec, mu: FiberMeasure, shape, base: Optional[float] = None) -> float:
    """Entropy of the partition of shape ``shape`` with logarithms to ``base`` (default m_d)."""
    shape = check_shape(shape, spec.d)
    base = base or spec.m[-1]
    return mu.entropy(shape) / math.log(base)


def conditional_entropy(spec: SystemSpec, mu: FiberMeasure, shape, given, base: Optional[float] = None) -> float:
    """H(shape | given) for a coarser ``given`` shape, via the chain rule."""
    return partition_entropy(spec, mu, shape, base) - partition_entropy(spec, mu, given, base)


def series_tail(spec: SystemSpec, P: int) -> float:
    """Bound on all terms with p > P of a block-one series.

    Every term with index p is at most p log_{m_d}(m_1...m_d) and the
    interval weights of index p add up to (q-1)^2 / q^{p+1}.
    """
    q = spec.q
    C = sum(math.log(b) for b in spec.m) / math.log(spec.m[-1])
    x = 1.0 / q
    s = x ** (P + 1) * ((P + 1) * (1 - x) + x) / (1 - x) ** 2
    return C * (q - 1) ** 2 / q * s


@dataclass
class SeriesTerm:
    p: int
    s: int
    t: int
    coefficient: float
    shape: tuple
    value: float

    @property
    def contribution(self) -> float:
        return self.coefficient * self.value

    def row(self) -> dict:
        return {"p": self.p, "family": f"{self.s},{self.t}", "coefficient": self.coefficient,
                "shape": list(self.shape), "value": self.value, "contribution": self.contribution}


def _series(spec, schedule, P, term_value):
    P = max(P, schedule.p[1] + 1)
    terms = []
    for p, s, t in schedule.terms(P):
        shape = schedule.piece_shape(s, t, p)
        c = delta(schedule, s, t, p)
        terms.append(SeriesTerm(p, s, t, c, shape, term_value(shape)))
    value = math.fsum(x.contribution for x in terms)
    return value, terms, P


def pmu_dimension_series(spec: SystemSpec, mu: FiberMeasure, schedule: Optional[ParamSchedule] = None,
                         terms: int = 40) -> DimValue:
    """Entropy series for dim_H(P_mu), summed through interval index ``terms``."""
    schedule = schedule or build_schedule(spec, warn=False)
    lnb = math.log(spec.m[-1])
    value, rows, P = _series(spec, schedule, terms, lambda sh: mu.entropy(sh) / lnb)
    tail = series_tail(spec, P)
    return DimValue(value, value, value + tail, {"terms": P, "tail": tail, "rows": [r.row() for r in rows]})


# ---------------------------------------------------------------------------
# Dedicated low-dimensional formulas


def _two_d_params(spec):
    m1, m2 = spec.m
    g = math.log(m2) / math.log(m1)
    q = spec.q
    j = 0
    while q ** (j + 1) * g <= 1 + 1e-15:
        j += 1
    return g, j


def series_2d(spec: SystemSpec, values, terms: int = 40) -> float:
    """Two-dimensional three-family series.

    ``values(shape)`` returns the term for shape (x-length, y-length), an
    entropy for dim_H(P_mu) or a log-count for the Minkowski dimension.
    """
    if spec.d != 2:
        raise ValueError("two-dimensional systems only")
    q = spec.q
    g, j = _two_d_params(spec)
    total = []
    for p in range(1, j + 1):
        total.append((q - 1) ** 2 * values((0, p)) / q ** (p + 1))
    for p in range(j + 1, max(terms, j + 1) + 1):
        total.append((q - 1) * (q ** (j + 1) * g - 1) * values((p - j, p)) / q ** (p + 1))
        total.append((q - 1) * (1 - q ** j * g) * values((p - j - 1, p)) / q ** p)
    return math.fsum(total)


def series_3d(spec: SystemSpec, values, terms: int = 40) -> float:
    """Three-dimensional series in both cases of the middle exponent.

    ``values(shape)`` receives (l_1, l_2, l_3) lengths of coordinates 1..3.
    """
    if spec.d != 3:
        raise ValueError("three-dimensional systems only")
    q = spec.q
    m1, m2, m3 = spec.m
    g2 = math.log(m2) / math.log(m1)
    g3 = math.log(m3) / math.log(m2)

    def jj(g):
        j = 0
        while q ** (j + 1) * g <= 1 + 1e-15:
            j += 1
        return j

    j2, j3 = jj(g2), jj(g3)
    J = j2 + j3
    first_case = q ** (J + 1) * g2 * g3 > 1 + 1e-15

    def join(a3, a2, a1):
        # alpha^3 covers coordinates 1..3, alpha^2 coordinates 2..3, alpha^1 coordinate 3
        a3, a2, a1 = max(a3, 0), max(a2, 0), max(a1, 0)
        return (a3, max(a3, a2), max(a3, a2, a1))

    out = []
    for p in range(1, j3 + 1):
        out.append((q - 1) ** 2 * values(join(0, 0, p)) / q ** (p + 1))
    hi = J if first_case else J + 1
    for p in range(j3 + 1, hi + 1):
        out.append((q - 1) * (g3 * q ** (j3 + 1) - 1) * values(join(0, p - j3, p)) / q ** (p + 1))
        out.append((q - 1) * (1 - g3 * q ** j3) * values(join(0, p - j3 - 1, p)) / q ** p)
    P = max(terms, hi + 1)
    for p in range(hi + 1, P + 1):
        if first_case:
            out.append((q - 1) * (g2 * g3 * q ** (J + 1) - 1)
                       * values(join(p - J, p - j3, p)) / q ** (p + 1))
            out.append((q - 1) * (g3 * q ** j3 - g2 * g3 * q ** J)
                       * values(join(p - J - 1, p - j3, p)) / q ** p)
            out.append((q - 1) * (1 - g3 * q ** j3)
                       * values(join(p - J - 1, p - j3 - 1, p)) / q ** p)
        else:
            out.append((q - 1) * (g3 * q ** (j3 + 1) - 1)
                       * values(join(p - J - 1, p - j3, p)) / q ** (p + 1))
            out.append((q - 1) * (g2 * g3 * q ** (J + 1) - g3 * q ** j3)
                       * values(join(p - J - 1, p - j3 - 1, p)) / q ** p)
            out.append((q - 1) * (1 - g2 * g3 * q ** (J + 1))
                       * values(join(p - J - 2, p - j3 - 1, p)) / q ** p)
    return math.fsum(out)


def pmu_dimension_2d(spec: SystemSpec, mu: FiberMeasure, terms: int = 40) -> float:
    lnb = math.log(spec.m[-1])
    return series_2d(spec, lambda sh: mu.entropy(sh) / lnb, terms)


def pmu_dimension_3d(spec: SystemSpec, mu: FiberMeasure, terms: int = 40) -> float:
    lnb = math.log(spec.m[-1])
    return series_3d(spec, lambda sh: mu.entropy(sh) / lnb, terms)


# ---------------------------------------------------------------------------
# Ledrappier-Young check


@dataclass
class LYReport:
    condition_holds_to_depth: bool
    depth: int
    dim_H_pmu: float
    ly_rhs: float
    gap: float
    tail: float
    violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"condition_holds_to_depth": self.condition_holds_to_depth, "depth": self.depth,
                "dim_H_pmu": self.dim_H_pmu, "ly_rhs": self.ly_rhs, "gap": self.gap,
                "tail": self.tail, "violations": self.violations[:10]}


def ly_condition(spec: SystemSpec, mu: FiberMeasure, depth: int, tol: float = 1e-12):
    """Finite-depth test that mu(I | y-extension) does not depend on the extension.

    For every p < depth and every cylinder I of p full tuples, the ratio
    mu(I and y_1..y_depth) / mu(y_1..y_depth) must be the same for all
    y-extensions of positive mass.  Returns (holds, violations).
    """
    if spec.d != 2:
        raise ValueError("the Ledrappier-Young check is two-dimensional")
    violations = []
    proj = mu.masses((0, depth))
    for p in range(1, depth):
        joint = mu.masses((p, depth))
        groups = {}
        for u, w in joint.items():
            y = StaircasePrefix(((), u.words[1]))
            py = proj.get(y, 0)
            if py == 0:
                continue
            groups.setdefault(u.words[0], {}).setdefault(u.words[1][:p], {})[u.words[1]] = float(w) / float(py)
        for x, by_prefix in groups.items():
            for ypre, ratios in by_prefix.items():
                # every y-extension of positive projected mass must occur with the same ratio
                exts = [y for y in proj if y.words[1][:p] == ypre and proj[y] != 0]
                vals = [ratios.get(y.words[1], 0.0) for y in exts]
                if vals and max(vals) - min(vals) > tol:
                    violations.append({"p": p, "x": list(x), "y": list(ypre),
                                       "min": min(vals), "max": max(vals)})
    return not violations, violations


def ly_check(spec: SystemSpec, mu: FiberMeasure, depth: int = 6, terms: int = 40) -> LYReport:
    """Both sides of the Ledrappier-Young identity and the finite-depth condition."""
    if spec.d != 2:
        raise ValueError("the Ledrappier-Young check is two-dimensional")
    holds, violations = ly_condition(spec, mu, depth)
    q = spec.q
    m1, m2 = spec.m
    g = math.log(m2) / math.log(m1)
    dim = pmu_dimension_series(spec, mu, terms=terms)
    rhs = []
    for p in range(1, max(terms, 1) + 1):
        c = (q - 1) ** 2 / q ** (p + 1)
        h_full = mu.entropy((p, p)) / math.log(m1)
        h_proj = mu.entropy((0, p)) / math.log(m2)
        rhs.append(c * (h_full + (1 - g) * h_proj))
    ly_rhs = math.fsum(rhs)
    tail = series_tail(spec, terms) + dim.meta["tail"]
    return LYReport(holds, depth, dim.value, ly_rhs, ly_rhs - dim.value, tail, violations)
