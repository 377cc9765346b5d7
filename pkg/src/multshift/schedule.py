"""Combinatorial parameters of the dimension formulas.

Coordinates are numbered 1..d as in the formulas (coordinate 1 has the
largest base).  Write r_t = log m_d / log m_t.  Looking at fiber start
indices i as the fraction x = i / (ball depth of coordinate d), coordinate t
gains one digit each time x crosses a point r_t q^{-a}.  Sorting these
breakpoints in decreasing order gives the reveal order (``chi``); the gaps
between consecutive breakpoints give the interval densities.
All integer parameters are decided by exact integer comparisons of powers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import mpmath

from .errors import IndexOutOfSchedule, TieWarning


def _pow_le(a: int, e1: int, b: int, e2: int) -> bool:
    """Exact test of a**e1 <= b**e2 for positive integers."""
    la = e1 * math.log2(a)
    lb = e2 * math.log2(b)
    if abs(la - lb) > 1e-6 * max(1.0, la, lb):
        return la < lb
    return a ** e1 <= b ** e2


def _pow_cmp(a: int, e1: int, b: int, e2: int) -> int:
    """Sign of a**e1 - b**e2."""
    la = e1 * math.log2(a)
    lb = e2 * math.log2(b)
    if abs(la - lb) > 1e-6 * max(1.0, la, lb):
        return -1 if la < lb else 1
    x, y = a ** e1, b ** e2
    return (x > y) - (x < y)


def _perfect_power(n: int):
    """Return (g, e) with n = g**e and e maximal."""
    best = (n, 1)
    for e in range(2, n.bit_length() + 1):
        g = round(n ** (1.0 / e))
        for c in (g - 1, g, g + 1):
            if c >= 2 and c ** e == n:
                best = (c, e)
    return best


def log_ratio(a: int, b: int):
    """log a / log b, exact as a Fraction when rational, else an mpf."""
    ga, ea = _perfect_power(a)
    gb, eb = _perfect_power(b)
    if ga == gb:
        return Fraction(ea, eb)
    with mpmath.workdps(60):
        return mpmath.log(a) / mpmath.log(b)


def ceil_ratio(n: int, a: int, b: int) -> int:
    """ceil(n * log a / log b) for n >= 0, exact."""
    if n == 0:
        return 0
    r = log_ratio(a, b)
    if isinstance(r, Fraction):
        return math.ceil(n * r)
    with mpmath.workdps(60):
        return int(mpmath.ceil(n * r))


@dataclass(frozen=True)
class ParamSchedule:
    q: int
    m: tuple
    j: dict            # t -> j_t, t in 2..d
    n: dict            # t -> n_t, t in 2..d
    p: dict            # t -> p_t, t in 1..d-1
    key_order: dict    # s -> sigma_s as a tuple (ascending key)
    ties: tuple = field(default=())

    @property
    def d(self) -> int:
        return len(self.m)

    @cached_property
    def gammas(self) -> dict:
        """t -> log m_t / log m_{t-1} for t in 2..d."""
        return {t: math.log(self.m[t - 1]) / math.log(self.m[t - 2]) for t in range(2, self.d + 1)}

    @cached_property
    def ratio(self) -> dict:
        """t -> r_t = prod_{i=t+1}^d gamma_i (so r_d = 1)."""
        r = {self.d: 1.0}
        for t in range(self.d - 1, 0, -1):
            r[t] = math.log(self.m[-1]) / math.log(self.m[t - 1])
        return r

    @cached_property
    def K(self) -> dict:
        """Ordering keys q^{p_t+1} r_t for t in 1..d-1; each lies in (1, q].

        Exactly tied keys share one float so that zero-width pieces stay zero.
        """
        q, m = self.q, self.m
        K = {t: q ** (self.p[t] + 1) * self.ratio[t] for t in range(1, self.d)}
        for t in K:
            if m[-1] ** (q ** self.p[t]) == m[t - 1]:
                K[t] = float(q)
        for t, u in self.ties:
            K[u] = K[t]
        return K

    @property
    def N(self) -> int:
        p1 = self.p[1]
        return p1 + 1 + sum(p1 + 1 - self.p[k] for k in range(1, self.d))

    # -- blocks and intervals ------------------------------------------

    def block_of(self, p: int) -> int:
        """The block s whose p-range (p_s, p_{s-1}] contains p."""
        if p < 1:
            raise IndexOutOfSchedule(f"p must be >= 1, got {p}")
        for s in range(self.d, 0, -1):
            lo = 0 if s == self.d else self.p[s]
            hi = math.inf if s == 1 else self.p[s - 1]
            if lo < p <= hi:
                return s
        raise IndexOutOfSchedule(f"no block contains p={p}")

    def active(self, p: int) -> list:
        """Coordinates t < d with a breakpoint inside interval p."""
        return [t for t in range(1, self.d) if self.p[t] + 1 <= p]

    def interval_order(self, p: int) -> list:
        """Coordinates revealed inside interval p, in reveal order.

        Coordinate d opens the interval; the others follow by decreasing key,
        which on ties puts the higher coordinate first as the staircase needs.
        """
        s = self.block_of(p)
        if s == self.d:
            return [self.d]
        return [self.d] + list(reversed(self.key_order[s]))

    # -- chi ordering ------------------------------------------------------

    def chi(self, length: int) -> list:
        """First ``length`` reveal steps as (coordinate, digit index), 1-based."""
        out = []
        count = {t: 0 for t in range(1, self.d + 1)}
        p = 1
        while len(out) < length:
            for t in self.interval_order(p):
                count[t] += 1
                out.append((t, count[t]))
            p += 1
        return out[:length]

    def breakpoints(self, length: int) -> list:
        """Positions b_1 = 1 >= b_2 >= ... of the first ``length`` reveal steps."""
        out = []
        p = 1
        q = self.q
        while len(out) < length:
            scale = float(q) ** (-p)
            out.append(q * scale)
            for t in self.interval_order(p)[1:]:
                out.append(self.K[t] * scale)
            p += 1
        return out[:length]

    def chain_shapes(self, length: int) -> list:
        """Staircase shapes beta_1..beta_length along the reveal order."""
        ls = [0] * self.d
        out = []
        for t, _ in self.chi(length):
            ls[t - 1] += 1
            out.append(tuple(ls))
        return out

    def chain_weights(self, length: int) -> list:
        """Density weights of the pieces between consecutive breakpoints."""
        b = self.breakpoints(length + 1)
        c = (self.q - 1) / self.q
        return [c * (b[i] - b[i + 1]) for i in range(length)]

    def tail_sums(self, length: int) -> list:
        """T_k = sum of the weights of pieces k, k+1, ... for k = 1..length."""
        c = (self.q - 1) / self.q
        return [c * b for b in self.breakpoints(length)]

    def block_boundary(self, i: int) -> bool:
        """Whether chain level i (number of revealed digits) is a tree vertex level."""
        return i >= self.N and (i - self.N) % self.d == 0

    def exponent(self, i: int) -> float:
        """Exponent applied to the nested sum at chain level i (tree levels use 1)."""
        if self.block_boundary(i):
            return 1.0
        b = self.breakpoints(i + 1)
        return b[i] / b[i - 1]

    @cached_property
    def outer_exponent(self) -> float:
        """Exponent E in t_u^E = (nested block sum); equals q T_N / T_{N-d+1}."""
        T = self.tail_sums(self.N)
        return self.q * T[self.N - 1] / T[self.N - self.d]

    # -- interval weights as closed forms ----------------------------------

    def p_st(self, s: int, t: int, k: int) -> int:
        sig = self.key_order[s]
        chosen = sig[: t - s + 1] if t >= s else ()
        return self.p[k] + 1 if k in chosen else self.p[k]

    def piece_shape(self, s: int, t: int, p: int) -> tuple:
        """Staircase shape (l_1..l_d) weighted by delta^{s,t}_p."""
        d = self.d
        if s == d:
            return (0,) * (d - 1) + (p,)
        ls = [0] * d
        ls[-1] = p
        for k in range(s, d):
            ls[k - 1] = p - self.p_st(s, t, k)
        return tuple(ls)

    def terms(self, P: int) -> list:
        """(p, s, t) triples of the triple sum for p = 1..P."""
        out = []
        for p in range(1, P + 1):
            s = self.block_of(p)
            if s == self.d:
                out.append((p, s, self.d - 1))
            else:
                for t in range(s - 1, self.d):
                    out.append((p, s, t))
        return out


def build_schedule(spec, warn: bool = True) -> ParamSchedule:
    """All parameters derived from (q, m)."""
    q, m = spec.q, tuple(spec.m)
    d = len(m)
    j = {}
    for t in range(2, d + 1):
        jt = 0
        # q^{j+1} <= log m_{t-1} / log m_t  <=>  m_t^{q^{j+1}} <= m_{t-1}
        while _pow_le(m[t - 1], q ** (jt + 1), m[t - 2], 1):
            jt += 1
        j[t] = jt
    p = {}
    for t in range(1, d):
        pt = 0
        # q^{p+1} <= log m_t / log m_d  <=>  m_d^{q^{p+1}} <= m_t
        while _pow_le(m[-1], q ** (pt + 1), m[t - 1], 1):
            pt += 1
        p[t] = pt
    n = {d: 0}
    for t in range(2, d):
        n[t] = p[t - 1] - sum(j[i] for i in range(t, d + 1))
    if p[d - 1] != j[d]:
        raise AssertionError("inconsistent schedule: p_{d-1} != j_d")

    def cmp_key(t, u):
        # K_t < K_u  <=>  m_u^{q^{p_t+1}} < m_t^{q^{p_u+1}}
        return _pow_cmp(m[u - 1], q ** (p[t] + 1), m[t - 1], q ** (p[u] + 1))

    ties = []
    for t in range(1, d):
        for u in range(t + 1, d):
            if cmp_key(t, u) == 0:
                ties.append((t, u))
    key_order = {}
    for s in range(1, d):
        idx = list(range(s, d))
        # insertion sort with the exact comparison, ties by ascending index
        out = []
        for t in idx:
            k = len(out)
            while k > 0 and cmp_key(t, out[k - 1]) < 0:
                k -= 1
            out.insert(k, t)
        key_order[s] = tuple(out)
    if ties and warn:
        warnings.warn(f"equal ordering keys for coordinates {ties}", TieWarning, stacklevel=2)
    return ParamSchedule(q=q, m=m, j=j, n=n, p=p, key_order=key_order, ties=tuple(ties))


def L_map(schedule: ParamSchedule, t: int, n: int) -> int:
    """L_t(n) = ceil(n / gamma_t); L_1 is the identity."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if t == 1:
        return n
    m = schedule.m
    return ceil_ratio(n, m[t - 2], m[t - 1])


def ball_depths(schedule: ParamSchedule, n: int) -> tuple:
    """(n, L_2(n), L_3(L_2(n)), ...): depth to which each coordinate is fixed."""
    out = [n]
    for t in range(2, schedule.d + 1):
        out.append(L_map(schedule, t, out[-1]))
    return tuple(out)


def sigma_permutation(schedule: ParamSchedule, s: int) -> tuple:
    if not 1 <= s <= schedule.d - 1:
        raise IndexOutOfSchedule(f"s must lie in [1, {schedule.d - 1}], got {s}")
    return schedule.key_order[s]


def delta(schedule: ParamSchedule, s: int, t: int, p: int) -> float:
    """Density of fiber starts in the (s, t) sub-interval of interval p."""
    sch, q, d = schedule, schedule.q, schedule.d
    if not 1 <= s <= d:
        raise IndexOutOfSchedule(f"s={s} outside [1, {d}]")
    if s == d:
        if t != d - 1 or not 1 <= p <= sch.j[d]:
            raise IndexOutOfSchedule(f"(s={s}, t={t}, p={p}) outside the schedule")
        return (q - 1) ** 2 / q ** (p + 1)
    lo = sch.p[s]
    hi = math.inf if s == 1 else sch.p[s - 1]
    if not lo < p <= hi or not s - 1 <= t <= d - 1:
        raise IndexOutOfSchedule(f"(s={s}, t={t}, p={p}) outside the schedule")
    sig = sch.key_order[s]

    def key(k):
        return q ** sch.p[k] * _gamma_tail(sch, k)

    # differences of keys are formed before rounding, so that equal keys give
    # an exact zero rather than a tiny negative density
    with mpmath.workdps(60):
        if t == s - 1:
            c = _minus(q * key(sig[0]), 1)
            return float(c) * (q - 1) / q ** (p + 1)
        if t == d - 1:
            c = _minus(1, key(sig[-1]))
        else:
            c = _minus(key(sig[t - s + 1]), key(sig[t - s]))
        return float(c) * (q - 1) / q ** p


def _minus(a, b):
    """a - b, staying exact when both are rational."""
    if isinstance(a, mpmath.mpf) or isinstance(b, mpmath.mpf):
        def mp(x):
            return mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)
        return mp(a) - mp(b)
    return Fraction(a) - Fraction(b)


def _gamma_tail(sch: ParamSchedule, k: int):
    """prod_{i>k} gamma_i = log m_d / log m_k, exact when rational."""
    return _log_ratio_cached(sch.m[-1], sch.m[k - 1])


@lru_cache(maxsize=4096)
def _log_ratio_cached(a: int, b: int):
    return log_ratio(a, b)


def _prod_gamma(sch: ParamSchedule, k: int) -> float:
    return float(_gamma_tail(sch, k))


def delta_sum(schedule: ParamSchedule, P: int = 60) -> float:
    """Sum of all interval densities: explicit through P plus geometric tail.

    Past p_1 the densities of block 1 decay exactly like q^{-p}.
    """
    M = max(P, schedule.p[1] + 1)
    total = math.fsum(delta(schedule, s, t, p) for p, s, t in schedule.terms(M))
    last = math.fsum(delta(schedule, 1, t, M) for t in range(0, schedule.d))
    return total + last / (schedule.q - 1)


def omega_weights(schedule: ParamSchedule) -> list:
    """omega_1..omega_{N+1} from the piece weights.

    The first N-1 weights are single pieces along the reveal order; the N-th
    aggregates every later piece.  omega_1 is the total, omega_k the ratio of
    consecutive tail totals, and omega_{N+1} = 1 / (q * (aggregated N-th weight)).
    """
    N = schedule.N
    w = schedule.chain_weights(N - 1)
    total = (schedule.q - 1) / schedule.q
    weights = w + [total - math.fsum(w)]
    out = [total]
    for k in range(2, N + 1):
        num = total - math.fsum(weights[: k - 1])
        den = total - math.fsum(weights[: k - 2])
        out.append(num / den)
    out.append(1.0 / (schedule.q * weights[-1]))
    return out


def omega_tilde(schedule: ParamSchedule, k: int) -> float:
    w = omega_weights(schedule)
    out = 1.0
    for x in w[:k]:
        out *= x
    return out


def omega_closed_forms(schedule: ParamSchedule) -> dict:
    """Closed-form values of selected omegas in terms of the schedule integers.

    Index conventions: omega_1 is the total weight, so the run of 1/q values
    covers omega_2..omega_{p_{d-1}+1} and the first non-trivial ratio is
    omega_{p_{d-1}+2} = gamma_d q^{p_{d-1}}.
    Also returns ``"outer"``: (omega~_{N-d+1} omega_{N+1})^{-1}.
    """
    sch, q, d, N = schedule, schedule.q, schedule.d, schedule.N
    out = {1: (q - 1) / q}
    pd1 = sch.p[d - 1]
    for k in range(2, pd1 + 2):
        out[k] = 1.0 / q
    out[pd1 + 2] = sch.gammas[d] * q ** pd1
    s1 = sch.key_order[1]
    k1 = s1[0]
    key1 = q ** (sch.p[k1] + 1) * _prod_gamma(sch, k1)
    if d == 2:
        out[N] = key1 / q
    else:
        k2 = s1[1]
        out[N] = q ** (sch.p[k1] - sch.p[k2]) * _prod_gamma(sch, k1) / _prod_gamma(sch, k2)
    out[N + 1] = q ** (sch.p[1] - sch.p[k1]) / ((q - 1) * _prod_gamma(sch, k1))
    out["outer"] = key1
    return out


def schedule_summary(schedule: ParamSchedule) -> dict:
    sch = schedule
    return {
        "q": sch.q,
        "m": list(sch.m),
        "gammas": {str(t): g for t, g in sch.gammas.items()},
        "j": {str(t): v for t, v in sch.j.items()},
        "n": {str(t): v for t, v in sch.n.items()},
        "p": {str(t): v for t, v in sch.p.items()},
        "sigma": {str(s): list(v) for s, v in sch.key_order.items()},
        "N": sch.N,
        "omega": omega_weights(sch),
        "chi": [list(c) for c in sch.chi(sch.N + sch.d)],
        "ties": [list(t) for t in sch.ties],
    }
