"""Measures on Omega and the fiber-product measures they induce on X_Omega.

A measure ``mu`` on Omega assigns masses to staircase prefixes.  The induced
measure P_mu on X_Omega treats every multiplicative fiber i, qi, q^2 i, ...
(q not dividing i) as an independent mu-distributed word, so the mass of a
staircase word of X_Omega is the product of the mu-masses of its fiber words.

Bernoulli, Markov and Cylinder measures accept exact ``Fraction`` weights;
their masses are then exact.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DepthExceeded, InadmissibleWord, NotAProbability
from .fixedpoint import ChainTree, TVector, _lse, solve_t
from .schedule import ParamSchedule, ball_depths, build_schedule
from .system import (
    Carpet, Full, Sft, StaircasePrefix, SystemSpec, alphabet, check_shape, compile_system,
    enumerate_prefixes,
)

PROB_TOL = 1e-12


def _plogp(p) -> float:
    p = float(p)
    return -p * math.log(p) if p > 0 else 0.0


def _close_to_one(total) -> bool:
    if isinstance(total, Fraction):
        return total == 1
    return abs(float(total) - 1.0) <= PROB_TOL


# ---------------------------------------------------------------------------
# Measures on Omega


class FiberMeasure:
    """Common interface: masses, marginals, entropies and sampling."""

    spec: SystemSpec

    def mass(self, u: StaircasePrefix):
        raise NotImplementedError

    def masses(self, shape) -> dict:
        """Mass of every admissible prefix of ``shape`` (atoms of the partition)."""
        shape = check_shape(shape, self.spec.d)
        out = {}
        for u in enumerate_prefixes(self.spec, shape):
            out[u] = self.mass(u)
        return out

    def entropy(self, shape) -> float:
        """Natural-log entropy of the partition into prefixes of ``shape``."""
        return math.fsum(_plogp(p) for p in self.masses(shape).values())

    def sample_word(self, shape, rng: random.Random) -> StaircasePrefix:
        raise NotImplementedError

    def to_cylinder(self, shape) -> "Cylinder":
        return Cylinder(self.spec, check_shape(shape, self.spec.d), self.masses(shape))


class Markov(FiberMeasure):
    """Markov chain on d-tuples with an initial law and a transition kernel.

    ``initial`` maps tuples to probabilities; ``transition`` maps a tuple to a
    dict of next-tuple probabilities.  Positive transitions must be allowed by
    Omega, which therefore has to be memory-one (Full, Carpet or Sft).
    """

    def __init__(self, spec: SystemSpec, initial: dict, transition: dict, check: bool = True):
        self.spec = spec
        self.initial = {tuple(a): p for a, p in initial.items() if p != 0}
        self.transition = {tuple(a): {tuple(b): p for b, p in row.items() if p != 0}
                           for a, row in transition.items()}
        self._fi = {a: float(p) for a, p in self.initial.items()}
        self._ft = {a: {b: float(p) for b, p in row.items()} for a, row in self.transition.items()}
        self._full_cache = {}
        self._part_cache = {}
        if check:
            self._validate()

    # validation ---------------------------------------------------------

    def _validate(self):
        spec = self.spec
        if any(p < 0 for p in self.initial.values()):
            raise NotAProbability("negative initial mass")
        if not _close_to_one(sum(self.initial.values())):
            raise NotAProbability(f"initial masses sum to {sum(self.initial.values())}")
        sys_ = compile_system(spec)
        seen = set()
        todo = []
        for a in self.initial:
            s = sys_.step(sys_.start, a)
            if s is None:
                raise NotAProbability(f"initial tuple {a} is not allowed by Omega")
            todo.append((s, a))
        while todo:
            s, a = todo.pop()
            if (s, a) in seen:
                continue
            seen.add((s, a))
            row = self.transition.get(a)
            if not row:
                raise NotAProbability(f"no transition out of reachable tuple {a}")
            if any(p < 0 for p in row.values()) or not _close_to_one(sum(row.values())):
                raise NotAProbability(f"transition row of {a} is not a probability vector")
            for b in row:
                s2 = sys_.step(s, b)
                if s2 is None:
                    raise NotAProbability(f"transition {a} -> {b} leaves Omega")
                todo.append((s2, b))

    # masses -------------------------------------------------------------

    def _row(self, a):
        return self.initial if a is None else self.transition.get(a, {})

    def mass(self, u: StaircasePrefix):
        full = u.full()
        prev = None
        p = 1
        for a in full:
            p = p * self._row(prev).get(a, 0)
            if p == 0:
                return p
            prev = a
        partial = u.partial()
        if not partial:
            return p
        d = self.spec.d
        vec = {prev: p}
        for pt in partial:
            c0 = d - len(pt)
            nxt = {}
            for a, w in vec.items():
                for b, pb in self._row(a).items():
                    if b[c0:] == pt:
                        nxt[b] = nxt.get(b, 0) + w * pb
            vec = nxt
            if not vec:
                return 0
        return sum(vec.values())

    # entropy -------------------------------------------------------------

    def _full_stats(self, f: int):
        """(distribution of the f-th tuple, entropy of the first f tuples)."""
        cache = self._full_cache
        if not cache:
            cache[0] = ({None: 1.0}, 0.0)
        k = max(cache)
        dist, h = cache[k]
        while k < f:
            nd = {}
            hh = 0.0
            for a, w in dist.items():
                row = self._fi if a is None else self._ft.get(a, {})
                hh += w * math.fsum(_plogp(p) for p in row.values())
                for b, p in row.items():
                    nd[b] = nd.get(b, 0.0) + w * p
            k += 1
            dist, h = nd, h + hh
            cache[k] = (dist, h)
        return cache[f]

    def _partial_entropy(self, a, rel: tuple) -> float:
        """Entropy of the partial tail of relative shape ``rel`` after tuple ``a``."""
        key = (a, rel)
        hit = self._part_cache.get(key)
        if hit is not None:
            return hit
        d = self.spec.d
        R = rel[-1]
        starts = [d - sum(1 for c in range(d) if rel[c] > k) for k in range(R)]
        # chain rule over the revealed digits; identical conditional laws of the
        # current tuple are merged, which keeps hidden-chain projections small
        beliefs = {((a, 1.0),): 1.0}
        acc = []
        for k in range(R):
            c0 = starts[k]
            nxt = {}
            for vec, w in beliefs.items():
                groups = {}
                for x, px in vec:
                    row = self._fi if x is None else self._ft.get(x, {})
                    for b, p in row.items():
                        g = groups.setdefault(b[c0:], {})
                        g[b] = g.get(b, 0.0) + px * p
                for g in groups.values():
                    tot = math.fsum(g.values())
                    if tot <= 0:
                        continue
                    acc.append(w * _plogp(tot))
                    nv = tuple(sorted((b, round(v / tot, 13)) for b, v in g.items()))
                    nxt[nv] = nxt.get(nv, 0.0) + w * tot
            beliefs = nxt
        h = math.fsum(acc)
        self._part_cache[key] = h
        return h

    def entropy(self, shape) -> float:
        shape = check_shape(shape, self.spec.d)
        f = shape[0]
        dist, h = self._full_stats(f)
        rel = tuple(x - f for x in shape)
        if rel[-1] == 0:
            return h
        return h + math.fsum(w * self._partial_entropy(a, rel) for a, w in dist.items())

    # sampling -------------------------------------------------------------

    def sample_word(self, shape, rng: random.Random) -> StaircasePrefix:
        shape = check_shape(shape, self.spec.d)
        prev = None
        full = []
        for _ in range(shape[-1]):
            row = self._fi if prev is None else self._ft[prev]
            prev = _choice(row, rng)
            full.append(prev)
        words = tuple(tuple(a[c] for a in full[: shape[c]]) for c in range(self.spec.d))
        return StaircasePrefix(words)


class Bernoulli(Markov):
    """Independent identically distributed d-tuples."""

    def __init__(self, spec: SystemSpec, weights: dict, check: bool = True):
        weights = {tuple(a): p for a, p in weights.items() if p != 0}
        self.weights = weights
        support = list(weights)
        super().__init__(spec, weights, {a: weights for a in support}, check=check)

    def entropy(self, shape) -> float:
        shape = check_shape(shape, self.spec.d)
        d = self.spec.d
        total = 0.0
        marg_cache = {}
        for k in range(shape[-1]):
            c0 = sum(1 for c in range(d) if shape[c] <= k)
            h = marg_cache.get(c0)
            if h is None:
                marg = {}
                for a, p in self._fi.items():
                    marg[a[c0:]] = marg.get(a[c0:], 0.0) + p
                h = math.fsum(_plogp(p) for p in marg.values())
                marg_cache[c0] = h
            total += h
        return total


class Cylinder(FiberMeasure):
    """Explicit masses on the prefixes of one staircase shape.

    Masses of coarser shapes are obtained by summation; finer shapes raise
    :class:`DepthExceeded`.
    """

    def __init__(self, spec: SystemSpec, shape, masses: dict, check: bool = True):
        self.spec = spec
        self.shape = check_shape(shape, spec.d)
        self.atoms = {}
        for u, p in masses.items():
            if not isinstance(u, StaircasePrefix):
                u = StaircasePrefix(u)
            if u.lengths != self.shape:
                raise NotAProbability(f"cylinder {u} does not have shape {self.shape}")
            if p != 0:
                self.atoms[u] = p
        self._marg = {}
        if check:
            if any(p < 0 for p in self.atoms.values()):
                raise NotAProbability("negative cylinder mass")
            if not _close_to_one(sum(self.atoms.values())):
                raise NotAProbability(f"cylinder masses sum to {sum(self.atoms.values())}")
            sys_ = compile_system(spec)
            for u in self.atoms:
                if sys_.key_of(u) is None:
                    raise NotAProbability(f"cylinder {u} lies outside Omega")

    def _marginal(self, shape):
        shape = check_shape(shape, self.spec.d)
        if any(a > b for a, b in zip(shape, self.shape)):
            raise DepthExceeded(f"shape {shape} is finer than the stored cylinders {self.shape}")
        hit = self._marg.get(shape)
        if hit is None:
            hit = {}
            for u, p in self.atoms.items():
                v = u.truncate(shape)
                hit[v] = hit.get(v, 0) + p
            self._marg[shape] = hit
        return hit

    def mass(self, u: StaircasePrefix):
        return self._marginal(u.lengths).get(u, 0)

    def masses(self, shape) -> dict:
        return dict(self._marginal(shape))

    def sample_word(self, shape, rng: random.Random) -> StaircasePrefix:
        marg = self._marginal(shape)
        return _choice(marg, rng)


class PointMass(Cylinder):
    """Dirac mass on the prefixes of one word (given to some depth)."""

    def __init__(self, spec: SystemSpec, word: StaircasePrefix):
        super().__init__(spec, word.lengths, {word: Fraction(1)})


def _choice(dist: dict, rng: random.Random):
    keys = list(dist)
    r = rng.random()
    acc = 0.0
    for k in keys:
        acc += float(dist[k])
        if r < acc:
            return k
    return keys[-1]


# ---------------------------------------------------------------------------
# Optimal measure


class OptimalMeasure(FiberMeasure):
    """The dimension-maximising measure built from a solved fixed point.

    Digits are revealed in the schedule's reveal order.  At every step the
    next digit is drawn with probability S(child)^e / S(parent), where S are
    the nested sums of the fixed-point system and e the exponent of the
    level, so the measure is a Markov chain on follower keys.
    """

    def __init__(self, spec: SystemSpec, schedule: ParamSchedule, tvec: TVector):
        self.spec = spec
        self.schedule = schedule
        self.tvec = tvec
        tree = ChainTree(spec, schedule)
        self.tree = tree
        sys_ = tree.sys
        canon = sys_.canonical
        d, N = spec.d, schedule.N
        self.d, self.N = d, N
        logt = tvec.log_values

        # nested sums inside a block: stage d holds the vertex values
        stage = [None] * (d + 1)
        stage[d] = dict(logt)
        block = [dict() for _ in range(d)]
        for r in range(d - 1, -1, -1):
            e = tree.block_exp[r]
            c = tree.block_coords[r]
            vals = {}
            for key in tree.block[r]:
                kids = [(x, canon(k)) for x, k in sys_.extend(key, c)]
                terms = [e * stage[r + 1][k] for _, k in kids]
                vals[key] = _lse(terms)
                block[r][key] = [(x, k, math.exp(t - vals[key])) for (x, k), t in zip(kids, terms)]
            stage[r] = vals
        root = [dict() for _ in range(N)]
        rvals = dict(logt)
        for i in range(N - 1, -1, -1):
            e = tree.root_exp[i]
            c = tree.root_coords[i]
            vals = {}
            for key in tree.root[i]:
                kids = [(x, canon(k)) for x, k in sys_.extend(key, c)]
                terms = [e * rvals[k] for _, k in kids]
                vals[key] = _lse(terms)
                root[i][key] = [(x, k, math.exp(t - vals[key])) for (x, k), t in zip(kids, terms)]
            rvals = vals
        self.root_key = canon(sys_.root_key())
        self.log_t_empty = rvals[self.root_key]
        self._root, self._block = root, block
        self._chain_cache = [({self.root_key: 1.0}, 0.0)]
        self._shape_index = {}

    # chain structure -----------------------------------------------------

    def coord(self, i: int) -> int:
        """0-based coordinate revealed at step i."""
        if i < self.N:
            return self.tree.root_coords[i]
        return self.tree.block_coords[(i - self.N) % self.d]

    def table(self, i: int) -> dict:
        return self._root[i] if i < self.N else self._block[(i - self.N) % self.d]

    def conditional(self, i: int, key) -> list:
        """[(digit, child key, probability)] for step i from ``key``."""
        tab = self.table(i)
        row = tab.get(key)
        if row is None:
            raise DepthExceeded("the optimal measure is not defined past the explicit tree depth")
        return row

    def _steps_to_cover(self, shape) -> int:
        counts = [0] * self.d
        i = 0
        while any(c < s for c, s in zip(counts, shape)):
            counts[self.coord(i)] += 1
            i += 1
        return i

    def chain_index(self, shape) -> Optional[int]:
        """Number of steps after which the revealed shape equals ``shape``, if ever."""
        shape = tuple(shape)
        hit = self._shape_index.get(shape, -1)
        if hit != -1:
            return hit
        counts = [0] * self.d
        i = 0
        out = None
        while True:
            if tuple(counts) == shape:
                out = i
                break
            if any(c > s for c, s in zip(counts, shape)):
                break
            counts[self.coord(i)] += 1
            i += 1
        self._shape_index[shape] = out
        return out

    # masses -------------------------------------------------------------

    def mass(self, u: StaircasePrefix) -> float:
        shape = u.lengths
        steps = self._steps_to_cover(shape)
        counts = [0] * self.d
        dist = {self.root_key: 1.0}
        for i in range(steps):
            c = self.coord(i)
            k = counts[c]
            fixed = u.words[c][k] if k < shape[c] else None
            nxt = {}
            for key, w in dist.items():
                for x, child, p in self.conditional(i, key):
                    if fixed is None or x == fixed:
                        nxt[child] = nxt.get(child, 0.0) + w * p
            counts[c] += 1
            dist = nxt
            if not dist:
                return 0.0
        return math.fsum(dist.values())

    def masses(self, shape) -> dict:
        shape = check_shape(shape, self.d)
        steps = self._steps_to_cover(shape)
        counts = [0] * self.d
        # state: (key, recorded digits)
        dist = {(self.root_key, ()): 1.0}
        for i in range(steps):
            c = self.coord(i)
            keep = counts[c] < shape[c]
            nxt = {}
            for (key, rec), w in dist.items():
                for x, child, p in self.conditional(i, key):
                    r2 = rec + ((c, x),) if keep else rec
                    nxt[(child, r2)] = nxt.get((child, r2), 0.0) + w * p
            counts[c] += 1
            dist = nxt
        out = {}
        for (_, rec), w in dist.items():
            words = [[] for _ in range(self.d)]
            for c, x in rec:
                words[c].append(x)
            u = StaircasePrefix(tuple(tuple(v) for v in words))
            out[u] = out.get(u, 0.0) + w
        return out

    def chain_entropy(self, steps: int) -> float:
        """Entropy of the partition revealed by the first ``steps`` reveal steps."""
        cache = self._chain_cache
        while len(cache) <= steps:
            i = len(cache) - 1
            dist, h = cache[-1]
            nd = {}
            hh = 0.0
            for key, w in dist.items():
                row = self.conditional(i, key)
                hh += w * math.fsum(_plogp(p) for _, _, p in row)
                for _, child, p in row:
                    nd[child] = nd.get(child, 0.0) + w * p
            cache.append((nd, h + hh))
        return cache[steps][1]

    def hidden_entropy(self, shape) -> float:
        """Entropy of a shape that is not a stage of the reveal chain.

        Chain rule over the revealed steps; steps outside the shape are
        summed out.  The state is the conditional law of the current key
        given what has been revealed, and equal laws are merged.
        """
        steps = self._steps_to_cover(shape)
        counts = [0] * self.d
        beliefs = {((self.root_key, 1.0),): 1.0}
        acc = []
        for i in range(steps):
            c = self.coord(i)
            seen = counts[c] < shape[c]
            counts[c] += 1
            nxt = {}
            for vec, w in beliefs.items():
                groups = {}
                for key, pk in vec:
                    for x, child, p in self.conditional(i, key):
                        g = groups.setdefault(x if seen else None, {})
                        g[child] = g.get(child, 0.0) + pk * p
                for g in groups.values():
                    tot = math.fsum(g.values())
                    if tot <= 0:
                        continue
                    if seen:
                        acc.append(w * _plogp(tot))
                    nv = tuple(sorted(((k, round(v / tot, 13)) for k, v in g.items()), key=repr))
                    nxt[nv] = nxt.get(nv, 0.0) + w * tot
            beliefs = nxt
        return math.fsum(acc)

    def entropy(self, shape) -> float:
        shape = check_shape(shape, self.d)
        idx = self.chain_index(shape)
        if idx is not None:
            return self.chain_entropy(idx)
        return self.hidden_entropy(shape)

    def sample_word(self, shape, rng: random.Random) -> StaircasePrefix:
        shape = check_shape(shape, self.d)
        steps = self._steps_to_cover(shape)
        words = [[] for _ in range(self.d)]
        key = self.root_key
        for i in range(steps):
            row = self.conditional(i, key)
            r = rng.random()
            acc = 0.0
            pick = row[-1]
            for item in row:
                acc += item[2]
                if r < acc:
                    pick = item
                    break
            words[self.coord(i)].append(pick[0])
            key = pick[1]
        return StaircasePrefix(tuple(tuple(w[:n]) for w, n in zip(words, shape)))


def optimal_measure(spec: SystemSpec, schedule: Optional[ParamSchedule] = None,
                    tvec: Optional[TVector] = None) -> OptimalMeasure:
    schedule = schedule or build_schedule(spec, warn=False)
    tvec = tvec or solve_t(spec, schedule)
    return OptimalMeasure(spec, schedule, tvec)


# ---------------------------------------------------------------------------
# Convenience constructors


def uniform_bernoulli(spec: SystemSpec) -> Bernoulli:
    """Uniform weights on the admissible letters of a Full or Carpet system."""
    om = spec.omega
    if isinstance(om, Full):
        support = alphabet(spec.m)
    elif isinstance(om, Carpet):
        support = sorted(om.allowed)
    else:
        raise ValueError("uniform Bernoulli weights need a Full or Carpet system")
    w = Fraction(1, len(support))
    return Bernoulli(spec, {a: w for a in support})


def _memory_one_graph(spec: SystemSpec):
    """(initial tuples, successor lists) of a memory-one Omega."""
    sys_ = compile_system(spec)
    om = spec.omega
    if isinstance(om, (Full, Carpet)):
        letters = sorted(sys_.trans[sys_.start])
        return letters, {a: letters for a in letters}
    if isinstance(om, Sft):
        alph = alphabet(spec.m)
        init = sorted(sys_.trans[sys_.start])
        succ = {}
        for s, row in sys_.trans.items():
            if s == sys_.start:
                continue
            succ[alph[s]] = sorted(row)
        return init, succ
    raise ValueError("Markov measures need a memory-one Omega (Full, Carpet or Sft)")


def random_bernoulli(spec: SystemSpec, rng: random.Random, sparsity: float = 0.0) -> Bernoulli:
    """Random weights on the letters of a Full or Carpet system."""
    letters, _ = _memory_one_graph(spec)
    if isinstance(spec.omega, Sft):
        raise ValueError("Bernoulli measures need a Full or Carpet system")
    w = {a: (0.0 if rng.random() < sparsity else rng.random() + 1e-3) for a in letters}
    if not any(w.values()):
        w[letters[0]] = 1.0
    total = math.fsum(w.values())
    return Bernoulli(spec, {a: v / total for a, v in w.items()})


def random_markov(spec: SystemSpec, rng: random.Random, sparsity: float = 0.0) -> Markov:
    """Random transition weights on the allowed edges of a memory-one Omega."""
    init, succ = _memory_one_graph(spec)

    def draw(options):
        w = {b: (0.0 if rng.random() < sparsity else rng.random() + 1e-3) for b in options}
        if not any(w.values()):
            w[options[0]] = 1.0
        total = math.fsum(w.values())
        return {b: v / total for b, v in w.items() if v > 0}

    initial = draw(init)
    trans = {a: draw(opts) for a, opts in succ.items() if opts}
    return Markov(spec, initial, trans)


# ---------------------------------------------------------------------------
# Fiber decomposition and masses under P_mu


def fiber_starts(q: int, length: int) -> list:
    return [i for i in range(1, length + 1) if i % q]


def fiber_shape(q: int, i: int, lengths) -> tuple:
    """Known lengths of fiber i, qi, q^2 i, ... inside a word of shape ``lengths``."""
    out = []
    for n in lengths:
        k = 0
        pos = i
        while pos <= n:
            k += 1
            pos *= q
        out.append(k)
    return tuple(out)


def split_fibers(q: int, word: StaircasePrefix) -> list:
    """[(i, fiber word)] for every fiber start i <= longest coordinate length."""
    lengths = word.lengths
    out = []
    for i in fiber_starts(q, lengths[-1]):
        shape = fiber_shape(q, i, lengths)
        words = []
        for c, n in enumerate(shape):
            words.append(tuple(word.words[c][i * q ** a - 1] for a in range(n)))
        out.append((i, StaircasePrefix(tuple(words))))
    return out


def join_fibers(q: int, lengths, fibers: dict) -> StaircasePrefix:
    """Inverse of :func:`split_fibers`: assemble fiber words into one word."""
    words = [[None] * n for n in lengths]
    for i, w in fibers.items():
        for c, digits in enumerate(w.words):
            for a, x in enumerate(digits):
                words[c][i * q ** a - 1] = x
    return StaircasePrefix(tuple(tuple(w) for w in words))


def pmu_cylinder_mass(spec: SystemSpec, mu: FiberMeasure, word: StaircasePrefix, strict: bool = False):
    """P_mu mass of a staircase word of X_Omega: product of fiber masses.

    A word with an inadmissible fiber has mass 0; with ``strict`` this raises
    :class:`InadmissibleWord` instead.
    """
    sys_ = compile_system(spec)
    total = 1
    for i, fw in split_fibers(spec.q, word):
        if sys_.key_of(fw) is None:
            if strict:
                raise InadmissibleWord(f"fiber starting at {i} is not admissible: {fw}")
            return 0
        total = total * mu.mass(fw)
    return total


@dataclass(frozen=True)
class BallSpec:
    """Quasi-cube B_n: the ball word of a point to depths (n, L_2(n), ...)."""

    center: StaircasePrefix
    n: int

    @classmethod
    def around(cls, schedule: ParamSchedule, point: StaircasePrefix, n: int) -> "BallSpec":
        return cls(point.truncate(ball_depths(schedule, n)), n)


def ball_mass(spec: SystemSpec, mu: FiberMeasure, ball: BallSpec):
    return pmu_cylinder_mass(spec, mu, ball.center)


def sample_pmu(spec: SystemSpec, mu: FiberMeasure, n: int, seed=None, rng: Optional[random.Random] = None,
               schedule: Optional[ParamSchedule] = None) -> StaircasePrefix:
    """A P_mu-random point of X_Omega, given to the ball depths of scale n."""
    rng = rng or random.Random(seed)
    schedule = schedule or build_schedule(spec, warn=False)
    lengths = ball_depths(schedule, n)
    fibers = {}
    for i in fiber_starts(spec.q, lengths[-1]):
        fibers[i] = mu.sample_word(fiber_shape(spec.q, i, lengths), rng)
    return join_fibers(spec.q, lengths, fibers)
