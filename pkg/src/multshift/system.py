"""The generating set Omega, staircase prefixes and follower sets.

Omega is compiled into a deterministic automaton over d-tuples.  A staircase
prefix is summarised by the automaton state reached after its full d-tuples
together with its trailing partial tuples; that pair is the follower key and
determines the whole subtree of admissible continuations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ConfigError, DepthExceeded, EmptyOmega


# ---------------------------------------------------------------------------
# Omega descriptors


@dataclass(frozen=True)
class Full:
    """The full product shift."""


@dataclass(frozen=True)
class Carpet:
    """Bernoulli support: every position independently takes a tuple of ``allowed``."""

    allowed: frozenset

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(tuple(a) for a in self.allowed))


@dataclass(frozen=True)
class Sft:
    """Memory-one subshift of finite type over d-tuples.

    ``matrix[a][b] = 1`` allows tuple ``b`` right after tuple ``a``; rows and
    columns follow the row-major order of :func:`alphabet`.  ``initial``
    optionally restricts the first tuple.
    """

    matrix: tuple
    initial: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(int(v) for v in row) for row in self.matrix))
        if self.initial is not None:
            object.__setattr__(self, "initial", frozenset(tuple(a) for a in self.initial))


@dataclass(frozen=True)
class ExplicitTree:
    """Finite list of admissible words of length ``depth``.

    ``rule="truncate"`` knows nothing beyond ``depth``; ``rule="window"``
    extends the list periodically: a sequence is admissible when every window
    of length ``depth`` is one of the words.
    """

    words: frozenset
    depth: int
    rule: str = "truncate"

    def __post_init__(self):
        object.__setattr__(self, "words", frozenset(tuple(tuple(a) for a in w) for w in self.words))


@dataclass(frozen=True)
class SystemSpec:
    q: int
    m: tuple
    omega: object = field(default_factory=Full)

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(b) for b in self.m))
        if not isinstance(self.q, int) or self.q < 2:
            raise ConfigError(f"q must be an integer >= 2, got {self.q!r}")
        if len(self.m) < 2:
            raise ConfigError("need at least two coordinates")
        if any(b < 2 for b in self.m):
            raise ConfigError(f"bases must be >= 2, got {self.m}")
        if any(a < b for a, b in zip(self.m, self.m[1:])):
            raise ConfigError(f"bases must be non-increasing, got {self.m}")
        _validate_omega(self)

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.q, self.m, self.omega))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def d(self) -> int:
        return len(self.m)


def alphabet(m) -> list:
    """All d-tuples in row-major order (last coordinate varies fastest)."""
    return list(itertools.product(*(range(b) for b in m)))


def tuple_index(m, a) -> int:
    idx = 0
    for b, x in zip(m, a):
        idx = idx * b + x
    return idx


def _check_tuple(m, a, what):
    if len(a) != len(m) or any(not 0 <= x < b for x, b in zip(a, m)):
        raise ConfigError(f"{what} {a!r} does not fit the bases {m}")


def _validate_omega(spec: SystemSpec):
    om, m = spec.omega, spec.m
    if isinstance(om, Full):
        return
    if isinstance(om, Carpet):
        if not om.allowed:
            raise ConfigError("carpet needs at least one allowed tuple")
        for a in om.allowed:
            _check_tuple(m, a, "carpet tuple")
        return
    if isinstance(om, Sft):
        n = 1
        for b in m:
            n *= b
        if len(om.matrix) != n or any(len(row) != n for row in om.matrix):
            raise ConfigError(f"sft matrix must be {n}x{n} for bases {m}")
        if any(v not in (0, 1) for row in om.matrix for v in row):
            raise ConfigError("sft matrix entries must be 0 or 1")
        for a in om.initial or ():
            _check_tuple(m, a, "initial tuple")
        return
    if isinstance(om, ExplicitTree):
        if om.depth < 1 or not om.words:
            raise ConfigError("explicit tree needs depth >= 1 and some words")
        if om.rule not in ("truncate", "window"):
            raise ConfigError(f"unknown explicit tree rule {om.rule!r}")
        for w in om.words:
            if len(w) != om.depth:
                raise ConfigError("all explicit words must have length depth")
            for a in w:
                _check_tuple(m, a, "word letter")
        return
    raise ConfigError(f"unknown omega descriptor {om!r}")


# ---------------------------------------------------------------------------
# Staircase prefixes


@dataclass(frozen=True, order=True)
class StaircasePrefix:
    """Per-coordinate digit words with weakly increasing lengths."""

    words: tuple

    def __post_init__(self):
        words = tuple(tuple(int(x) for x in w) for w in self.words)
        object.__setattr__(self, "words", words)
        ls = [len(w) for w in words]
        if any(a > b for a, b in zip(ls, ls[1:])):
            raise ValueError(f"staircase lengths must be non-decreasing, got {ls}")

    @property
    def lengths(self) -> tuple:
        return tuple(len(w) for w in self.words)

    @property
    def d(self) -> int:
        return len(self.words)

    def full(self) -> tuple:
        """The d-tuples at positions where every coordinate is known."""
        n = len(self.words[0])
        return tuple(tuple(w[k] for w in self.words) for k in range(n))

    def partial(self) -> tuple:
        """Known digits at the remaining positions, lowest known coordinate first."""
        ls = self.lengths
        out = []
        for k in range(ls[0], ls[-1]):
            out.append(tuple(w[k] for w, n in zip(self.words, ls) if n > k))
        return tuple(out)

    @classmethod
    def from_positions(cls, d: int, full: Iterable, partial: Iterable = ()):
        words = [[] for _ in range(d)]
        for a in full:
            for c in range(d):
                words[c].append(a[c])
        for pt in partial:
            c0 = d - len(pt)
            for c, x in zip(range(c0, d), pt):
                words[c].append(x)
        return cls(tuple(tuple(w) for w in words))

    def truncate(self, lengths) -> "StaircasePrefix":
        return StaircasePrefix(tuple(w[:n] for w, n in zip(self.words, lengths)))


def check_shape(lengths, d: Optional[int] = None) -> tuple:
    ls = tuple(int(n) for n in lengths)
    if d is not None and len(ls) != d:
        raise ValueError(f"expected {d} lengths, got {ls}")
    if any(n < 0 for n in ls) or any(a > b for a, b in zip(ls, ls[1:])):
        raise ValueError(f"staircase lengths must be non-negative and non-decreasing, got {ls}")
    return ls


def column_path(lengths) -> list:
    """Coordinate indices revealing a staircase shape position by position.

    Each intermediate shape is itself a staircase.
    """
    ls = check_shape(lengths)
    d = len(ls)
    path = []
    for k in range(ls[-1]):
        for c in range(d - 1, -1, -1):
            if ls[c] > k:
                path.append(c)
    return path


def shape_of_partial(d: int, partial: tuple) -> tuple:
    """Staircase lengths relative to the last full position."""
    ls = [0] * d
    for pt in partial:
        for c in range(d - len(pt), d):
            ls[c] += 1
    return tuple(ls)


# ---------------------------------------------------------------------------
# Compiled automaton


class System:
    """Automaton form of a :class:`SystemSpec` with memoised queries.

    Instances are obtained through :func:`compile_system` and never mutated
    apart from their memo tables.
    """

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.m = spec.m
        self.d = spec.d
        self.alphabet = alphabet(spec.m)
        self.start, self.trans, self.frontier, self.collapse = _build_automaton(spec, self.alphabet)
        self._ok = {}
        self._ext = {}

    # automaton primitives

    def step(self, state, a):
        if state in self.frontier:
            raise DepthExceeded("explicit tree queried beyond its declared depth")
        return self.trans[state].get(a)

    def run(self, full):
        s = self.start
        for a in full:
            s = self.step(s, a)
            if s is None:
                return None
        return s

    def partial_ok(self, state, partial) -> bool:
        """Whether some path from ``state`` matches the partial tuples."""
        if not partial:
            return True
        key = (state, partial)
        hit = self._ok.get(key)
        if hit is not None:
            return hit
        states = {state}
        d = self.d
        for pt in partial:
            free = [range(b) for b in self.m[: d - len(pt)]]
            nxt = set()
            for s in states:
                for head in itertools.product(*free):
                    s2 = self.step(s, head + pt)
                    if s2 is not None:
                        nxt.add(s2)
            states = nxt
            if not states:
                break
        ok = bool(states)
        self._ok[key] = ok
        return ok

    # keys

    def root_key(self):
        return (self.start, ())

    def key_of(self, u: StaircasePrefix):
        s = self.run(u.full())
        if s is None:
            return None
        partial = u.partial()
        if not self.partial_ok(s, partial):
            return None
        return (s, partial)

    def extend(self, key, c: int) -> tuple:
        """Admissible one-digit extensions along coordinate ``c`` (0-based).

        Returns ``(digit, child_key)`` pairs in increasing digit order.
        """
        memo = self._ext.get((key, c))
        if memo is not None:
            return memo
        state, partial = key
        d = self.d
        r = sum(1 for pt in partial if d - len(pt) <= c)
        out = []
        if c == 0:
            if not partial or len(partial[0]) != d - 1:
                raise ValueError("cannot complete a position whose other digits are unknown")
            rest = partial[1:]
            for x in range(self.m[0]):
                s2 = self.step(state, (x,) + partial[0])
                if s2 is not None and self.partial_ok(s2, rest):
                    out.append((x, (s2, rest)))
        else:
            if r < len(partial):
                pt = partial[r]
                if len(pt) != d - c - 1:
                    raise ValueError("digit would break the staircase shape")
            elif c == d - 1:
                pt = ()
            else:
                raise ValueError("digit would break the staircase shape")
            for x in range(self.m[c]):
                np_ = partial[:r] + ((x,) + pt,) + partial[r + 1:]
                if self.partial_ok(state, np_):
                    out.append((x, (state, np_)))
        out = tuple(out)
        self._ext[(key, c)] = out
        return out

    def canonical(self, key):
        """Coarsest key the solvers may share between vertices."""
        if self.collapse:
            return (0, key[1])
        return key


_SYSTEMS: dict = {}


def compile_system(spec: SystemSpec) -> System:
    sys_ = _SYSTEMS.get(spec)
    if sys_ is None:
        if len(_SYSTEMS) > 64:
            _SYSTEMS.clear()
        sys_ = System(spec)
        _SYSTEMS[spec] = sys_
    return sys_


def _prune(start, trans, frontier):
    """Drop states without continuation, repeatedly."""
    alive = set(trans)
    changed = True
    while changed:
        changed = False
        for s in list(alive):
            if s in frontier:
                continue
            targets = [t for t in trans[s].values() if t in alive]
            if not targets:
                alive.discard(s)
                changed = True
    if start not in alive:
        raise EmptyOmega("Omega is empty after removing dead states")
    pruned = {s: {a: t for a, t in trans[s].items() if t in alive} for s in alive}
    return pruned


def _build_automaton(spec: SystemSpec, alph):
    om = spec.omega
    if isinstance(om, Full):
        return 0, {0: {a: 0 for a in alph}}, frozenset(), True
    if isinstance(om, Carpet):
        trans = {0: {a: 0 for a in alph if a in om.allowed}}
        return 0, trans, frozenset(), True
    if isinstance(om, Sft):
        init = om.initial
        trans = {-1: {a: i for i, a in enumerate(alph) if init is None or a in init}}
        for i, row in enumerate(om.matrix):
            trans[i] = {alph[k]: k for k, v in enumerate(row) if v}
        return -1, _prune(-1, trans, frozenset()), frozenset(), False
    if isinstance(om, ExplicitTree):
        if om.rule == "truncate":
            trans = {(): {}}
            for w in sorted(om.words):
                for k in range(len(w)):
                    node = w[:k]
                    trans.setdefault(node, {})[w[k]] = w[: k + 1]
                    trans.setdefault(w[: k + 1], {})
            frontier = frozenset(w for w in trans if len(w) == om.depth)
            return (), _prune((), trans, frontier), frontier, False
        prefixes = {w[:k] for w in om.words for k in range(om.depth + 1)}
        mem = om.depth - 1
        trans = {}
        todo = [()]
        while todo:
            s = todo.pop()
            if s in trans:
                continue
            trans[s] = {}
            for a in alph:
                w = s + (a,)
                if len(w) <= mem:
                    if w in prefixes:
                        trans[s][a] = w
                elif w in om.words:
                    trans[s][a] = w[1:] if mem > 0 else ()
            todo.extend(t for t in trans[s].values() if t not in trans)
        return (), _prune((), trans, frozenset()), frozenset(), False
    raise ConfigError(f"unknown omega descriptor {om!r}")


# ---------------------------------------------------------------------------
# Public operations


def enumerate_prefixes(spec: SystemSpec, lengths) -> list:
    """All admissible staircase prefixes of the given shape, sorted."""
    ls = check_shape(lengths, spec.d)
    sys_ = compile_system(spec)
    path = column_path(ls)
    out = []

    def walk(key, digits, i):
        if i == len(path):
            out.append(digits)
            return
        c = path[i]
        for x, child in sys_.extend(key, c):
            walk(child, digits + ((c, x),), i + 1)

    walk(sys_.root_key(), (), 0)
    if not out:
        raise EmptyOmega(f"no admissible prefix of shape {ls}")
    res = []
    for digits in out:
        words = [[] for _ in range(spec.d)]
        for c, x in digits:
            words[c].append(x)
        res.append(StaircasePrefix(tuple(tuple(w) for w in words)))
    res.sort()
    return res


def is_admissible(spec: SystemSpec, u: StaircasePrefix) -> bool:
    return compile_system(spec).key_of(u) is not None


def follower_key(spec: SystemSpec, u: StaircasePrefix):
    """Canonical identifier of the follower set of ``u``.

    For Full and Carpet the key only holds the trailing partial digits; for the
    other descriptors it also holds the automaton state reached by the full
    part (the last tuple for a memory-one shift, the whole prefix for a
    truncated explicit tree).
    """
    sys_ = compile_system(spec)
    key = sys_.key_of(u)
    if key is None:
        raise ValueError(f"{u} is not admissible")
    return sys_.canonical(key)


def followers(spec: SystemSpec, u: StaircasePrefix) -> list:
    """Tuples ``(x_1, ..., x_d)`` extending every coordinate of ``u`` by one digit."""
    sys_ = compile_system(spec)
    key = sys_.key_of(u)
    if key is None:
        raise ValueError(f"{u} is not admissible")
    out = []

    def walk(k, c, digits):
        if c < 0:
            out.append(tuple(reversed(digits)))
            return
        for x, child in sys_.extend(k, c):
            walk(child, c - 1, digits + (x,))

    walk(key, spec.d - 1, ())
    out.sort()
    return out
