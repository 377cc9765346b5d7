"""Desk-scale checks: exact quasi-square counts, Monte Carlo local dimension, bitmaps."""
from __future__ import annotations

import hashlib
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Optional

from .errors import BudgetExceeded, ResolutionTooCoarse
from .measures import FiberMeasure, fiber_shape, fiber_starts
from .schedule import ParamSchedule, L_map, ball_depths, build_schedule
from .system import StaircasePrefix, SystemSpec, column_path, compile_system


# ---------------------------------------------------------------------------
# Box counting


def _fiber_dfs_count(sys_, shape) -> int:
    """Admissible fiber words of ``shape`` by plain depth-first search."""
    path = column_path(shape)
    d = len(shape)

    def words_of(digits):
        words = [[] for _ in range(d)]
        for c, x in digits:
            words[c].append(x)
        return StaircasePrefix(tuple(tuple(w) for w in words))

    def walk(digits, i):
        if i == len(path):
            return 1
        c = path[i]
        total = 0
        for x in range(sys_.m[c]):
            nd = digits + ((c, x),)
            if sys_.key_of(words_of(nd)) is not None:
                total += walk(nd, i + 1)
        return total

    return walk((), 0)


def box_count(spec: SystemSpec, n: int, method: str = "fibers", budget: int = 10 ** 7,
              schedule: Optional[ParamSchedule] = None) -> int:
    """Number of quasi-squares of scale n meeting X_Omega.

    ``method="fibers"`` multiplies per-fiber search counts (fibers are
    independent in X_Omega); ``method="brute"`` searches whole words position
    by position, checking every fiber as it grows, and refuses to start when
    the unconstrained word count exceeds ``budget``.
    """
    schedule = schedule or build_schedule(spec, warn=False)
    lengths = ball_depths(schedule, n)
    sys_ = compile_system(spec)
    q = spec.q
    if method == "fibers":
        total = 1
        for i in fiber_starts(q, lengths[-1]):
            shape = fiber_shape(q, i, lengths)
            bound = 1
            for b, k in zip(spec.m, shape):
                bound *= b ** k
            if bound > budget:
                raise BudgetExceeded(f"fiber {i} has up to {bound} words", bound=bound)
            total *= _fiber_dfs_count(sys_, shape)
        return total
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    bound = 1
    for pos in range(1, lengths[-1] + 1):
        for c, ln in enumerate(lengths):
            if pos <= ln:
                bound *= spec.m[c]
    if bound > budget:
        raise BudgetExceeded(f"brute-force count needs up to {bound} words", bound=bound)
    d = spec.d
    L = lengths[-1]
    known = [[c for c in range(d) if pos <= lengths[c]] for pos in range(1, L + 1)]

    def fiber_of(pos):
        i = pos
        while i % q == 0:
            i //= q
        return i

    def walk(pos, fibers):
        if pos > L:
            return 1
        i = fiber_of(pos)
        w = fibers.get(i, tuple(() for _ in range(d)))
        cs = known[pos - 1]
        total = 0
        for digits in _product([range(spec.m[c]) for c in cs]):
            nw = list(w)
            for c, x in zip(cs, digits):
                nw[c] = nw[c] + (x,)
            u = StaircasePrefix(tuple(nw))
            if sys_.key_of(u) is None:
                continue
            fibers[i] = u.words
            total += walk(pos + 1, fibers)
        fibers[i] = w
        return total

    return walk(1, {})


def _product(ranges):
    out = [()]
    for r in ranges:
        out = [t + (x,) for t in out for x in r]
    return out


def box_count_slope(spec: SystemSpec, ns, method: str = "fibers") -> float:
    """Least-squares slope of log_{m_1}(box count) against n."""
    xs = list(ns)
    ys = [math.log(box_count(spec, n, method)) / math.log(spec.m[0]) for n in xs]
    mx, my = statistics.fmean(xs), statistics.fmean(ys)
    num = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = math.fsum((x - mx) ** 2 for x in xs)
    return num / den


# ---------------------------------------------------------------------------
# Monte Carlo local dimension


@dataclass
class LocalDimension:
    mean: float
    stderr: float
    samples: int
    n: int
    seed: object
    values: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples,
                "n": self.n, "seed": self.seed}


def estimate_local_dimension(spec: SystemSpec, mu: FiberMeasure, samples: int, n: int, seed=0,
                             schedule: Optional[ParamSchedule] = None) -> LocalDimension:
    """Mean of -log_{m_1} P_mu(B_n(x)) / n over P_mu-random points x."""
    schedule = schedule or build_schedule(spec, warn=False)
    rng = random.Random(seed)
    lengths = ball_depths(schedule, n)
    shapes = [fiber_shape(spec.q, i, lengths) for i in fiber_starts(spec.q, lengths[-1])]
    cache = {}
    scale = n * math.log(spec.m[0])
    values = []
    for _ in range(samples):
        total = 0.0
        for shape in shapes:
            w = mu.sample_word(shape, rng)
            lm = cache.get(w)
            if lm is None:
                lm = -math.log(float(mu.mass(w)))
                cache[w] = lm
            total += lm
        values.append(total / scale)
    mean = statistics.fmean(values)
    err = statistics.stdev(values) / math.sqrt(samples) if samples > 1 else 0.0
    return LocalDimension(mean, err, samples, n, seed, values)


# ---------------------------------------------------------------------------
# Rendering


@dataclass(frozen=True)
class RenderSpec:
    order: int
    resolution: int = 256

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")


@dataclass
class Bitmap:
    width: int
    height: int
    pixels: bytes          # row-major, top row first, 0 = dark, 255 = light
    meta: dict = field(default_factory=dict)

    def sha256(self) -> str:
        return hashlib.sha256(self.pixels).hexdigest()

    def dark(self, x: int, y: int) -> bool:
        return self.pixels[y * self.width + x] == 0

    def to_pgm(self) -> bytes:
        comment = " ".join(f"{k}={v}" for k, v in sorted(self.meta.items()))
        head = f"P5\n# {comment}\n{self.width} {self.height}\n255\n".encode()
        return head + self.pixels


def write_pgm(path, bitmap: Bitmap) -> None:
    with open(path, "wb") as fh:
        fh.write(bitmap.to_pgm())


def render(spec: SystemSpec, rspec: RenderSpec, schedule: Optional[ParamSchedule] = None) -> Bitmap:
    """Bitmap of the order-k approximation of X_Omega in the unit square.

    The approximation keeps the points whose fiber words are admissible up to
    position q^k.  Cells of size m_1^{-n} x m_2^{-L(n)} are used at the finest
    scale n whose cells are no smaller than a pixel; a pixel is dark when it
    meets a cell that meets the approximation.
    """
    if spec.d != 2:
        raise ValueError("rendering is two-dimensional")
    schedule = schedule or build_schedule(spec, warn=False)
    m1, m2 = spec.m
    q = spec.q
    R = rspec.resolution
    n = 0
    while m2 ** L_map(schedule, 2, n + 1) <= R:
        n += 1
    if n == 0:
        raise ResolutionTooCoarse(f"resolution {R} is below one cell of scale 1 ({m2 ** L_map(schedule, 2, 1)} rows)")
    L = L_map(schedule, 2, n)
    D = q ** rspec.order
    sys_ = compile_system(spec)

    # per-fiber admissibility of the constrained part, cached by known digits
    fibers = []
    for i in fiber_starts(q, min(L, D)):
        cx, cy = fiber_shape(q, i, (n, L))
        c = fiber_shape(q, i, (D,))[0]
        lx, ly = min(cx, c), min(cy, c)
        xpos = [i * q ** a - 1 for a in range(lx)]
        ypos = [i * q ** a - 1 for a in range(ly)]
        fibers.append((xpos, ypos, {}))

    def digits(v, base, length):
        out = [0] * length
        for k in range(length - 1, -1, -1):
            v, out[k] = divmod(v, base)
        return out

    W, H = m1 ** n, m2 ** L
    xs = [digits(v, m1, n) for v in range(W)]
    ys = [digits(v, m2, L) for v in range(H)]
    grid = [bytearray(W) for _ in range(H)]
    for yi, yd in enumerate(ys):
        row = grid[yi]
        for xi, xd in enumerate(xs):
            ok = True
            for xpos, ypos, memo in fibers:
                key = (tuple(xd[p] for p in xpos), tuple(yd[p] for p in ypos))
                hit = memo.get(key)
                if hit is None:
                    hit = sys_.key_of(StaircasePrefix(key)) is not None
                    memo[key] = hit
                if not hit:
                    ok = False
                    break
            if ok:
                row[xi] = 1

    # summed-area table of dark cells for pixel queries
    sat = [[0] * (W + 1) for _ in range(H + 1)]
    for yi in range(H):
        acc = 0
        for xi in range(W):
            acc += grid[yi][xi]
            sat[yi + 1][xi + 1] = sat[yi][xi + 1] + acc

    def cells(a, cnt):
        lo = (a * cnt) // R
        hi = -((-(a + 1) * cnt) // R)
        return lo, hi

    out = bytearray(R * R)
    for py in range(R):
        # top pixel row shows y close to 1
        y0, y1 = cells(R - 1 - py, H)
        for px in range(R):
            x0, x1 = cells(px, W)
            s = sat[y1][x1] - sat[y0][x1] - sat[y1][x0] + sat[y0][x0]
            out[py * R + px] = 0 if s else 255
    meta = {"semantics": "cell-intersects", "order": rspec.order, "depth": D, "n": n, "L": L,
            "m": f"{m1},{m2}", "q": q}
    return Bitmap(R, R, bytes(out), meta)
