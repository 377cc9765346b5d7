import math
import random

import pytest

from conftest import EXAMPLE2, TWO_D_FIXTURES
from oracles import binary_entropy, ly_counterexample_gap
from multshift import Carpet, Full, PointMass, Sft, StaircasePrefix, SystemSpec, build_schedule
from multshift.config import build_measure
from multshift.entropy import (
    conditional_entropy, join_shape, ly_check, ly_condition, partition_entropy, pmu_dimension_2d,
    pmu_dimension_3d, pmu_dimension_series, series_3d, series_tail,
)
from multshift.fixedpoint import hausdorff_dimension
from multshift.measures import Markov, optimal_measure, random_bernoulli, random_markov, uniform_bernoulli
from multshift.schedule import delta

EX2 = SystemSpec(2, (3, 2), Sft(EXAMPLE2))


def brute_entropy(mu, spec, shape):
    from multshift import enumerate_prefixes
    return -math.fsum(float(p) * math.log(float(p)) for p in
                      (mu.mass(u) for u in enumerate_prefixes(spec, shape)) if p) / math.log(spec.m[-1])


def test_uniform_entropies(full32):
    mu = uniform_bernoulli(full32)
    assert partition_entropy(full32, mu, join_shape(2, {1: 1})) == pytest.approx(1.0, abs=1e-14)
    assert partition_entropy(full32, mu, join_shape(2, {2: 1, 1: 1})) == pytest.approx(math.log2(6), abs=1e-14)


def test_join_shape():
    assert join_shape(3, {3: 1, 2: 2, 1: 4}) == (1, 2, 4)
    assert join_shape(2, {2: 3, 1: 1}) == (3, 3)
    assert join_shape(2, {2: -1, 1: 2}) == (0, 2)
    with pytest.raises(ValueError):
        join_shape(2, {3: 1})


def test_point_mass_entropy_zero(full32):
    mu = PointMass(full32, StaircasePrefix(((0, 1, 2, 0), (1, 1, 0, 0, 1, 1))))
    for shape in [(0, 1), (1, 1), (2, 5), (4, 6)]:
        assert partition_entropy(full32, mu, shape) == 0


@pytest.mark.parametrize("seed", range(6))
def test_markov_entropy_matches_enumeration(seed):
    rng = random.Random(seed)
    mu = random_markov(EX2, rng, sparsity=0.2 * (seed % 2))
    for shape in [(0, 3), (1, 3), (2, 2), (2, 5), (3, 6), (0, 7)]:
        assert partition_entropy(EX2, mu, shape) == pytest.approx(brute_entropy(mu, EX2, shape), abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_chain_rule_and_subadditivity(seed):
    rng = random.Random(100 + seed)
    mu = random_markov(EX2, rng)
    for p in range(1, 6):
        # alpha^2_p v alpha^1_{p+2} against its two factors
        P, Q, J = (p, p), (0, p + 2), (p, p + 2)
        hP, hQ, hJ = (partition_entropy(EX2, mu, s) for s in (P, Q, J))
        assert hJ <= hP + hQ + 1e-12
        # H(J) = H(Q) + H(J | Q), with H(J | Q) computed by direct conditioning
        from multshift import enumerate_prefixes
        masses = {u: float(mu.mass(u)) for u in enumerate_prefixes(EX2, J)}
        proj = {}
        for u, w in masses.items():
            proj[u.words[1]] = proj.get(u.words[1], 0.0) + w
        hcond = -math.fsum(w * math.log(w / proj[u.words[1]]) for u, w in masses.items() if w) / math.log(2)
        assert hJ == pytest.approx(hQ + hcond, abs=1e-10)
        assert conditional_entropy(EX2, mu, J, Q) == pytest.approx(hcond, abs=1e-10)


@pytest.mark.parametrize("name", TWO_D_FIXTURES)
def test_series_two_d_matches_general(fixtures, name):
    cfg = fixtures[name]
    mu = build_measure(cfg.spec, cfg.measure)
    general = pmu_dimension_series(cfg.spec, mu, terms=40).value
    assert pmu_dimension_2d(cfg.spec, mu, terms=40) == pytest.approx(general, abs=1e-10)


@pytest.mark.parametrize("q,m,longer", [
    (2, (6, 3, 2), True),     # q^{J+1} g2 g3 <= 1: the second formula
    (2, (8, 4, 3), False),
    (3, (5, 3, 2), False),
    (2, (12, 4, 2), False),
    (2, (7, 3, 2), True),
    (3, (7, 3, 2), False),
])
def test_series_three_d_both_branches(q, m, longer):
    rng = random.Random(sum(m))
    g2 = math.log(m[1]) / math.log(m[0])
    g3 = math.log(m[2]) / math.log(m[1])
    sch = build_schedule(SystemSpec(q, m, Full()), warn=False)
    J = sch.j[2] + sch.j[3]
    assert (q ** (J + 1) * g2 * g3 <= 1) == longer
    for omega in (Full(), Carpet(frozenset(a for a in __import__("itertools").product(*map(range, m))
                                           if rng.random() < 0.5) | {(0, 0, 0)})):
        spec = SystemSpec(q, m, omega)
        for mu in (random_bernoulli(spec, rng), random_markov(spec, rng)):
            general = pmu_dimension_series(spec, mu, terms=40).value
            assert pmu_dimension_3d(spec, mu, terms=40) == pytest.approx(general, abs=1e-12)


def test_series_three_d_coefficients_are_deltas():
    # feeding an indicator of a single shape picks out its delta coefficient
    spec = SystemSpec(2, (6, 3, 2), Full())
    sch = build_schedule(spec, warn=False)
    for p, s, t in sch.terms(8):
        shape = sch.piece_shape(s, t, p)
        got = series_3d(spec, lambda sh: 1.0 if tuple(sh) == tuple(shape) else 0.0, terms=40)
        want = math.fsum(delta(sch, s2, t2, p2) for p2, s2, t2 in sch.terms(40)
                         if tuple(sch.piece_shape(s2, t2, p2)) == tuple(shape))
        assert got == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_uniform_full_shift_series_is_d(d):
    spec = SystemSpec(2, tuple(range(d + 1, 1, -1)), Full())
    dim = pmu_dimension_series(spec, uniform_bernoulli(spec), terms=40)
    assert dim.lower <= d + 1e-12 <= dim.upper + 1e-12
    assert abs(dim.value - d) <= dim.meta["tail"] + 1e-12


def test_optimal_series_matches_fixed_point():
    mu = optimal_measure(EX2)
    dim = pmu_dimension_series(EX2, mu, terms=40)
    hd = hausdorff_dimension(EX2)
    assert dim.value == pytest.approx(1.878, abs=1e-3)
    assert abs(dim.value - hd.value) <= dim.meta["tail"] + 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_variational_inequality(seed):
    rng = random.Random(seed)
    best = pmu_dimension_series(EX2, optimal_measure(EX2), terms=40)
    mu = random_markov(EX2, rng, sparsity=0.3 * (seed % 3 == 0))
    dim = pmu_dimension_series(EX2, mu, terms=40)
    assert dim.value <= best.upper + 1e-9


def test_tail_bound_soundness():
    mu = random_markov(EX2, random.Random(7))
    prev = None
    for P in (3, 5, 10, 20, 40):
        dim = pmu_dimension_series(EX2, mu, terms=P)
        if prev is not None:
            assert prev.lower - 1e-12 <= dim.value <= prev.upper + 1e-12
        prev = dim


def test_series_tail_formula():
    spec = SystemSpec(3, (4, 2), Full())
    # direct sum of p * C * (q-1)^2 / q^{p+1} for p > P
    C = math.log(8) / math.log(2)
    for P in (1, 5, 20):
        direct = math.fsum(p * C * 4 / 3 ** (p + 1) for p in range(P + 1, 600))
        assert series_tail(spec, P) == pytest.approx(direct, rel=1e-12)


def test_ly_bernoulli_full_shift(full32):
    mu = random_bernoulli(full32, random.Random(3))
    rep = ly_check(full32, mu, depth=5)
    assert rep.condition_holds_to_depth
    assert abs(rep.gap) <= 1e-10


def test_ly_point_mass(full32):
    mu = PointMass(full32, StaircasePrefix(((1,) * 40, (0,) * 40)))
    rep = ly_check(full32, mu, depth=4, terms=30)
    assert rep.condition_holds_to_depth and rep.gap == 0 and rep.dim_H_pmu == 0


def test_ly_counterexample(fixtures):
    cfg = fixtures["ly_counterexample"]
    spec = cfg.spec
    mu = build_measure(spec, cfg.measure)
    rep = ly_check(spec, mu, depth=5)
    assert not rep.condition_holds_to_depth
    assert rep.gap == pytest.approx(ly_counterexample_gap(), abs=1e-9)
    # the three entropy facts that make the example work
    assert partition_entropy(spec, mu, (0, 1)) == 0
    assert partition_entropy(spec, mu, (0, 2)) == pytest.approx(binary_entropy(1 / 3), abs=1e-12)
    for p in range(2, 6):
        assert conditional_entropy(spec, mu, (p - 1, p), (p - 1, p - 1)) == pytest.approx(0, abs=1e-12)


def test_ly_condition_detects_dependence():
    # x_1 copied into y_2: the conditional law of x_1 depends on the y-extension
    spec = SystemSpec(2, (2, 2), Sft([[int(b[1] == a[0]) for b in [(0, 0), (0, 1), (1, 0), (1, 1)]]
                                      for a in [(0, 0), (0, 1), (1, 0), (1, 1)]]))
    init = {a: 0.25 for a in [(0, 0), (0, 1), (1, 0), (1, 1)]}
    trans = {a: {b: 0.5 for b in init if b[1] == a[0]} for a in init}
    holds, bad = ly_condition(spec, Markov(spec, init, trans), depth=3)
    assert not holds and bad
