import math
import random

import pytest

from conftest import EXAMPLE2
from oracles import example2_t00, kps_dimension, mcmullen_t_empty, tree_fixed_point_2d
from multshift import Carpet, Full, Sft, SystemSpec, apply_F, build_schedule, hausdorff_dimension, solve_t
from multshift.errors import EmptyOmega
from multshift.fixedpoint import ChainTree, contraction_certificate, solve_t_2d

EX2 = SystemSpec(2, (3, 2), Sft(EXAMPLE2))
GAMMA = math.log(2) / math.log(3)


def test_example2_values():
    t00, t_empty, dim = example2_t00()
    tv = solve_t(EX2)
    assert tv.values[(0, ())] == pytest.approx(t00, rel=1e-11)
    assert tv.t_empty == pytest.approx(t_empty, rel=1e-11)
    assert hausdorff_dimension(EX2, tvec=tv).value == pytest.approx(dim, abs=1e-11)
    assert tv.values[(0, ())] == pytest.approx(7.1446, abs=5e-4)
    assert dim == pytest.approx(1.878, abs=1e-3)


def test_example2_symmetries():
    tv = solve_t(EX2)
    v = {k[0]: x for k, x in tv.values.items()}
    assert v[0] == pytest.approx(v[1]) == pytest.approx(v[2]) == pytest.approx(v[4])
    assert v[3] == pytest.approx(v[5])


def test_apply_F_at_one_full_shift():
    spec = SystemSpec(2, (3, 2), Full())
    sch = build_schedule(spec)
    z = {k: 1.0 for k in ChainTree(spec, sch).vertices}
    # (2 * 3^g)^{1/(2g)} with 3^g = 2, i.e. 2^{1/g} = 3
    assert list(apply_F(spec, sch, z).values())[0] == pytest.approx(3.0, rel=1e-14)


def test_full_shift_t_empty():
    tv = solve_t(SystemSpec(2, (3, 2), Full()))
    assert tv.t_empty == pytest.approx((2 * 3 ** GAMMA) ** 2, rel=1e-11)


@pytest.mark.parametrize("m", [(3, 2), (5, 2), (7, 3), (4, 4), (12, 4, 2), (6, 5, 3), (5, 4, 3, 2), (3, 3, 3, 3)])
@pytest.mark.parametrize("q", [2, 3])
def test_full_shift_dimension_is_d(m, q):
    dim = hausdorff_dimension(SystemSpec(q, m, Full()))
    assert dim.value == pytest.approx(len(m), abs=1e-9)
    assert dim.lower <= len(m) + 1e-9 <= dim.upper + 2e-9


@pytest.mark.parametrize("seed", range(12))
def test_carpets_closed_form(seed):
    rng = random.Random(seed)
    m1 = rng.randint(2, 9)
    m2 = rng.randint(2, m1)
    q = rng.randint(2, 4)
    cells = [(x, y) for x in range(m1) for y in range(m2)]
    allowed = rng.sample(cells, rng.randint(1, len(cells)))
    tv = solve_t(SystemSpec(q, (m1, m2), Carpet(frozenset(allowed))))
    assert tv.t_empty == pytest.approx(mcmullen_t_empty(q, (m1, m2), allowed), rel=1e-10)


@pytest.mark.parametrize("m,q", [((3, 2), 2), ((5, 2), 2), ((9, 2), 2), ((17, 2), 2), ((4, 2), 3), ((7, 3), 2)])
def test_tree_oracle_random_sft(m, q):
    rng = random.Random(hash((m, q)) & 0xFFFF)
    n = m[0] * m[1]
    done = 0
    while done < 3:
        M = [[int(rng.random() < 0.55) for _ in range(n)] for _ in range(n)]
        try:
            spec = SystemSpec(q, m, Sft(M))
            got = hausdorff_dimension(spec).value
        except EmptyOmega:
            continue
        _, _, want, _ = tree_fixed_point_2d(q, m, matrix=M)
        assert got == pytest.approx(want, abs=1e-10)
        done += 1


def test_dedicated_2d_solver_agrees():
    for spec in [EX2, SystemSpec(2, (5, 2), Sft([[int((a * 7 + b * 3) % 5 != 0) for b in range(10)] for a in range(10)]))]:
        vals, t_empty = solve_t_2d(spec)
        assert t_empty == pytest.approx(solve_t(spec).t_empty, rel=1e-10)


@pytest.mark.parametrize("base,d,q", [(2, 2, 2), (3, 2, 2), (2, 3, 2), (3, 2, 3), (2, 2, 4)])
def test_equal_bases_match_one_dimensional_system(base, d, q):
    rng = random.Random(base * 100 + d * 10 + q)
    n = base ** d
    done = 0
    while done < 4:
        M = [[int(rng.random() < 0.5) for _ in range(n)] for _ in range(n)]
        try:
            got = hausdorff_dimension(SystemSpec(q, (base,) * d, Sft(M))).value
        except EmptyOmega:
            continue
        assert got == pytest.approx(kps_dimension(q, base, d, matrix=M), abs=1e-10)
        done += 1


def test_contraction_certificate():
    for spec in [EX2, SystemSpec(3, (12, 4, 2), Full()), SystemSpec(2, (5, 2), Carpet({(0, 0), (4, 1)}))]:
        cert = contraction_certificate(spec, iterations=40)
        assert cert["max_ratio"] <= 1 / spec.q + 1e-12
        # both runs start at sup-distance log(cap) and shrink by 1/q per step
        cap_log = ChainTree(spec, build_schedule(spec)).cap_log
        assert cert["gap"] <= cap_log * spec.q ** -40 * (1 + 1e-9)


def test_bidirectional_gap_within_tolerance():
    tv = solve_t(EX2, tol=1e-12)
    assert tv.meta["bidirectional_gap"] <= 2e-12
    assert tv.max_ratio <= 0.5 + 1e-9


def test_bounds_bracket_value():
    dim = hausdorff_dimension(EX2)
    assert dim.lower <= dim.value <= dim.upper
    assert dim.upper - dim.lower < 1e-9
