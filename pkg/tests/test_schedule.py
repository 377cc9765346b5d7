import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import ball_lengths, fiber_shape_frequencies
from multshift import Full, SystemSpec, build_schedule, delta, omega_weights, sigma_permutation
from multshift.errors import IndexOutOfSchedule
from multshift.schedule import L_map, ball_depths, delta_sum, omega_closed_forms, schedule_summary


def floor_log(q, x):
    """Largest k >= 0 with q^k <= x, by float logs and brute exponents 0..8."""
    return max(k for k in range(0, 9) if q ** k <= x * (1 + 1e-13))


def random_spec(rng, d=None):
    d = d or rng.choice([2, 3, 4])
    while True:
        m = sorted((rng.randint(2, 40) for _ in range(d)), reverse=True)
        q = rng.choice([2, 2, 3, 4])
        spec = SystemSpec(q, tuple(m), Full())
        sch = build_schedule(spec, warn=False)
        if not sch.ties:
            return spec, sch


def test_sponge_parameters():
    sch = build_schedule(SystemSpec(2, (12, 4, 2), Full()))
    assert sch.j == {2: 0, 3: 1}
    assert sch.n[2] == 0
    assert sch.p == {1: 1, 2: 1}


@pytest.mark.parametrize("seed", range(20))
def test_integers_match_defining_inequalities(seed):
    spec, sch = random_spec(random.Random(seed))
    m, q, d = spec.m, spec.q, spec.d
    for t in range(2, d + 1):
        ratio = math.log(m[t - 2]) / math.log(m[t - 1])
        if abs(math.log(ratio, q) - round(math.log(ratio, q))) > 1e-9:
            assert sch.j[t] == floor_log(q, ratio)
    for t in range(1, d):
        ratio = math.log(m[t - 1]) / math.log(m[-1])
        if abs(math.log(ratio, q) - round(math.log(ratio, q))) > 1e-9:
            assert sch.p[t] == floor_log(q, ratio)


def test_two_dimensional_j():
    assert build_schedule(SystemSpec(2, (3, 2))).j[2] == 0
    assert build_schedule(SystemSpec(2, (5, 2))).j[2] == 1
    assert build_schedule(SystemSpec(2, (17, 2))).j[2] == 2
    assert build_schedule(SystemSpec(2, (4, 2))).j[2] == 1   # exact power: 2^{2} = 4


@pytest.mark.parametrize("n", [0, 1, 2, 3, 7, 20])
def test_L_map_is_least_covering_length(n):
    sch = build_schedule(SystemSpec(2, (3, 2)))
    L = L_map(sch, 2, n)
    assert 2 ** L >= 3 ** n and (L == 0 or 2 ** (L - 1) < 3 ** n)


def test_ball_depths_example():
    sch = build_schedule(SystemSpec(2, (3, 2)))
    assert ball_depths(sch, 2) == (2, 4)
    assert ball_depths(build_schedule(SystemSpec(2, (12, 4, 2))), 3) == (3, 6, 12)


def test_sigma_out_of_range():
    sch = build_schedule(SystemSpec(2, (12, 4, 2)))
    assert set(sigma_permutation(sch, 1)) == {1, 2}
    with pytest.raises(IndexOutOfSchedule):
        sigma_permutation(sch, 3)
    with pytest.raises(IndexOutOfSchedule):
        delta(sch, 1, 5, 3)


@pytest.mark.parametrize("seed", range(30))
def test_delta_nonnegative_and_sums(seed):
    spec, sch = random_spec(random.Random(100 + seed))
    q = spec.q
    for p, s, t in sch.terms(30):
        assert delta(sch, s, t, p) >= -1e-15
    assert delta_sum(sch) == pytest.approx((q - 1) / q, abs=1e-10)
    for p in range(1, 25):
        tot = math.fsum(delta(sch, s, t, pp) for pp, s, t in sch.terms(25) if pp == p)
        assert tot == pytest.approx((q - 1) ** 2 / q ** (p + 1), rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("seed", range(30))
def test_omega_closed_forms(seed):
    spec, sch = random_spec(random.Random(200 + seed))
    w = omega_weights(sch)
    for k, v in omega_closed_forms(sch).items():
        if k == "outer":
            continue
        assert w[k - 1] == pytest.approx(v, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("m,q", [((3, 2), 2), ((5, 2), 2), ((17, 2), 2), ((12, 4, 2), 2), ((30, 7, 3), 2),
                                 ((9, 5, 3, 2), 2), ((20, 6, 2), 3)])
def test_delta_matches_fiber_shape_frequencies(m, q):
    spec = SystemSpec(q, m, Full())
    sch = build_schedule(spec, warn=False)
    freq = fiber_shape_frequencies(q, ball_lengths(q, m, 10 ** 12))
    P = 14
    predicted = {}
    for p, s, t in sch.terms(P):
        shape = sch.piece_shape(s, t, p)
        predicted[shape] = predicted.get(shape, 0.0) + delta(sch, s, t, p)
    for shape, v in predicted.items():
        if v > 1e-14:
            assert freq.get(shape, 0.0) == pytest.approx(v, rel=1e-6, abs=1e-9), shape
    # every frequent shape with last length <= P is predicted
    for shape, f in freq.items():
        if shape[-1] <= P and f > 1e-9:
            assert shape in predicted


def test_summary_is_json_ready():
    import json
    s = schedule_summary(build_schedule(SystemSpec(2, (12, 4, 2))))
    assert json.loads(json.dumps(s))["j"] == {"2": 0, "3": 1}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 60), min_size=2, max_size=4), st.integers(2, 5))
def test_schedule_properties(ms, q):
    m = tuple(sorted(ms, reverse=True))
    sch = build_schedule(SystemSpec(q, m, Full()), warn=False)
    d = len(m)
    assert sch.p[d - 1] == sch.j[d]
    for t in range(1, d):
        assert 1 - 1e-12 <= sch.K[t] <= q + 1e-12
    assert delta_sum(sch) == pytest.approx((q - 1) / q, abs=1e-10)
    assert all(delta(sch, s, t, p) >= -1e-15 for p, s, t in sch.terms(sch.p[1] + 3))
