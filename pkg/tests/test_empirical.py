import math

import pytest

from conftest import EXAMPLE2, TWO_D_FIXTURES
from oracles import ball_lengths
from multshift import Carpet, Full, PointMass, Sft, StaircasePrefix, SystemSpec, build_schedule
from multshift.empirical import (
    Bitmap, RenderSpec, box_count, box_count_slope, estimate_local_dimension, render, write_pgm,
)
from multshift.errors import BudgetExceeded, ResolutionTooCoarse
from multshift.fixedpoint import hausdorff_dimension
from multshift.measures import optimal_measure, uniform_bernoulli
from multshift.minkowski import minkowski_dimension
from multshift.schedule import ball_depths

EX2 = SystemSpec(2, (3, 2), Sft(EXAMPLE2))
FIG1 = "sft_figure1"
FIG1_ORDER4_SHA = "720536359482a9e7ca1c42914a3a678caebe02cb6b712360d438186f7dd2cb0f"
FIG1_ORDER4_DARK = 9664
EX2_BOX_COUNTS = {2: 112, 3: 672, 4: 6336, 5: 38016, 6: 354816, 7: 4257792, 8: 19998720}


def test_full_shift_box_count(full32):
    assert ball_depths(build_schedule(full32), 2) == (2, 4)
    assert box_count(full32, 2) == 144 == box_count(full32, 2, method="brute")


def test_ball_lengths_match_oracle(full32):
    sch = build_schedule(full32)
    for n in range(1, 40):
        assert list(ball_depths(sch, n)) == ball_lengths(2, (3, 2), n)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_equal_bases_carpet_counts(n):
    A = frozenset({(0, 0), (1, 2), (2, 1), (2, 2)})
    spec = SystemSpec(3, (3, 3), Carpet(A))
    assert box_count(spec, n) == len(A) ** n


@pytest.mark.parametrize("name", TWO_D_FIXTURES)
def test_brute_matches_fibers(fixtures, name):
    spec = fixtures[name].spec
    for n in (1, 2, 3):
        assert box_count(spec, n, method="brute") == box_count(spec, n)


def test_example_counts_regression():
    for n, c in EX2_BOX_COUNTS.items():
        assert box_count(EX2, n) == c


def test_counts_bounded_by_full_shift(fixtures):
    for name in TWO_D_FIXTURES:
        spec = fixtures[name].spec
        m1, m2 = spec.m
        sch = build_schedule(spec, warn=False)
        for n in range(1, 7):
            _, L = ball_depths(sch, n)
            assert box_count(spec, n) <= (m1 * m2) ** n * m2 ** (L - n)


def test_budget_exceeded(full32):
    with pytest.raises(BudgetExceeded) as err:
        box_count(full32, 12, method="brute", budget=10 ** 6)
    assert err.value.bound > 10 ** 6
    with pytest.raises(BudgetExceeded):
        box_count(full32, 30, budget=100)


@pytest.mark.parametrize("name", TWO_D_FIXTURES)
def test_slope_near_minkowski(fixtures, name):
    spec = fixtures[name].spec
    assert abs(box_count_slope(spec, range(2, 9)) - minkowski_dimension(spec).value) <= 0.15


def test_local_dimension_point_mass(full32):
    w = StaircasePrefix(((0,) * 8, (1,) * 13))
    est = estimate_local_dimension(full32, PointMass(full32, w), samples=20, n=8)
    assert est.mean == 0 and est.stderr == 0


def test_local_dimension_uniform_full_shift(full32):
    est = estimate_local_dimension(full32, uniform_bernoulli(full32), samples=200, n=64, seed=3)
    assert abs(est.mean - 2) <= 3 * est.stderr + 2 / 64
    assert est.as_dict()["samples"] == 200 and est.as_dict()["seed"] == 3


def test_local_dimension_reproducible():
    mu = optimal_measure(EX2)
    a = estimate_local_dimension(EX2, mu, 30, 16, seed=9)
    b = estimate_local_dimension(EX2, mu, 30, 16, seed=9)
    assert a.values == b.values


@pytest.mark.parametrize("name", TWO_D_FIXTURES)
def test_local_dimension_improves_with_n(fixtures, name):
    spec = fixtures[name].spec
    mu = optimal_measure(spec)
    h = hausdorff_dimension(spec).value
    coarse = estimate_local_dimension(spec, mu, 500, 32, seed=0)
    fine = estimate_local_dimension(spec, mu, 500, 128, seed=0)
    assert abs(fine.mean - h) <= abs(coarse.mean - h) + 1e-12


def test_render_full_shift_all_dark(full32):
    bmp = render(full32, RenderSpec(3, 64))
    assert set(bmp.pixels) == {0}


def test_render_too_coarse(full32):
    with pytest.raises(ResolutionTooCoarse):
        render(full32, RenderSpec(2, 3))


def test_render_spec_validation():
    with pytest.raises(ValueError):
        RenderSpec(0)
    with pytest.raises(ValueError):
        RenderSpec(2, 0)


def test_render_orders_are_nested(fixtures):
    spec = fixtures[FIG1].spec
    images = [render(spec, RenderSpec(k, 256)).pixels for k in (1, 2, 3, 4)]
    for coarse, fine in zip(images, images[1:]):
        assert all(coarse[i] == 0 for i, v in enumerate(fine) if v == 0)
    assert images[1].count(0) < images[0].count(0)


def test_figure_one_regression(fixtures, tmp_path):
    cfg = fixtures[FIG1]
    bmp = render(cfg.spec, RenderSpec(cfg.option("order"), cfg.option("resolution")))
    assert bmp.sha256() == FIG1_ORDER4_SHA
    assert bmp.pixels.count(0) == FIG1_ORDER4_DARK
    assert bmp.meta["semantics"] == "cell-intersects"
    path = tmp_path / "fig.pgm"
    write_pgm(path, bmp)
    data = path.read_bytes()
    assert data.startswith(b"P5\n# ") and data.endswith(bmp.pixels)
    assert b"256 256\n255\n" in data


def test_render_pixel_matches_cell_rule(fixtures):
    # at resolution = cell count each pixel is exactly one cell
    spec = fixtures[FIG1].spec
    bmp = render(spec, RenderSpec(2, 16))
    n, L = bmp.meta["n"], bmp.meta["L"]
    assert 2 ** L == 16 and bmp.width == 16
    from multshift import is_admissible
    from multshift.measures import fiber_starts, fiber_shape, split_fibers

    def cell_dark(xi, yi):
        xs = [(xi // 3 ** (n - 1 - k)) % 3 for k in range(n)]
        ys = [(yi // 2 ** (L - 1 - k)) % 2 for k in range(L)]
        return all(is_admissible(spec, f) for _, f in split_fibers(2, StaircasePrefix((tuple(xs), tuple(ys)))))

    W = 3 ** n
    for py in range(16):
        yi = 15 - py
        for px in range(16):
            lo, hi = (px * W) // 16, -((-(px + 1) * W) // 16)
            want = any(cell_dark(xi, yi) for xi in range(lo, hi))
            assert bmp.dark(px, py) == want
