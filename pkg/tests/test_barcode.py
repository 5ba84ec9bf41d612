import math

import numpy as np
import pytest

from entropylab.barcode import (
    Bar,
    Barcode,
    NonTerminatingReduction,
    barcode_entropy,
    bigon_reduce,
    count_bars,
    default_eps_schedule,
    find_innermost_bigon,
)
from entropylab.curves import (
    curve_from_plane,
    evolve,
    intersections,
    perturb_curve,
    round_circle,
    flat_circle,
    stadium,
)
from entropylab.dynamics import cat_map

from conftest import LOG_GOLDEN


def lens_pair(d=0.12, r=0.1, n=64):
    a = round_circle((0.45, 0.5), r, n, label="A")
    b = round_circle((0.45 + d, 0.5), r, n, label="B")
    return a, b


# --- count_bars -----------------------------------------------------------------


def test_count_bars_examples():
    bc = Barcode(bars=(Bar(0.0, 0.3), Bar(0.0, 0.1), Bar(0.0, math.inf)),
                 provenance=("a", "b", 0))
    assert count_bars(bc, 0.2) == 2
    assert count_bars(bc, 0.05) == 3
    assert count_bars(bc, 10.0) == 1  # infinite bar survives any threshold
    empty = Barcode(bars=(), provenance=("a", "b", 0))
    assert count_bars(empty, 0.1) == 0


def test_count_bars_monotone_in_eps():
    bc = Barcode(bars=tuple(Bar(0.0, l) for l in (0.5, 0.2, 0.1, 0.01, math.inf)),
                 provenance=("a", "b", 0))
    eps = np.geomspace(1e-3, 1.0, 25)
    counts = [count_bars(bc, e) for e in eps]
    assert counts == sorted(counts, reverse=True)


# --- innermost bigon -------------------------------------------------------------


def test_innermost_absent_for_disjoint():
    a = round_circle((0.2, 0.2), 0.05, 32)
    b = round_circle((0.7, 0.7), 0.05, 32)
    assert find_innermost_bigon(a, b, intersections(a, b)) is None


def test_innermost_absent_minimal_position():
    a = flat_circle((1, 0), offset=0.37, n=8)
    b = flat_circle((0, 1), offset=-0.4, n=8)
    xs = intersections(a, b)
    assert len(xs) == 1
    assert find_innermost_bigon(a, b, xs) is None


def test_innermost_lens_area_matches_shapely():
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import Polygon

    a, b = lens_pair()
    xs = intersections(a, b)
    assert len(xs) == 2
    bigon = find_innermost_bigon(a, b, xs)
    assert bigon is not None
    lens = Polygon(a.lifted_vertices[:-1]).intersection(Polygon(b.lifted_vertices[:-1]))
    assert math.isclose(bigon.area, lens.area, rel_tol=1e-9)


# --- bigon_reduce -----------------------------------------------------------------


def test_reduce_disjoint_empty():
    a = round_circle((0.2, 0.2), 0.05, 32)
    b = round_circle((0.7, 0.7), 0.05, 32)
    bc = bigon_reduce(a, b)
    assert bc.bars == ()


def test_reduce_lens_single_finite_bar():
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import Polygon

    a, b = lens_pair()
    bc = bigon_reduce(a, b)
    assert bc.n_finite == 1 and bc.n_infinite == 0
    lens = Polygon(a.lifted_vertices[:-1]).intersection(Polygon(b.lifted_vertices[:-1]))
    assert math.isclose(bc.bars[0].length, lens.area, rel_tol=1e-9)


def test_reduce_essential_pair_one_infinite_bar():
    a = flat_circle((1, 0), offset=0.37, n=8)
    b = flat_circle((0, 1), offset=-0.4, n=8)
    bc = bigon_reduce(a, b)
    assert bc.n_finite == 0 and bc.n_infinite == 1


def test_reduce_conservation_and_no_infinite_on_random_equal_area_pairs():
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(50):
        r = rng.uniform(0.04, 0.1)
        n = int(rng.integers(24, 72))
        c1 = rng.uniform(0.15, 0.85, 2)
        offset = rng.uniform(-r, r, 2)
        theta = rng.uniform(0, 2 * np.pi)
        a = round_circle(c1, r, n, label="A")
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        pts = (a.lifted_vertices[:-1] - c1) @ rot.T + c1 + offset
        b = curve_from_plane(pts, label="B")
        xs = intersections(a, b)
        bc = bigon_reduce(a, b, xs)
        assert 2 * bc.n_finite + bc.n_infinite == len(xs)
        assert bc.n_infinite == 0
        checked += 1
    assert checked == 50


def test_reduce_cat_iterate_conservation(cat):
    l0 = round_circle((0.5, 0.5), 0.08, 48, label="L0")
    l = round_circle((0.5, 0.5), 0.09, 48, label="L")
    for img in evolve(l0, cat, 7, 1e-3):
        xs = intersections(img, l)
        bc = bigon_reduce(img, l, xs)
        assert 2 * bc.n_finite + bc.n_infinite == len(xs)
        assert bc.n_infinite == 0  # contractible equal-area pair


def test_reduce_stability_under_jitter():
    a, b = lens_pair()
    delta = 1e-4
    bc0 = bigon_reduce(a, b)
    bc1 = bigon_reduce(a, perturb_curve(b, delta, seed=7))
    lens0 = sorted(x.length for x in bc0.bars)
    lens1 = sorted(x.length for x in bc1.bars)
    assert len(lens0) == len(lens1)
    c = a.length + b.length
    for l0_, l1_ in zip(lens0, lens1):
        assert abs(l0_ - l1_) <= c * delta


def test_reduce_order_robustness_diagnostic(cat):
    l0 = round_circle((0.5, 0.5), 0.08, 48)
    l = round_circle((0.52, 0.5), 0.09, 48)
    img = evolve(l0, cat, 6, 1e-3)[-1]
    xs = intersections(img, l)
    small_first = bigon_reduce(img, l, xs)
    large_first = bigon_reduce(img, l, xs, largest_first=True)
    for eps in default_eps_schedule(0.02, 4):
        c1 = count_bars(small_first, eps)
        c2 = count_bars(large_first, eps)
        assert abs(c1 - c2) <= max(2, 0.05 * max(c1, c2))


# --- barcode entropy ---------------------------------------------------------------


def test_barcode_entropy_identity(identity):
    l0 = round_circle((0.5, 0.5), 0.08, 48)
    l = round_circle((0.52, 0.5), 0.09, 48)
    res = barcode_entropy(identity, l0, l, k_max=8, max_sag=1e-3, window=(1, 8))
    assert abs(res.estimate) < 1e-9


def test_barcode_entropy_cat(cat):
    lam = math.exp(LOG_GOLDEN)
    l0 = stadium((0.5, 0.5), (1.0, lam - 2.0), 0.16, 0.06, n_arc=12, label="L0")
    l = stadium((0.5, 0.5), (1.0, 1.0 / lam - 2.0), 0.16, 0.06, n_arc=12, label="L")
    res = barcode_entropy(cat, l0, l, k_max=10, max_sag=1e-3)
    assert abs(res.estimate - LOG_GOLDEN) < 0.1


def test_barcode_entropy_eps_monotone(cat):
    lam = math.exp(LOG_GOLDEN)
    l0 = stadium((0.5, 0.5), (1.0, lam - 2.0), 0.16, 0.06, n_arc=12)
    l = stadium((0.5, 0.5), (1.0, 1.0 / lam - 2.0), 0.16, 0.06, n_arc=12)
    res = barcode_entropy(cat, l0, l, k_max=8, max_sag=1e-3)
    eps_sorted = sorted(res.series.keys(), reverse=True)
    for e1, e2 in zip(eps_sorted, eps_sorted[1:]):
        assert np.all(res.series[e1] <= res.series[e2])


def test_barcode_entropy_threads_equivalent(cat):
    l0 = round_circle((0.5, 0.5), 0.08, 48)
    l = round_circle((0.52, 0.5), 0.09, 48)
    r1 = barcode_entropy(cat, l0, l, k_max=6, max_sag=1e-3, window=(1, 6), threads=1)
    r4 = barcode_entropy(cat, l0, l, k_max=6, max_sag=1e-3, window=(1, 6), threads=4)
    assert r1.estimate == r4.estimate
    for eps in r1.series:
        assert np.array_equal(r1.series[eps], r4.series[eps])
