import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aoplan.nn_index import DensityGrid, KdTree, density_count, kd_insert, kd_nearest
from aoplan.space import TWO_PI, BoxBounds, Metric


def brute_nearest(points: dict, q, metric: Metric):
    ids = list(points)
    d = metric.distances(np.array([points[i] for i in ids]), q)
    return float(d.min())


def test_single_node_and_exact_hit():
    t = KdTree(Metric.euclidean(3))
    kd_insert(t, "a", [0.1, 0.2, 0.3])
    assert kd_nearest(t, [5, 5, 5]) == "a"
    assert t.nearest([0.1, 0.2, 0.3]) == ("a", 0.0)


def test_errors():
    t = KdTree(Metric.euclidean(2))
    with pytest.raises(LookupError):
        t.nearest([0, 0])
    t.insert(0, [0, 0])
    with pytest.raises(KeyError):
        t.insert(0, [1, 1])
    with pytest.raises(ValueError):
        t.insert(1, [1, 1, 1])


def test_thousand_inserts_match_linear_scan():
    rng = np.random.default_rng(0)
    m = Metric(np.array([1.0, 1.0, 0.3]))
    t = KdTree(m)
    pts = {}
    for i in range(1000):
        pts[i] = rng.random(3)
        t.insert(i, pts[i])
    for _ in range(1000):
        q = rng.random(3) * 1.2 - 0.1
        _, d = t.nearest(q)
        assert d == pytest.approx(brute_nearest(pts, q, m), abs=1e-15)


@pytest.mark.parametrize("wc", [0.1, 0.3, 1.0, 3.0, 10.0])
def test_pendulum_metric_each_cost_weight(wc):
    rng = np.random.default_rng(int(wc * 10))
    m = Metric(np.ones(2), angular_axes=(0,)).extended(wc)
    t = KdTree(m)
    pts = {}
    for i in range(600):
        pts[i] = np.array([rng.uniform(-20, 20), rng.uniform(-8, 8), rng.uniform(0, 10)])
        t.insert(i, pts[i])
    for _ in range(300):
        q = np.array([rng.uniform(-20, 20), rng.uniform(-8, 8), rng.uniform(0, 10)])
        assert t.nearest(q)[1] == pytest.approx(brute_nearest(pts, q, m), abs=1e-12)


def test_weight_override_zeroes_cost_axis():
    m = Metric(np.ones(3))
    t = KdTree(m)
    t.insert("cheap_far", [1.0, 0.0, 0.0])
    t.insert("costly_near", [0.1, 0.0, 50.0])
    assert t.nearest([0.0, 0.0, 0.0])[0] == "cheap_far"
    assert t.nearest([0.0, 0.0, 0.0], weights=[1.0, 1.0, 0.0])[0] == "costly_near"


def test_rebuild_after_deleting_half():
    rng = np.random.default_rng(5)
    m = Metric(np.array([1.0, 1.0, 1.0 / TWO_PI, 1.0]), angular_axes=(2,))
    t = KdTree(m)
    pts = {i: rng.uniform(-7, 7, 4) for i in range(800)}
    for i, p in pts.items():
        t.insert(i, p)
    for i in rng.permutation(800)[:400]:
        t.remove(int(i))
        del pts[int(i)]
    assert len(t) == 400
    fresh = KdTree(m)
    fresh.rebuild(list(pts.items()))
    for _ in range(300):
        q = rng.uniform(-7, 7, 4)
        ref = brute_nearest(pts, q, m)
        assert t.nearest(q)[1] == pytest.approx(ref, abs=1e-12)
        assert fresh.nearest(q)[1] == pytest.approx(ref, abs=1e-12)


@settings(max_examples=40)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=80),
       st.tuples(st.floats(-10, 10), st.floats(-10, 10)))
def test_angular_kdtree_property(points, q):
    m = Metric(np.array([1.0, 2.0]), angular_axes=(0,))
    t = KdTree(m, leaf_size=4)
    pts = {}
    for i, p in enumerate(points):
        pts[i] = np.array(p)
        t.insert(i, p)
    assert t.nearest(q)[1] == pytest.approx(brute_nearest(pts, np.array(q), m), abs=1e-12)


@settings(max_examples=40)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=2, max_size=60))
def test_kdtree_handles_duplicates(points):
    # many coincident points exercise the tie-split fallback
    t = KdTree(Metric.euclidean(2), leaf_size=2)
    pts = {}
    for i, p in enumerate(points):
        pts[i] = np.array(p, dtype=float)
        t.insert(i, p)
    for q in [(0, 0), (1.5, 1.5), (3, 0)]:
        assert t.nearest(q)[1] == pytest.approx(brute_nearest(pts, np.array(q, float), t.metric))


# -- density grid --------------------------------------------------------------------

def recount(points: dict, z, bounds: BoxBounds, h: float, k: int) -> int:
    """Per-cell recount, with keys computed from unit-scaled coordinates."""
    P = np.array(list(points.values()))
    w = bounds.width
    cells = np.floor((P - bounds.lo) / w / h)
    zc = np.floor((np.asarray(z) - bounds.lo) / w / h)
    total = 0
    for axes in combinations(range(len(w)), k):
        ax = list(axes)
        total += int(np.all(cells[:, ax] == zc[ax], axis=1).sum())
    return total


def test_empty_and_single():
    b = BoxBounds([0, 0, 0], [1, 1, 2])
    g = DensityGrid(b)
    assert density_count(g, [0.5, 0.5, 0.5]) == 0
    g.insert("only", [0.5, 0.5, 0.5])
    assert g.count([0.52, 0.51, 0.55]) == 1
    assert g.sample_source(np.random.default_rng(0)) == "only"
    with pytest.raises(LookupError):
        DensityGrid(b).sample_source(np.random.default_rng(0))
    with pytest.raises(ValueError):
        DensityGrid(b.append_axis(0, math.inf))


def test_projection_count_for_four_axes():
    b = BoxBounds(np.zeros(4), np.ones(4))
    g = DensityGrid(b)
    g.insert(0, [0.5] * 4)
    assert len(g.projections) == 4
    assert g.count([0.5] * 4) == 4


def test_five_hundred_nodes_match_recount():
    rng = np.random.default_rng(8)
    b = BoxBounds([0, 0, -1, 0], [1, 1, 1, 3])
    g = DensityGrid(b, h=0.1, k=3)
    pts = {}
    for i in range(500):
        pts[i] = rng.uniform(b.lo, b.hi)
        g.insert(i, pts[i])
    for _ in range(500):
        z = rng.uniform(b.lo, b.hi)
        assert g.count(z) == recount(pts, z, b, 0.1, 3)
    for p in pts.values():
        assert g.count(p) >= len(g.projections)


def test_sample_source_is_cell_uniform():
    b = BoxBounds([0, 0, 0], [1, 1, 1])
    g = DensityGrid(b, h=0.5, k=3)
    g.insert(0, [0.1, 0.1, 0.1])
    for i in range(1, 100):
        g.insert(i, [0.9, 0.9, 0.9])
    rng = np.random.default_rng(0)
    n = 10_000
    lonely = sum(g.sample_source(rng) == 0 for _ in range(n))
    assert abs(lonely - n / 2) < 3 * math.sqrt(n * 0.25)


def test_pruned_cell_never_sampled():
    b = BoxBounds([0, 0, 0], [1, 1, 1])
    g = DensityGrid(b, h=0.5)
    g.insert(0, [0.1, 0.1, 0.1])
    g.insert(1, [0.9, 0.9, 0.9])
    g.rebuild([(1, [0.9, 0.9, 0.9])])
    rng = np.random.default_rng(1)
    assert {g.sample_source(rng) for _ in range(200)} == {1}
    assert g.count([0.1, 0.1, 0.1]) == 0


def test_rebuild_rescales_cost_axis():
    b = BoxBounds([0, 0, 0], [1, 1, 10])
    g = DensityGrid(b)
    g.insert(0, [0.5, 0.5, 1.05])
    g.insert(1, [0.5, 0.5, 1.25])
    assert g.count([0.5, 0.5, 1.1]) == 2           # cost cell width 1.0
    g.rebuild([(0, [0.5, 0.5, 1.05]), (1, [0.5, 0.5, 1.25])], b.with_axis(2, 0, 2))
    assert g.count([0.5, 0.5, 1.05]) == 1          # cost cell width 0.2 splits them


def test_angular_axis_wraps_before_hashing():
    b = BoxBounds([0, -8, 0], [TWO_PI, 8, 5])
    g = DensityGrid(b, angular_axes=(0,))
    g.insert(0, [0.2, 0.0, 1.0])
    assert g.count([0.2 + TWO_PI, 0.0, 1.0]) == 1
    assert g.count([0.2 - 2 * TWO_PI, 0.0, 1.0]) == 1
