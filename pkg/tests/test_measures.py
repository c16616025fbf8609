"""Heterogeneity-measure tests: hand oracles, invariances, Poisson anchors."""

import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from celltraffic.errors import EmptyPattern, TooFewPoints
from celltraffic.geom import PointPattern, Window
from celltraffic.measures import (
    MEASURES,
    PPP_COV_2D,
    canonical_measure,
    delaunay_edge_lengths,
    delaunay_triangle_areas,
    nearest_neighbor_distances,
    normalized_cov,
    ppp_mean,
    ppp_variance,
    summarize,
    voronoi_areas,
)
from celltraffic.pointgen import generate_lattice, generate_ppp, perturb, substream


# ------------------------------------------------------------- plumbing

def test_canonical_measure_aliases():
    assert canonical_measure("V") == "cell_area"
    assert canonical_measure("g") == "nearest_neighbor"
    assert canonical_measure("E") == "edge_length"
    assert canonical_measure("cell_area") == "cell_area"
    with pytest.raises(ValueError):
        canonical_measure("bogus")


def test_summarize_hand_values():
    s = summarize([3.0, 4.0, 5.0])
    assert s.mean == 4.0
    assert s.variance == 1.0  # ddof=1
    assert s.cov == 0.25
    assert s.count == 3
    with pytest.raises(TooFewPoints):
        summarize([1.0])
    with pytest.raises(ValueError):
        summarize([-1.0, 1.0])  # zero mean, CoV undefined


def test_ppp_moment_formulas():
    lam = 0.02
    assert np.isclose(ppp_mean("G", lam), 0.5 * lam**-0.5)
    assert np.isclose(ppp_mean("V", lam), 1.0 / lam)
    assert np.isclose(ppp_mean("E", lam), 1.131 * lam**-0.5)
    assert np.isclose(ppp_variance("G", lam), 0.0683 / lam)
    assert np.isclose(PPP_COV_2D["nearest_neighbor"], math.sqrt(4 / math.pi - 1))


# ----------------------------------------------------------- hand cases

def test_nearest_neighbor_345_triangle():
    win = Window(0, 0, 10, 10)
    pat = PointPattern(points=np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]), window=win)
    nn = nearest_neighbor_distances(pat)
    np.testing.assert_allclose(nn, [3.0, 3.0, 4.0])


def test_nearest_neighbor_brute_force():
    rng = np.random.default_rng(0)
    win = Window(0, 0, 50, 50)
    pts = rng.uniform(0, 50, (40, 2))
    pat = PointPattern(points=pts, window=win)
    nn = nearest_neighbor_distances(pat)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    np.testing.assert_allclose(nn, d.min(axis=1))


def test_voronoi_areas_two_generators_split_window():
    win = Window(0, 0, 10, 10)
    pat = PointPattern(points=np.array([[2.5, 5.0], [7.5, 5.0]]), window=win)
    np.testing.assert_allclose(voronoi_areas(pat), [50.0, 50.0])


def test_mean_cell_area_identity():
    # cells partition the window, so the boundary-included mean is exact
    pat = generate_ppp(0.02, Window(0, 0, 100, 100), substream(1, "vmean"))
    areas = voronoi_areas(pat, exclude_boundary=False)
    assert np.isclose(areas.mean(), pat.window.area / len(pat), rtol=1e-9)


def test_edge_lengths_unit_square():
    win = Window(0, 0, 3, 3)
    pat = PointPattern(
        points=np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]]), window=win
    )
    lengths = np.sort(delaunay_edge_lengths(pat))
    np.testing.assert_allclose(lengths, [1.0, 1.0, 1.0, 1.0, math.sqrt(2.0)])


def test_triangle_areas_tile_hull():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 80, (60, 2))
    pat = PointPattern(points=pts, window=Window(0, 0, 80, 80))
    tri_areas = delaunay_triangle_areas(pat)
    assert (tri_areas > 0).all()
    hull = ConvexHull(pts)
    assert np.isclose(tri_areas.sum(), hull.volume, rtol=1e-9)


# ----------------------------------------------------------- invariance

def test_normalized_cov_scale_and_translation_invariant():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 100, (300, 2))
    base = PointPattern(points=pts, window=Window(0, 0, 100, 100))
    moved = PointPattern(
        points=pts * 7.0 + np.array([12.0, -5.0]),
        window=Window(12.0, -5.0, 712.0, 695.0),
    )
    for m in MEASURES:
        a = normalized_cov(base, m)
        b = normalized_cov(moved, m)
        assert np.isclose(a, b, rtol=1e-9), m


# ------------------------------------------------------- poisson anchor

def test_ppp_normalized_cov_near_one():
    win = Window(0, 0, 1000, 1000)
    vals = {m: [] for m in MEASURES}
    for drop in range(5):
        pat = generate_ppp(0.002, win, substream(20, "anchor", drop))
        for m in MEASURES:
            vals[m].append(normalized_cov(pat, m))
    for m, v in vals.items():
        assert abs(np.mean(v) - 1.0) < 0.05, (m, np.mean(v))


def test_lattice_regularity():
    win = Window(0, 0, 1000, 1000)
    pat = generate_lattice(400, win)
    # interior nearest-neighbor distances and cell areas are all identical
    assert normalized_cov(pat, "nearest_neighbor") < 1e-12
    assert normalized_cov(pat, "cell_area") < 1e-12
    # Delaunay edges of a square lattice are an axis/diagonal mix, so the
    # edge-length measure does NOT go to zero on a perfect grid
    assert normalized_cov(pat, "edge_length") > 0.2


def test_perturbed_lattice_cov_increases_with_sigma():
    win = Window(0, 0, 1000, 1000)
    base = generate_lattice(2500, win)  # 20 m spacing
    covs = []
    for sigma in (0.0, 5.0, 50.0):
        pat = perturb(base, sigma, substream(21, "per", str(sigma)))
        covs.append(normalized_cov(pat, "cell_area"))
    assert covs[0] < 1e-12
    assert covs[0] < covs[1] < covs[2]
    assert 0.05 < covs[1] < 0.95
    assert 0.7 < covs[2] < 1.3  # fully shuffled lattice looks Poisson


# ------------------------------------------------------------ edge cases

def test_exclude_boundary_changes_samples():
    pat = generate_ppp(0.01, Window(0, 0, 100, 100), substream(9, "eb"))
    inc = voronoi_areas(pat, exclude_boundary=False)
    exc = voronoi_areas(pat, exclude_boundary=True)
    assert len(exc) < len(inc)


def test_boundary_exclusion_can_empty_the_sample():
    win = Window(0, 0, 10, 10)
    pat = PointPattern(points=np.array([[2.0, 5.0], [5.0, 5.0], [8.0, 5.0]]), window=win)
    with pytest.raises(EmptyPattern):
        voronoi_areas(pat, exclude_boundary=True)  # every cell touches the edge
