"""Seeded generator tests: stream determinism, PPP statistics, lattice layout."""

import numpy as np
import pytest

from celltraffic.geom import Window
from celltraffic.pointgen import (
    RandomStream,
    generate_lattice,
    generate_ppp,
    perturb,
    substream,
)

WIN = Window(0.0, 0.0, 200.0, 100.0)


# --------------------------------------------------------------- streams

def test_stream_reproducible_and_path_sensitive():
    a = RandomStream(42).child("layout", 3).generator().uniform(size=5)
    b = RandomStream(42).child("layout", 3).generator().uniform(size=5)
    c = RandomStream(42).child("layout", 4).generator().uniform(size=5)
    d = RandomStream(43).child("layout", 3).generator().uniform(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_substream_matches_stream_child():
    x = substream(7, "users", "drop", 12).normal(size=4)
    y = RandomStream(7).child("users", "drop", 12).generator().normal(size=4)
    np.testing.assert_array_equal(x, y)


def test_child_paths_compose():
    s = RandomStream(1).child("a").child("b", 2)
    assert s.path == ("a", "b", 2)
    assert s.seed == 1


def test_distinct_paths_are_decorrelated():
    # crude independence check: correlation of long uniform streams ~ 0
    u = substream(0, "one").uniform(size=20_000)
    v = substream(0, "two").uniform(size=20_000)
    r = np.corrcoef(u, v)[0, 1]
    assert abs(r) < 0.03


# ------------------------------------------------------------------ ppp

def test_ppp_counts_are_poisson():
    lam = 0.01  # 200 expected points in the 200x100 window
    rng = substream(11, "ppp-counts")
    counts = np.array([len(generate_ppp(lam, WIN, rng)) for _ in range(300)])
    mean = counts.mean()
    # z-test on the mean: sd of the mean = sqrt(lambda*A/300)
    assert abs(mean - 200.0) < 4 * np.sqrt(200.0 / 300)
    # Poisson dispersion: variance/mean ~ 1 (4 sigma band, sd ~ sqrt(2/n))
    disp = counts.var(ddof=1) / mean
    assert abs(disp - 1.0) < 4 * np.sqrt(2.0 / 300)


def test_ppp_positions_uniform():
    rng = substream(12, "ppp-uniform")
    pat = generate_ppp(0.1, WIN, rng)  # ~2000 points
    x, y = pat.points[:, 0], pat.points[:, 1]
    assert WIN.contains(pat.points).all()
    n = len(pat)
    # mean of U(0, L) is L/2 with sd L/sqrt(12 n)
    assert abs(x.mean() - 100.0) < 4 * 200.0 / np.sqrt(12 * n)
    assert abs(y.mean() - 50.0) < 4 * 100.0 / np.sqrt(12 * n)
    # quadrat dispersion: counts in a 4x4 grid are Poisson -> index ~ 1
    hx = np.floor(x / 50.0).astype(int)
    hy = np.floor(y / 25.0).astype(int)
    quad = np.bincount(hx * 4 + hy, minlength=16)
    disp = quad.var(ddof=1) / quad.mean()
    assert abs(disp - 1.0) < 4 * np.sqrt(2.0 / 16)


def test_ppp_rejects_bad_intensity():
    with pytest.raises(ValueError):
        generate_ppp(0.0, WIN, substream(0, "x"))


def test_ppp_deterministic_given_stream():
    p1 = generate_ppp(0.05, WIN, substream(3, "det"))
    p2 = generate_ppp(0.05, WIN, substream(3, "det"))
    np.testing.assert_array_equal(p1.points, p2.points)


# -------------------------------------------------------------- lattice

def test_lattice_perfect_square():
    pat = generate_lattice(9, Window(0, 0, 30, 30))
    xs = sorted(set(pat.points[:, 0]))
    ys = sorted(set(pat.points[:, 1]))
    assert xs == [5.0, 15.0, 25.0] and ys == [5.0, 15.0, 25.0]
    assert len(pat) == 9


def test_lattice_non_square_count_drops_top_row():
    pat = generate_lattice(7, Window(0, 0, 30, 30))
    assert len(pat) == 7
    # 3x3 grid filled bottom-up in row-major order, so the topmost row
    # (y = 25) holds only the leftmost surplus point
    top = pat.points[pat.points[:, 1] == 25.0]
    assert len(top) == 1 and top[0, 0] == 5.0


def test_lattice_interior_spacing_constant():
    pat = generate_lattice(100, Window(0, 0, 50, 50))
    xs = np.unique(pat.points[:, 0])
    np.testing.assert_allclose(np.diff(xs), 5.0)


def test_lattice_rejects_small_count():
    with pytest.raises(ValueError):
        generate_lattice(3, WIN)


# -------------------------------------------------------------- perturb

def test_perturb_sigma_zero_is_identity():
    pat = generate_lattice(16, WIN)
    out = perturb(pat, 0.0, None)  # no rng needed for the exact identity
    np.testing.assert_array_equal(out.points, pat.points)


def test_perturb_stays_inside_window():
    pat = generate_lattice(100, WIN)
    out = perturb(pat, 500.0, substream(4, "perturb"))  # >> window size
    assert WIN.contains(out.points).all()
    assert len(out) == len(pat)
    # reflection keeps the large-sigma marginal near-uniform
    assert abs(out.points[:, 0].mean() - 100.0) < 40.0


def test_perturb_magnitude_matches_sigma():
    pat = generate_lattice(2500, Window(0, 0, 1000, 1000))
    sigma = 3.0
    out = perturb(pat, sigma, substream(5, "perturb-mag"))
    d = out.points - pat.points  # no reflections at this sigma (20 m spacing)
    assert abs(d.std(ddof=1) - sigma) < 0.15
    with pytest.raises(ValueError):
        perturb(pat, -1.0, substream(5, "x"))
