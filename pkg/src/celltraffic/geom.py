"""Planar geometry: windows, point patterns, Delaunay/Voronoi tessellation.

All tessellations are clipped to a rectangular observation window. Voronoi
clipping uses generator reflection: mirroring every generator across the four
window edges bounds each original cell exactly at the window boundary, so
cell polygons partition the window without any polygon-intersection step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import spatial
from scipy.spatial import QhullError

from .errors import DegenerateInput, EmptyPattern, TooFewPoints

__all__ = [
    "Window",
    "PointPattern",
    "Triangulation",
    "VoronoiDiagram",
    "delaunay",
    "voronoi",
    "natural_neighbors",
    "write_pattern_csv",
    "read_pattern_csv",
]

# Golden angle (radians); used to fan out deterministic jitter directions.
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
# Jitter magnitude relative to window width. Must stay above Qhull's vertex
# merge tolerance (~1e-7 relative) or near-coincident generators collapse to
# overlapping cells; 1e-6 of the window is far below any physical scale here.
_JITTER_REL = 1e-6
_BOUNDARY_REL_TOL = 1e-7  # cell-touches-window tolerance relative to window size


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangular observation window.

    Parameters
    ----------
    x_min, y_min, x_max, y_max : float
        Corner coordinates in meters; ``x_max > x_min`` and ``y_max > y_min``.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"window coordinates must be finite, got {vals}")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError(
                f"window must have positive extent, got x [{self.x_min}, {self.x_max}] "
                f"y [{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed window."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (
            (pts[:, 0] >= self.x_min)
            & (pts[:, 0] <= self.x_max)
            & (pts[:, 1] >= self.y_min)
            & (pts[:, 1] <= self.y_max)
        )

    def clamp(self, points) -> np.ndarray:
        """Project points onto the closed window (componentwise clip)."""
        pts = np.asarray(points, dtype=float)
        lo = np.array([self.x_min, self.y_min])
        hi = np.array([self.x_max, self.y_max])
        return np.clip(pts, lo, hi)

    def to_dict(self) -> dict:
        return {
            "x_min": float(self.x_min),
            "y_min": float(self.y_min),
            "x_max": float(self.x_max),
            "y_max": float(self.y_max),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Window":
        return cls(
            x_min=float(d["x_min"]),
            y_min=float(d["y_min"]),
            x_max=float(d["x_max"]),
            y_max=float(d["y_max"]),
        )


@dataclass(frozen=True)
class PointPattern:
    """A finite planar point pattern observed in a window.

    ``points`` is an ``(n, 2)`` float array; it is copied and frozen at
    construction. Coincident points are permitted here (a degenerate traffic
    pattern may collapse many users onto one location); tessellation routines
    resolve them with a deterministic sub-micrometer jitter.
    """

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 2)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        inside = self.window.contains(pts) if len(pts) else np.ones(0, bool)
        if not bool(np.all(inside)):
            bad = pts[~inside][0]
            raise ValueError(f"point ({bad[0]}, {bad[1]}) lies outside the window")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def intensity(self) -> float:
        """Points per unit area."""
        return len(self.points) / self.window.area


@dataclass(frozen=True)
class Triangulation:
    """Delaunay triangulation with canonically ordered simplices.

    ``points`` are the triangulated coordinates (jitter applied if the input
    contained duplicates), ``triangles`` is ``(m, 3)`` with each row sorted
    ascending and rows in lexicographic order, ``edges`` is the unique
    undirected edge list in the same canonical order.
    """

    points: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    window: Window

    @property
    def n_points(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class VoronoiDiagram:
    """Voronoi tessellation clipped to a window.

    ``cells[i]`` is the counterclockwise vertex array of generator *i*'s cell,
    ``areas[i]`` its area, and ``boundary[i]`` is True when the cell touches
    the window boundary. Cells partition the window: areas sum to the window
    area up to floating-point error.
    """

    generators: np.ndarray
    cells: tuple = field(repr=False)
    areas: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    window: Window = None

    @property
    def n_cells(self) -> int:
        return len(self.areas)


def _jitter_duplicates(points: np.ndarray, window: Window) -> np.ndarray:
    """Displace exactly-coincident points by ~1e-6 of the window width.

    Deterministic (no RNG): the k-th duplicate of a location moves by
    ``k * eps`` along the k-th golden-angle direction, then is clamped back
    into the window. Returns the input array itself when already unique.
    """
    pts = np.asarray(points, dtype=float)
    eps = _JITTER_REL * window.width
    for _ in range(12):
        _, inverse, counts = np.unique(
            pts, axis=0, return_inverse=True, return_counts=True
        )
        if counts.max(initial=1) <= 1:
            return pts
        # rank of each point within its duplicate group, in input order
        order = np.argsort(inverse, kind="stable")
        sorted_inv = inverse[order]
        group_start = np.flatnonzero(np.r_[True, sorted_inv[1:] != sorted_inv[:-1]])
        group_sizes = np.diff(np.r_[group_start, len(pts)])
        ranks = np.empty(len(pts), dtype=np.intp)
        ranks[order] = np.arange(len(pts)) - np.repeat(group_start, group_sizes)
        dup = ranks > 0
        k = ranks[dup].astype(float)
        ang = k * _GOLDEN_ANGLE
        pts = pts.copy()
        pts[dup, 0] += eps * k * np.cos(ang)
        pts[dup, 1] += eps * k * np.sin(ang)
        pts = window.clamp(pts)
        eps *= 2.0
    raise DegenerateInput("could not separate coincident points by jittering")


def _coerce_pattern(source, window):
    """Accept a PointPattern, Triangulation, or bare (n, 2) array."""
    if isinstance(source, PointPattern):
        return np.asarray(source.points, dtype=float), source.window
    if isinstance(source, Triangulation):
        return np.asarray(source.points, dtype=float), source.window
    pts = np.asarray(source, dtype=float)
    if window is None:
        raise ValueError("a window is required when passing a bare coordinate array")
    return pts, window


def delaunay(pattern: PointPattern) -> Triangulation:
    """Delaunay triangulation of a point pattern.

    Parameters
    ----------
    pattern : PointPattern
        At least three non-collinear points.

    Returns
    -------
    Triangulation
        Canonically ordered triangles and unique edge list covering the
        convex hull of the points.

    Raises
    ------
    TooFewPoints
        Fewer than three points.
    DegenerateInput
        All points collinear (no triangulation exists).
    """
    pts, window = _coerce_pattern(pattern, None)
    if len(pts) < 3:
        raise TooFewPoints(f"triangulation needs >= 3 points, got {len(pts)}")
    pts = _jitter_duplicates(pts, window)
    try:
        qhull = spatial.Delaunay(pts)
    except QhullError as exc:
        raise DegenerateInput(
            f"no valid triangulation: {str(exc).splitlines()[0]}"
        ) from exc
    triangles = np.sort(qhull.simplices.astype(np.intp), axis=1)
    triangles = triangles[np.lexsort(triangles.T[::-1])]
    pairs = np.vstack(
        [triangles[:, [0, 1]], triangles[:, [0, 2]], triangles[:, [1, 2]]]
    )
    edges = np.unique(pairs, axis=0)
    frozen = pts.copy()
    frozen.setflags(write=False)
    triangles.setflags(write=False)
    edges.setflags(write=False)
    return Triangulation(points=frozen, triangles=triangles, edges=edges, window=window)


def _polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a simple polygon given ordered vertices."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def voronoi(source, window: Window | None = None) -> VoronoiDiagram:
    """Voronoi tessellation of generators, clipped to the window.

    Parameters
    ----------
    source : Triangulation or PointPattern or ndarray
        Generator locations. One or two generators are allowed (unlike
        :func:`delaunay`); a bare array requires an explicit ``window``.
    window : Window, optional
        Clip window; defaults to the window carried by ``source``.

    Returns
    -------
    VoronoiDiagram
        One bounded convex cell per generator; cell areas sum to the window
        area, and each cell contains its generator.
    """
    pts, window = _coerce_pattern(source, window)
    n = len(pts)
    if n == 0:
        raise EmptyPattern("voronoi requires at least one generator")
    pts = _jitter_duplicates(pts, window)
    # Points exactly on the window edge would coincide with their own mirror;
    # pull them a jitter-width inside before reflecting.
    eps = _JITTER_REL * window.width
    lo = np.array([window.x_min + eps, window.y_min + eps])
    hi = np.array([window.x_max - eps, window.y_max - eps])
    inner = np.clip(pts, lo, hi)

    def _reflect(axis, value):
        out = inner.copy()
        out[:, axis] = 2.0 * value - out[:, axis]
        return out

    mirrored = np.vstack(
        [
            inner,
            _reflect(0, window.x_min),
            _reflect(0, window.x_max),
            _reflect(1, window.y_min),
            _reflect(1, window.y_max),
        ]
    )
    try:
        vor = spatial.Voronoi(mirrored)
    except QhullError as exc:
        raise DegenerateInput(
            f"voronoi construction failed: {str(exc).splitlines()[0]}"
        ) from exc

    tol = _BOUNDARY_REL_TOL * max(window.width, window.height)
    cells = []
    areas = np.empty(n)
    boundary = np.zeros(n, dtype=bool)
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise DegenerateInput(
                f"generator {i} produced an unbounded or empty cell; "
                "this indicates degenerate input the mirror construction could not resolve"
            )
        verts = vor.vertices[region]
        rel = verts - pts[i]
        ang = np.arctan2(rel[:, 1], rel[:, 0])
        radius = np.hypot(rel[:, 0], rel[:, 1])
        order = np.lexsort((radius, ang))
        verts = verts[order]
        verts.setflags(write=False)
        cells.append(verts)
        areas[i] = _polygon_area(verts)
        edge_dist = np.minimum.reduce(
            [
                verts[:, 0] - window.x_min,
                window.x_max - verts[:, 0],
                verts[:, 1] - window.y_min,
                window.y_max - verts[:, 1],
            ]
        )
        boundary[i] = bool(np.any(edge_dist < tol))
    if not np.isclose(areas.sum(), window.area, rtol=1e-6):
        raise DegenerateInput(
            f"voronoi cells do not partition the window (sum {areas.sum():.6g} "
            f"vs {window.area:.6g}); generators are closer than the geometric "
            "tolerance can resolve"
        )
    gen = pts.copy()
    gen.setflags(write=False)
    areas.setflags(write=False)
    boundary.setflags(write=False)
    return VoronoiDiagram(
        generators=gen, cells=tuple(cells), areas=areas, boundary=boundary, window=window
    )


def natural_neighbors(tri: Triangulation, index: int) -> set:
    """Indices of points sharing a Delaunay edge with ``index``.

    Raises
    ------
    IndexError
        ``index`` is not a vertex of the triangulation.
    """
    n = tri.n_points
    if not 0 <= index < n:
        raise IndexError(f"point index {index} out of range for {n} points")
    edges = tri.edges
    mask0 = edges[:, 0] == index
    mask1 = edges[:, 1] == index
    return set(edges[mask1, 0].tolist()) | set(edges[mask0, 1].tolist())


def _sidecar_path(path) -> Path:
    return Path(path).with_suffix(".window.json")


def write_pattern_csv(pattern: PointPattern, path, meta: dict | None = None) -> None:
    """Write a pattern as ``x,y`` CSV plus a window sidecar JSON.

    ``meta`` entries become ``# key=value`` comment rows ahead of the header.
    The sidecar file ``<stem>.window.json`` records the observation window;
    both files are byte-deterministic for identical inputs.
    """
    path = Path(path)
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("x,y")
    for x, y in np.asarray(pattern.points, dtype=float):
        lines.append(f"{float(x)!r},{float(y)!r}")
    path.write_text("\n".join(lines) + "\n")
    _sidecar_path(path).write_text(
        json.dumps(pattern.window.to_dict(), sort_keys=True, indent=2) + "\n"
    )


def read_pattern_csv(path, window: Window | None = None) -> PointPattern:
    """Read a pattern written by :func:`write_pattern_csv`.

    The window comes from the ``<stem>.window.json`` sidecar unless supplied
    explicitly.
    """
    path = Path(path)
    if window is None:
        sidecar = _sidecar_path(path)
        if not sidecar.exists():
            raise FileNotFoundError(
                f"window sidecar {sidecar} not found; pass window= explicitly"
            )
        window = Window.from_dict(json.loads(sidecar.read_text()))
    rows = []
    header_seen = False
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line.lower().replace(" ", "") != "x,y":
                raise ValueError(f"expected 'x,y' header in {path}, got {line!r}")
            header_seen = True
            continue
        x_str, y_str = line.split(",")
        rows.append((float(x_str), float(y_str)))
    pts = np.array(rows, dtype=float).reshape(len(rows), 2)
    return PointPattern(points=pts, window=window)
