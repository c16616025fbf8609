"""Pure-numpy kernels for weighted-cell membership, boundary rays, potentials.

Semantics contract shared with the compiled backend (``_speedups.pyx``):

* Membership at a point is ``argmax_j w2_j / d2_j`` (squared linear weight
  over squared distance), ties resolved to the lowest station index. This is
  the exact monotone transform of the dB received-power comparison, with no
  logarithms in the inner loop.
* A boundary ray starts at the serving station and is sampled at
  ``t = step, 2*step, ...`` capped at the exact ray/window exit distance;
  the first sample whose membership differs from the serving station brackets
  the crossing, which is then bisected ``n_bisect`` times. If membership
  never changes, the window exit distance is the boundary.

Both backends evaluate the identical sequence of IEEE operations per ray, so
they agree to floating-point noise.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "serving_indices",
    "ray_distances",
    "boundary_distances",
    "potentials",
    "edge_targets",
]


def _membership(px, py, sx, sy, w2):
    """argmax of w2/d^2 over stations for each point; first max wins ties."""
    dx = px[:, None] - sx[None, :]
    dy = py[:, None] - sy[None, :]
    d2 = dx * dx + dy * dy
    with np.errstate(divide="ignore"):
        scores = w2[None, :] / d2
    return np.argmax(scores, axis=1)


def serving_indices(px, py, sx, sy, w2):
    """Serving-station index for each point (weighted-cell membership)."""
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    return _membership(px, py, np.asarray(sx, float), np.asarray(sy, float), np.asarray(w2, float)).astype(np.intp)


def _ray_exit(ox, oy, ux, uy, x_min, y_min, x_max, y_max):
    """Distance along each ray to the window boundary (origins inside)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(
            ux > 0, (x_max - ox) / ux, np.where(ux < 0, (x_min - ox) / ux, np.inf)
        )
        ty = np.where(
            uy > 0, (y_max - oy) / uy, np.where(uy < 0, (y_min - oy) / uy, np.inf)
        )
    return np.minimum(tx, ty)


def ray_distances(
    ox, oy, ux, uy, serving, sx, sy, w2, x_min, y_min, x_max, y_max, step, n_bisect
):
    """First membership-change distance along rays from serving stations.

    ``(ox, oy)`` are ray origins (the serving stations' coordinates),
    ``(ux, uy)`` unit directions, ``serving`` the station index whose cell
    the ray starts in. Returns the crossing distance, or the window-exit
    distance when the serving station holds to the edge.
    """
    ox = np.asarray(ox, float)
    oy = np.asarray(oy, float)
    ux = np.asarray(ux, float)
    uy = np.asarray(uy, float)
    serving = np.asarray(serving)
    sx = np.asarray(sx, float)
    sy = np.asarray(sy, float)
    w2 = np.asarray(w2, float)

    m = ox.size
    dist = np.full(m, np.nan)
    t_exit = _ray_exit(ox, oy, ux, uy, x_min, y_min, x_max, y_max)
    lo = np.zeros(m)
    hi = np.zeros(m)
    marching = np.arange(m)
    k = 1
    while marching.size:
        t = k * step
        idx = marching
        t_eval = np.minimum(t, t_exit[idx])
        memb = _membership(
            ox[idx] + t_eval * ux[idx], oy[idx] + t_eval * uy[idx], sx, sy, w2
        )
        changed = memb != serving[idx]
        at_exit = t >= t_exit[idx]
        bracket = idx[changed]
        lo[bracket] = (k - 1) * step
        hi[bracket] = t_eval[changed]
        exited = idx[~changed & at_exit]
        dist[exited] = t_exit[exited]
        marching = idx[~changed & ~at_exit]
        k += 1

    todo = np.flatnonzero(np.isnan(dist))
    if todo.size:
        blo = lo[todo]
        bhi = hi[todo]
        box, boy = ox[todo], oy[todo]
        bux, buy = ux[todo], uy[todo]
        bserv = serving[todo]
        for _ in range(n_bisect):
            mid = 0.5 * (blo + bhi)
            memb = _membership(box + mid * bux, boy + mid * buy, sx, sy, w2)
            inside = memb == bserv
            blo = np.where(inside, mid, blo)
            bhi = np.where(inside, bhi, mid)
        dist[todo] = 0.5 * (blo + bhi)
    return dist


def boundary_distances(
    px, py, serving, sx, sy, w2, x_min, y_min, x_max, y_max, step, n_bisect
):
    """Cell-boundary distance along each point's own ray (station through point).

    Points coincident with their station use the fixed direction (1, 0).
    """
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    serving = np.asarray(serving)
    sx = np.asarray(sx, float)
    sy = np.asarray(sy, float)
    ox = sx[serving]
    oy = sy[serving]
    dx = px - ox
    dy = py - oy
    d = np.hypot(dx, dy)
    ux = np.where(d > 0, dx / np.where(d > 0, d, 1.0), 1.0)
    uy = np.where(d > 0, dy / np.where(d > 0, d, 1.0), 0.0)
    return ray_distances(
        ox, oy, ux, uy, serving, sx, sy, w2, x_min, y_min, x_max, y_max, step, n_bisect
    )


def potentials(px, py, sx, sy, w2, x_min, y_min, x_max, y_max, step, n_bisect):
    """Potential value in [-1, 1] for each point.

    +1 at the serving station, -1 on the cell boundary, varying as
    1 - 2*(d/D)^2 along each ray; clamped against numerical overshoot.
    Also returns the serving indices, point-station distances, and boundary
    distances so callers can reuse the geometry.
    """
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    sx = np.asarray(sx, float)
    sy = np.asarray(sy, float)
    w2 = np.asarray(w2, float)
    serving = serving_indices(px, py, sx, sy, w2)
    dx = px - sx[serving]
    dy = py - sy[serving]
    d = np.hypot(dx, dy)
    bdist = boundary_distances(
        px, py, serving, sx, sy, w2, x_min, y_min, x_max, y_max, step, n_bisect
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio2 = (d / bdist) ** 2
    pot = 1.0 - 2.0 * ratio2
    pot = np.where(d == 0.0, 1.0, pot)
    return np.clip(pot, -1.0, 1.0), serving, d, bdist


def edge_targets(px, py, sx, sy, w2, x_min, y_min, x_max, y_max, n_dirs, step, n_bisect):
    """Nearest cell-boundary point per input point, by sampling ray directions.

    ``n_dirs`` rays fan out from each point's serving station starting at the
    station-to-point direction; the boundary point closest (Euclidean) to the
    point wins, earliest direction on ties.
    """
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    sx = np.asarray(sx, float)
    sy = np.asarray(sy, float)
    w2 = np.asarray(w2, float)
    n = px.size
    serving = serving_indices(px, py, sx, sy, w2)
    ox = sx[serving]
    oy = sy[serving]
    base = np.arctan2(py - oy, px - ox)  # atan2(0, 0) = 0: fixed ray for d=0
    offsets = 2.0 * np.pi * np.arange(n_dirs) / n_dirs
    ang = base[:, None] + offsets[None, :]
    ux = np.cos(ang).ravel()
    uy = np.sin(ang).ravel()
    rep = np.repeat(np.arange(n), n_dirs)
    dist = ray_distances(
        ox[rep], oy[rep], ux, uy, serving[rep], sx, sy, w2,
        x_min, y_min, x_max, y_max, step, n_bisect,
    )
    cx = ox[rep] + dist * ux
    cy = oy[rep] + dist * uy
    d2 = (cx - px[rep]) ** 2 + (cy - py[rep]) ** 2
    best = np.argmin(d2.reshape(n, n_dirs), axis=1)
    flat = np.arange(n) * n_dirs + best
    return cx[flat], cy[flat]
