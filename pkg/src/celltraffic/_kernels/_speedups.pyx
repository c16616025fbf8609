# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: weighted-cell membership, boundary rays, potentials.

Same semantics contract as the pure-numpy backend (``_pure.py``): membership
is argmax of w2/d^2 with first-max tie-breaking (IEEE division, so a zero
distance scores +inf), rays are sampled at t = step, 2*step, ... capped at
the exact window-exit distance, and crossings are bisected ``n_bisect``
times.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, atan2, cos, hypot, sin

cnp.import_array()


cdef inline Py_ssize_t _member(double x, double y,
                               const double[::1] sx, const double[::1] sy,
                               const double[::1] w2, Py_ssize_t ns) noexcept nogil:
    cdef Py_ssize_t j, best = 0
    cdef double dx, dy, d2, s, best_s = -INFINITY
    for j in range(ns):
        dx = x - sx[j]
        dy = y - sy[j]
        d2 = dx * dx + dy * dy
        s = w2[j] / d2
        if s > best_s:
            best_s = s
            best = j
    return best


cdef inline double _exit(double o, double u, double lo, double hi) noexcept nogil:
    if u > 0:
        return (hi - o) / u
    elif u < 0:
        return (lo - o) / u
    return INFINITY


cdef double _ray_one(double ox, double oy, double ux, double uy, Py_ssize_t serving,
                     const double[::1] sx, const double[::1] sy, const double[::1] w2,
                     double x_min, double y_min, double x_max, double y_max,
                     double step, int n_bisect) noexcept nogil:
    cdef Py_ssize_t ns = sx.shape[0]
    cdef double t_exit = min(_exit(ox, ux, x_min, x_max), _exit(oy, uy, y_min, y_max))
    cdef double t, t_eval, lo, hi, mid
    cdef Py_ssize_t k = 1
    cdef bint bracketed = False
    cdef int i
    while True:
        t = k * step
        t_eval = t if t < t_exit else t_exit
        if _member(ox + t_eval * ux, oy + t_eval * uy, sx, sy, w2, ns) != serving:
            lo = (k - 1) * step
            hi = t_eval
            bracketed = True
            break
        if t >= t_exit:
            return t_exit
        k += 1
    if bracketed:
        for i in range(n_bisect):
            mid = 0.5 * (lo + hi)
            if _member(ox + mid * ux, oy + mid * uy, sx, sy, w2, ns) == serving:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    return t_exit


def serving_indices(px, py, sx, sy, w2):
    """Serving-station index for each point (weighted-cell membership)."""
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n = pxv.shape[0], ns = sxv.shape[0], i
    out = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _member(pxv[i], pyv[i], sxv, syv, w2v, ns)
    return out


def ray_distances(ox, oy, ux, uy, serving, sx, sy, w2,
                  double x_min, double y_min, double x_max, double y_max,
                  double step, int n_bisect):
    """First membership-change distance along rays from serving stations."""
    cdef double[::1] oxv = np.ascontiguousarray(ox, dtype=np.float64)
    cdef double[::1] oyv = np.ascontiguousarray(oy, dtype=np.float64)
    cdef double[::1] uxv = np.ascontiguousarray(ux, dtype=np.float64)
    cdef double[::1] uyv = np.ascontiguousarray(uy, dtype=np.float64)
    cdef Py_ssize_t[::1] sv = np.ascontiguousarray(serving, dtype=np.intp)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t m = oxv.shape[0], i
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] dv = out
    with nogil:
        for i in range(m):
            dv[i] = _ray_one(oxv[i], oyv[i], uxv[i], uyv[i], sv[i], sxv, syv, w2v,
                             x_min, y_min, x_max, y_max, step, n_bisect)
    return out


def boundary_distances(px, py, serving, sx, sy, w2,
                       double x_min, double y_min, double x_max, double y_max,
                       double step, int n_bisect):
    """Cell-boundary distance along each point's own ray; (1, 0) ray at d=0."""
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef Py_ssize_t[::1] sv = np.ascontiguousarray(serving, dtype=np.intp)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n = pxv.shape[0], i
    cdef double ox, oy, dx, dy, d, ux, uy
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] dv = out
    with nogil:
        for i in range(n):
            ox = sxv[sv[i]]
            oy = syv[sv[i]]
            dx = pxv[i] - ox
            dy = pyv[i] - oy
            d = hypot(dx, dy)
            if d > 0:
                ux = dx / d
                uy = dy / d
            else:
                ux = 1.0
                uy = 0.0
            dv[i] = _ray_one(ox, oy, ux, uy, sv[i], sxv, syv, w2v,
                             x_min, y_min, x_max, y_max, step, n_bisect)
    return out


def potentials(px, py, sx, sy, w2,
               double x_min, double y_min, double x_max, double y_max,
               double step, int n_bisect):
    """Potential in [-1, 1] per point, plus serving index, d, and D arrays."""
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n = pxv.shape[0], ns = sxv.shape[0], i, s
    pot = np.empty(n, dtype=np.float64)
    serving = np.empty(n, dtype=np.intp)
    dist = np.empty(n, dtype=np.float64)
    bdist = np.empty(n, dtype=np.float64)
    cdef double[::1] potv = pot
    cdef Py_ssize_t[::1] servv = serving
    cdef double[::1] distv = dist
    cdef double[::1] bv = bdist
    cdef double ox, oy, dx, dy, d, ux, uy, bd, p
    with nogil:
        for i in range(n):
            s = _member(pxv[i], pyv[i], sxv, syv, w2v, ns)
            servv[i] = s
            ox = sxv[s]
            oy = syv[s]
            dx = pxv[i] - ox
            dy = pyv[i] - oy
            d = hypot(dx, dy)
            distv[i] = d
            if d > 0:
                ux = dx / d
                uy = dy / d
            else:
                ux = 1.0
                uy = 0.0
            bd = _ray_one(ox, oy, ux, uy, s, sxv, syv, w2v,
                          x_min, y_min, x_max, y_max, step, n_bisect)
            bv[i] = bd
            if d == 0.0:
                p = 1.0
            else:
                p = 1.0 - 2.0 * (d / bd) * (d / bd)
                if p < -1.0:
                    p = -1.0
                elif p > 1.0:
                    p = 1.0
            potv[i] = p
    return pot, serving, dist, bdist


def edge_targets(px, py, sx, sy, w2,
                 double x_min, double y_min, double x_max, double y_max,
                 int n_dirs, double step, int n_bisect):
    """Nearest cell-boundary point per input point over n_dirs ray directions."""
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef double[::1] sxv = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] syv = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double[::1] w2v = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n = pxv.shape[0], ns = sxv.shape[0], i, s
    cdef int k
    tx = np.empty(n, dtype=np.float64)
    ty = np.empty(n, dtype=np.float64)
    cdef double[::1] txv = tx
    cdef double[::1] tyv = ty
    cdef double ox, oy, base, ang, ux, uy, bd, cx, cy, d2, best_d2, bx, by
    cdef double two_pi = 2.0 * np.pi
    with nogil:
        for i in range(n):
            s = _member(pxv[i], pyv[i], sxv, syv, w2v, ns)
            ox = sxv[s]
            oy = syv[s]
            base = atan2(pyv[i] - oy, pxv[i] - ox)
            best_d2 = INFINITY
            bx = pxv[i]
            by = pyv[i]
            for k in range(n_dirs):
                ang = base + two_pi * k / n_dirs
                ux = cos(ang)
                uy = sin(ang)
                bd = _ray_one(ox, oy, ux, uy, s, sxv, syv, w2v,
                              x_min, y_min, x_max, y_max, step, n_bisect)
                cx = ox + bd * ux
                cy = oy + bd * uy
                d2 = (cx - pxv[i]) * (cx - pxv[i]) + (cy - pyv[i]) * (cy - pyv[i])
                if d2 < best_d2:
                    best_d2 = d2
                    bx = cx
                    by = cy
            txv[i] = bx
            tyv[i] = by
    return tx, ty
