"""Seeded spatial point-process generators: PPP, lattice, perturbed lattice.

Reproducibility model: one master seed fans out to named substreams. A
:class:`RandomStream` identifies a substream by (seed, path); identical
(seed, path) always yields the identical sample sequence, and distinct paths
are statistically independent, so parallel drops and independent components
(layout / attractors / users / shadowing / beta draws) never share a stream.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .geom import PointPattern, Window

__all__ = [
    "RandomStream",
    "substream",
    "generate_ppp",
    "generate_lattice",
    "perturb",
]


def _key_to_int(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & 0xFFFFFFFF


@dataclass(frozen=True)
class RandomStream:
    """A named, reproducible random substream of a master seed.

    ``path`` elements (strings or integers) name the purpose and index of the
    stream, e.g. ``RandomStream(seed).child("layout", drop)``.
    """

    seed: int
    path: tuple = ()

    def child(self, *path) -> "RandomStream":
        return RandomStream(self.seed, self.path + tuple(path))

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator positioned at the start of this substream."""
        keys = tuple(_key_to_int(k) for k in self.path)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=keys))


def substream(seed: int, *path) -> np.random.Generator:
    """Shorthand for ``RandomStream(seed, path).generator()``."""
    return RandomStream(int(seed), tuple(path)).generator()


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"rng must be a numpy Generator or RandomStream, got {type(rng)!r}")


def generate_ppp(intensity: float, window: Window, rng) -> PointPattern:
    """Homogeneous Poisson point process in a window.

    Parameters
    ----------
    intensity : float
        Expected points per unit area (> 0).
    window : Window
    rng : numpy.random.Generator or RandomStream

    Returns
    -------
    PointPattern
        Poisson-distributed count, positions i.i.d. uniform.
    """
    if not intensity > 0:
        raise ValueError(f"intensity must be positive, got {intensity}")
    gen = _as_generator(rng)
    count = int(gen.poisson(intensity * window.area))
    pts = gen.uniform(
        low=(window.x_min, window.y_min),
        high=(window.x_max, window.y_max),
        size=(count, 2),
    )
    return PointPattern(points=pts, window=window)


def generate_lattice(count: int, window: Window) -> PointPattern:
    """Centered rectangular lattice of ``count`` points (deterministic).

    The grid has ``ceil(sqrt(count))`` columns and rows with uniform spacing
    per axis; when ``count`` is not a perfect square the surplus points are
    dropped from the last (topmost) row, filling bottom-up in row-major
    order.
    """
    if count < 4:
        raise ValueError(f"lattice needs count >= 4, got {count}")
    side = math.isqrt(count - 1) + 1  # ceil(sqrt(count))
    dx = window.width / side
    dy = window.height / side
    cols = window.x_min + (np.arange(side) + 0.5) * dx
    rows = window.y_min + (np.arange(side) + 0.5) * dy
    xx, yy = np.meshgrid(cols, rows)  # row-major: y varies slowest
    pts = np.column_stack([xx.ravel(), yy.ravel()])[:count]
    return PointPattern(points=pts, window=window)


def perturb(pattern: PointPattern, sigma: float, rng) -> PointPattern:
    """Displace each point by i.i.d. Gaussian offsets, reflecting at the edges.

    ``sigma`` is the per-axis displacement standard deviation in meters.
    Reflection folds escaping coordinates back into the window, preserving a
    near-uniform marginal for large displacements. ``sigma=0`` is an exact
    identity (no draws consumed).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return PointPattern(points=pattern.points, window=pattern.window)
    gen = _as_generator(rng)
    pts = np.asarray(pattern.points, dtype=float)
    moved = pts + gen.normal(0.0, sigma, size=pts.shape) if len(pts) else pts.copy()
    win = pattern.window
    lo = np.array([win.x_min, win.y_min])
    span = np.array([win.width, win.height])
    # reflect: fold onto [0, 2*span), then mirror the upper half back down
    rel = np.mod(moved - lo, 2.0 * span)
    rel = np.where(rel > span, 2.0 * span - rel, rel)
    return PointPattern(points=lo + rel, window=win)
