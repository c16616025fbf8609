"""Two-parameter traffic generator with station-correlated heterogeneity.

Users are generated in three steps: draw an initial pattern (Poisson or
lattice), pull each service attractor (SA) toward its serving station by a
fraction ``alpha``, then pull each user toward its nearest attractor by a
fraction ``beta``. ``alpha`` mainly controls how correlated users are with
stations (rho), ``beta`` how clustered they are (normalized CoV, C). The
*basic* method uses one deterministic ``beta`` for all users; the *enhanced*
method draws a per-user ``beta ~ N(mu_beta, sigma_beta)`` clamped to [0, 1],
which keeps some users near cell edges and makes the (C, rho) map smoother
and invertible. ``bias="edge"`` retargets users at cell boundaries instead
of attractors, producing negative rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import spatial

from .association import (
    DEFAULT_CHANNEL,
    GeometryChannel,
    NetworkLayout,
    correlation_coefficient,
    nearest_boundary_points,
    serving_stations,
)
from .errors import EmptyAttractorSet
from .geom import PointPattern
from .measures import normalized_cov
from .pointgen import _as_generator, generate_lattice, generate_ppp

__all__ = [
    "TGIP",
    "TrafficStats",
    "sigma_beta",
    "move_attractors",
    "move_ues",
    "generate_traffic",
    "measure_traffic",
]

METHODS = ("basic", "enhanced")
BIASES = ("center", "edge")
INITIALS = ("ppp", "lattice")


def sigma_beta(mu_beta: float) -> float:
    """Std of the per-user beta draw in the enhanced method.

    Chosen so that a normal centered at ``mu_beta`` puts ~0.3% of its mass
    outside [0, 1] (three sigmas to the nearer interval edge):
    ``(0.5 - |mu_beta - 0.5|) / 3``. Zero at the interval ends.
    """
    if not 0.0 <= mu_beta <= 1.0:
        raise ValueError(f"mu_beta must be in [0, 1], got {mu_beta}")
    return (0.5 - abs(mu_beta - 0.5)) / 3.0


@dataclass(frozen=True)
class TGIP:
    """Traffic-generation parameters: the knobs of the generator.

    ``alpha`` pulls attractors toward stations, ``mu_beta`` pulls users
    toward attractors (the mean pull for the enhanced method, the exact
    pull for basic). ``sigma_beta`` is always derived from ``mu_beta``,
    never stored.
    """

    alpha: float
    mu_beta: float
    method: str = "basic"
    bias: str = "center"
    initial: str = "ppp"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.mu_beta <= 1.0:
            raise ValueError(f"mu_beta must be in [0, 1], got {self.mu_beta}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.bias not in BIASES:
            raise ValueError(f"bias must be one of {BIASES}, got {self.bias!r}")
        if self.initial not in INITIALS:
            raise ValueError(f"initial must be one of {INITIALS}, got {self.initial!r}")

    @property
    def sigma_beta(self) -> float:
        return sigma_beta(self.mu_beta)

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "mu_beta": float(self.mu_beta),
            "method": self.method,
            "bias": self.bias,
            "initial": self.initial,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TGIP":
        return cls(
            alpha=float(d["alpha"]),
            mu_beta=float(d["mu_beta"]),
            method=d.get("method", "basic"),
            bias=d.get("bias", "center"),
            initial=d.get("initial", "ppp"),
        )


def move_attractors(
    layout: NetworkLayout, alpha: float, channel: GeometryChannel = DEFAULT_CHANNEL
) -> PointPattern:
    """Pull each attractor toward its serving station by fraction ``alpha``.

    ``S' = alpha * B_S + (1 - alpha) * S`` with ``B_S`` the station serving
    the attractor under the deterministic channel. alpha=0 is the identity,
    alpha=1 stacks every attractor on its station.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    sa = layout.attractors
    if len(sa) == 0 or alpha == 0.0:
        return PointPattern(points=sa.points, window=sa.window)
    serving = serving_stations(layout, sa.points, channel)
    targets = layout.station_xy[serving]
    moved = alpha * targets + (1.0 - alpha) * sa.points
    return PointPattern(points=moved, window=sa.window)


def _normal_beta(gen, size, mu, sigma):
    return gen.normal(mu, sigma, size)


def move_ues(
    ues: PointPattern,
    attractors: PointPattern,
    tgip: TGIP,
    rng=None,
    *,
    layout: NetworkLayout | None = None,
    channel: GeometryChannel = DEFAULT_CHANNEL,
    beta_sampler=None,
) -> PointPattern:
    """Pull each user toward its target by (a possibly random) ``beta``.

    The target is the Euclidean-nearest attractor (``bias="center"``), or
    the nearest point of the user's weighted-cell boundary (``bias="edge"``,
    which requires ``layout``). The basic method applies ``beta = mu_beta``
    to every user; the enhanced method draws a per-user beta from
    ``beta_sampler`` (default normal with std :func:`sigma_beta`) and clamps
    it to [0, 1].

    Parameters
    ----------
    ues, attractors : PointPattern
        Users to move and their attractor set (non-empty).
    tgip : TGIP
        Generator parameters; only ``mu_beta``, ``method`` and ``bias``
        matter here.
    rng : Generator or RandomStream, optional
        Required for the enhanced method.
    layout : NetworkLayout, optional
        Required for ``bias="edge"``; defines the cell geometry.
    channel : GeometryChannel
        Channel backing the cell geometry for edge bias.
    beta_sampler : callable, optional
        ``f(gen, size, mu, sigma) -> array`` hook replacing the normal draw.
    """
    if len(attractors) == 0:
        raise EmptyAttractorSet("move_ues needs at least one attractor")
    pts = ues.points
    if len(pts) == 0:
        return PointPattern(points=pts, window=ues.window)

    if tgip.method == "enhanced":
        if rng is None:
            raise ValueError("the enhanced method draws per-user betas; pass rng")
        gen = _as_generator(rng)
        sampler = beta_sampler or _normal_beta
        beta = np.clip(
            np.asarray(sampler(gen, len(pts), tgip.mu_beta, tgip.sigma_beta), float),
            0.0,
            1.0,
        )
    else:
        beta = np.full(len(pts), tgip.mu_beta)

    if tgip.bias == "edge":
        if layout is None:
            raise ValueError('bias="edge" needs the layout to locate cell boundaries')
        targets = nearest_boundary_points(layout, pts, channel)
    else:
        tree = spatial.cKDTree(attractors.points)
        _, idx = tree.query(pts, k=1)
        targets = attractors.points[idx]

    moved = beta[:, None] * targets + (1.0 - beta[:, None]) * pts
    # Convex combinations of in-window points stay in-window; clamp only
    # guards float round-off at the very edge.
    moved = ues.window.clamp(moved)
    return PointPattern(points=moved, window=ues.window)


def generate_traffic(
    layout: NetworkLayout,
    tgip: TGIP,
    mean_ue_count: float,
    rng,
    channel: GeometryChannel = DEFAULT_CHANNEL,
) -> PointPattern:
    """One traffic drop: initial pattern, attractor move, user move.

    The user count is Poisson with mean ``mean_ue_count``. The initial
    pattern is uniform (``tgip.initial="ppp"``) or a centered lattice
    (``"lattice"``, at least 4 points). Stream consumption order: one
    Poisson count, the initial positions (ppp only), then the per-user
    betas (enhanced only).
    """
    if mean_ue_count <= 0:
        raise ValueError(f"mean_ue_count must be positive, got {mean_ue_count}")
    gen = _as_generator(rng)
    if tgip.initial == "ppp":
        initial = generate_ppp(mean_ue_count / layout.window.area, layout.window, gen)
    else:
        count = max(int(gen.poisson(mean_ue_count)), 4)
        initial = generate_lattice(count, layout.window)
    moved_sa = move_attractors(layout, tgip.alpha, channel)
    return move_ues(initial, moved_sa, tgip, gen, layout=layout, channel=channel)


@dataclass(frozen=True)
class TrafficStats:
    """The measured pair (C, rho) for one pattern against one layout."""

    c: float
    rho: float


def measure_traffic(
    layout: NetworkLayout,
    ues: PointPattern,
    measure: str = "cell_area",
    channel: GeometryChannel = DEFAULT_CHANNEL,
    exclude_boundary: bool = True,
) -> TrafficStats:
    """Measure a pattern's normalized CoV and station correlation."""
    c = normalized_cov(ues, measure=measure, exclude_boundary=exclude_boundary)
    rho = correlation_coefficient(layout, ues, channel)
    return TrafficStats(c=float(c), rho=float(rho))
