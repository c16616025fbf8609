"""Received-power cell membership, boundary distances, and the potential field.

A tiered station layout induces a weighted (multiplicatively-weighted
Voronoi) tessellation: a point belongs to the station with the strongest
deterministic received power under a log-distance path loss. On that
tessellation this module evaluates the radial potential

    P = 1 - 2 * (d / D)**2

where ``d`` is the point's distance to its serving station and ``D`` the
distance from the station, through the point, to the first cell boundary
(competitor crossover or window edge, whichever comes first). P is +1 at
the station, -1 on the boundary, and integrates to zero over each cell, so
its average over a user pattern measures how much the pattern hugs cell
centers (+) or cell edges (-).

Membership comparisons run in linear space: station ``j`` wins at distance
``d_j`` iff ``w2_j / d_j**2`` is maximal, with ``w2_j = 10**(K_j / (5*eta))``
and ``K_j`` the station EIRP-ish constant (tx power + gains, dBm/dBi). This
is algebraically the received-power argmax but needs no logs per evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import EmptyPattern, NumericalNonConvergence
from .geom import PointPattern, Window
from .pointgen import _as_generator

__all__ = [
    "GeometryChannel",
    "DEFAULT_CHANNEL",
    "BaseStation",
    "NetworkLayout",
    "LayoutSpec",
    "CellIntegral",
    "serving_station",
    "serving_stations",
    "boundary_distance",
    "potential",
    "potentials",
    "potential_components",
    "nearest_boundary_points",
    "correlation_coefficient",
    "cell_potential_integral",
    "write_layout_json",
    "read_layout_json",
]

TIERS = ("macro", "pico", "femto")
# Default transmit powers per tier (dBm); femto has no default and must be
# given explicitly.
TIER_TX_POWER_DBM = {"macro": 37.0, "pico": 17.0}

_N_BISECT = 40  # bisection iterations after the march brackets a crossing


def _march_step(window: Window) -> float:
    """Ray-march step: 5 m, or finer for small windows (1/500 of the extent)."""
    return min(5.0, window.width / 500.0, window.height / 500.0)


@dataclass(frozen=True)
class GeometryChannel:
    """Deterministic log-distance channel defining the cell geometry.

    Path loss in dB is ``intercept_db + 10 * pathloss_exponent * log10(d/1m)``
    with an urban-microcell-style non-line-of-sight intercept derived from
    the carrier frequency. No shadowing: cells must be a deterministic
    function of the layout. The SINR simulator applies its own stochastic
    channel separately.
    """

    pathloss_exponent: float = 3.67
    carrier_ghz: float = 2.5
    ue_gain_dbi: float = 0.0

    @property
    def intercept_db(self) -> float:
        return 22.7 + 26.0 * math.log10(self.carrier_ghz)

    def path_loss_db(self, distance_m):
        """Deterministic path loss (dB) at the given distance(s) in meters."""
        d = np.asarray(distance_m, dtype=float)
        with np.errstate(divide="ignore"):
            pl = self.intercept_db + 10.0 * self.pathloss_exponent * np.log10(d)
        return pl if pl.ndim else float(pl)

    def received_power_dbm(self, station: "BaseStation", distance_m):
        """Deterministic received power (dBm) from one station."""
        k = station.tx_power_dbm + station.antenna_gain_dbi + self.ue_gain_dbi
        return k - self.path_loss_db(distance_m)

    def weights_sq(self, stations) -> np.ndarray:
        """Per-station linear weights ``w2`` for the d**2 membership compare."""
        k = np.array(
            [s.tx_power_dbm + s.antenna_gain_dbi + self.ue_gain_dbi for s in stations],
            dtype=float,
        )
        return 10.0 ** (k / (5.0 * self.pathloss_exponent))


DEFAULT_CHANNEL = GeometryChannel()


@dataclass(frozen=True)
class BaseStation:
    """One transmitter: position, tier, power and antenna gain.

    ``tx_power_dbm`` defaults by tier (macro 37, pico 17); femto stations
    must state a power explicitly.
    """

    x: float
    y: float
    tier: str = "macro"
    tx_power_dbm: float | None = None
    antenna_gain_dbi: float = 17.0

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"tier must be one of {TIERS}, got {self.tier!r}")
        if self.tx_power_dbm is None:
            if self.tier not in TIER_TX_POWER_DBM:
                raise ValueError(
                    f"{self.tier} stations have no default power; pass tx_power_dbm"
                )
            object.__setattr__(self, "tx_power_dbm", TIER_TX_POWER_DBM[self.tier])
        if not (
            math.isfinite(self.x)
            and math.isfinite(self.y)
            and math.isfinite(self.tx_power_dbm)
            and math.isfinite(self.antenna_gain_dbi)
        ):
            raise ValueError("station coordinates, power, and gain must be finite")


@dataclass(frozen=True)
class NetworkLayout:
    """Stations of all tiers plus the attractor pattern, in one window.

    Station order is significant: serving indices refer to positions in
    ``stations``. Coordinate arrays are cached at construction; the layout
    is read-only afterwards.
    """

    stations: tuple
    attractors: PointPattern
    window: Window

    def __post_init__(self):
        stations = tuple(self.stations)
        if not stations:
            raise ValueError("layout needs at least one station")
        object.__setattr__(self, "stations", stations)
        xy = np.array([(s.x, s.y) for s in stations], dtype=float)
        if not bool(np.all(self.window.contains(xy))):
            raise ValueError("all stations must lie inside the window")
        if len(self.attractors) and not bool(
            np.all(self.window.contains(self.attractors.points))
        ):
            raise ValueError("all attractors must lie inside the window")
        xy.setflags(write=False)
        object.__setattr__(self, "_xy", xy)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def station_xy(self) -> np.ndarray:
        """Read-only ``(n_stations, 2)`` coordinate array, in station order."""
        return self._xy

    def weights_sq(self, channel: GeometryChannel = DEFAULT_CHANNEL) -> np.ndarray:
        return channel.weights_sq(self.stations)


@dataclass(frozen=True)
class LayoutSpec:
    """Recipe for drawing random layouts: tier counts, powers, window.

    ``sample`` places each tier's stations and the attractors independently
    and uniformly in the window (binomial point processes), drawing macros,
    then picos, then attractors from the supplied stream.
    """

    n_macro: int = 10
    n_pico: int = 20
    n_attractors: int = 50
    macro_power_dbm: float = 37.0
    pico_power_dbm: float = 17.0
    antenna_gain_dbi: float = 17.0
    window: Window = Window(0.0, 0.0, 1000.0, 1000.0)

    def __post_init__(self):
        if self.n_macro + self.n_pico < 1:
            raise ValueError("layout spec needs at least one station")
        if min(self.n_macro, self.n_pico, self.n_attractors) < 0:
            raise ValueError("counts must be nonnegative")

    def sample(self, rng) -> NetworkLayout:
        gen = _as_generator(rng)
        lo = (self.window.x_min, self.window.y_min)
        hi = (self.window.x_max, self.window.y_max)
        macro_xy = gen.uniform(lo, hi, (self.n_macro, 2))
        pico_xy = gen.uniform(lo, hi, (self.n_pico, 2))
        sa_xy = gen.uniform(lo, hi, (self.n_attractors, 2))
        stations = [
            BaseStation(x, y, "macro", self.macro_power_dbm, self.antenna_gain_dbi)
            for x, y in macro_xy
        ] + [
            BaseStation(x, y, "pico", self.pico_power_dbm, self.antenna_gain_dbi)
            for x, y in pico_xy
        ]
        return NetworkLayout(
            stations=tuple(stations),
            attractors=PointPattern(points=sa_xy, window=self.window),
            window=self.window,
        )

    def to_dict(self) -> dict:
        return {
            "n_macro": int(self.n_macro),
            "n_pico": int(self.n_pico),
            "n_attractors": int(self.n_attractors),
            "macro_power_dbm": float(self.macro_power_dbm),
            "pico_power_dbm": float(self.pico_power_dbm),
            "antenna_gain_dbi": float(self.antenna_gain_dbi),
            "window": self.window.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayoutSpec":
        d = dict(d)
        window = Window.from_dict(d.pop("window"))
        return cls(window=window, **d)


def _owned_column(a) -> np.ndarray:
    # the compiled kernels take writable contiguous buffers; a slice of a
    # read-only cached array may be contiguous already, so always copy
    return np.array(a, dtype=np.float64, order="C", copy=True)


def _points_2d(points) -> tuple[np.ndarray, np.ndarray]:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
    return _owned_column(pts[:, 0]), _owned_column(pts[:, 1])


def _kernel_args(layout: NetworkLayout, channel: GeometryChannel):
    xy = layout.station_xy
    w = layout.window
    return (
        _owned_column(xy[:, 0]),
        _owned_column(xy[:, 1]),
        layout.weights_sq(channel),
        w.x_min,
        w.y_min,
        w.x_max,
        w.y_max,
    )


def serving_stations(
    layout: NetworkLayout, points, channel: GeometryChannel = DEFAULT_CHANNEL
) -> np.ndarray:
    """Serving-station index for each point (strongest deterministic power).

    Ties go to the lowest station index. Points coincident with a station
    belong to that station (zero distance dominates).
    """
    px, py = _points_2d(points)
    sx, sy, w2, *_ = _kernel_args(layout, channel)
    return _kernels.serving_indices(px, py, sx, sy, w2)


def serving_station(
    layout: NetworkLayout, p, channel: GeometryChannel = DEFAULT_CHANNEL
) -> int:
    """Index of the station serving a single point."""
    return int(serving_stations(layout, p, channel)[0])


def _boundary_raw(layout, px, py, serving, channel):
    sx, sy, w2, x_min, y_min, x_max, y_max = _kernel_args(layout, channel)
    bdist = _kernels.boundary_distances(
        px, py, serving, sx, sy, w2, x_min, y_min, x_max, y_max,
        _march_step(layout.window), _N_BISECT,
    )
    if not bool(np.all(np.isfinite(bdist))):
        raise NumericalNonConvergence("cell boundary search did not converge")
    return bdist


def boundary_distance(
    layout: NetworkLayout,
    p,
    serving: int | None = None,
    channel: GeometryChannel = DEFAULT_CHANNEL,
) -> float:
    """Distance D from the serving station, through ``p``, to the cell edge.

    The edge is the first point along the ray where another station's
    received power takes over, or the window boundary, whichever comes
    first (march-then-bisect, tolerance well under 1e-3 m). For ``p`` at
    the station position the ray direction is fixed at +x.
    """
    px, py = _points_2d(p)
    if serving is None:
        serv = serving_stations(layout, p, channel)
    else:
        if not 0 <= int(serving) < layout.n_stations:
            raise IndexError(
                f"serving index {serving} out of range for {layout.n_stations} stations"
            )
        serv = np.full(px.shape, int(serving), dtype=np.intp)
    return float(_boundary_raw(layout, px, py, serv, channel)[0])


def potential_components(
    layout: NetworkLayout, points, channel: GeometryChannel = DEFAULT_CHANNEL
):
    """Per-point potential plus the geometry behind it.

    Returns ``(potential, serving, d, D)`` arrays: the clamped potential
    values, serving station indices, distances to the serving station, and
    boundary distances along each point's ray.
    """
    px, py = _points_2d(points)
    sx, sy, w2, x_min, y_min, x_max, y_max = _kernel_args(layout, channel)
    pot, serving, d, bdist = _kernels.potentials(
        px, py, sx, sy, w2, x_min, y_min, x_max, y_max,
        _march_step(layout.window), _N_BISECT,
    )
    if not bool(np.all(np.isfinite(bdist))):
        raise NumericalNonConvergence("cell boundary search did not converge")
    return pot, serving, d, bdist


def potentials(
    layout: NetworkLayout, points, channel: GeometryChannel = DEFAULT_CHANNEL
) -> np.ndarray:
    """Potential value in [-1, 1] for each point."""
    return potential_components(layout, points, channel)[0]


def potential(
    layout: NetworkLayout, p, channel: GeometryChannel = DEFAULT_CHANNEL
) -> float:
    """Potential value in [-1, 1] at a single point.

    +1 at the serving station, -1 on the cell boundary, 1 - 2*(d/D)**2 in
    between; clamped against numerical overshoot.
    """
    return float(potentials(layout, p, channel)[0])


def nearest_boundary_points(
    layout: NetworkLayout,
    points,
    channel: GeometryChannel = DEFAULT_CHANNEL,
    n_dirs: int = 64,
) -> np.ndarray:
    """Closest cell-boundary point to each input point, one per point.

    Fans ``n_dirs`` rays out of each point's serving station (the first ray
    passes through the point itself), finds the cell boundary along each,
    and keeps the boundary point nearest the input point. An approximation
    that sharpens with ``n_dirs``; used to aim users at cell edges.
    """
    if n_dirs < 1:
        raise ValueError(f"n_dirs must be >= 1, got {n_dirs}")
    px, py = _points_2d(points)
    sx, sy, w2, x_min, y_min, x_max, y_max = _kernel_args(layout, channel)
    tx, ty = _kernels.edge_targets(
        px, py, sx, sy, w2, x_min, y_min, x_max, y_max,
        int(n_dirs), _march_step(layout.window), _N_BISECT,
    )
    return np.column_stack([tx, ty])


def correlation_coefficient(
    layout: NetworkLayout, ues: PointPattern, channel: GeometryChannel = DEFAULT_CHANNEL
) -> float:
    """Mean potential over user positions: the user-station correlation rho.

    +1 when every user sits on a station, -1 when every user sits on a cell
    edge, near 0 for users placed independently of the layout.
    """
    if len(ues) == 0:
        raise EmptyPattern("correlation coefficient needs at least one UE")
    return float(np.mean(potentials(layout, ues.points, channel)))


class CellIntegral(NamedTuple):
    """Monte Carlo cell-average of the potential with its standard error."""

    mean: float
    standard_error: float
    n_accepted: int


def cell_potential_integral(
    layout: NetworkLayout,
    serving: int,
    n_samples: int,
    rng=None,
    channel: GeometryChannel = DEFAULT_CHANNEL,
) -> CellIntegral:
    """Monte Carlo mean of the potential over one station's cell.

    Draws ``n_samples`` uniform proposals over the window and keeps those
    belonging to station ``serving``'s cell. A proposal counts as inside
    when the station serves it and it lies within the first boundary
    crossing along its ray (d <= D); pockets beyond the first crossing are
    not part of the cell under the first-crossing boundary definition. The
    returned mean is within a few standard errors of zero for any cell —
    the defining property of the potential.

    Parameters
    ----------
    layout, serving, channel
        The cell is station ``serving``'s weighted cell in ``layout``.
    n_samples : int
        Number of uniform proposals (>= 10_000).
    rng : Generator or RandomStream, optional
        Sampling stream; defaults to a fixed seed-0 stream so repeated
        calls are reproducible.
    """
    if n_samples < 10_000:
        raise ValueError(f"n_samples must be >= 10000, got {n_samples}")
    if not 0 <= int(serving) < layout.n_stations:
        raise IndexError(
            f"serving index {serving} out of range for {layout.n_stations} stations"
        )
    if rng is None:
        from .pointgen import substream

        rng = substream(0, "cell_integral", str(int(serving)))
    gen = _as_generator(rng)
    w = layout.window
    proposals = gen.uniform(
        (w.x_min, w.y_min), (w.x_max, w.y_max), (int(n_samples), 2)
    )
    memb = serving_stations(layout, proposals, channel)
    mine = proposals[memb == int(serving)]
    if len(mine) == 0:
        raise NumericalNonConvergence(
            f"no proposals landed in cell {serving}; cell area is negligible "
            f"at n_samples={n_samples}"
        )
    pot, _, d, bdist = potential_components(layout, mine, channel)
    keep = d <= bdist
    vals = pot[keep]
    if len(vals) < 2:
        raise NumericalNonConvergence(
            f"cell {serving} kept {len(vals)} samples; cannot form a standard error"
        )
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    return CellIntegral(mean=mean, standard_error=se, n_accepted=int(len(vals)))


def _station_entry(s: BaseStation) -> dict:
    return {
        "x": float(s.x),
        "y": float(s.y),
        "tx_power_dbm": float(s.tx_power_dbm),
        "gain_dbi": float(s.antenna_gain_dbi),
    }


def write_layout_json(layout: NetworkLayout, path) -> None:
    """Persist a layout as JSON (byte-deterministic for identical layouts).

    Station order in the file is macros, picos, femtos; reading the file
    back yields stations in that concatenated order, so serving indices are
    stable across a write/read round trip only when the layout was already
    tier-sorted (layouts from :class:`LayoutSpec` are).
    """
    doc = {
        "window": layout.window.to_dict(),
        "macros": [_station_entry(s) for s in layout.stations if s.tier == "macro"],
        "picos": [_station_entry(s) for s in layout.stations if s.tier == "pico"],
        "femtos": [_station_entry(s) for s in layout.stations if s.tier == "femto"],
        "attractors": [
            {"x": float(x), "y": float(y)} for x, y in layout.attractors.points
        ],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def read_layout_json(path) -> NetworkLayout:
    """Read a layout written by :func:`write_layout_json`."""
    doc = json.loads(Path(path).read_text())
    window = Window.from_dict(doc["window"])
    stations = []
    for tier in ("macros", "picos", "femtos"):
        for entry in doc.get(tier, []):
            stations.append(
                BaseStation(
                    x=float(entry["x"]),
                    y=float(entry["y"]),
                    tier=tier[:-1],
                    tx_power_dbm=float(entry["tx_power_dbm"]),
                    antenna_gain_dbi=float(entry["gain_dbi"]),
                )
            )
    sa = np.array(
        [(float(a["x"]), float(a["y"])) for a in doc.get("attractors", [])], dtype=float
    ).reshape(-1, 2)
    return NetworkLayout(
        stations=tuple(stations),
        attractors=PointPattern(points=sa, window=window),
        window=window,
    )
