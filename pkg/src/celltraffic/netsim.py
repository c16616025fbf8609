"""Downlink Monte Carlo: channel, SINR, rates, coverage, and target sweeps.

Each drop re-draws everything — station layout, attractors, users, and the
stochastic channel (per-link line-of-sight state and log-normal shadowing).
Association here follows the *experienced* strongest received power,
shadowing included, unlike the deterministic cells used for the potential
and rho. Full-buffer proportional-fair scheduling with a static channel
degenerates to an equal time share, so each user's rate is its share of the
serving station's bandwidth at its own SINR; stations without users still
transmit and interfere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import DEFAULT_CHANNEL, LayoutSpec, NetworkLayout
from .calibration import invert
from .errors import Infeasible
from .pointgen import RandomStream, _as_generator, substream
from .traffic import TGIP, generate_traffic, measure_traffic

__all__ = [
    "ChannelModel",
    "DropResult",
    "path_loss",
    "los_probability",
    "received_power_dbm",
    "sinr",
    "run_drop",
    "kpi_over_drops",
    "sweep",
    "write_sweep_csv",
    "SWEEP_COLUMNS",
]


@dataclass(frozen=True)
class ChannelModel:
    """Urban-microcell downlink channel parameters.

    Defaults: 2.5 GHz carrier, 20 MHz bandwidth, -174 dBm/Hz noise, 3/6 dB
    LoS/NLoS shadowing, 10 m / 1.5 m station and user heights. Antennas are
    omnidirectional, so ``downtilt_deg`` and the heights are carried along
    but play no role (link distances are horizontal).
    """

    carrier_ghz: float = 2.5
    bandwidth_mhz: float = 20.0
    noise_psd_dbm_hz: float = -174.0
    los_shadow_std_db: float = 3.0
    nlos_shadow_std_db: float = 6.0
    bs_height_m: float = 10.0
    ue_height_m: float = 1.5
    downtilt_deg: float = 12.0

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_mhz * 1e6

    @property
    def noise_power_dbm(self) -> float:
        return self.noise_psd_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)

    def to_dict(self) -> dict:
        return {
            "carrier_ghz": float(self.carrier_ghz),
            "bandwidth_mhz": float(self.bandwidth_mhz),
            "noise_psd_dbm_hz": float(self.noise_psd_dbm_hz),
            "los_shadow_std_db": float(self.los_shadow_std_db),
            "nlos_shadow_std_db": float(self.nlos_shadow_std_db),
            "bs_height_m": float(self.bs_height_m),
            "ue_height_m": float(self.ue_height_m),
            "downtilt_deg": float(self.downtilt_deg),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelModel":
        return cls(**d)


def path_loss(channel: ChannelModel, d, los) -> np.ndarray:
    """Distance-dependent path loss in dB; distances below 1 m clamp to 1 m.

    LoS:  22.0*log10(d) + 28.0 + 20*log10(f_GHz)
    NLoS: 36.7*log10(d) + 22.7 + 26*log10(f_GHz)
    """
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    los = np.asarray(los, dtype=bool)
    log_d = np.log10(d)
    log_f = math.log10(channel.carrier_ghz)
    pl_los = 22.0 * log_d + 28.0 + 20.0 * log_f
    pl_nlos = 36.7 * log_d + 22.7 + 26.0 * log_f
    out = np.where(los, pl_los, pl_nlos)
    return out if out.ndim else float(out)


def los_probability(d) -> np.ndarray:
    """Line-of-sight probability of a link of horizontal length d (meters)."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        near = np.minimum(18.0 / d, 1.0)
    decay = np.exp(-d / 36.0)
    p = near * (1.0 - decay) + decay
    p = np.where(d == 0.0, 1.0, p)
    return p if p.ndim else float(p)


def _link_distances(layout: NetworkLayout, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts[:, None, :] - layout.station_xy[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def received_power_dbm(
    layout: NetworkLayout, channel: ChannelModel, points, los, shadow_db
) -> np.ndarray:
    """Received power matrix (n_points, n_stations) in dBm.

    ``los`` is the boolean LoS state and ``shadow_db`` the shadowing draw,
    both per link with the same shape as the result; both are injected so
    tests can pin them and drops can draw them once per link.
    """
    d = _link_distances(layout, points)
    k = np.array(
        [s.tx_power_dbm + s.antenna_gain_dbi for s in layout.stations], dtype=float
    )
    return k[None, :] - path_loss(channel, d, los) - np.asarray(shadow_db, dtype=float)


def _draw_channel(layout, channel, points, gen):
    """Per-link LoS flags and shadowing draws for one drop."""
    d = _link_distances(layout, points)
    los = gen.uniform(size=d.shape) < los_probability(d)
    std = np.where(los, channel.los_shadow_std_db, channel.nlos_shadow_std_db)
    shadow = gen.normal(0.0, 1.0, size=d.shape) * std
    return los, shadow


def sinr(
    layout: NetworkLayout,
    channel: ChannelModel,
    ue,
    los=None,
    shadow_db=None,
    rng=None,
):
    """Per-point SINR (dB) and serving index under max experienced power.

    ``los``/``shadow_db`` fix the channel realization (shape
    ``(n_points, n_stations)``); otherwise both are drawn from ``rng``.
    Association is the row argmax of the received power including
    shadowing. The interference sum spans every other station — stations
    with no users still transmit.
    """
    pts = np.atleast_2d(np.asarray(ue, dtype=float))
    if los is None or shadow_db is None:
        if rng is None:
            raise ValueError("pass (los, shadow_db) or an rng to draw them")
        los, shadow_db = _draw_channel(layout, channel, pts, _as_generator(rng))
    p_dbm = received_power_dbm(layout, channel, pts, los, shadow_db)
    p_mw = 10.0 ** (p_dbm / 10.0)
    serving = np.argmax(p_dbm, axis=1)
    own = p_mw[np.arange(len(pts)), serving]
    noise_mw = 10.0 ** (channel.noise_power_dbm / 10.0)
    interference = p_mw.sum(axis=1) - own
    snr = own / (interference + noise_mw)
    return 10.0 * np.log10(snr), serving.astype(np.intp)


@dataclass(frozen=True)
class DropResult:
    """Per-user association, SINR and rate for one drop, plus aggregates."""

    serving: np.ndarray = field(repr=False)
    sinr_db: np.ndarray = field(repr=False)
    rate_bps: np.ndarray = field(repr=False)
    mean_rate_bps: float = 0.0
    coverage_prob: float = 0.0
    threshold_db: float = 10.0
    measured_c: float = float("nan")
    measured_rho: float = float("nan")
    seed: int | None = None

    def __post_init__(self):
        n = len(self.sinr_db)
        if not (len(self.serving) == n == len(self.rate_bps)):
            raise ValueError("per-UE arrays must share one length")
        if not 0.0 <= self.coverage_prob <= 1.0:
            raise ValueError(f"coverage must be in [0, 1], got {self.coverage_prob}")

    @property
    def n_ues(self) -> int:
        return len(self.sinr_db)


def run_drop(
    layout_spec: LayoutSpec,
    tgip_or_targets,
    channel: ChannelModel = ChannelModel(),
    sinr_threshold_db: float = 10.0,
    rng=None,
    tables=None,
    mean_ues: float = 1000.0,
    measure_stats: bool = True,
) -> DropResult:
    """One full Monte Carlo drop: layout, traffic, channel, KPIs.

    ``tgip_or_targets`` is either a :class:`TGIP` or a ``(C, rho)`` target
    pair; targets require ``tables`` (see :func:`calibration.invert`).
    Per-user rate is ``(bandwidth / N_b) * log2(1 + SINR)`` with ``N_b`` the
    user count on the serving station (equal share). Coverage is the
    fraction of users at or above ``sinr_threshold_db``. Stream consumption
    order: layout, traffic, LoS flags, shadowing.

    ``measure_stats=False`` skips the (C, rho) measurement of the drop's
    pattern (it needs a tessellation, pointless for tiny test patterns).
    """
    if isinstance(tgip_or_targets, TGIP):
        tgip = tgip_or_targets
    else:
        if tables is None:
            raise ValueError("(C, rho) targets require calibration tables")
        c_t, rho_t = tgip_or_targets
        tgip = invert(tables, float(c_t), float(rho_t))
    seed = rng.seed if isinstance(rng, RandomStream) else None
    gen = _as_generator(rng)
    layout = layout_spec.sample(gen)
    ues = generate_traffic(layout, tgip, mean_ues, gen)
    los, shadow = _draw_channel(layout, channel, ues.points, gen)
    sinr_db, serving = sinr(layout, channel, ues.points, los, shadow)
    per_station = np.bincount(serving, minlength=layout.n_stations)
    share = channel.bandwidth_hz / per_station[serving]
    rate = share * np.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    if measure_stats:
        stats = measure_traffic(layout, ues)
        measured_c, measured_rho = stats.c, stats.rho
    else:
        measured_c = measured_rho = float("nan")
    return DropResult(
        serving=serving,
        sinr_db=sinr_db,
        rate_bps=rate,
        mean_rate_bps=float(np.mean(rate)) if len(rate) else 0.0,
        coverage_prob=float(np.mean(sinr_db >= sinr_threshold_db)) if len(sinr_db) else 0.0,
        threshold_db=float(sinr_threshold_db),
        measured_c=measured_c,
        measured_rho=measured_rho,
        seed=seed,
    )


SWEEP_COLUMNS = (
    "target_C",
    "target_rho",
    "measured_C",
    "measured_rho",
    "mean_rate_bps",
    "se_rate",
    "coverage_prob",
    "se_cov",
    "drops",
    "seed",
)


def kpi_over_drops(
    layout_spec: LayoutSpec,
    channel: ChannelModel,
    tgip: TGIP,
    drops: int,
    rng,
    sinr_threshold_db: float = 10.0,
    mean_ues: float = 1000.0,
) -> dict:
    """Drop-averaged KPIs for one scenario: means and standard errors.

    Drop substreams depend only on the drop index — never on the scenario —
    so KPI differences between scenarios evaluated with the same stream are
    paired (common random numbers). Per-drop values land in a fixed-order
    array before aggregation, so the result is independent of any future
    scheduling of the drop loop.
    """
    if isinstance(rng, (int, np.integer)):
        rng = RandomStream(seed=int(rng))
    if not isinstance(rng, RandomStream):
        raise TypeError("kpi_over_drops needs a RandomStream or integer seed")
    if drops < 1:
        raise ValueError("drops must be >= 1")
    mc = np.empty(drops)
    mrho = np.empty(drops)
    rate = np.empty(drops)
    cov = np.empty(drops)
    for d in range(drops):
        stream = rng.child("sweep", "drop", str(d))
        result = run_drop(
            layout_spec, tgip, channel, sinr_threshold_db, stream, mean_ues=mean_ues
        )
        mc[d] = result.measured_c
        mrho[d] = result.measured_rho
        rate[d] = result.mean_rate_bps
        cov[d] = result.coverage_prob
    root_n = math.sqrt(drops)
    return {
        "measured_C": float(np.mean(mc)),
        "measured_rho": float(np.mean(mrho)),
        "mean_rate_bps": float(np.mean(rate)),
        "se_rate": float(np.std(rate, ddof=1) / root_n) if drops > 1 else 0.0,
        "coverage_prob": float(np.mean(cov)),
        "se_cov": float(np.std(cov, ddof=1) / root_n) if drops > 1 else 0.0,
        "drops": int(drops),
        "seed": int(rng.seed),
    }


def sweep(
    layout_spec: LayoutSpec,
    channel: ChannelModel,
    targets,
    drops: int,
    rng,
    tables,
    sinr_threshold_db: float = 10.0,
    mean_ues: float = 1000.0,
) -> list:
    """KPIs over a list of (C, rho) targets, averaged over drops.

    Returns one row (dict, keys :data:`SWEEP_COLUMNS`) per target.
    Infeasible targets produce a warning and a row of NaNs with drops=0.
    All targets share drop substreams (see :func:`kpi_over_drops`), so
    between-target KPI differences are paired.
    """
    if isinstance(rng, (int, np.integer)):
        rng = RandomStream(seed=int(rng))
    if not isinstance(rng, RandomStream):
        raise TypeError("sweep needs a RandomStream or integer seed")
    rows = []
    for c_t, rho_t in targets:
        c_t, rho_t = float(c_t), float(rho_t)
        try:
            tgip = invert(tables, c_t, rho_t)
        except Infeasible as exc:
            warnings.warn(
                f"target (C={c_t}, rho={rho_t}) infeasible; nearest attainable "
                f"(C={exc.nearest_feasible[0]:.3f}, rho={exc.nearest_feasible[1]:.3f})",
                stacklevel=2,
            )
            rows.append(
                dict(
                    zip(
                        SWEEP_COLUMNS,
                        (c_t, rho_t, math.nan, math.nan, math.nan, math.nan,
                         math.nan, math.nan, 0, rng.seed),
                    )
                )
            )
            continue
        kpi = kpi_over_drops(
            layout_spec, channel, tgip, drops, rng, sinr_threshold_db, mean_ues
        )
        rows.append(
            dict(
                zip(
                    SWEEP_COLUMNS,
                    (
                        c_t,
                        rho_t,
                        kpi["measured_C"],
                        kpi["measured_rho"],
                        kpi["mean_rate_bps"],
                        kpi["se_rate"],
                        kpi["coverage_prob"],
                        kpi["se_cov"],
                        kpi["drops"],
                        kpi["seed"],
                    ),
                )
            )
        )
    return rows


def write_sweep_csv(rows, path, meta: dict | None = None) -> None:
    """Write sweep rows to CSV (byte-deterministic: repr floats).

    ``meta`` entries become ``# key=value`` comment rows ahead of the header.
    """
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    lines.append(",".join(SWEEP_COLUMNS))
    for row in rows:
        cells = []
        for col in SWEEP_COLUMNS:
            v = row[col]
            cells.append(str(v) if isinstance(v, int) else repr(float(v)))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
