"""Calibration of the traffic generator: (alpha, mu_beta) -> (C, rho) maps.

The generator's statistic maps C = F1(alpha, mu_beta), rho = F2(alpha,
mu_beta) have no closed form, so they are sampled on a grid by Monte Carlo
(layout, attractors, and users all re-drawn per drop), smoothed to enforce
the maps' monotonicity in both arguments, and inverted by dense search on
the bilinear interpolant. Drops are common-random-numbered across grid
nodes: drop *d* uses the same substream at every node, so node-to-node
differences reflect the parameters rather than sampling noise, which keeps
the raw surfaces close to monotone before smoothing.

Feasibility: not every (C, rho) pair is attainable — strong station
correlation forces clustering, so high rho rules out low C. The feasible
region is extracted from the table per rho bin, and inversion outside it
raises ``Infeasible`` carrying the nearest attainable pair.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import LayoutSpec
from .errors import Infeasible
from .measures import canonical_measure
from .pointgen import RandomStream, substream
from .traffic import TGIP, generate_traffic, measure_traffic

__all__ = [
    "CalibrationConfig",
    "CalibrationTable",
    "FeasibleRegion",
    "build_calibration",
    "feasible",
    "invert",
    "smooth_bimonotone",
]

# Dense parameter-space sampling used for feasibility and inversion; fine
# enough that bilinear values change by well under the feasibility tolerance
# between neighboring samples.
_DENSE = 401
_FEAS_TOL = 0.02
_N_RHO_BINS = 41


@dataclass(frozen=True)
class CalibrationConfig:
    """Grid, drop count, and generator settings for one calibration run."""

    n_alpha: int = 11
    n_beta: int = 11
    drops: int = 100
    mean_ues: float = 1000.0
    method: str = "enhanced"
    bias: str = "center"
    initial: str = "ppp"
    measure: str = "cell_area"

    def __post_init__(self):
        if self.n_alpha < 5 or self.n_beta < 5:
            raise ValueError(
                f"grid must be at least 5x5, got {self.n_alpha}x{self.n_beta}"
            )
        if self.drops < 30:
            raise ValueError(f"need >= 30 drops per node, got {self.drops}")
        if self.mean_ues <= 0:
            raise ValueError("mean_ues must be positive")
        # route enum validation through TGIP
        TGIP(0.0, 0.0, method=self.method, bias=self.bias, initial=self.initial)
        object.__setattr__(self, "measure", canonical_measure(self.measure))

    def to_dict(self) -> dict:
        return {
            "n_alpha": int(self.n_alpha),
            "n_beta": int(self.n_beta),
            "drops": int(self.drops),
            "mean_ues": float(self.mean_ues),
            "method": self.method,
            "bias": self.bias,
            "initial": self.initial,
            "measure": self.measure,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationConfig":
        return cls(**d)


def _pava(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators: least-squares non-decreasing fit to y."""
    n = len(y)
    level = y.astype(float).copy()
    weight = np.ones(n)
    # stack of pooled blocks: (value, weight) pairs, merged on violation
    vals = []
    wts = []
    for i in range(n):
        v, w = level[i], weight[i]
        while vals and vals[-1] > v:
            pv, pw = vals.pop(), wts.pop()
            v = (pv * pw + v * w) / (pw + w)
            w = pw + w
        vals.append(v)
        wts.append(w)
    out = np.empty(n)
    pos = 0
    for v, w in zip(vals, wts):
        cnt = int(round(w))
        out[pos : pos + cnt] = v
        pos += cnt
    return out


def smooth_bimonotone(z: np.ndarray, max_iter: int = 200, tol: float = 1e-10):
    """Least-squares projection onto surfaces non-decreasing along both axes.

    Dykstra's alternating-projection scheme: repeatedly apply row-wise and
    column-wise isotonic regression with correction terms until the surface
    stops changing. Returns the smoothed surface.
    """
    z = np.asarray(z, dtype=float)
    x = z.copy()
    p = np.zeros_like(z)  # correction for the row constraint
    q = np.zeros_like(z)  # correction for the column constraint
    for _ in range(max_iter):
        prev = x.copy()
        y = x + p
        proj_rows = np.apply_along_axis(_pava, 1, y)
        p = y - proj_rows
        y = proj_rows + q
        proj_cols = np.apply_along_axis(_pava, 0, y)
        q = y - proj_cols
        x = proj_cols
        if np.max(np.abs(x - prev)) < tol:
            break
    return x


def _layout_hash(layout_spec: LayoutSpec) -> str:
    blob = json.dumps(layout_spec.to_dict(), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _node_stats(layout_spec_d, config_d, seed, alpha, mu_beta):
    """Monte Carlo (C, rho) means and SEs at one grid node.

    Module-level so process pools can pickle it; drop substreams depend on
    (seed, initial, drop index) only, giving common random numbers across
    nodes.
    """
    layout_spec = LayoutSpec.from_dict(layout_spec_d)
    config = CalibrationConfig.from_dict(config_d)
    tgip = TGIP(
        alpha=alpha,
        mu_beta=mu_beta,
        method=config.method,
        bias=config.bias,
        initial=config.initial,
    )
    cs = np.empty(config.drops)
    rhos = np.empty(config.drops)
    for d in range(config.drops):
        gen = substream(seed, "calibration", config.initial, "drop", str(d))
        layout = layout_spec.sample(gen)
        ues = generate_traffic(layout, tgip, config.mean_ues, gen)
        stats = measure_traffic(layout, ues, measure=config.measure)
        cs[d] = stats.c
        rhos[d] = stats.rho
    root_n = np.sqrt(config.drops)
    return (
        float(np.mean(cs)),
        float(np.mean(rhos)),
        float(np.std(cs, ddof=1) / root_n),
        float(np.std(rhos, ddof=1) / root_n),
    )


@dataclass(frozen=True)
class CalibrationTable:
    """Sampled and smoothed statistic surfaces over the (alpha, mu_beta) grid.

    ``c[i, j]`` and ``rho[i, j]`` are the monotone-smoothed node values at
    ``(grid_alpha[i], grid_beta[j])``; the raw Monte Carlo means and their
    standard errors are kept alongside. ``meta`` records seed, drops,
    measure, layout hash, and generator settings.
    """

    grid_alpha: np.ndarray
    grid_beta: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    raw_c: np.ndarray = field(repr=False)
    raw_rho: np.ndarray = field(repr=False)
    se_c: np.ndarray = field(repr=False)
    se_rho: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid_alpha", "grid_beta", "c", "rho", "raw_c", "raw_rho",
                     "se_c", "se_rho"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        shape = (len(self.grid_alpha), len(self.grid_beta))
        if self.c.shape != shape or self.rho.shape != shape:
            raise ValueError(
                f"surface shape {self.c.shape} does not match grid {shape}"
            )

    def interpolate(self, alpha, mu_beta) -> tuple:
        """Bilinear (C, rho) at parameter points; clips to the grid hull."""
        a = np.clip(np.asarray(alpha, dtype=float), self.grid_alpha[0], self.grid_alpha[-1])
        b = np.clip(np.asarray(mu_beta, dtype=float), self.grid_beta[0], self.grid_beta[-1])
        ia = np.clip(np.searchsorted(self.grid_alpha, a, side="right") - 1, 0,
                     len(self.grid_alpha) - 2)
        ib = np.clip(np.searchsorted(self.grid_beta, b, side="right") - 1, 0,
                     len(self.grid_beta) - 2)
        ta = (a - self.grid_alpha[ia]) / (self.grid_alpha[ia + 1] - self.grid_alpha[ia])
        tb = (b - self.grid_beta[ib]) / (self.grid_beta[ib + 1] - self.grid_beta[ib])

        def blend(z):
            return (
                z[ia, ib] * (1 - ta) * (1 - tb)
                + z[ia + 1, ib] * ta * (1 - tb)
                + z[ia, ib + 1] * (1 - ta) * tb
                + z[ia + 1, ib + 1] * ta * tb
            )

        return blend(self.c), blend(self.rho)

    def to_json_dict(self) -> dict:
        return {
            "grid_alpha": self.grid_alpha.tolist(),
            "grid_beta": self.grid_beta.tolist(),
            "C": self.c.tolist(),
            "rho": self.rho.tolist(),
            "raw_C": self.raw_c.tolist(),
            "raw_rho": self.raw_rho.tolist(),
            "se_C": self.se_c.tolist(),
            "se_rho": self.se_rho.tolist(),
            "meta": self.meta,
        }

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CalibrationTable":
        return cls(
            grid_alpha=np.array(doc["grid_alpha"]),
            grid_beta=np.array(doc["grid_beta"]),
            c=np.array(doc["C"]),
            rho=np.array(doc["rho"]),
            raw_c=np.array(doc["raw_C"]),
            raw_rho=np.array(doc["raw_rho"]),
            se_c=np.array(doc["se_C"]),
            se_rho=np.array(doc["se_rho"]),
            meta=doc.get("meta", {}),
        )

    @classmethod
    def load(cls, path) -> "CalibrationTable":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def build_calibration(
    layout_spec: LayoutSpec,
    config: CalibrationConfig,
    rng,
    workers: int | None = None,
) -> CalibrationTable:
    """Monte Carlo sweep of the (alpha, mu_beta) grid, smoothed for inversion.

    Parameters
    ----------
    layout_spec : LayoutSpec
        Layouts are re-drawn per drop from this recipe.
    config : CalibrationConfig
        Grid resolution (>= 5x5), drops per node (>= 30), generator settings.
    rng : RandomStream or int
        Master stream (or plain seed). A full stream object or seed is
        required — not a bare Generator — because node substreams must be
        re-derivable and the seed is recorded in the table metadata.
    workers : int, optional
        Process count for the node sweep; nodes are independent given the
        common-random-number substreams. Default: serial.
    """
    if isinstance(rng, (int, np.integer)):
        rng = RandomStream(seed=int(rng))
    if not isinstance(rng, RandomStream):
        raise TypeError(
            "build_calibration needs a RandomStream or integer seed so node "
            "substreams are re-derivable and the seed can be recorded"
        )
    grid_alpha = np.linspace(0.0, 1.0, config.n_alpha)
    grid_beta = np.linspace(0.0, 1.0, config.n_beta)
    nodes = [(float(a), float(b)) for a in grid_alpha for b in grid_beta]
    spec_d = layout_spec.to_dict()
    config_d = config.to_dict()
    args = [(spec_d, config_d, rng.seed, a, b) for a, b in nodes]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_node_stats, *zip(*args)))
    else:
        results = [_node_stats(*arg) for arg in args]
    shape = (config.n_alpha, config.n_beta)
    raw_c = np.array([r[0] for r in results]).reshape(shape)
    raw_rho = np.array([r[1] for r in results]).reshape(shape)
    se_c = np.array([r[2] for r in results]).reshape(shape)
    se_rho = np.array([r[3] for r in results]).reshape(shape)
    meta = {
        "seed": int(rng.seed),
        "drops": int(config.drops),
        "measure": config.measure,
        "layout_hash": _layout_hash(layout_spec),
        "initial": config.initial,
        "method": config.method,
        "bias": config.bias,
        "mean_ues": float(config.mean_ues),
    }
    return CalibrationTable(
        grid_alpha=grid_alpha,
        grid_beta=grid_beta,
        c=smooth_bimonotone(raw_c),
        rho=smooth_bimonotone(raw_rho),
        raw_c=raw_c,
        raw_rho=raw_rho,
        se_c=se_c,
        se_rho=se_rho,
        meta=meta,
    )


def _dense_cloud(table: CalibrationTable):
    """Dense sampling of the bilinear surfaces: parameter and value grids."""
    a = np.linspace(table.grid_alpha[0], table.grid_alpha[-1], _DENSE)
    b = np.linspace(table.grid_beta[0], table.grid_beta[-1], _DENSE)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    cc, rr = table.interpolate(aa.ravel(), bb.ravel())
    return aa.ravel(), bb.ravel(), cc, rr


@dataclass(frozen=True)
class FeasibleRegion:
    """Attainable C interval per rho bin, extracted from one table."""

    rho_edges: np.ndarray
    c_min: np.ndarray
    c_max: np.ndarray

    def __post_init__(self):
        for name in ("rho_edges", "c_min", "c_max"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def rho_range(self) -> tuple:
        return float(self.rho_edges[0]), float(self.rho_edges[-1])

    def _bin(self, rho: float) -> int:
        lo, hi = self.rho_range
        if not lo <= rho <= hi:
            raise ValueError(
                f"rho={rho} outside the attainable range [{lo:.3f}, {hi:.3f}]"
            )
        return int(np.clip(np.searchsorted(self.rho_edges, rho, side="right") - 1,
                           0, len(self.c_min) - 1))

    def c_interval(self, rho: float) -> tuple:
        """[min C, max C] attainable at this rho (by bin)."""
        i = self._bin(rho)
        if np.isnan(self.c_min[i]):
            raise ValueError(f"no table support in the rho bin around {rho}")
        return float(self.c_min[i]), float(self.c_max[i])

    def contains(self, c: float, rho: float, tol: float = _FEAS_TOL) -> bool:
        lo, hi = self.rho_range
        if not lo - tol <= rho <= hi + tol:
            return False
        i = self._bin(float(np.clip(rho, lo, hi)))
        if np.isnan(self.c_min[i]):
            return False
        return self.c_min[i] - tol <= c <= self.c_max[i] + tol


def feasible(table: CalibrationTable) -> FeasibleRegion:
    """Feasible (C, rho) region of one table, as C intervals per rho bin."""
    _, _, cc, rr = _dense_cloud(table)
    edges = np.linspace(rr.min(), rr.max(), _N_RHO_BINS + 1)
    idx = np.clip(np.searchsorted(edges, rr, side="right") - 1, 0, _N_RHO_BINS - 1)
    c_min = np.full(_N_RHO_BINS, np.nan)
    c_max = np.full(_N_RHO_BINS, np.nan)
    for i in range(_N_RHO_BINS):
        sel = cc[idx == i]
        if sel.size:
            c_min[i] = sel.min()
            c_max[i] = sel.max()
    return FeasibleRegion(rho_edges=edges, c_min=c_min, c_max=c_max)


def _candidate_tables(tables, c_target: float) -> list:
    """Tables to try, in preference order.

    Sub-Poisson targets (C < 1) prefer the lattice-initial table; anything
    else prefers ppp. The remaining tables follow as fallbacks, so a target
    that only one initial condition can reach still inverts.
    """
    if isinstance(tables, CalibrationTable):
        return [tables]
    if isinstance(tables, dict):
        order = ["lattice", "ppp"] if c_target < 1.0 else ["ppp", "lattice"]
        out = [tables[k] for k in order if k in tables]
        out.extend(t for k, t in tables.items() if k not in order)
        if not out:
            raise ValueError("empty calibration table dict")
        return out
    raise TypeError(
        "expected a CalibrationTable or a dict keyed by initial "
        f"('ppp'/'lattice'), got {type(tables).__name__}"
    )


def invert(tables, c_target: float, rho_target: float) -> TGIP:
    """Parameters whose interpolated statistics best match the target.

    ``tables`` is one CalibrationTable or a dict keyed by initial pattern
    ({'ppp': ..., 'lattice': ...}); sub-Poisson targets (C < 1) try the
    lattice table first, others ppp first, falling back to the other table
    when the preferred one cannot reach the target. Minimizes the squared
    statistic error over a dense sampling of the bilinear surfaces; ties
    resolve to the smallest alpha, then the smallest mu_beta.

    Raises
    ------
    Infeasible
        Target outside every table's attainable region; carries the
        nearest attainable (C, rho) pair across all tables.
    """
    best = None  # nearest attainable pair over every table, for the error
    for table in _candidate_tables(tables, c_target):
        region = feasible(table)
        aa, bb, cc, rr = _dense_cloud(table)
        err = (cc - c_target) ** 2 + (rr - rho_target) ** 2
        k = int(np.argmin(err))  # C-order scan: smallest alpha, then mu_beta
        if best is None or err[k] < best[0]:
            best = (float(err[k]), float(cc[k]), float(rr[k]))
        if not region.contains(c_target, rho_target):
            continue
        meta = table.meta
        return TGIP(
            alpha=float(aa[k]),
            mu_beta=float(bb[k]),
            method=meta.get("method", "enhanced"),
            bias=meta.get("bias", "center"),
            initial=meta.get("initial", "ppp"),
        )
    raise Infeasible(
        target=(float(c_target), float(rho_target)),
        nearest_feasible=(best[1], best[2]),
    )
