"""Command-line front end: calibrate, generate, measure, simulate, sweep.

One master ``--seed`` drives every run; all output files embed that seed
plus a hash of the resolved configuration, and identical (config, seed)
pairs reproduce output files byte for byte. JSON outputs carry the seed and
hash as keys (JSON has no comments); CSV outputs carry them as ``# key=value``
header rows.

Exit codes: 0 success, 1 runtime/domain errors (e.g. infeasible targets,
with the nearest feasible pair in the message), 2 usage or precondition
errors (missing seed, undersized calibration grid, conflicting flags).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .association import LayoutSpec, read_layout_json
from .calibration import (
    CalibrationConfig,
    CalibrationTable,
    build_calibration,
    feasible,
    invert,
)
from .errors import CellTrafficError
from .geom import read_pattern_csv, write_pattern_csv
from .measures import MEASURES, PPP_COV_2D, canonical_measure, measure_samples, summarize
from .netsim import ChannelModel, kpi_over_drops, sweep, write_sweep_csv
from .pointgen import RandomStream
from .traffic import TGIP, generate_traffic, measure_traffic

__all__ = ["ExperimentConfig", "main"]

SWEEP_MODES = ("measures", "feasible", "kpi")


class _UsageError(Exception):
    """Bad flag combinations or missing preconditions: exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment settings: layout recipe, channel, run sizes.

    ``drops`` defaults to the desk-scale 100; full-scale runs override to
    1000. The config file is JSON with keys ``layout``, ``channel``,
    ``drops``, ``mean_ues``, ``measure`` (all optional).
    """

    layout_spec: LayoutSpec = LayoutSpec()
    channel: ChannelModel = ChannelModel()
    drops: int = 100
    mean_ues: float = 1000.0
    measure: str = "cell_area"

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drops must be >= 1")
        if self.mean_ues <= 0:
            raise ValueError("mean_ues must be positive")
        object.__setattr__(self, "measure", canonical_measure(self.measure))

    def to_dict(self) -> dict:
        return {
            "layout": self.layout_spec.to_dict(),
            "channel": self.channel.to_dict(),
            "drops": int(self.drops),
            "mean_ues": float(self.mean_ues),
            "measure": self.measure,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            layout_spec=LayoutSpec.from_dict(d["layout"]) if "layout" in d else LayoutSpec(),
            channel=ChannelModel.from_dict(d["channel"]) if "channel" in d else ChannelModel(),
            drops=int(d.get("drops", 100)),
            mean_ues=float(d.get("mean_ues", 1000.0)),
            measure=d.get("measure", "cell_area"),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _resolve_config(args) -> ExperimentConfig:
    config = (
        ExperimentConfig.from_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    overrides = {}
    if args.drops is not None:
        overrides["drops"] = args.drops
    if getattr(args, "mean_ues", None) is not None:
        overrides["mean_ues"] = args.mean_ues
    if getattr(args, "measure", None) is not None:
        overrides["measure"] = args.measure
    if overrides:
        d = config.to_dict()
        d.update(overrides)
        config = ExperimentConfig.from_dict(d)
    return config


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _require_seed(args) -> int:
    if args.seed is None:
        raise _UsageError("--seed is required")
    return int(args.seed)


def _load_tables(args):
    """Calibration tables keyed by their initial pattern, or None."""
    tables = {}
    for flag in ("table", "table_lattice"):
        path = getattr(args, flag, None)
        if path:
            t = CalibrationTable.load(path)
            tables[t.meta.get("initial", "ppp")] = t
    return tables or None


def _resolve_tgip(args, config) -> TGIP:
    """TGIP from --alpha/--beta flags, a --tgip file, or --target-c/rho."""
    has_direct = args.alpha is not None or args.beta is not None
    has_target = args.target_c is not None or args.target_rho is not None
    has_file = getattr(args, "tgip", None) is not None
    if sum([has_direct, has_target, has_file]) != 1:
        raise _UsageError(
            "pass exactly one of --alpha/--beta, --tgip FILE, or "
            "--target-c/--target-rho"
        )
    if has_file:
        doc = json.loads(Path(args.tgip).read_text())
        return TGIP.from_dict(doc)
    if has_direct:
        if args.alpha is None or args.beta is None:
            raise _UsageError("--alpha and --beta must be given together")
        return TGIP(
            alpha=args.alpha,
            mu_beta=args.beta,
            method=args.method or "basic",
            bias=args.bias or "center",
            initial=args.initial or "ppp",
        )
    if args.target_c is None or args.target_rho is None:
        raise _UsageError("--target-c and --target-rho must be given together")
    tables = _load_tables(args)
    if tables is None:
        raise _UsageError("targets need a calibration table (--table FILE)")
    return invert(tables, args.target_c, args.target_rho)


def _cmd_calibrate(args) -> int:
    seed = _require_seed(args)
    config = _resolve_config(args)
    initials = ("ppp", "lattice") if args.initial == "both" else (args.initial,)
    out = _out_dir(args)
    for initial in initials:
        cal_config = CalibrationConfig(
            n_alpha=args.grid,
            n_beta=args.grid,
            drops=config.drops,
            mean_ues=config.mean_ues,
            method=args.method,
            initial=initial,
            measure=config.measure,
        )
        doc_for_hash = {"config": config.to_dict(), "calibration": cal_config.to_dict()}
        table = build_calibration(
            config.layout_spec, cal_config, RandomStream(seed), workers=args.workers
        )
        table.meta["config_hash"] = _config_hash(doc_for_hash)
        path = out / f"calibration_{initial}.json"
        table.save(path)
        print(f"wrote {path}")
    return 0


def _cmd_generate(args) -> int:
    seed = _require_seed(args)
    config = _resolve_config(args)
    tgip = _resolve_tgip(args, config)
    hash_doc = {"config": config.to_dict(), "tgip": tgip.to_dict()}
    chash = _config_hash(hash_doc)
    rs = RandomStream(seed)
    gen = rs.child("generate").generator()
    if args.layout:
        layout = read_layout_json(args.layout)
    else:
        layout = config.layout_spec.sample(gen)
    ues = generate_traffic(layout, tgip, config.mean_ues, gen)
    stats = measure_traffic(layout, ues, measure=config.measure)
    out = _out_dir(args)
    write_pattern_csv(
        ues,
        out / "pattern.csv",
        meta={"seed": seed, "config_hash": chash, **tgip.to_dict()},
    )
    _write_json(
        out / "stats.json",
        {
            "C": stats.c,
            "rho": stats.rho,
            "n_ues": len(ues),
            "measure": config.measure,
            "tgip": tgip.to_dict(),
            "seed": seed,
            "config_hash": chash,
        },
    )
    print(f"wrote {out / 'pattern.csv'} and {out / 'stats.json'}")
    return 0


def _cmd_measure(args) -> int:
    measure = canonical_measure(args.measure or "cell_area")
    pattern = read_pattern_csv(args.pattern)
    exclude = not args.include_boundary
    samples = measure_samples(pattern, measure, exclude_boundary=exclude)
    stats = summarize(samples)
    doc = {
        "measure": measure,
        "mean": stats.mean,
        "variance": stats.variance,
        "cov": stats.cov,
        "normalized_cov": stats.cov / PPP_COV_2D[measure],
        "n": stats.count,
        "exclude_boundary": exclude,
        "config_hash": _config_hash({"measure": measure, "exclude_boundary": exclude}),
    }
    if args.seed is not None:
        doc["seed"] = int(args.seed)
    text = json.dumps(doc, sort_keys=True, indent=2)
    if args.out:
        out = _out_dir(args)
        (out / "measure.json").write_text(text + "\n")
        print(f"wrote {out / 'measure.json'}")
    else:
        print(text)
    return 0


def _cmd_simulate(args) -> int:
    seed = _require_seed(args)
    config = _resolve_config(args)
    tgip = _resolve_tgip(args, config)
    hash_doc = {
        "config": config.to_dict(),
        "tgip": tgip.to_dict(),
        "threshold_db": args.threshold,
    }
    kpi = kpi_over_drops(
        config.layout_spec,
        config.channel,
        tgip,
        config.drops,
        RandomStream(seed),
        sinr_threshold_db=args.threshold,
        mean_ues=config.mean_ues,
    )
    doc = {
        **kpi,
        "threshold_db": float(args.threshold),
        "tgip": tgip.to_dict(),
        "config_hash": _config_hash(hash_doc),
    }
    if args.target_c is not None:
        doc["target_C"] = float(args.target_c)
        doc["target_rho"] = float(args.target_rho)
    out = _out_dir(args)
    _write_json(out / "kpis.json", doc)
    print(
        f"mean rate {kpi['mean_rate_bps'] / 1e6:.3f} Mbit/s, "
        f"coverage {kpi['coverage_prob']:.3f} ({config.drops} drops)"
    )
    return 0


def _sweep_measures(args, config, seed, out) -> Path:
    """Normalized CoV of each measure vs mu_beta at alpha=0."""
    rs = RandomStream(seed)
    betas = np.round(np.arange(0.0, 0.95, 0.1), 10)
    chash = _config_hash({"config": config.to_dict(), "mode": "measures"})
    lines = [f"# seed={seed}", f"# config_hash={chash}"]
    lines.append("measure,mu_beta,mean_C,se_C,drops,seed")
    values = {m: np.empty(config.drops) for m in MEASURES}
    for beta in betas:
        tgip = TGIP(alpha=0.0, mu_beta=float(beta), method="enhanced")
        for d in range(config.drops):
            gen = rs.child("sweep", "drop", str(d)).generator()
            layout = config.layout_spec.sample(gen)
            ues = generate_traffic(layout, tgip, config.mean_ues, gen)
            for m in MEASURES:
                samples = measure_samples(ues, m, exclude_boundary=True)
                values[m][d] = summarize(samples).cov / PPP_COV_2D[m]
        for m in MEASURES:
            mean = float(np.mean(values[m]))
            se = float(np.std(values[m], ddof=1) / np.sqrt(config.drops))
            lines.append(f"{m},{float(beta)!r},{mean!r},{se!r},{config.drops},{seed}")
    path = out / "sweep_measures.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _sweep_feasible(args, config, seed, out) -> Path:
    """Feasible-region boundary: attainable C interval per rho bin."""
    tables = _load_tables(args)
    if tables is None:
        raise _UsageError("sweep --mode feasible needs --table FILE")
    table = next(iter(tables.values()))
    region = feasible(table)
    chash = _config_hash({"mode": "feasible", "meta": table.meta})
    lines = [f"# seed={seed}", f"# config_hash={chash}"]
    lines.append("rho_lo,rho_hi,c_min,c_max")
    for i in range(len(region.c_min)):
        if np.isnan(region.c_min[i]):
            continue
        lines.append(
            f"{float(region.rho_edges[i])!r},{float(region.rho_edges[i + 1])!r},"
            f"{float(region.c_min[i])!r},{float(region.c_max[i])!r}"
        )
    path = out / "sweep_feasible.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _sweep_kpi(args, config, seed, out) -> Path:
    """KPI surface over an automatic grid of feasible (C, rho) targets."""
    tables = _load_tables(args)
    if tables is None:
        raise _UsageError("sweep --mode kpi needs --table FILE")
    table = tables.get("ppp") or next(iter(tables.values()))
    region = feasible(table)
    rho_lo, rho_hi = region.rho_range
    targets = []
    for rho in np.linspace(rho_lo + 0.02, min(rho_hi - 0.02, 0.7), 4):
        c_lo, c_hi = region.c_interval(float(rho))
        for c in np.linspace(c_lo + 0.05, c_hi - 0.05, 4):
            targets.append((float(c), float(rho)))
    rows = sweep(
        config.layout_spec,
        config.channel,
        targets,
        config.drops,
        RandomStream(seed),
        tables,
        sinr_threshold_db=args.threshold,
        mean_ues=config.mean_ues,
    )
    chash = _config_hash(
        {"config": config.to_dict(), "mode": "kpi", "threshold_db": args.threshold}
    )
    path = out / "sweep_kpi.csv"
    write_sweep_csv(rows, path, meta={"seed": seed, "config_hash": chash})
    return path


def _cmd_sweep(args) -> int:
    seed = _require_seed(args)
    config = _resolve_config(args)
    out = _out_dir(args)
    handler = {
        "measures": _sweep_measures,
        "feasible": _sweep_feasible,
        "kpi": _sweep_kpi,
    }[args.mode]
    path = handler(args, config, seed, out)
    print(f"wrote {path}")
    return 0


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, help="attractor pull toward stations [0,1]")
    p.add_argument("--beta", type=float, help="user pull toward attractors [0,1] (mu_beta)")
    p.add_argument("--method", choices=("basic", "enhanced"))
    p.add_argument("--bias", choices=("center", "edge"))
    p.add_argument("--initial", choices=("ppp", "lattice"))
    p.add_argument("--tgip", help="JSON file with {alpha, mu_beta, method, bias, initial}")
    p.add_argument("--target-c", type=float, help="desired normalized CoV (needs --table)")
    p.add_argument("--target-rho", type=float, help="desired correlation (needs --table)")
    p.add_argument("--table", help="calibration table JSON")
    p.add_argument("--table-lattice", help="second table for sub-Poisson targets")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int, help="master seed (required)")
    common.add_argument("--drops", type=int, help="Monte Carlo drops (default 100)")
    common.add_argument("--workers", type=int, help="process count for node sweeps")
    common.add_argument("--out", help="output directory (default .)")

    parser = argparse.ArgumentParser(
        prog="celltraffic",
        description="Spatial traffic generation, measurement, and downlink KPIs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common], help="build (C, rho) lookup tables")
    p.add_argument("--grid", type=int, default=11, help="grid nodes per axis (>= 5)")
    p.add_argument("--initial", choices=("ppp", "lattice", "both"), default="ppp")
    p.add_argument("--method", choices=("basic", "enhanced"), default="enhanced")
    p.add_argument("--measure", help="heterogeneity measure (default cell_area)")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("generate", parents=[common], help="generate one traffic pattern")
    _add_scenario_flags(p)
    p.add_argument("--layout", help="fixed layout JSON instead of a random draw")
    p.add_argument("--mean-ues", type=float, dest="mean_ues")
    p.add_argument("--measure", help="measure for the emitted stats")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("measure", parents=[common], help="measure a pattern CSV")
    p.add_argument("pattern", help="pattern CSV (window sidecar required)")
    p.add_argument("--measure", help="nearest_neighbor | cell_area | edge_length")
    p.add_argument("--include-boundary", action="store_true")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("simulate", parents=[common], help="drop-averaged KPIs")
    _add_scenario_flags(p)
    p.add_argument("--mean-ues", type=float, dest="mean_ues")
    p.add_argument("--threshold", type=float, default=10.0, help="coverage SINR (dB)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="figure-style data sweeps")
    p.add_argument("--mode", choices=SWEEP_MODES, required=True)
    p.add_argument("--table", help="calibration table JSON")
    p.add_argument("--table-lattice", help="second table for sub-Poisson targets")
    p.add_argument("--mean-ues", type=float, dest="mean_ues")
    p.add_argument("--threshold", type=float, default=10.0)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CellTrafficError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
