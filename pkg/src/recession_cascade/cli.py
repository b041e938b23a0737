"""Command-line entry point: ``recession-cascade <command> ...``.

Exit status: 0 success, 2 configuration/usage error, 3 I/O or data-format
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, empirics, engine, reports, smallworld
from .model import ConfigError, ModelParams
from .roster import load_roster

log = logging.getLogger("recession_cascade")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

PARAM_FIELDS = tuple(f.name for f in fields(ModelParams))


@dataclass
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    roster_path: str | None = None
    equal_sizes: bool = False
    n_runs: int = 5000
    master_seed: int = 42
    out_dir: str = "."
    workers: int = 1

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "params"}
        d.update(self.params.to_dict())
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        param_part = {k: data.pop(k) for k in list(data) if k in PARAM_FIELDS}
        # convenience pairs
        for key in ("pi", "rho"):
            if key in data:
                lo, hi = data.pop(key)
                param_part[f"{key}_lo"], param_part[f"{key}_hi"] = lo, hi
        known = {f.name for f in fields(cls)} - {"params"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError({k: "unknown configuration key" for k in sorted(unknown)})
        cfg = cls(params=ModelParams.from_dict(param_part), **data)
        if cfg.n_runs < 1:
            raise ConfigError({"n_runs": "must be >= 1"})
        return cfg


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def _grid(values: Sequence[str]) -> list[float]:
    """Expand ``0.1`` or ``start:stop:step`` (inclusive) items into a mu grid."""
    out: list[float] = []
    for v in values:
        if ":" in v:
            start, stop, stp = (float(x) for x in v.split(":"))
            n = int(round((stop - start) / stp)) + 1
            out.extend(round(start + i * stp, 10) for i in range(n))
        else:
            out.append(float(v))
    return out


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig keys")
    p.add_argument("--roster", dest="roster_path", help="country,size CSV (default: bundled roster)")
    p.add_argument("--equal-sizes", action="store_true", default=None)
    p.add_argument("--runs", dest="n_runs", type=int)
    p.add_argument("--seed", dest="master_seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--tau-floor", dest="tau_floor", type=float)
    p.add_argument("--pi", type=_pair, help="lo,hi")
    p.add_argument("--rho", type=_pair, help="lo,hi")
    p.add_argument("--steps", dest="n_steps", type=int)
    p.add_argument("--no-network", action="store_true", help="ablation: k=0, mu=0")
    p.add_argument("--fixed-point", action="store_true", help="iterate the cascade to a fixed point")
    p.add_argument("--cascade-mode", choices=("sequential", "synchronous", "fixed-point"))
    p.add_argument("--threshold-mode", choices=("per-run", "per-step"))
    p.add_argument("--rewiring-mode", choices=("degree-preserving-swap", "endpoint-rewire"))


def build_config(ns: argparse.Namespace) -> RunConfig:
    base = reports.read_json(ns.config) if getattr(ns, "config", None) else {}
    cfg = RunConfig.from_dict(base)
    changes = {}
    for name in ("mu", "k", "tau_floor", "n_steps", "cascade_mode", "threshold_mode", "rewiring_mode"):
        value = getattr(ns, name, None)
        if value is not None:
            changes[name] = value
    if ns.pi is not None:
        changes["pi_lo"], changes["pi_hi"] = ns.pi
    if ns.rho is not None:
        changes["rho_lo"], changes["rho_hi"] = ns.rho
    if ns.fixed_point:
        changes["cascade_mode"] = "fixed-point"
    params = cfg.params.with_(**changes) if changes else cfg.params
    if ns.no_network:
        params = engine.ablation_params(params)
    cfg.params = params
    for name in ("roster_path", "equal_sizes", "n_runs", "master_seed", "workers"):
        value = getattr(ns, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(ns, "out", None):
        cfg.out_dir = ns.out
    if cfg.n_runs < 1:
        raise ConfigError({"n_runs": "must be >= 1"})
    return cfg


def _roster_for(cfg: RunConfig):
    roster = load_roster(cfg.roster_path)
    if cfg.equal_sizes:
        roster = roster.with_equal_sizes()
    roster.check(cfg.params)
    return roster


def simulation_report(cfg: RunConfig) -> tuple[dict, engine.AggregateStats]:
    roster = _roster_for(cfg)
    agg = engine.monte_carlo(cfg.params, roster, cfg.n_runs, cfg.master_seed, workers=cfg.workers)
    fit = analysis.duration_fit(agg.duration_counts)
    config = cfg.to_dict()
    # worker count and output location do not affect results
    config.pop("workers")
    config.pop("out_dir")
    report = reports.envelope(
        "simulation",
        config=config,
        roster={"names": list(roster.names), "sizes": [float(s) for s in roster.sizes]},
        stats=agg.to_dict(),
        duration_shares={"duration": list(analysis.SHARE_SUPPORT),
                         "share": [float(x) for x in agg.duration_shares()]},
        duration_nls=fit.to_dict() if fit else None,
    )
    return report, agg


def cmd_simulate(ns: argparse.Namespace) -> int:
    cfg = build_config(ns)
    report, agg = simulation_report(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports.write_json(out / "report.json", report)
    reports.write_text(out / "counts_hist.csv", reports.hist_csv(agg.counts_hist))
    reports.write_text(out / "durations.csv", reports.hist_csv(agg.duration_counts))
    reports.write_text(out / "waits.csv", reports.hist_csv(agg.wait_counts))
    log.info("wrote simulation report to %s", out)
    return EXIT_OK


def cmd_analyze(ns: argparse.Namespace) -> int:
    levels = empirics.load_gdp_csv(ns.gdp_csv)
    facts = empirics.stylized_facts(levels)
    payload = reports.envelope("facts", source=Path(ns.gdp_csv).name, **analysis.facts_payload(facts))
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    reports.write_json(out / "facts.json", payload)
    reports.write_text(out / "counts_hist.csv", reports.hist_csv(facts.counts_hist))
    reports.write_text(out / "durations.csv", reports.hist_csv(facts.duration_counts))
    reports.write_text(out / "waits.csv", reports.hist_csv(facts.wait_counts))
    return EXIT_OK


def cmd_compare(ns: argparse.Namespace) -> int:
    actual = reports.load_distributions(ns.facts_json)
    simulated = reports.load_distributions(ns.report_json)
    result = reports.envelope(
        "comparison",
        actual=Path(ns.facts_json).name,
        simulated=Path(ns.report_json).name,
        **analysis.compare_distributions(actual, simulated),
    )
    text = reports.dumps(result)
    if ns.out:
        reports.write_text(ns.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_pathlen(ns: argparse.Namespace) -> int:
    ks = ns.k or [2]
    for k in ks:
        if k < 1 or 2 * k >= ns.n:
            raise ConfigError({"k": f"need 1 <= k and 2k < n, got k={k}, n={ns.n}"})
    grid = _grid(ns.mu or ["0:1:0.05"])
    multi = len(ks) > 1
    buf = io.StringIO()
    for j, k in enumerate(ks):
        rows = smallworld.path_length_curve(ns.n, k, grid, ns.realizations, ns.seed, mode=ns.rewiring_mode)
        text = smallworld.curve_to_csv(rows, k if multi else None)
        buf.write(text if j == 0 else text.split("\n", 1)[1])
    if ns.out:
        reports.write_text(ns.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def load_grid(path: str) -> list[dict]:
    """Grid file: JSON list of parameter overrides applied on top of the run config."""
    data = reports.read_json(path)
    if not isinstance(data, list) or not data:
        raise ConfigError({"grid": f"{path}: expected a non-empty JSON list of parameter objects"})
    grid = []
    for i, item in enumerate(data):
        item = dict(item)
        for key in ("pi", "rho"):
            if key in item:
                item[f"{key}_lo"], item[f"{key}_hi"] = item.pop(key)
        unknown = set(item) - set(PARAM_FIELDS)
        if unknown:
            raise ConfigError({f"grid[{i}].{k}": "unknown parameter" for k in sorted(unknown)})
        grid.append(item)
    return grid


SWEEP_METRICS = ("ks_counts", "ks_counts_p", "ks_durations", "ks_durations_p", "ks_waits",
                 "ks_waits_p", "corr_counts", "corr_durations", "corr_waits", "total_spells")


def sweep_csv(rows: list[tuple[dict, engine.SweepRow | None, str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", *PARAM_FIELDS, *SWEEP_METRICS, "error"])
    for i, (overrides, row, err) in enumerate(rows):
        if row is not None:
            pvals = [getattr(row.params, f) for f in PARAM_FIELDS]
            metrics = [getattr(row, m) for m in SWEEP_METRICS]
            err = row.error
        else:
            pvals = [overrides.get(f, "") for f in PARAM_FIELDS]
            metrics = [""] * len(SWEEP_METRICS)
        w.writerow([i, *pvals, *(_fmt(m) for m in metrics), err])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "" if np.isnan(x) else repr(x)
    return x


def cmd_sweep(ns: argparse.Namespace) -> int:
    cfg = build_config(ns)
    roster = _roster_for(cfg)
    targets_dist = reports.load_distributions(ns.targets_json)
    targets = empirics.StylizedFacts(
        counts_hist=[targets_dist["counts"].get(i, 0) for i in range(max(targets_dist["counts"]) + 1)],
        duration_counts=targets_dist["durations"],
        wait_counts=targets_dist["waits"],
        total_spells=sum(targets_dist["durations"].values()),
        aggregate_recession_years=[],
    )
    rows = []
    for overrides in load_grid(ns.grid_json):
        try:
            params = cfg.params.with_(**overrides)
        except (ConfigError, TypeError) as exc:
            rows.append((overrides, None, f"{type(exc).__name__}: {exc}"))
            continue
        (row,) = engine.sweep([params], roster, cfg.n_runs, cfg.master_seed, targets, workers=cfg.workers)
        rows.append((overrides, row, ""))
    text = sweep_csv(rows)
    out = Path(ns.out)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "sweep.csv"
    reports.write_text(out, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recession-cascade", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo ensemble -> report.json + histogram CSVs")
    _add_model_flags(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="GDP panel CSV -> facts.json + histogram CSVs")
    p.add_argument("gdp_csv")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="actual facts vs simulated report")
    p.add_argument("facts_json")
    p.add_argument("report_json")
    p.add_argument("--out", help="comparison JSON path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("pathlen", help="average path length vs rewiring probability -> apl.csv")
    p.add_argument("--n", type=int, default=17)
    p.add_argument("--k", type=int, action="append", help="neighbors per side; repeatable")
    p.add_argument("--mu", action="append", help="value or start:stop:step; repeatable")
    p.add_argument("--realizations", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rewiring-mode", default="endpoint-rewire",
                   choices=("degree-preserving-swap", "endpoint-rewire"))
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_pathlen)

    p = sub.add_parser("sweep", help="score a parameter grid against target facts -> sweep.csv")
    p.add_argument("grid_json")
    p.add_argument("targets_json")
    _add_model_flags(p)
    p.add_argument("--out", default="sweep.csv", help="CSV path or directory")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (empirics.DataFormatError, reports.SchemaError, json.JSONDecodeError, OSError) as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, smallworld.GraphGenerationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
