"""Command-line interface: ``rinlink sweep|thresholds|optimize``.

Exit codes: 0 success, 2 configuration error, 3 every sweep point failed,
4 shaping solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np
import scipy

from . import __version__
from .config import MODES, PRESETS, load_document, resolve
from .detection import (
    ThresholdRule,
    build_thresholds,
    map_equality_residual,
    pair_threshold,
)
from .exceptions import ConfigError, SolverFailure, ThresholdError
from .link import build_channel
from .metrics import analytic_ser, mutual_information
from .montecarlo import sweep
from .shaping import (
    GsProblem,
    Objective,
    PsProblem,
    optimize_gs,
    optimize_ps_mi,
    optimize_ps_ser,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_FAILED = 3
EXIT_SOLVER = 4


def _fmt_csv(value):
    if value is None:
        return ""
    return f"{value:.9g}"


def _json_float(value):
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        return str(value)
    return float(f"{value:.17g}")


def _clean(obj):
    """Recursively convert to JSON-safe values with 17 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    return obj


def dump_json(doc):
    return json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n"


def provenance(cfg):
    return {
        "tool": "rinlink",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": cfg.mc.seed,
    }


def sweep_columns(rules):
    names = [r.value for r in rules]
    return (
        ["oma_dbm"]
        + [f"ser_{n}" for n in names]
        + [f"mc_ser_{n}" for n in names]
        + [f"mc_ci95_{n}" for n in names]
        + ["mi_bits", "entropy_bits", "status"]
    )


def sweep_csv(results, rules):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_columns(rules))
    names = [r.value for r in rules]
    for rec in results:
        row = [_fmt_csv(rec.oma_dbm)]
        row += [_fmt_csv(rec.analytic.get(n)) for n in names]
        row += [_fmt_csv(rec.mc[n].ser) if n in rec.mc else "" for n in names]
        row += [_fmt_csv(rec.mc[n].ci95_half_width) if n in rec.mc else "" for n in names]
        row += [_fmt_csv(rec.mi_bits), _fmt_csv(rec.entropy_bits), rec.status]
        writer.writerow(row)
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_sweep(cfg, out=None, run_mc=True):
    out = out or sys.stdout
    rules = list(cfg.rules)
    results = sweep(cfg.link, cfg.constellation, cfg.oma_grid.values(), rules, cfg.mc, run_mc=run_mc)
    text = sweep_csv(results, rules)
    if cfg.outputs.get("csv"):
        _write(cfg.outputs["csv"], text)
    else:
        out.write(text)
    if cfg.outputs.get("json"):
        doc = {
            "provenance": provenance(cfg),
            "config": cfg.to_dict(),
            "columns": sweep_columns(rules),
            "points": [r.to_dict() for r in results],
        }
        _write(cfg.outputs["json"], dump_json(doc))
    if rules and all(r.status != "ok" and not r.analytic for r in results):
        print("error: every sweep point failed to produce thresholds", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def threshold_table(m):
    """Per-rule thresholds (or error names per pair) for channel ``m``."""
    rows = {}
    for rule in ThresholdRule:
        cells = []
        for i in range(m.order - 1):
            try:
                cells.append(pair_threshold(m.points, m.cond_sigma, m.probs, i, rule))
            except ThresholdError as exc:
                cells.append(type(exc).__name__)
        status = "ok"
        numeric = [c for c in cells if isinstance(c, float)]
        if len(numeric) != len(cells):
            status = "error"
        elif np.any(np.diff(numeric) <= 0):
            status = "NonMonotoneThresholds"
        rows[rule.value] = {"thresholds": cells, "status": status}
    residuals = []
    for i, r in enumerate(rows["optimal"]["thresholds"]):
        if isinstance(r, float) and m.probs[i] > 0 and m.probs[i + 1] > 0 and m.cond_sigma[i] > 0:
            residuals.append(
                map_equality_residual(
                    r, m.points[i], m.points[i + 1], m.cond_sigma[i], m.cond_sigma[i + 1],
                    m.probs[i], m.probs[i + 1],
                )
            )
        else:
            residuals.append(None)
    return rows, residuals


def cmd_thresholds(cfg, out=None):
    out = out or sys.stdout
    m = build_channel(cfg.link, cfg.constellation, cfg.oma_dbm)
    rows, residuals = threshold_table(m)
    out.write(
        f"PAM-{m.order} at OMA {cfg.oma_dbm:g} dBm: sigma_ele2={m.sigma_ele2:.6g} "
        f"sigma_rin2={m.sigma_rin2:.6g} beta={m.beta:.6g}\n"
    )
    header = ["rule"] + [f"r_{i}" for i in range(m.order - 1)] + ["status"]
    out.write("  ".join(f"{h:>16}" for h in header) + "\n")
    for name, row in rows.items():
        cells = [f"{c:.10g}" if isinstance(c, float) else c for c in row["thresholds"]]
        out.write("  ".join(f"{c:>16}" for c in [name, *cells, row["status"]]) + "\n")
    res = ["-" if r is None else f"{r:.3g}" for r in residuals]
    out.write("  ".join(f"{c:>16}" for c in ["map residual", *res]) + "\n")
    if cfg.outputs.get("json"):
        doc = {
            "provenance": provenance(cfg),
            "config": cfg.to_dict(),
            "channel": {
                "sigma_ele2": m.sigma_ele2,
                "sigma_rin2": m.sigma_rin2,
                "beta": m.beta,
                "cond_sigma": m.cond_sigma,
            },
            "rules": rows,
            "map_residuals": residuals,
        }
        _write(cfg.outputs["json"], dump_json(doc))
    return EXIT_OK


def objective_report(params, c, oma_dbm):
    """SER under the optimal and approximate rules, MI and entropy."""
    m = build_channel(params, c, oma_dbm)
    report = {"entropy_bits": c.entropy(), "mi_bits": mutual_information(m)}
    for rule in (ThresholdRule.OPTIMAL, ThresholdRule.APPROX):
        try:
            report[f"ser_{rule.value}"] = analytic_ser(m, build_thresholds(m, rule)).average
        except ThresholdError as exc:
            report[f"ser_{rule.value}"] = None
            report[f"error_{rule.value}"] = f"{type(exc).__name__}: {exc}"
    return report


def cmd_optimize(cfg, out=None):
    out = out or sys.stdout
    opt = cfg.optimize
    if opt.mode is None:
        raise ConfigError("mode", "optimize needs --mode gs|ps-ser|ps-mi")
    rule = cfg.rules[0] if cfg.rules else ThresholdRule.OPTIMAL
    c = cfg.constellation
    kwargs = {"restarts": opt.restarts, "seed": cfg.mc.seed, "max_evals": opt.max_evals}
    try:
        if opt.mode == "gs":
            result = optimize_gs(GsProblem(c.with_probs(None), cfg.oma_dbm, rule), cfg.link, **kwargs)
        elif opt.mode == "ps-ser":
            if opt.h_min is None:
                raise ConfigError("h_min", "ps-ser needs --h-min")
            problem = PsProblem(c, cfg.oma_dbm, rule, opt.h_min, Objective.MIN_SER)
            result = optimize_ps_ser(problem, cfg.link, **kwargs)
        else:
            problem = PsProblem(c, cfg.oma_dbm, rule, opt.h_min, Objective.MAX_MI, opt.h_max)
            result = optimize_ps_mi(problem, cfg.link, **kwargs)
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        if cfg.outputs.get("json"):
            best = exc.best.to_dict() if hasattr(exc.best, "to_dict") else _clean(exc.best)
            _write(cfg.outputs["json"], dump_json({"status": "solver_failure", "message": str(exc), "best": best}))
        return EXIT_SOLVER
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("optimize", str(exc)) from None

    before = objective_report(cfg.link, result.start, cfg.oma_dbm)
    after = objective_report(cfg.link, result.constellation, cfg.oma_dbm)
    doc = {
        "provenance": provenance(cfg),
        "config": cfg.to_dict(),
        "mode": opt.mode,
        "oma_dbm": cfg.oma_dbm,
        "constellation": result.constellation.to_dict(),
        "result": result.to_dict(),
        "report": {"before": before, "after": after},
    }
    if cfg.outputs.get("json"):
        _write(cfg.outputs["json"], dump_json(doc))
    out.write(f"mode={opt.mode} rule={rule.value} oma={cfg.oma_dbm:g} dBm\n")
    out.write("points: " + " ".join(f"{v:.6g}" for v in result.constellation.points) + "\n")
    out.write("probs:  " + " ".join(f"{v:.6g}" for v in result.constellation.probs) + "\n")
    for label, rep in (("before", before), ("after", after)):
        parts = [f"{k}={v:.6g}" for k, v in rep.items() if isinstance(v, float)]
        out.write(f"{label}: " + " ".join(parts) + "\n")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--oma-start", type=float, metavar="DBM")
    common.add_argument("--oma-stop", type=float, metavar="DBM")
    common.add_argument("--oma-step", type=float, metavar="DBM")
    common.add_argument("--oma", dest="oma_dbm", type=float, metavar="DBM",
                        help="single operating point for thresholds/optimize")
    common.add_argument("--rules", help="comma separated: optimal,uniform-exact,approx,awgn")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--min-errors", type=int, metavar="N")
    common.add_argument("--max-symbols", type=int, metavar="N")
    common.add_argument("--batch", type=int, metavar="N")
    common.add_argument("--jobs", dest="n_jobs", type=int, metavar="N")
    common.add_argument("--out-csv", metavar="PATH")
    common.add_argument("--out-json", metavar="PATH")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--h-min", type=float, metavar="BITS")
    common.add_argument("--h-max", type=float, metavar="BITS")
    common.add_argument("--restarts", type=int, metavar="N")
    common.add_argument("--rin-off", action="store_true", default=None, help="set sigma_rin^2 = 0")

    parser = argparse.ArgumentParser(prog="rinlink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("sweep", parents=[common], help="SER/MI versus OMA")
    sp.add_argument("--no-mc", action="store_true", help="analytic columns only")
    sub.add_parser("thresholds", parents=[common], help="compare threshold rules at one OMA")
    sub.add_parser("optimize", parents=[common], help="geometric or probabilistic shaping")
    return parser


_OVERRIDES = (
    "preset", "oma_start", "oma_stop", "oma_step", "oma_dbm", "rules", "seed",
    "min_errors", "max_symbols", "batch", "n_jobs", "out_csv", "out_json",
    "mode", "h_min", "h_max", "restarts", "rin_off",
)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = load_document(args.config) if args.config else {}
        cfg = resolve(doc, **{k: getattr(args, k) for k in _OVERRIDES})
        if args.command == "sweep":
            return cmd_sweep(cfg, run_mc=not args.no_mc)
        if args.command == "thresholds":
            return cmd_thresholds(cfg)
        return cmd_optimize(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
