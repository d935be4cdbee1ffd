"""Run configuration: JSON documents, presets and command-line overrides.

A document looks like::

    {
      "preset": "pam6",
      "link": {"rin_db_hz": -140, "er_db": 5},
      "constellation": {"points": [...], "probs": [...]},
      "oma_grid_dbm": {"start": -2, "stop": 14, "step": 1},
      "oma_dbm": 0,
      "rules": ["optimal", "approx"],
      "mc": {"seed": 42, "min_errors": 100, "max_symbols": 100000000, "batch": 1000000},
      "optimize": {"mode": "ps-ser", "h_min": 2.3, "restarts": 8},
      "outputs": {"csv": "sweep.csv", "json": "sweep.json"}
    }

A preset expands to the reference link and the equally spaced uniform
constellation of that order; explicit fields override it.  The JSON
written by ``sweep`` echoes the resolved document under ``"config"`` and
can be passed back as ``--config``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .constellation import Constellation
from .detection import ThresholdRule
from .exceptions import ConfigError
from .link import LinkParams
from .montecarlo import McConfig

PRESETS = {"pam4": 4, "pam6": 6, "pam8": 8}
MODES = ("gs", "ps-ser", "ps-mi")
DEFAULT_RULES = (ThresholdRule.OPTIMAL, ThresholdRule.APPROX)
_TOP_KEYS = {"preset", "link", "constellation", "oma_grid_dbm", "oma_dbm", "rules", "mc", "optimize", "outputs"}


@dataclass(frozen=True)
class OmaGrid:
    start: float = -2.0
    stop: float = 14.0
    step: float = 1.0

    def __post_init__(self):
        for name in ("start", "stop", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"oma_grid_dbm.{name}", "must be a finite number")
        if not self.step > 0:
            raise ConfigError("oma_grid_dbm.step", f"must be > 0, got {self.step!r}")
        if self.stop < self.start:
            raise ConfigError("oma_grid_dbm.stop", "must be >= start")

    def values(self):
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [float(v) for v in np.round(self.start + self.step * np.arange(n), 12)]

    def to_dict(self):
        return {"start": self.start, "stop": self.stop, "step": self.step}


@dataclass(frozen=True)
class OptimizeSettings:
    mode: str | None = None
    h_min: float | None = None
    h_max: float | None = None
    restarts: int = 8
    max_evals: int = 2000

    def to_dict(self):
        return {
            "mode": self.mode,
            "h_min": self.h_min,
            "h_max": self.h_max,
            "restarts": self.restarts,
            "max_evals": self.max_evals,
        }


@dataclass(frozen=True)
class RunConfig:
    link: LinkParams
    constellation: Constellation
    preset: str | None = None
    oma_grid: OmaGrid = field(default_factory=OmaGrid)
    oma_dbm: float = 0.0
    rules: tuple = DEFAULT_RULES
    mc: McConfig = field(default_factory=McConfig)
    optimize: OptimizeSettings = field(default_factory=OptimizeSettings)
    outputs: dict = field(default_factory=dict)

    def to_dict(self):
        """Resolved document; output paths are left out so echoes are path-free."""
        return {
            "preset": self.preset,
            "link": self.link.to_dict(),
            "constellation": self.constellation.to_dict(),
            "oma_grid_dbm": self.oma_grid.to_dict(),
            "oma_dbm": self.oma_dbm,
            "rules": [r.value for r in self.rules],
            "mc": self.mc.to_dict(),
            "optimize": self.optimize.to_dict(),
        }


def load_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError("--config", "top level must be an object")
    return doc


def _number(section, key, value, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key}" if section else key, f"expected a number, got {value!r}") from None
    if kind is int and out != value and not (isinstance(value, float) and value.is_integer()):
        raise ConfigError(f"{section}.{key}", f"expected an integer, got {value!r}")
    return out


def resolve(doc=None, **overrides):
    """Build a :class:`RunConfig` from a document plus flag overrides.

    Overrides left as ``None`` are ignored.  Recognized override names are
    ``preset, oma_start, oma_stop, oma_step, oma_dbm, rules, seed,
    min_errors, max_symbols, batch, n_jobs, out_csv, out_json, mode,
    h_min, h_max, restarts, rin_off``.
    """
    doc = dict(doc or {})
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    ov = {k: v for k, v in overrides.items() if v is not None}

    preset = ov.get("preset", doc.get("preset"))
    if preset is not None and preset not in PRESETS:
        raise ConfigError("preset", f"unknown preset {preset!r} (expected one of {', '.join(PRESETS)})")

    constellation = Constellation.pam(PRESETS[preset]) if preset else None
    if "constellation" in doc and doc["constellation"] is not None:
        try:
            constellation = Constellation.from_dict(doc["constellation"])
        except KeyError as exc:
            raise ConfigError(f"constellation.{exc.args[0]}", "missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError("constellation", str(exc)) from None
    if constellation is None:
        raise ConfigError("constellation", "give a preset or an explicit constellation")

    link_kwargs = {}
    if constellation.order in (4, 6, 8):
        link_kwargs = LinkParams.for_order(constellation.order).to_dict()
    if preset:
        link_kwargs = LinkParams.for_order(PRESETS[preset]).to_dict()
    link_doc = doc.get("link") or {}
    if not isinstance(link_doc, dict):
        raise ConfigError("link", "must be an object")
    link_kwargs.update(link_doc)
    if ov.get("rin_off"):
        link_kwargs["rin_db_hz"] = None
    try:
        link = LinkParams.from_dict(link_kwargs)
    except KeyError as exc:
        raise ConfigError(f"link.{exc.args[0]}", "unknown field") from None
    except (TypeError, ValueError) as exc:
        name = next((f.name for f in fields(LinkParams) if f.name in str(exc)), None)
        raise ConfigError(f"link.{name}" if name else "link", str(exc)) from None

    grid_doc = dict(doc.get("oma_grid_dbm") or {})
    for key in ("start", "stop", "step"):
        if f"oma_{key}" in ov:
            grid_doc[key] = ov[f"oma_{key}"]
    unknown = set(grid_doc) - {"start", "stop", "step"}
    if unknown:
        raise ConfigError(f"oma_grid_dbm.{sorted(unknown)[0]}", "unknown field")
    grid = OmaGrid(**{k: _number("oma_grid_dbm", k, v) for k, v in grid_doc.items()})

    oma_dbm = _number("", "oma_dbm", ov.get("oma_dbm", doc.get("oma_dbm", 0.0)))

    rules = ov.get("rules", doc.get("rules", [r.value for r in DEFAULT_RULES]))
    if isinstance(rules, str):
        rules = [r for r in (s.strip() for s in rules.split(",")) if r]
    try:
        rules = tuple(ThresholdRule.parse(r) for r in rules)
    except ValueError as exc:
        raise ConfigError("rules", str(exc)) from None

    mc_doc = dict(doc.get("mc") or {})
    for key in ("seed", "min_errors", "max_symbols", "batch", "n_jobs"):
        if key in ov:
            mc_doc[key] = ov[key]
    unknown = set(mc_doc) - {f.name for f in fields(McConfig)}
    if unknown:
        raise ConfigError(f"mc.{sorted(unknown)[0]}", "unknown field")
    mc_kwargs = {k: _number("mc", k, v, int) for k, v in mc_doc.items()}
    if "max_symbols" in mc_kwargs and "batch" not in mc_kwargs:
        mc_kwargs["batch"] = min(McConfig.batch, mc_kwargs["max_symbols"])
    try:
        mc = McConfig(**mc_kwargs)
    except ValueError as exc:
        field_name = next((k for k in ("seed", "min_errors", "max_symbols", "batch", "n_jobs") if str(exc).startswith(k)), "mc")
        raise ConfigError(f"mc.{field_name}" if field_name != "mc" else "mc", str(exc)) from None

    opt_doc = dict(doc.get("optimize") or {})
    for key in ("mode", "h_min", "h_max", "restarts"):
        if key in ov:
            opt_doc[key] = ov[key]
    unknown = set(opt_doc) - {f.name for f in fields(OptimizeSettings)}
    if unknown:
        raise ConfigError(f"optimize.{sorted(unknown)[0]}", "unknown field")
    mode = opt_doc.get("mode")
    if mode is not None and mode not in MODES:
        raise ConfigError("optimize.mode", f"unknown mode {mode!r} (expected one of {', '.join(MODES)})")
    for key in ("h_min", "h_max"):
        if opt_doc.get(key) is not None:
            opt_doc[key] = _number("optimize", key, opt_doc[key])
    for key in ("restarts", "max_evals"):
        if key in opt_doc:
            opt_doc[key] = _number("optimize", key, opt_doc[key], int)
            if opt_doc[key] < 1:
                raise ConfigError(f"optimize.{key}", "must be >= 1")
    optimize = OptimizeSettings(**opt_doc)

    outputs = dict(doc.get("outputs") or {})
    if "out_csv" in ov:
        outputs["csv"] = ov["out_csv"]
    if "out_json" in ov:
        outputs["json"] = ov["out_json"]

    return RunConfig(
        link=link,
        constellation=constellation,
        preset=preset,
        oma_grid=grid,
        oma_dbm=oma_dbm,
        rules=rules,
        mc=mc,
        optimize=optimize,
        outputs=outputs,
    )


def with_rules(cfg, rules):
    return replace(cfg, rules=tuple(ThresholdRule.parse(r) for r in rules))
