"""Run configuration: INI-style text file with one section per module.

Example::

    [model]
    n_emitters = 2
    omega_c = 2.0
    ...
    [run]
    tasks = eig, twod
    [twod]
    waiting_times = 0, 0.5TR, 5TR

Waiting times and trace spans accept a ``TR`` suffix (multiples of the Rabi
period). Unknown sections or keys are rejected with their line number.
Floats are written with ``repr`` so a dump/load cycle is lossless.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParameterError
from .params import ModelParams

TASKS = ("eig", "linear", "emission", "twod", "pathways", "buildup", "trace", "popdyn", "fit")
GRID_NAMES = ("omega_tau", "omega_t", "absorption", "excitation", "emission")
FORMATS = ("text", "binary")

_MODEL_KEYS = {
    "n_emitters": int,
    "omega_c": float,
    "omega_0": float,
    "rabi_splitting": float,
    "kappa_lifetime": float,
    "gamma_lifetime": float,
    "n_max": int,
    "dephasing": str,
}
_BATH_KEYS = {"kind": "bath_kind", "delta": "bath_delta", "temperature": "bath_temperature"}

SCHEMA = {
    "model": set(_MODEL_KEYS),
    "bath": set(_BATH_KEYS),
    "run": {"tasks", "output_dir", "formats", "strategy"},
    "grids": set(GRID_NAMES),
    "twod": {"waiting_times", "prune_threshold", "component", "oracle", "pathways", "stages", "omega_tau_cut"},
    "emission": {"drive_amplitude", "check_linearity"},
    "trace": {"peaks", "t_max", "samples"},
    "popdyn": {"c_l", "c_u", "t_max", "samples"},
    "fit": {"t_max", "samples", "omega_r"},
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams = field(default_factory=ModelParams)
    tasks: tuple = ()
    output_dir: str = "output"
    formats: tuple = ("text",)
    strategy: str = "blocks"
    grids: dict = field(default_factory=dict)
    waiting_times: tuple = (0.0,)
    prune_threshold: float = 1e-6
    component: str = "absorptive"
    oracle: bool = False
    pathways: tuple = ("GSB", "GSR", "SE", "ESA", "ESAprime")
    stages: tuple = ("after-pulse-2", "after-T", "after-pulse-3", "detection")
    omega_tau_cut: float | None = None
    drive_amplitude: float | None = None
    check_linearity: bool = True
    trace_peaks: tuple = ("L/L", "L/U", "U/L", "U/U")
    trace_t_max: float | None = None
    trace_samples: int = 401
    popdyn_c_l: float = math.sqrt(0.5)
    popdyn_c_u: float = math.sqrt(0.5)
    popdyn_t_max: float = 200.0
    popdyn_samples: int = 401
    fit_t_max: float | None = None
    fit_samples: int = 2001
    fit_omega_r: float | None = None

    def grid(self, name):
        """(min, max, count) for a named grid, or None for the module default."""
        return self.grids.get(name)

    def with_(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def _key_lines(text):
    """Map (section, key) -> line number, and section -> line number."""
    lines, sections = {}, {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            sections.setdefault(section, no)
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines, sections


def _split_list(value):
    return tuple(v.strip() for v in value.replace("\n", ",").split(",") if v.strip())


def _parse_time(token, rabi_period):
    token = token.strip()
    if token.upper().endswith("TR"):
        return float(token[:-2].strip() or 1.0) * rabi_period
    if token.lower().endswith("fs"):
        token = token[:-2]
    return float(token)


def _parse_bool(value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def loads(text: str) -> RunConfig:
    """Parse configuration text."""
    lines, section_lines = _key_lines(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=section_lines.get(section))
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", section, key, lines.get((section, key)))

    def get(section, key):
        return parser[section][key] if parser.has_section(section) and key in parser[section] else None

    def convert(section, key, fn):
        raw = get(section, key)
        if raw is None:
            return None
        try:
            return fn(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value {raw!r}: {exc}", section, key, lines.get((section, key))) from None

    model_kwargs = {}
    for key, typ in _MODEL_KEYS.items():
        v = convert("model", key, typ)
        if v is not None:
            model_kwargs[key] = v
    for key, attr in _BATH_KEYS.items():
        v = convert("bath", key, str if key == "kind" else float)
        if v is not None:
            model_kwargs[attr] = v
    try:
        model = ModelParams(**model_kwargs)
    except ParameterError as exc:
        raise ConfigError(str(exc), "model") from None
    tr = model.rabi_period

    kw = {"model": model}
    tasks = convert("run", "tasks", _split_list)
    if tasks is not None:
        for t in tasks:
            if t not in TASKS:
                raise ConfigError(f"unknown task {t!r}; expected one of {TASKS}", "run", "tasks", lines.get(("run", "tasks")))
        kw["tasks"] = tasks
    if get("run", "output_dir") is not None:
        kw["output_dir"] = get("run", "output_dir").strip()
    formats = convert("run", "formats", _split_list)
    if formats is not None:
        for f in formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}", "run", "formats", lines.get(("run", "formats")))
        kw["formats"] = formats
    strategy = get("run", "strategy")
    if strategy is not None:
        if strategy.strip() not in ("blocks", "full"):
            raise ConfigError("strategy must be 'blocks' or 'full'", "run", "strategy", lines.get(("run", "strategy")))
        kw["strategy"] = strategy.strip()

    grids = {}
    for name in GRID_NAMES:
        def grid(raw):
            parts = raw.split()
            if len(parts) != 3:
                raise ValueError("expected 'min max count'")
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if not hi > lo or n < 2:
                raise ValueError("need max > min and count >= 2")
            return (lo, hi, n)
        g = convert("grids", name, grid)
        if g is not None:
            grids[name] = g
    kw["grids"] = grids

    def times(raw):
        return tuple(_parse_time(t, tr) for t in _split_list(raw))

    for key, attr, fn in (
        ("waiting_times", "waiting_times", times),
        ("prune_threshold", "prune_threshold", float),
        ("component", "component", str.strip),
        ("oracle", "oracle", _parse_bool),
        ("pathways", "pathways", _split_list),
        ("stages", "stages", _split_list),
        ("omega_tau_cut", "omega_tau_cut", float),
    ):
        v = convert("twod", key, fn)
        if v is not None:
            kw[attr] = v
    if "waiting_times" in kw and any(t < 0 for t in kw["waiting_times"]):
        raise ConfigError("waiting times must be non-negative", "twod", "waiting_times", lines.get(("twod", "waiting_times")))
    if kw.get("component", "absorptive") not in ("R", "NR", "total", "absorptive"):
        raise ConfigError("component must be R, NR, total or absorptive", "twod", "component", lines.get(("twod", "component")))

    for section, key, attr, fn in (
        ("emission", "drive_amplitude", "drive_amplitude", float),
        ("emission", "check_linearity", "check_linearity", _parse_bool),
        ("trace", "peaks", "trace_peaks", _split_list),
        ("trace", "t_max", "trace_t_max", lambda r: _parse_time(r, tr)),
        ("trace", "samples", "trace_samples", int),
        ("popdyn", "c_l", "popdyn_c_l", float),
        ("popdyn", "c_u", "popdyn_c_u", float),
        ("popdyn", "t_max", "popdyn_t_max", lambda r: _parse_time(r, tr)),
        ("popdyn", "samples", "popdyn_samples", int),
        ("fit", "t_max", "fit_t_max", lambda r: _parse_time(r, tr)),
        ("fit", "samples", "fit_samples", int),
        ("fit", "omega_r", "fit_omega_r", float),
    ):
        v = convert(section, key, fn)
        if v is not None:
            kw[attr] = v
    return RunConfig(**kw)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def dumps(cfg: RunConfig) -> str:
    """Serialize with every float in repr form."""
    m = cfg.model
    out = ["[model]"]
    for key in _MODEL_KEYS:
        out.append(f"{key} = {getattr(m, key)!r}" if key != "dephasing" else f"dephasing = {m.dephasing}")
    out += ["", "[bath]", f"kind = {m.bath_kind}", f"delta = {m.bath_delta!r}", f"temperature = {m.bath_temperature!r}"]
    out += ["", "[run]", f"tasks = {', '.join(cfg.tasks)}", f"output_dir = {cfg.output_dir}",
            f"formats = {', '.join(cfg.formats)}", f"strategy = {cfg.strategy}"]
    out += ["", "[grids]"]
    for name in GRID_NAMES:
        if name in cfg.grids:
            lo, hi, n = cfg.grids[name]
            out.append(f"{name} = {lo!r} {hi!r} {n}")
    out += ["", "[twod]", f"waiting_times = {', '.join(repr(t) for t in cfg.waiting_times)}",
            f"prune_threshold = {cfg.prune_threshold!r}", f"component = {cfg.component}",
            f"oracle = {str(cfg.oracle).lower()}", f"pathways = {', '.join(cfg.pathways)}",
            f"stages = {', '.join(cfg.stages)}"]
    if cfg.omega_tau_cut is not None:
        out.append(f"omega_tau_cut = {cfg.omega_tau_cut!r}")
    out += ["", "[emission]"]
    if cfg.drive_amplitude is not None:
        out.append(f"drive_amplitude = {cfg.drive_amplitude!r}")
    out.append(f"check_linearity = {str(cfg.check_linearity).lower()}")
    out += ["", "[trace]", f"peaks = {', '.join(cfg.trace_peaks)}"]
    if cfg.trace_t_max is not None:
        out.append(f"t_max = {cfg.trace_t_max!r}")
    out.append(f"samples = {cfg.trace_samples}")
    out += ["", "[popdyn]", f"c_l = {cfg.popdyn_c_l!r}", f"c_u = {cfg.popdyn_c_u!r}",
            f"t_max = {cfg.popdyn_t_max!r}", f"samples = {cfg.popdyn_samples}"]
    out += ["", "[fit]"]
    if cfg.fit_t_max is not None:
        out.append(f"t_max = {cfg.fit_t_max!r}")
    out.append(f"samples = {cfg.fit_samples}")
    if cfg.fit_omega_r is not None:
        out.append(f"omega_r = {cfg.fit_omega_r!r}")
    return "\n".join(out) + "\n"
