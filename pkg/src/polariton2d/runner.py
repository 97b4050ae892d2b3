"""Task execution behind the command line: outputs, manifest and diagnostics."""
from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import fit_LL_peak, fit_model, peak_trace, population_dynamics
from .config import RunConfig, dumps
from .errors import NumericalError, Polariton2DError
from .io import sha256, write_binary, write_text
from .linear import absorption, default_emission_axis, emission_map
from .liouville import assemble_liouvillian, block_structure, diagonalize, frequency_shifts
from .manifold import build_basis, build_hamiltonian
from .params import HBAR
from .pathways import buildup_trace, pathway_spectrum
from .twodes import build_masks, default_axis, spectrum_2d, time_domain_oracle

ORACLE_MAX_DIM = 12


class TaskFailed(Polariton2DError):
    """A task raised; ``task`` names it and ``cause`` holds the original error."""

    def __init__(self, task, cause):
        super().__init__(f"task '{task}' failed: {type(cause).__name__}: {cause}")
        self.task = task
        self.cause = cause

    @property
    def numerical(self) -> bool:
        return isinstance(self.cause, NumericalError)


@dataclass
class Diagnostic:
    level: str  # "info" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


def _axis(cfg, name, fallback):
    g = cfg.grid(name)
    return np.linspace(g[0], g[1], g[2]) if g is not None else fallback


def validate(cfg: RunConfig) -> list:
    """Unit conversions, grid resolution, truncation and memory estimates."""
    p = cfg.model
    out = []
    info = lambda m: out.append(Diagnostic("info", m))  # noqa: E731
    warn = lambda m: out.append(Diagnostic("warning", m))  # noqa: E731
    info(f"hbar*kappa = {1000 * p.kappa:.2f} meV (cavity lifetime {p.kappa_lifetime:g} fs)")
    info(f"hbar*gamma = {1000 * p.gamma:.2f} meV (relaxation lifetime {p.gamma_lifetime:g} fs)")
    info(f"coupling g = {1000 * p.coupling:.4f} meV, detuning = {1000 * p.detuning:.2f} meV, T_R = {p.rabi_period:.3f} fs")
    if abs(p.detuning) > p.rabi_splitting / 2:
        warn("detuning exceeds half the Rabi splitting; L/U labels follow energy order")
    for name in ("omega_tau", "omega_t", "absorption", "excitation", "emission"):
        g = cfg.grid(name)
        if g is None:
            continue
        step = (g[1] - g[0]) / (g[2] - 1)
        if step > p.rabi_splitting / 10 * (1 + 1e-9):
            warn(f"grid {name} step {1000 * step:.2f} meV exceeds Omega_R/10 = {100 * p.rabi_splitting:.2f} meV")
        else:
            info(f"grid {name} step {1000 * step:.3f} meV")
    needs_two = {"twod", "pathways", "buildup", "trace", "fit"} & set(cfg.tasks)
    if needs_two and p.n_max < 2:
        warn(f"tasks {sorted(needs_two)} need n_max >= 2 (got {p.n_max})")
    elif p.n_max > 2:
        info(f"n_max = {p.n_max}: third-order signals are unchanged above 2; cost grows with dim")
    else:
        info(f"n_max = {p.n_max} is exact for third-order impulsive response")
    dim = len(build_basis(p))
    d2 = dim * dim
    mem = d2 * d2 * 16 / 2**20
    info(f"Hilbert dim = {dim}, Liouville dim = {d2}, dense generator {mem:.1f} MiB")
    if d2 > 1000:
        warn(f"dim^2 = {d2}: dense eigensolve expected to take seconds to minutes")
    if "emission" in cfg.tasks and d2 > 1000:
        warn(f"emission map needs one {d2}x{d2} eigensolve per laser frequency")
    if cfg.oracle and dim > ORACLE_MAX_DIM:
        warn(f"time-domain check is skipped above Hilbert dim {ORACLE_MAX_DIM}")
    return out


class _Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._system = self._liouvillian = self._eig = self._masks = None

    @property
    def system(self):
        if self._system is None:
            self._system = build_hamiltonian(self.cfg.model)
        return self._system

    @property
    def liouvillian(self):
        if self._liouvillian is None:
            self._liouvillian = assemble_liouvillian(self.system)
        return self._liouvillian

    @property
    def eig(self):
        if self._eig is None:
            self._eig = diagonalize(self.liouvillian, self.system, strategy=self.cfg.strategy)
        return self._eig

    def axes(self):
        s = self.system
        return _axis(self.cfg, "omega_tau", default_axis(s)), _axis(self.cfg, "omega_t", default_axis(s))

    @property
    def masks(self):
        if self._masks is None:
            wt, wd = self.axes()
            self._masks = build_masks(self.eig, self.system, wt, wd, self.cfg.prune_threshold)
        return self._masks


class _Writer:
    def __init__(self, out_dir: Path, formats):
        self.dir = out_dir
        self.formats = formats
        self.files = []

    def table(self, stem, header, columns, data, labels=None):
        """Numeric table ``data`` (rows x cols); optional leading string column."""
        data = np.asarray(data, dtype=float)
        if "text" in self.formats:
            if labels is None:
                rows = data.tolist()
            else:
                rows = [[lab] + list(r) for lab, r in zip(labels, data.tolist())]
            cols = columns if labels is None else ["label"] + columns
            self.files.append(write_text(self.dir / f"{stem}.txt", header, cols, rows))
        if "binary" in self.formats:
            self.files.append(write_binary(self.dir / f"{stem}.bin", data, columns))

    def grid2d(self, stem, header, spec, extra=None):
        t, tau = np.meshgrid(spec.omega_t, spec.omega_tau, indexing="ij")
        cols = [t.ravel(), tau.ravel(), spec.values.real.ravel(), spec.values.imag.ravel()]
        names = ["omega_t_eV", "omega_tau_eV", "re", "im"]
        for name, arr in (extra or {}).items():
            cols += [arr.real.ravel(), arr.imag.ravel()]
            names += [f"{name}_re", f"{name}_im"]
        h = {
            "omega_t": f"{spec.omega_t[0]!r} {spec.omega_t[-1]!r} {len(spec.omega_t)} eV",
            "omega_tau": f"{spec.omega_tau[0]!r} {spec.omega_tau[-1]!r} {len(spec.omega_tau)} eV",
            "waiting_time_fs": repr(spec.waiting_time),
            "component": spec.component,
            "normalization": repr(spec.normalization),
            "layout": "row-major over (omega_t, omega_tau)",
        }
        h.update(header)
        self.table(stem, h, names, np.column_stack(cols))


def _tag(i, T):
    return f"T{i:02d}"


def _task_eig(ctx, w, info):
    e = ctx.eig
    order = np.lexsort((e.eigenvalues.imag, -e.eigenvalues.real))
    shifts = frequency_shifts(e, ctx.system)
    data = np.column_stack([e.eigenvalues.real[order], e.eigenvalues.imag[order], e.confidence[order], shifts[order]])
    labels = [e.label(int(i)) for i in order]
    w.table("eigenvalues", {"units": "eV (lambda = -Gamma - i omega)", "count": e.size,
                             "condition": f"{e.condition:.6e}", "shift": "omega minus bare gap of the label"},
            ["re_lambda", "im_lambda", "confidence", "shift"], data, labels)
    report = block_structure(ctx.liouvillian, ctx.system)
    text = [f"# invariant blocks: {len(report.blocks)}", f"# sizes: {' '.join(map(str, report.sizes))}"]
    if report.kinds is not None:
        text.append(report.render(ctx.system.labels))
    (w.dir / "blocks.txt").write_text("\n".join(text) + "\n")
    w.files.append(w.dir / "blocks.txt")
    info["eigenvalue_count"] = e.size
    info["block_sizes"] = report.sizes


def _task_linear(ctx, w, info):
    s = ctx.system
    p = s.params
    grid = _axis(ctx.cfg, "absorption", np.linspace(p.omega_0 - 2 * p.rabi_splitting, p.omega_0 + 2 * p.rabi_splitting, 1024))
    spec = absorption(ctx.eig, s, grid)
    norm = spec.normalize()
    w.table("absorption", {"dephasing": p.dephasing, "normalization": "raw (fs) and unit maximum"},
            ["omega_eV", "raw", "normalized"], np.column_stack([grid, spec.values, norm.values]))


def _task_emission(ctx, w, info):
    s = ctx.system
    ex = _axis(ctx.cfg, "excitation", default_emission_axis(s, 101))
    em = _axis(ctx.cfg, "emission", default_emission_axis(s))
    m = emission_map(s, ex, em, ctx.cfg.drive_amplitude, ctx.liouvillian, ctx.cfg.check_linearity)
    a, b = np.meshgrid(ex, em, indexing="ij")
    w.table("emission_map", {"drive_eV": repr(m.drive), "normalization": "unit maximum",
                             "layout": "row-major over (excitation, emission)"},
            ["excitation_eV", "emission_eV", "value"], np.column_stack([a.ravel(), b.ravel(), m.values.ravel()]))
    info["emission_argmax"] = m.argmax()


def _task_twod(ctx, w, info):
    cfg = ctx.cfg
    masks = ctx.masks
    info["retained_modes"] = len(masks.retained)
    info["retained_labels"] = sorted(set(masks.labels))
    oracle = {}
    for i, T in enumerate(cfg.waiting_times):
        spec = spectrum_2d(masks, T, cfg.component)
        w.grid2d(f"twod_{cfg.component}_{_tag(i, T)}", {}, spec)
        if cfg.oracle and ctx.system.dim <= ORACLE_MAX_DIM:
            ref = time_domain_oracle(ctx.liouvillian, ctx.system, T, component="total")
            mine = spectrum_2d(build_masks(ctx.eig, ctx.system, ref.omega_tau, ref.omega_t, 0.0), T, "total")
            oracle[repr(T)] = float(np.linalg.norm(ref.values - mine.values) / np.linalg.norm(mine.values))
    if oracle:
        info["oracle_relative_l2"] = oracle


def _task_pathways(ctx, w, info):
    cfg = ctx.cfg
    wt, wd = ctx.axes()
    for i, T in enumerate(cfg.waiting_times):
        total = spectrum_2d(ctx.masks, T, cfg.component)
        ref = float(np.abs(total.values).max())
        for pw in cfg.pathways:
            spec = pathway_spectrum(ctx.eig, ctx.system, T, pw, wt, wd, cfg.component)
            w.grid2d(f"pathway_{pw}_{_tag(i, T)}", {"pathway": pw, "total_max": repr(ref)}, spec,
                     {"normalized": spec.values / ref if ref > 0 else spec.values})


def _task_buildup(ctx, w, info):
    cfg = ctx.cfg
    wt, wd = ctx.axes()
    for i, T in enumerate(cfg.waiting_times):
        for stage in cfg.stages:
            b = buildup_trace(ctx.eig, ctx.system, stage, T, wt, wd, cfg.omega_tau_cut)
            names = list(b.components)
            data = np.column_stack([b.axis] + [b.components[n] for n in names])
            w.table(f"buildup_{stage}_{_tag(i, T)}", {"stage": stage, "waiting_time_fs": repr(T),
                                                      "axis": b.axis_name, "values": "real parts"},
                    [f"{b.axis_name}_eV"] + names, data)


def _task_trace(ctx, w, info):
    cfg = ctx.cfg
    tr = ctx.system.params.rabi_period
    times = np.linspace(0, cfg.trace_t_max if cfg.trace_t_max is not None else 20 * tr, cfg.trace_samples)
    for peak in cfg.trace_peaks:
        t = peak_trace(ctx.masks, peak, times)
        data = np.column_stack([times, t.values.real, t.values.imag, t.magnitude, t.population.real,
                                t.population.imag, t.coherence.real, t.coherence.imag])
        w.table(f"trace_{peak.replace('/', '')}", {"peak": peak, "signal": "R + NR total"},
                ["T_fs", "re", "im", "abs", "population_re", "population_im", "coherence_re", "coherence_im"], data)


def _task_popdyn(ctx, w, info):
    cfg = ctx.cfg
    times = np.linspace(0, cfg.popdyn_t_max, cfg.popdyn_samples)
    pd = population_dynamics(ctx.eig, ctx.system, cfg.popdyn_c_l, cfg.popdyn_c_u, times)
    names = list(pd.populations)
    w.table("populations", {"C_L": repr(cfg.popdyn_c_l), "C_U": repr(cfg.popdyn_c_u)},
            ["t_fs"] + names, np.column_stack([times] + [pd.populations[n] for n in names]))


def _task_fit(ctx, w, info):
    cfg = ctx.cfg
    tr = ctx.system.params.rabi_period
    times = np.linspace(0, cfg.fit_t_max if cfg.fit_t_max is not None else 20 * tr, cfg.fit_samples)
    trace = peak_trace(ctx.masks, "L/L", times, split=False)
    r = fit_LL_peak(trace, omega_r=cfg.fit_omega_r)
    fields = ["A", "B", "C", "gamma_LL", "gamma_UL", "omega_r", "kappa_lifetime", "gamma_lifetime",
              "residual_norm", "relative_residual"]
    if "text" in w.formats:
        lines = [f"# fit of |A e^(-G_LL T) + e^(-G_UL T)(B cos + C sin)| to the L/L trace",
                 f"# converged: {r.converged}", f"# starts_agree: {r.starts_agree}", "# columns: name value"]
        lines += [f"{k} {r.__dict__[k]:.12e}" for k in fields]
        (w.dir / "fit.txt").write_text("\n".join(lines) + "\n")
        w.files.append(w.dir / "fit.txt")
    curve = fit_model((r.A, r.B, r.C, r.gamma_LL, r.gamma_UL), times, r.omega_r, HBAR)
    w.table("fit_curve", {"peak": "L/L"}, ["T_fs", "abs_trace", "model"], np.column_stack([times, trace.magnitude, curve]))
    info["fit"] = {k: r.__dict__[k] for k in fields}


TASK_FUNCS = {
    "eig": _task_eig,
    "linear": _task_linear,
    "emission": _task_emission,
    "twod": _task_twod,
    "pathways": _task_pathways,
    "buildup": _task_buildup,
    "trace": _task_trace,
    "popdyn": _task_popdyn,
    "fit": _task_fit,
}


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def run(cfg: RunConfig, output_dir=None) -> dict:
    """Execute ``cfg.tasks`` in order, writing files and ``manifest.json``."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = _Writer(out, cfg.formats)
    ctx = _Context(cfg)
    manifest = {"version": __version__, "config": dumps(cfg), "tasks": {}, "files": {}}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for task in cfg.tasks:
            info = {}
            start = time.perf_counter()
            try:
                TASK_FUNCS[task](ctx, writer, info)
            except Exception as exc:  # name the failing stage, keep the cause
                raise TaskFailed(task, exc) from exc
            info["seconds"] = round(time.perf_counter() - start, 3)
            manifest["tasks"][task] = info
    if ctx._eig is not None:
        manifest["eigen_condition"] = float(ctx._eig.condition)
    manifest["warnings"] = sorted({str(w.message) for w in caught})
    manifest["files"] = {p.name: sha256(p) for p in writer.files}
    (out / "manifest.json").write_text(json.dumps(_json_safe(manifest), indent=2, sort_keys=True) + "\n")
    return manifest
