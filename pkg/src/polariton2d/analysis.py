"""Peak traces versus waiting time, population dynamics and the L/L decay fit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateTrace, NoConvergence
from .liouville import LiouvilleEigendecomposition, propagate
from .manifold import HamiltonianSystem
from .params import HBAR
from .twodes import PEAKS, MaskSet, SpectrumGrid2D

REAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PeakTrace:
    """Complex total (R + NR) signal at one peak versus waiting time T (fs).

    ``population`` and ``coherence`` are the partial sums over modes with
    real and complex eigenvalues; they add up to ``values``.
    """

    peak: str
    times: np.ndarray
    values: np.ndarray
    population: np.ndarray | None = None
    coherence: np.ndarray | None = None

    def __post_init__(self):
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("waiting times must be strictly increasing")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def peak_trace(masks: MaskSet, which: str, times, split: bool = True) -> PeakTrace:
    """Evaluate the mask sum at the grid point nearest peak ``which`` for each T."""
    if which not in PEAKS:
        raise ValueError(f"unknown peak {which!r}; expected one of {PEAKS}")
    probe = SpectrumGrid2D(masks.omega_tau, masks.omega_t, np.zeros((len(masks.omega_t), len(masks.omega_tau))), 0.0, "probe", 1.0, masks.peak_positions)
    x, y = which.split("/")
    it, itau = probe.nearest(masks.peak_positions[x], masks.peak_positions[y])
    times = np.asarray(times, dtype=float)
    amp = masks.D[it, :] * (masks.E_R[:, itau] + masks.E_NR[:, itau])
    phases = np.exp(np.outer(times, masks.eigenvalues) / masks.hbar)
    terms = phases * amp[None, :]
    values = terms.sum(axis=1)
    pop = coh = None
    if split:
        real = np.abs(masks.eigenvalues.imag) <= REAL_TOL * max(1.0, np.abs(masks.eigenvalues).max(initial=0.0))
        pop = terms[:, real].sum(axis=1)
        coh = terms[:, ~real].sum(axis=1)
    return PeakTrace(which, times, values, pop, coh)


# populations ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PopulationDynamics:
    """rho_aa(t) per eigenstate label; ``coefficients[label]`` lists
    (mode label, C, lambda) with C = <<aa|v_i>> <<v_i|rho(0)>>."""

    times: np.ndarray
    populations: dict
    coefficients: dict


def population_dynamics(
    eig: LiouvilleEigendecomposition,
    system: HamiltonianSystem,
    c_l: complex,
    c_u: complex,
    times,
    states=None,
    floor: float = 1e-12,
) -> PopulationDynamics:
    """Populations after preparing C_L|L> + C_U|U> (|C_L|^2 + |C_U|^2 = 1)."""
    if abs(abs(c_l) ** 2 + abs(c_u) ** 2 - 1) > 1e-9:
        raise ValueError("|C_L|^2 + |C_U|^2 must equal 1")
    d = system.dim
    psi = np.zeros(d, dtype=complex)
    psi[system.index("L")] = c_l
    psi[system.index("U")] = c_u
    rho0 = np.outer(psi, psi.conj()).reshape(-1)
    start = eig.to_coeffs(rho0)
    times = np.asarray(times, dtype=float)
    phases = np.exp(np.outer(times, eig.eigenvalues) / eig.hbar)
    states = list(system.labels) if states is None else list(states)
    pops, coeffs = {}, {}
    for lab in states:
        a = system.index(lab)
        row = np.zeros(d * d)
        row[a * (d + 1)] = 1.0
        c = eig.rows_times_right(row) * start
        pops[lab] = (phases @ c).real
        keep = np.flatnonzero(np.abs(c) > floor)
        coeffs[lab] = [(eig.label(int(i)), complex(c[i]), complex(eig.eigenvalues[i])) for i in keep]
    return PopulationDynamics(times, pops, coeffs)


def populations_by_propagation(eig, system, c_l, c_u, times) -> dict:
    """Same populations through direct spectral propagation of rho(0)."""
    d = system.dim
    psi = np.zeros(d, dtype=complex)
    psi[system.index("L")] = c_l
    psi[system.index("U")] = c_u
    out = propagate(eig, np.outer(psi, psi.conj()), times)
    diag = out.reshape(len(times), d, d).diagonal(axis1=1, axis2=2).real
    return {lab: diag[:, i] for i, lab in enumerate(system.labels)}


# fit --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Parameters of |A e^{-G_LL T} + e^{-G_UL T} (B cos W T + C sin W T)|.

    Rates and W are energies (eV); exponents use T / hbar. Lifetimes follow
    from G_LL = kappa/2 and G_UL = kappa/2 + gamma/8.
    """

    A: float
    B: float
    C: float
    gamma_LL: float
    gamma_UL: float
    omega_r: float
    kappa_lifetime: float
    gamma_lifetime: float
    residual_norm: float
    relative_residual: float
    converged: bool
    starts_agree: bool = True
    message: str = ""
    starts: list = field(default_factory=list)


def fit_model(params, times, omega_r, hbar=HBAR):
    a, b, c, g1, g2 = params
    t = np.asarray(times) / hbar
    return np.abs(a * np.exp(-g1 * t) + np.exp(-g2 * t) * (b * np.cos(omega_r * t) + c * np.sin(omega_r * t)))


def _lifetimes(g_ll, g_ul, hbar):
    kappa = 2 * g_ll
    gamma = 8 * (g_ul - g_ll)
    tk = hbar / kappa if kappa > 0 else math.inf
    tg = hbar / gamma if gamma > 0 else math.inf
    return tk, tg


def log_slope_rate(times, y, hbar=HBAR) -> tuple:
    """(rate, prefactor) of a straight-line fit to log y: y ~ P exp(-rate T / hbar)."""
    slope, icpt = np.polyfit(np.asarray(times) / hbar, np.log(y), 1)
    return float(-slope), float(math.exp(icpt))


def dominant_frequency(times, y, hbar=HBAR, pad: int = 16) -> tuple:
    """Oscillation energy (eV) of y after removing a log-linear trend.

    Zero-padded FFT peak with parabolic refinement. Returns (omega, relative
    oscillation amplitude).
    """
    times = np.asarray(times, dtype=float)
    rate, pref = log_slope_rate(times, y, hbar)
    resid = y - pref * np.exp(-rate * times / hbar)
    rel_amp = float(np.abs(resid).max() / np.abs(y).mean())
    n = len(times) * pad
    spec = np.abs(np.fft.rfft(resid, n))
    freqs = np.fft.rfftfreq(n, times[1] - times[0])
    spec[0] = 0.0
    i = int(np.argmax(spec))
    if 0 < i < len(spec) - 1:
        a, b, c = spec[i - 1], spec[i], spec[i + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    return 2 * math.pi * hbar * (freqs[i] + shift * (freqs[1] - freqs[0])), rel_amp


def fit_LL_peak(
    trace: PeakTrace | tuple,
    initial_guess_strategy: str = "spread",
    omega_r: float | None = None,
    hbar: float = HBAR,
    agree_tol: float = 1e-4,
) -> FitResult:
    """Fit the modulus of the L/L trace with two decay rates and a fixed Rabi frequency.

    The frequency comes from ``dominant_frequency`` unless ``omega_r`` is given.
    Rates are fitted as logarithms (positivity) by Levenberg-Marquardt from
    three starts spread around the log-slope rate.
    Raises DegenerateTrace (with a log-slope fallback in ``.result``) when the
    oscillation is below 1e-6 of the mean, NoConvergence if no start converges.
    """
    if isinstance(trace, PeakTrace):
        times, y = trace.times, trace.magnitude
    else:
        times, y = (np.asarray(v, dtype=float) for v in trace)
        y = np.abs(y)
    times = np.asarray(times, dtype=float)
    scale = float(np.abs(y).max())
    yn = y / scale

    rate0, _ = log_slope_rate(times, yn, hbar)
    freq, rel_amp = dominant_frequency(times, yn, hbar)
    if rel_amp < 1e-6 and omega_r is None:
        tk, _ = _lifetimes(rate0, math.nan, hbar)
        fallback = FitResult(
            A=float(yn[0] * scale), B=0.0, C=0.0, gamma_LL=rate0, gamma_UL=math.nan, omega_r=math.nan,
            kappa_lifetime=tk, gamma_lifetime=math.nan, residual_norm=math.nan, relative_residual=math.nan,
            converged=False, message="no oscillation; log-slope fallback",
        )
        raise DegenerateTrace(f"oscillation amplitude {rel_amp:.2e} of the mean is below 1e-6", fallback)
    omega = freq if omega_r is None else float(omega_r)
    rate0 = max(rate0, 1e-6)

    if initial_guess_strategy == "spread":
        starts = [(0.5, 1.5), (1.0, 2.0), (2.0, 4.0)]
    elif initial_guess_strategy == "single":
        starts = [(1.0, 2.0)]
    else:
        raise ValueError(f"unknown initial guess strategy {initial_guess_strategy!r}")

    def resid(q):
        a, b, c, l1, l2 = q
        return fit_model((a, b, c, math.exp(l1), math.exp(l2)), times, omega, hbar) - yn

    runs = []
    for f1, f2 in starts:
        q0 = [yn[0], 0.1 * yn[0], 0.0, math.log(f1 * rate0), math.log(f2 * rate0)]
        try:
            r = least_squares(resid, q0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
        except ValueError as exc:  # non-finite model values
            runs.append((None, str(exc)))
            continue
        runs.append((r, r.message))
    good = [r for r, _ in runs if r is not None and r.status > 0 and np.all(np.isfinite(r.x))]
    if not good:
        last = next((r for r, _ in reversed(runs) if r is not None), None)
        partial = None
        if last is not None:
            a, b, c, l1, l2 = last.x
            g1, g2 = math.exp(l1), math.exp(l2)
            tk, tg = _lifetimes(g1, g2, hbar)
            res = float(np.linalg.norm(last.fun) * scale)
            partial = FitResult(a * scale, b * scale, c * scale, g1, g2, omega, tk, tg, res,
                                res / (np.linalg.norm(yn) * scale), False, False, last.message)
        raise NoConvergence("least-squares fit did not converge from any start", partial)

    best = min(good, key=lambda r: r.cost)
    a, b, c, l1, l2 = best.x
    g1, g2 = math.exp(l1), math.exp(l2)
    costs = np.array([r.cost for r in good])
    rates = np.array([np.exp(r.x[3:]) for r in good])
    agree = bool(
        len(good) == len(starts)
        and np.all(np.abs(costs - best.cost) <= agree_tol * max(best.cost, 1e-30) + 1e-28)
        and np.all(np.abs(rates - np.exp(best.x[3:])) <= agree_tol * np.exp(best.x[3:]))
    )
    tk, tg = _lifetimes(g1, g2, hbar)
    res = float(np.linalg.norm(best.fun) * scale)
    return FitResult(
        A=float(a * scale), B=float(b * scale), C=float(c * scale),
        gamma_LL=g1, gamma_UL=g2, omega_r=omega,
        kappa_lifetime=tk, gamma_lifetime=tg,
        residual_norm=res, relative_residual=res / float(np.linalg.norm(y)),
        converged=True, starts_agree=agree, message=best.message,
        starts=[(float(math.exp(r.x[3])), float(math.exp(r.x[4])), float(r.cost)) for r in good],
    )


def synthetic_trace(times, A, B, C, gamma_ll, gamma_ul, omega_r, hbar=HBAR) -> np.ndarray:
    return fit_model((A, B, C, gamma_ll, gamma_ul), times, omega_r, hbar)
