"""Third-order 2D spectra from Liouvillian eigen-modes, plus a time-domain check.

Conventions
-----------
Pulses act through the commutators [a^dag, .] (absorption) and [a, .]
(emission side); the detected signal is Tr(a rho). Constant prefactors
((-i/hbar)^3 and the sign of each half-sided transform) are dropped so the
ground-state bleach comes out positive and real on the diagonal.

The non-rephasing (NR) sequence is [a,.] G(T) [a^dag,.] G(tau) [a^dag,.] rho0
followed by detection; rephasing (R) swaps the first two pulses. The R
coherence time is transformed with exp(-i w_tau tau), which reflects its
peaks onto positive w_tau, so both components share one positive grid.

In eigen-coordinates

    S(w_t, T, w_tau) = sum_j D_j(w_t) exp(lambda_j T / hbar) E_j(w_tau)

with resolvent factors 1 / (i w + lambda). Values are stored with shape
(len(omega_t), len(omega_tau)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import GridTooCoarse, OnResonance, OutOfGrid
from .liouville import LiouvilleEigendecomposition
from .manifold import HamiltonianSystem
from .params import HBAR
from .superop import Superoperator

COMPONENTS = ("R", "NR", "total", "absorptive")
PEAKS = ("L/L", "L/U", "U/L", "U/U")


def default_axis(system: HamiltonianSystem, count: int = 256, half_width: float = 1.5) -> np.ndarray:
    """``count`` points over omega_0 +/- half_width * Omega_R (eV)."""
    p = system.params
    return np.linspace(p.omega_0 - half_width * p.rabi_splitting, p.omega_0 + half_width * p.rabi_splitting, count)


def peak_positions(system: HamiltonianSystem) -> dict:
    return {"L": system.transition_energy("L"), "U": system.transition_energy("U")}


# commutator actions on stacks of vectorized operators -----------------------


def _commute_columns(op: np.ndarray, x: np.ndarray, d: int) -> np.ndarray:
    """[op, X] for each column X of x (shape (d*d, n))."""
    xs = x.reshape(d, d, -1)
    out = np.einsum("ab,bcn->acn", op, xs) - np.einsum("abn,bc->acn", xs, op)
    return out.reshape(d * d, -1)


def _commute_rows(op: np.ndarray, r: np.ndarray, d: int) -> np.ndarray:
    """Rows r composed with X -> [op, X]: returns rows r' with r'.x = r.[op, x]."""
    rs = r.reshape(-1, d, d)
    out = np.einsum("ba,nbc->nac", op, rs) - np.einsum("nab,cb->nac", rs, op)
    return out.reshape(-1, d * d)


@dataclass(eq=False)
class MaskSet:
    """Excitation and detection masks for the retained eigen-modes.

    ``E_R``/``E_NR`` have shape (n_retained, len(omega_tau)); ``D`` has shape
    (len(omega_t), n_retained). ``retained`` indexes the decomposition.
    """

    omega_tau: np.ndarray
    omega_t: np.ndarray
    retained: np.ndarray
    eigenvalues: np.ndarray
    E_R: np.ndarray
    E_NR: np.ndarray
    D: np.ndarray
    c0: np.ndarray
    labels: list
    peak_positions: dict
    prune_threshold: float
    mode_weight: np.ndarray
    hbar: float = HBAR

    def spectrum(self, T: float, component: str = "absorptive") -> "SpectrumGrid2D":
        return spectrum_2d(self, T, component)


@dataclass(frozen=True, eq=False)
class SpectrumGrid2D:
    """Complex 2D signal on a (omega_t, omega_tau) grid; values[i_t, i_tau]."""

    omega_tau: np.ndarray
    omega_t: np.ndarray
    values: np.ndarray
    waiting_time: float
    component: str
    normalization: float = 1.0
    peak_positions: dict = field(default_factory=dict)

    def __post_init__(self):
        for axis in (self.omega_tau, self.omega_t):
            if len(axis) > 1 and not np.all(np.diff(axis) > 0):
                raise ValueError("frequency axes must be strictly increasing")
        if self.values.shape != (len(self.omega_t), len(self.omega_tau)):
            raise ValueError("values must have shape (len(omega_t), len(omega_tau))")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum contains non-finite values")

    def normalized(self) -> "SpectrumGrid2D":
        """Scaled to unit maximum modulus; ``normalization`` keeps the divisor."""
        peak = float(np.abs(self.values).max())
        if peak == 0:
            return self
        return replace(self, values=self.values / peak, normalization=self.normalization * peak)

    def nearest(self, omega_tau: float, omega_t: float) -> tuple:
        out = []
        for axis, w in ((self.omega_t, omega_t), (self.omega_tau, omega_tau)):
            step = axis[1] - axis[0] if len(axis) > 1 else 0.0
            if w < axis[0] - step / 2 or w > axis[-1] + step / 2:
                raise OutOfGrid(f"{w:.6g} eV outside [{axis[0]:.6g}, {axis[-1]:.6g}]")
            out.append(int(np.argmin(np.abs(axis - w))))
        return tuple(out)


def _resolvent(num, den, scale):
    """num / den where den vanishes only for zero numerators (closed systems)."""
    tiny = np.abs(den) <= 1e-12 * scale
    if tiny.any():
        nmax = np.abs(num).max(initial=0.0)
        if np.any(tiny & (np.abs(num) > 1e-12 * nmax)):
            raise OnResonance("a grid frequency coincides with an undamped transition; shift or refine the grid")
        den = np.where(tiny, 1.0, den)
        return np.where(tiny, 0.0, num / den)
    return num / den


def _projected(x, mask):
    return x if mask is None else x * (mask[:, None] if x.ndim == 2 else mask)


def build_masks(
    eig: LiouvilleEigendecomposition,
    system: HamiltonianSystem,
    omega_tau: np.ndarray | None = None,
    omega_t: np.ndarray | None = None,
    prune_threshold: float = 1e-6,
    insertions: dict | None = None,
    dipole_scale: float = 1.0,
) -> MaskSet:
    """Excitation/detection masks for every mode, then pruned.

    Mode j is kept when max|E_j| * max|D_j| >= prune_threshold times the
    largest such product (R and NR excitation masks both count).

    ``insertions`` optionally maps stage names to diagonal 0/1 masks over the
    vectorized space, applied at: "before_T" (after pulse 2), "after_T" (before
    pulse 3), "after_pulse3" and "detection_end" (just before the trace).
    """
    d = system.dim
    omega_tau = default_axis(system) if omega_tau is None else np.asarray(omega_tau, float)
    omega_t = default_axis(system) if omega_t is None else np.asarray(omega_t, float)
    ins = insertions or {}
    lam = eig.eigenvalues
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    up = dipole_scale * np.asarray(system.mu_plus, dtype=complex)
    down = dipole_scale * np.asarray(system.mu_minus, dtype=complex)

    rho0 = np.zeros(d * d, dtype=complex)
    rho0[system.index("G") * (d + 1)] = 1.0
    c0 = eig.to_coeffs(rho0)

    def excitation(first, second, sign):
        c1 = eig.to_coeffs(_commute_columns(first, rho0[:, None], d))[:, 0]
        res = _resolvent(c1[:, None], sign * 1j * omega_tau[None, :] + lam[:, None], scale)
        x2 = _commute_columns(second, eig.from_coeffs(res), d)
        return eig.to_coeffs(_projected(x2, ins.get("before_T")))

    e_nr = excitation(up, down, +1.0)
    e_r = excitation(down, up, -1.0)

    u = down.T.reshape(-1)  # Tr(a X) = vec(a^T) . vec(X)
    if ins.get("detection_end") is not None:
        u = u * ins["detection_end"]
    uc = eig.rows_times_right(u)
    rows = eig.rows_times_left(_resolvent(uc[None, :], 1j * omega_t[:, None] + lam[None, :], scale))
    if ins.get("after_pulse3") is not None:
        rows = rows * ins["after_pulse3"][None, :]
    rows = _commute_rows(up, rows, d)
    if ins.get("after_T") is not None:
        rows = rows * ins["after_T"][None, :]
    det = eig.rows_times_right(rows)

    weight = np.abs(det).max(axis=0) * np.maximum(np.abs(e_r).max(axis=1), np.abs(e_nr).max(axis=1))
    top = weight.max() if weight.size else 0.0
    keep = np.flatnonzero(weight >= prune_threshold * top) if top > 0 else np.arange(0)
    if prune_threshold <= 0:
        keep = np.arange(eig.size)
    return MaskSet(
        omega_tau=omega_tau,
        omega_t=omega_t,
        retained=keep,
        eigenvalues=lam[keep],
        E_R=e_r[keep],
        E_NR=e_nr[keep],
        D=det[:, keep],
        c0=c0,
        labels=[eig.label(int(j)) for j in keep],
        peak_positions=peak_positions(system),
        prune_threshold=prune_threshold,
        mode_weight=weight,
        hbar=eig.hbar,
    )


def _evaluate(masks: MaskSet, T: float, component: str) -> np.ndarray:
    f = np.exp(masks.eigenvalues * T / masks.hbar)
    dt = masks.D * f[None, :]
    if component == "R":
        return dt @ masks.E_R
    if component == "NR":
        return dt @ masks.E_NR
    total = dt @ (masks.E_R + masks.E_NR)
    if component == "total":
        return total
    if component == "absorptive":
        return total.real.astype(complex)
    raise ValueError(f"unknown component {component!r}; expected one of {COMPONENTS}")


def spectrum_2d(masks: MaskSet, T: float, component: str = "absorptive") -> SpectrumGrid2D:
    """S(w_t, T, w_tau) for component R, NR, total (R + NR, complex) or absorptive (Re total)."""
    if T < 0:
        raise ValueError("waiting time must be non-negative")
    values = _evaluate(masks, T, component)
    return SpectrumGrid2D(masks.omega_tau, masks.omega_t, values, float(T), component, 1.0, dict(masks.peak_positions))


def peak_value(spec: SpectrumGrid2D, which: str, refine: bool = False) -> complex:
    """Value at the grid point nearest (w_tau, w_t) = (w_XG, w_YG) for peak "X/Y".

    With ``refine`` the largest-modulus value in the surrounding 3x3 patch is returned.
    """
    if which not in PEAKS:
        raise ValueError(f"unknown peak {which!r}; expected one of {PEAKS}")
    x, y = which.split("/")
    if not spec.peak_positions:
        raise OutOfGrid("spectrum carries no peak positions")
    it, itau = spec.nearest(spec.peak_positions[x], spec.peak_positions[y])
    if not refine:
        return complex(spec.values[it, itau])
    patch = spec.values[max(it - 1, 0) : it + 2, max(itau - 1, 0) : itau + 2]
    k = np.unravel_index(np.argmax(np.abs(patch)), patch.shape)
    return complex(patch[k])


# time-domain check ---------------------------------------------------------------


def _fft_axis(n_pad, dt, omega_ref, hbar):
    return omega_ref + 2.0 * math.pi * hbar * np.fft.fftshift(np.fft.fftfreq(n_pad, dt))


def time_domain_oracle(
    liouvillian: Superoperator,
    system: HamiltonianSystem,
    T: float,
    dt: float | None = None,
    span: float | None = None,
    component: str = "total",
    zero_pad: int = 4,
    omega_ref: float | None = None,
    window: tuple | None = None,
    dipole_scale: float = 1.0,
) -> SpectrumGrid2D:
    """Brute-force response on a time grid followed by a 2D discrete transform.

    Propagates with matrix exponentials of the generator (no eigenvectors),
    samples S(t, T, tau) for tau, t = 0, dt, ..., demodulates by ``omega_ref``,
    applies trapezoid end weights and a zero-padded FFT (no window). The result
    is cropped to ``window`` (default omega_0 +/- 1.5 Omega_R).
    Raises GridTooCoarse if dt > T_R/20 or span < 5 x the longest lifetime.
    """
    p = system.params
    t_r = p.rabi_period
    lifetimes = [x for x in (p.kappa_lifetime, p.gamma_lifetime) if math.isfinite(x)]
    longest = max(lifetimes) if lifetimes else 10 * t_r
    dt = t_r / 64 if dt is None else float(dt)
    span = 8 * longest if span is None else float(span)
    if dt > t_r / 20:
        raise GridTooCoarse(f"time step {dt:.4g} fs exceeds T_R/20 = {t_r / 20:.4g} fs")
    if span < 5 * longest:
        raise GridTooCoarse(f"time span {span:.4g} fs is below 5 lifetimes ({5 * longest:.4g} fs)")
    if component not in COMPONENTS:
        raise ValueError(f"unknown component {component!r}")
    hbar = HBAR
    n = int(math.ceil(span / dt)) + 1
    d = system.dim
    m = liouvillian.matrix
    step = scipy.linalg.expm(m * dt / hbar)
    wait = scipy.linalg.expm(m * T / hbar)
    up = dipole_scale * np.asarray(system.mu_plus, dtype=complex)
    down = dipole_scale * np.asarray(system.mu_minus, dtype=complex)
    rho0 = np.zeros((d * d, 1), dtype=complex)
    rho0[system.index("G") * (d + 1)] = 1.0
    u = down.T.reshape(-1)
    omega_ref = p.omega_0 if omega_ref is None else omega_ref
    times = dt * np.arange(n)
    w = np.ones(n)
    w[0] = 0.5

    def response(first, second):
        x = np.empty((d * d, n), dtype=complex)
        x[:, 0] = _commute_columns(first, rho0, d)[:, 0]
        for k in range(1, n):
            x[:, k] = step @ x[:, k - 1]
        x = _commute_columns(up, wait @ _commute_columns(second, x, d), d)
        s = np.empty((n, n), dtype=complex)  # s[t_k, tau_l]
        for k in range(n):
            s[k] = u @ x
            x = step @ x
        return s

    n_pad = zero_pad * n
    axis = _fft_axis(n_pad, dt, omega_ref, hbar)
    scale = (dt / hbar) ** 2
    demod = np.exp(1j * omega_ref * times / hbar) * w
    out = np.zeros((n_pad, n_pad), dtype=complex)
    parts = ("R", "NR") if component in ("total", "absorptive") else (component,)
    for part in parts:
        if part == "NR":
            s = response(up, down) * demod[:, None] * demod[None, :]
            f = np.fft.ifft(np.fft.ifft(s, n_pad, axis=0), n_pad, axis=1) * n_pad * n_pad
        else:
            s = response(down, up) * demod[:, None] * np.conj(demod)[None, :]
            # exp(-i w tau) on the coherence axis: forward transform
            f = np.fft.fft(np.fft.ifft(s, n_pad, axis=0), n_pad, axis=1) * n_pad
        out += np.fft.fftshift(f) * scale
    if component == "absorptive":
        out = out.real.astype(complex)
    if window is None:
        window = (p.omega_0 - 1.5 * p.rabi_splitting, p.omega_0 + 1.5 * p.rabi_splitting)
    sel = np.flatnonzero((axis >= window[0]) & (axis <= window[1]))
    return SpectrumGrid2D(axis[sel], axis[sel], out[np.ix_(sel, sel)], float(T), component, 1.0, peak_positions(system))
