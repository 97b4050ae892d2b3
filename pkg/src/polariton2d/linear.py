"""Linear absorption and weak-drive excitation-emission maps.

Both are evaluated from the Liouvillian spectrum: a one-sided transform of
sum_i w_i exp(lambda_i t / hbar) is sum_i w_i hbar / (-lambda_i - i w), so no
time grid is involved.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DriveTooStrong, SteadyStateNotUnique
from .liouville import LiouvilleEigendecomposition, assemble_liouvillian
from .manifold import HamiltonianSystem
from .params import HBAR
from .superop import Superoperator, commutator

LINEARITY_TOL = 0.01


@dataclass(frozen=True, eq=False)
class Spectrum1D:
    axis: np.ndarray
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        if len(self.axis) > 1 and not np.all(np.diff(self.axis) > 0):
            raise ValueError("frequency axis must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum contains non-finite values")

    def normalize(self) -> "Spectrum1D":
        """Scaled to unit maximum modulus."""
        peak = np.abs(self.values).max()
        return self if peak == 0 else replace(self, values=self.values / peak, normalized=True)

    def peak(self, near: float | None = None, half_width: float | None = None) -> tuple:
        """(position, height) of the maximum, optionally within near +/- half_width."""
        sel = np.ones(len(self.axis), dtype=bool)
        if near is not None:
            sel = np.abs(self.axis - near) <= (half_width if half_width is not None else np.inf)
        idx = np.flatnonzero(sel)
        k = idx[np.argmax(self.values[idx])]
        return float(self.axis[k]), float(self.values[k])

    def fwhm(self, near: float, half_width: float) -> float:
        """Full width at half maximum of the peak found near ``near`` (linear interpolation)."""
        pos, height = self.peak(near, half_width)
        k = int(np.argmin(np.abs(self.axis - pos)))
        half = height / 2
        y, x = self.values, self.axis
        lo = k
        while lo > 0 and y[lo] > half:
            lo -= 1
        hi = k
        while hi < len(y) - 1 and y[hi] > half:
            hi += 1
        left = x[lo] + (half - y[lo]) * (x[lo + 1] - x[lo]) / (y[lo + 1] - y[lo])
        right = x[hi - 1] + (half - y[hi - 1]) * (x[hi] - x[hi - 1]) / (y[hi] - y[hi - 1])
        return float(right - left)


def _trace_row(op):
    """Row r with r . vec(X) = Tr(op X)."""
    return np.asarray(op).T.reshape(-1)


def absorption(eig: LiouvilleEigendecomposition, system: HamiltonianSystem, grid) -> Spectrum1D:
    """Re of the one-sided transform of <a(t) a^dag(0)> in the ground state (raw, fs units)."""
    d = system.dim
    grid = np.asarray(grid, dtype=float)
    up = np.asarray(system.mu_plus, dtype=complex)
    g = system.index("G")
    rho = np.zeros((d, d), dtype=complex)
    rho[g, g] = 1.0
    start = eig.to_coeffs((up @ rho).reshape(-1))
    probe = eig.rows_times_right(_trace_row(system.mu_minus))
    w = probe * start
    values = (w[None, :] * eig.hbar / (-eig.eigenvalues[None, :] - 1j * grid[:, None])).sum(axis=1).real
    return Spectrum1D(grid, values)


def absorption_weights(eig: LiouvilleEigendecomposition, system: HamiltonianSystem) -> np.ndarray:
    """Residues w_i; they sum to <G|a a^dag|G> = 1."""
    d = system.dim
    g = system.index("G")
    rho = np.zeros((d, d), dtype=complex)
    rho[g, g] = 1.0
    start = eig.to_coeffs((np.asarray(system.mu_plus) @ rho).reshape(-1))
    return eig.rows_times_right(_trace_row(system.mu_minus)) * start


# emission ---------------------------------------------------------------------


def rotating_frame_generator(base: Superoperator, system: HamiltonianSystem, omega_l: float, drive: float) -> np.ndarray:
    """Undriven generator plus i w_L [N, .] - i E0 [a + a^dag, .].

    N counts all excitations (photons plus excited emitters), which makes the
    driven Tavis-Cummings problem time independent under the rotating-wave
    approximation.
    """
    number = np.diag(system.manifold.astype(float))
    field_op = drive * (np.asarray(system.mu_minus) + np.asarray(system.mu_plus))
    return base.matrix + 1j * omega_l * commutator(number) - 1j * commutator(field_op)


def steady_state(generator: np.ndarray, dim: int, rel_tol: float = 1e-10) -> np.ndarray:
    """Unit-trace kernel vector; SteadyStateNotUnique if the kernel is degenerate."""
    _, sv, vh = np.linalg.svd(generator)
    scale = max(sv[0], 1e-300)
    null = np.flatnonzero(sv < rel_tol * scale)
    if len(null) != 1:
        raise SteadyStateNotUnique(f"kernel dimension {len(null)} (smallest singular values {sv[-3:]})")
    v = vh[-1].conj()
    tr = np.trace(v.reshape(dim, dim))
    return v / tr


def emission_spectrum(
    base: Superoperator,
    system: HamiltonianSystem,
    omega_l: float,
    grid,
    drive: float,
) -> np.ndarray:
    """Inelastic Re of the one-sided transform of <a^dag(t) a(0)> under cw drive at omega_l."""
    d = system.dim
    grid = np.asarray(grid, dtype=float)
    gen = rotating_frame_generator(base, system, omega_l, drive)
    rho = steady_state(gen, d)
    lam, v = scipy.linalg.eig(gen)
    vi = np.linalg.inv(v)
    start = vi @ (np.asarray(system.mu_minus) @ rho.reshape(d, d)).reshape(-1)
    probe = _trace_row(system.mu_plus) @ v
    w = probe * start
    # the zero mode carries the elastic plateau |<a>|^2
    w[int(np.argmin(np.abs(lam)))] = 0.0
    denom = -lam[None, :] - 1j * (omega_l - grid[:, None])
    return (w[None, :] * HBAR / denom).sum(axis=1).real


@dataclass(frozen=True, eq=False)
class EmissionMap:
    """values[i, j]: emission at grid_emission[j] for laser grid_excitation[i]."""

    excitation: np.ndarray
    emission: np.ndarray
    values: np.ndarray
    drive: float
    normalized: bool = True

    def row(self, i: int) -> Spectrum1D:
        return Spectrum1D(self.emission, self.values[i], self.normalized)

    def argmax(self) -> tuple:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.excitation[i]), float(self.emission[j])


def default_emission_axis(system: HamiltonianSystem, count: int = 1024) -> np.ndarray:
    p = system.params
    return np.linspace(p.omega_0 - 2 * p.rabi_splitting, p.omega_0 + 2 * p.rabi_splitting, count)


def emission_map(
    system: HamiltonianSystem,
    grid_excitation=None,
    grid_emission=None,
    drive_amplitude: float | None = None,
    liouvillian: Superoperator | None = None,
    check_linearity: bool = True,
    normalize: bool = True,
) -> EmissionMap:
    """Excitation-emission map from weak-drive steady states.

    Default drive is 1e-3 Omega_R. With ``check_linearity`` the map is also
    computed at twice the drive and DriveTooStrong is raised if the two
    normalized maps differ by more than 1 % of the maximum.
    """
    base = assemble_liouvillian(system) if liouvillian is None else liouvillian
    ex = default_emission_axis(system) if grid_excitation is None else np.asarray(grid_excitation, float)
    em = default_emission_axis(system) if grid_emission is None else np.asarray(grid_emission, float)
    drive = 1e-3 * system.params.rabi_splitting if drive_amplitude is None else float(drive_amplitude)

    def compute(e0):
        return np.array([emission_spectrum(base, system, wl, em, e0) for wl in ex])

    values = compute(drive)
    if check_linearity and drive > 0:
        doubled = compute(2 * drive)
        a = values / max(np.abs(values).max(), 1e-300)
        b = doubled / max(np.abs(doubled).max(), 1e-300)
        change = np.abs(a - b).max()
        if change > LINEARITY_TOL:
            raise DriveTooStrong(f"doubling the drive changes the normalized map by {change:.3%}")
    if normalize:
        peak = np.abs(values).max()
        if peak > 0:
            values = values / peak
    return EmissionMap(ex, em, values, drive, normalize)
