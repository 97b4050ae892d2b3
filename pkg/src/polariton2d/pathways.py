"""Pathway decomposition (GSB, GSR, SE, ESA, ESA') and signal build-up stages.

Pathways are separated by projecting the vectorized density matrix onto
manifold sectors |Lambda_m><Lambda_n| at the pulse boundaries:

    pathway  after pulse 2  after T  after pulse 3  end of detection
    GSB      GG             GG       -              -
    GSR      11             GG       -              -
    SE       11             11       1G             -
    ESA      11             11       21             21
    ESA'     11             11       21             1G

Population that leaves GG and returns within T is counted as GSR. Because the
projectors are complete at each boundary, the five pathways sum to the total.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnknownPathway
from .liouville import LiouvilleEigendecomposition
from .manifold import HamiltonianSystem
from .twodes import (
    MaskSet,
    SpectrumGrid2D,
    _commute_columns,
    build_masks,
    default_axis,
    spectrum_2d,
)

PATHWAYS = ("GSB", "GSR", "SE", "ESA", "ESAprime")
STAGES = ("after-pulse-2", "after-T", "after-pulse-3", "detection")


@dataclass(frozen=True)
class SectorProjector:
    """Diagonal 0/1 projector onto the |Lambda_ket><Lambda_bra| sector."""

    ket_manifold: int
    bra_manifold: int
    mask: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x * (self.mask[:, None] if x.ndim == 2 else self.mask)


def sector_projectors(system: HamiltonianSystem) -> dict:
    """All sector projectors keyed by (ket manifold, bra manifold)."""
    ket = np.repeat(system.manifold, system.dim)
    bra = np.tile(system.manifold, system.dim)
    out = {}
    for m in sorted(set(system.manifold)):
        for n in sorted(set(system.manifold)):
            out[(int(m), int(n))] = SectorProjector(int(m), int(n), ((ket == m) & (bra == n)).astype(float))
    return out


def pathway_insertions(system: HamiltonianSystem, pathway: str) -> dict:
    if system.params.n_max < 2:
        raise ValueError("pathway decomposition needs n_max >= 2")
    p = sector_projectors(system)
    gg, one, g1, two = p[(0, 0)].mask, p[(1, 1)].mask, p[(1, 0)].mask, p[(2, 1)].mask
    table = {
        "GSB": {"before_T": gg, "after_T": gg},
        "GSR": {"before_T": one, "after_T": gg},
        "SE": {"before_T": one, "after_T": one, "after_pulse3": g1},
        "ESA": {"before_T": one, "after_T": one, "after_pulse3": two, "detection_end": two},
        "ESAprime": {"before_T": one, "after_T": one, "after_pulse3": two, "detection_end": g1},
    }
    key = "ESAprime" if pathway in ("ESA'", "ESA′") else pathway
    if key not in table:
        raise UnknownPathway(f"unknown pathway {pathway!r}; expected one of {PATHWAYS}")
    return table[key]


def pathway_masks(
    eig: LiouvilleEigendecomposition,
    system: HamiltonianSystem,
    pathway: str,
    omega_tau=None,
    omega_t=None,
    prune_threshold: float = 0.0,
) -> MaskSet:
    return build_masks(eig, system, omega_tau, omega_t, prune_threshold, insertions=pathway_insertions(system, pathway))


def pathway_spectrum(
    eig: LiouvilleEigendecomposition,
    system: HamiltonianSystem,
    T: float,
    pathway: str,
    omega_tau=None,
    omega_t=None,
    component: str = "absorptive",
    normalize_to: float | None = None,
) -> SpectrumGrid2D:
    """One pathway's contribution; ``normalize_to`` divides by a reference
    (e.g. the total spectrum's maximum modulus)."""
    masks = pathway_masks(eig, system, pathway, omega_tau, omega_t)
    spec = spectrum_2d(masks, T, component)
    tag = "ESAprime" if pathway in ("ESA'", "ESA′") else pathway
    values = spec.values if normalize_to is None else spec.values / normalize_to
    return SpectrumGrid2D(
        spec.omega_tau, spec.omega_t, values, spec.waiting_time, tag,
        1.0 if normalize_to is None else float(normalize_to), spec.peak_positions,
    )


# build-up ---------------------------------------------------------------------


@dataclass(frozen=True)
class BuildupTrace:
    """Real parts of named density-matrix components along one frequency axis.

    For stages up to pulse 3 the axis is omega_tau and keys are "ket-bra"
    labels of rho(w_tau). For "detection" the axis is omega_t at a fixed
    omega_tau cut and each key "m-n" holds a_nm Y_mn(w_t), whose sum is the
    detected signal.
    """

    stage: str
    axis: np.ndarray
    axis_name: str
    waiting_time: float
    components: dict


def _after_pulse_2(eig, system, omega_tau):
    d = system.dim
    lam = eig.eigenvalues
    up = np.asarray(system.mu_plus, dtype=complex)
    down = np.asarray(system.mu_minus, dtype=complex)
    rho0 = np.zeros((d * d, 1), dtype=complex)
    rho0[system.index("G") * (d + 1)] = 1.0
    out = 0
    for first, second, sign in ((up, down, 1.0), (down, up, -1.0)):
        c1 = eig.to_coeffs(_commute_columns(first, rho0, d))[:, 0]
        res = c1[:, None] / (sign * 1j * omega_tau[None, :] + lam[:, None])
        out = out + _commute_columns(second, eig.from_coeffs(res), d)
    return out


def _components(x, system, rel_floor=1e-10):
    d = system.dim
    names = system.labels
    keep = {}
    top = np.abs(x.real).max() if x.size else 0.0
    for k in range(d * d):
        row = x[k].real
        if top > 0 and np.abs(row).max() > rel_floor * top:
            a, b = divmod(k, d)
            keep[f"{names[a]}-{names[b]}"] = row.copy()
    return keep


def buildup_trace(
    eig: LiouvilleEigendecomposition,
    system: HamiltonianSystem,
    stage: str,
    T: float = 0.0,
    omega_tau=None,
    omega_t=None,
    omega_tau_cut: float | None = None,
) -> BuildupTrace:
    """Signal build-up at one of the stages in ``STAGES`` (R + NR combined)."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; expected one of {STAGES}")
    d = system.dim
    omega_tau = default_axis(system) if omega_tau is None else np.asarray(omega_tau, float)
    x = _after_pulse_2(eig, system, omega_tau)
    if stage == "after-pulse-2":
        return BuildupTrace(stage, omega_tau, "omega_tau", float(T), _components(x, system))
    c = eig.to_coeffs(x) * np.exp(eig.eigenvalues * T / eig.hbar)[:, None]
    x = eig.from_coeffs(c)
    if stage == "after-T":
        return BuildupTrace(stage, omega_tau, "omega_tau", float(T), _components(x, system))
    x = _commute_columns(np.asarray(system.mu_plus, dtype=complex), x, d)
    if stage == "after-pulse-3":
        return BuildupTrace(stage, omega_tau, "omega_tau", float(T), _components(x, system))

    omega_t = default_axis(system) if omega_t is None else np.asarray(omega_t, float)
    cut = system.transition_energy("L") if omega_tau_cut is None else omega_tau_cut
    col = x[:, int(np.argmin(np.abs(omega_tau - cut)))]
    c3 = eig.to_coeffs(col)
    y = eig.from_coeffs(c3[:, None] / (1j * omega_t[None, :] + eig.eigenvalues[:, None]))
    a = np.asarray(system.mu_minus)
    weights = a.T.reshape(-1)  # a_nm placed at vectorized index (m, n)
    return BuildupTrace(stage, omega_t, "omega_t", float(T), _components(weights[:, None] * y, system))
