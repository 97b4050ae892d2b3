"""Cavity-loss and emitter-dephasing generators in the Hamiltonian eigenbasis."""
from __future__ import annotations

import numpy as np

from .manifold import HamiltonianSystem
from .params import BathSpec
from .superop import Superoperator, spost, spre, sprepost

ZERO_FREQ = 1e-12


def noise_power(bath: BathSpec, omega):
    """Bath noise power S_B(omega) in eV; omega > 0 is a downhill transition.

    Flat: gamma for omega >= 0, else 0. Debye: (1 + n) J for omega > 0 and
    n J(-omega) for omega < 0, with the analytic limit 2 gamma kT / delta at
    omega = 0.
    """
    w = np.asarray(omega, dtype=float)
    if bath.kind == "flat":
        out = np.where(w >= -ZERO_FREQ, bath.gamma, 0.0)
        return out if out.ndim else float(out)

    g, delta, kT = bath.gamma, bath.delta, bath.kT
    aw = np.abs(w)
    j = 2.0 * g * delta * aw / (aw**2 + delta**2)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if kT > 0:
            n = 1.0 / np.expm1(aw / kT)
        else:
            n = np.zeros_like(aw)
        out = np.where(w > 0, (1.0 + n) * j, n * j)
    zero_limit = 2.0 * g * kT / delta
    out = np.where(aw < ZERO_FREQ, zero_limit, out)
    return out if out.ndim else float(out)


def lindblad_loss(system: HamiltonianSystem, kappa: float) -> Superoperator:
    """kappa (a rho a^dag - {a^dag a, rho}/2), with kappa in eV."""
    a = np.asarray(system.mu_minus, dtype=complex)
    n = a.conj().T @ a
    m = kappa * (sprepost(a, a.conj().T) - 0.5 * spre(n) - 0.5 * spost(n))
    return Superoperator(system.dim, m, {"loss": m})


def rate_matrix(system: HamiltonianSystem, bath: BathSpec) -> np.ndarray:
    """S_B(E_n - E_m) at position [m, n]."""
    e = system.energies
    return noise_power(bath, e[None, :] - e[:, None])


def brw_dephasing(system: HamiltonianSystem, bath: BathSpec) -> Superoperator:
    """Non-secular Bloch-Redfield generator summed over independent emitter baths.

    For each emitter with O = sigma^dag sigma and A[m, n] = O[m, n] S_B(E_n - E_m):

        Gamma[rho] = -1/2 (O A rho - A rho O + rho A^dag O - O rho A^dag)

    Lamb shifts are neglected, so only the real half-transform of the bath
    correlation enters (the factor 1/2).
    """
    d = system.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    if bath.gamma == 0:
        return Superoperator(d, m, {"dephasing": m})
    s = rate_matrix(system, bath)
    for o in system.emitter_number_ops:
        o = np.asarray(o, dtype=complex)
        a = o * s
        ad = a.conj().T
        m -= 0.5 * (spre(o @ a) - sprepost(a, o) + spost(ad @ o) - sprepost(o, ad))
    return Superoperator(d, m, {"dephasing": m})


def lindblad_dephasing(system: HamiltonianSystem, gamma: float) -> Superoperator:
    """gamma (O rho O - {O, rho}/2) per emitter; the flat-Lindblad comparison model."""
    d = system.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for o in system.emitter_number_ops:
        o = np.asarray(o, dtype=complex)
        o2 = o @ o
        m += gamma * (sprepost(o, o) - 0.5 * spre(o2) - 0.5 * spost(o2))
    return Superoperator(d, m, {"dephasing": m})
