import numpy as np
import pytest
from scipy.integrate import trapezoid

from polariton2d.errors import DriveTooStrong, SteadyStateNotUnique
from polariton2d.linear import (
    Spectrum1D,
    absorption,
    absorption_weights,
    emission_map,
    emission_spectrum,
    rotating_frame_generator,
    steady_state,
)
from polariton2d.liouville import assemble_liouvillian, diagonalize, propagate
from polariton2d.manifold import build_hamiltonian
from polariton2d.params import HBAR, preset_tc


def test_absorption_matches_time_domain_correlation(jc):
    s, e = jc.system, jc.eig
    d = s.dim
    rho = np.zeros((d, d), dtype=complex)
    rho[s.index("G"), s.index("G")] = 1.0
    t = np.linspace(0, 600, 60001)
    x = propagate(e, np.asarray(s.mu_plus) @ rho, t).reshape(len(t), d, d)
    corr = np.einsum("ij,tji->t", np.asarray(s.mu_minus), x)
    grid = np.array([1.93, 1.95, 2.0, 2.05])
    ref = [trapezoid(np.exp(1j * w * t / HBAR) * corr, t).real for w in grid]
    assert np.allclose(absorption(e, s, grid).values, ref, rtol=1e-4)  # trapezoid error


def test_absorption_weights_sum_to_one(tc2):
    assert absorption_weights(tc2.eig, tc2.system).sum() == pytest.approx(1.0, abs=1e-12)


def test_brw_upper_peak_lower_and_broader(tc2):
    grid = np.linspace(1.8, 2.2, 2001)
    a = absorption(tc2.eig, tc2.system, grid).normalize()
    (_, hl), (_, hu) = a.peak(1.95, 0.03), a.peak(2.05, 0.03)
    assert hu < hl
    assert a.fwhm(2.05, 0.03) > a.fwhm(1.95, 0.03)


def test_spectrum1d_fwhm_of_lorentzian():
    x = np.linspace(-1, 1, 20001)
    y = 0.01**2 / (x**2 + 0.01**2)
    assert Spectrum1D(x, y).fwhm(0.0, 0.5) == pytest.approx(0.02, rel=1e-6)
    with pytest.raises(ValueError):
        Spectrum1D(x[::-1], y)


@pytest.mark.parametrize("dephasing,floor", [("lindblad", 0.0), ("brw", -1e-8)])
def test_steady_state_is_physical(dephasing, floor):
    # Redfield is not completely positive; its violation here is O(drive^4)
    s = build_hamiltonian(preset_tc(1).with_(dephasing=dephasing))
    gen = rotating_frame_generator(assemble_liouvillian(s), s, 1.97, 1e-3)
    rho = steady_state(gen, s.dim).reshape(s.dim, s.dim)
    assert np.trace(rho) == pytest.approx(1.0)
    assert np.allclose(rho, rho.conj().T, atol=1e-12)
    assert np.abs(gen @ rho.reshape(-1)).max() < 1e-12
    assert np.linalg.eigvalsh(rho).min() > floor


def test_closed_system_steady_state_not_unique():
    s = build_hamiltonian(preset_tc(1).with_(kappa_lifetime=np.inf, gamma_lifetime=np.inf))
    L = assemble_liouvillian(s)
    with pytest.raises(SteadyStateNotUnique):
        emission_spectrum(L, s, 1.95, np.linspace(1.9, 2.1, 11), 0.0)


def test_emission_scales_quadratically_with_weak_drive(jc):
    grid = np.linspace(1.9, 2.1, 51)
    a = emission_spectrum(jc.L, jc.system, 2.05, grid, 1e-4)
    b = emission_spectrum(jc.L, jc.system, 2.05, grid, 2e-4)
    # residual ~1e-3 is round-off left after removing the elastic plateau
    assert np.allclose(b, 4 * a, rtol=5e-3)


def test_strong_drive_is_rejected(jc):
    with pytest.raises(DriveTooStrong):
        emission_map(jc.system, [1.95, 2.05], np.linspace(1.9, 2.1, 41), drive_amplitude=0.1, liouvillian=jc.L)


def test_lindblad_map_is_mirror_symmetric():
    s = build_hamiltonian(preset_tc(2).with_(dephasing="lindblad"))
    ax = np.linspace(1.9, 2.1, 21)
    m = emission_map(s, ax, np.linspace(1.9, 2.1, 81))
    assert np.abs(m.values - m.values[::-1, ::-1]).max() < 1e-8
