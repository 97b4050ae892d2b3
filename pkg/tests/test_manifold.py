import math
import warnings

import numpy as np
import pytest
from scipy.special import comb

from polariton2d.errors import NonResonantLabeling, ParameterError
from polariton2d.manifold import BasisState, build_basis, build_hamiltonian
from polariton2d.params import HBAR, ModelParams, preset_debye_n5, preset_tc


def test_basis_order_and_dimension():
    p = ModelParams(n_emitters=2)
    basis = build_basis(p)
    assert basis[:4] == [BasisState(0, ()), BasisState(1, ()), BasisState(0, (0,)), BasisState(0, (1,))]
    assert len(basis) == 8
    for n in (1, 3, 5, 10):
        expected = 3 + 2 * n + comb(n, 2, exact=True)  # photons fill the rest
        assert len(build_basis(ModelParams(n_emitters=n))) == expected


def test_basis_respects_truncation():
    basis = build_basis(ModelParams(n_emitters=2, n_max=3))
    assert max(s.excitation_number for s in basis) == 3
    assert BasisState(3, ()) in basis


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_polariton_energies(n):
    s = build_hamiltonian(preset_tc(n))
    assert s.transition_energy("L") == pytest.approx(1.95, abs=1e-12)
    assert s.transition_energy("U") == pytest.approx(2.05, abs=1e-12)
    assert s.energies[s.index("G")] == 0.0
    if n > 1:
        dark = [lab for lab in s.labels if lab.startswith("D")]
        assert len(dark) == n - 1
        for lab in dark:
            assert s.transition_energy(lab) == pytest.approx(2.0, abs=1e-12)


def test_jc_second_manifold_analytic():
    s = build_hamiltonian(preset_tc(1))
    g = 0.05
    assert s.energies[s.index("L2")] == pytest.approx(4.0 - math.sqrt(2) * g, abs=1e-12)
    assert s.energies[s.index("U2")] == pytest.approx(4.0 + math.sqrt(2) * g, abs=1e-12)


def test_eigenvectors_diagonalize_hamiltonian():
    s = build_hamiltonian(preset_debye_n5())
    h = s.to_eigenbasis(s.hamiltonian)
    assert np.allclose(h, np.diag(s.energies), atol=1e-12)
    assert np.allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(s.dim), atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_second_manifold_label_counts(n):
    s = build_hamiltonian(preset_tc(n))
    labels = s.labels
    assert labels.count("L2") == 1 and labels.count("U2") == 1
    c = [lab for lab in labels if lab.startswith("C2")]
    assert len(c) == n * (n - 3) // 2 + 1
    assert len(s.manifold_indices(2)) == comb(n, 2, exact=True) + n + 1


def test_bright_states_carry_photon_weight():
    s = build_hamiltonian(preset_tc(3))
    a = np.asarray(s.mu_minus)
    g = s.index("G")
    assert abs(a[g, s.index("L")]) ** 2 + abs(a[g, s.index("U")]) ** 2 == pytest.approx(1.0)
    for lab in s.labels:
        if lab.startswith("D"):
            assert abs(a[g, s.index(lab)]) < 1e-12


def test_hamiltonian_is_read_only():
    s = build_hamiltonian(preset_tc(1))
    with pytest.raises(ValueError):
        s.hamiltonian[0, 0] = 1.0


def test_detuned_labels_warn():
    p = ModelParams(omega_c=2.06, omega_0=2.0, rabi_splitting=0.1)
    with pytest.warns(NonResonantLabeling):
        build_hamiltonian(p)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_hamiltonian(ModelParams(omega_c=2.02))


def test_decoupled_limit_gives_bare_energies():
    with pytest.warns(NonResonantLabeling):
        s = build_hamiltonian(preset_tc(2), coupling=0.0)
    assert np.allclose(np.sort(s.energies[s.manifold_indices(1)]), [2.0, 2.0, 2.0])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_emitters": 0},
        {"rabi_splitting": -0.1},
        {"kappa_lifetime": 0.0},
        {"omega_c": 2.2},
        {"dephasing": "redfield"},
        {"bath_kind": "ohmic"},
        {"bath_kind": "debye", "bath_temperature": -1.0},
    ],
)
def test_invalid_parameters(kwargs):
    with pytest.raises(ParameterError):
        ModelParams(**kwargs)


def test_unit_conversions():
    p = ModelParams()
    assert 1000 * p.kappa == pytest.approx(43.88, abs=0.01)
    assert p.rabi_period == pytest.approx(2 * math.pi * HBAR / 0.1)
    assert ModelParams(kappa_lifetime=math.inf).kappa == 0.0
