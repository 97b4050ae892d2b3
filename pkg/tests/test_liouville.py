import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from polariton2d.errors import DefectiveLiouvillian
from polariton2d.liouville import (
    assemble_liouvillian,
    block_structure,
    diagonalize,
    invariant_blocks,
    propagate,
    reduced_matrix,
)
from polariton2d.manifold import build_hamiltonian
from polariton2d.params import BathSpec, HBAR, preset_debye_n5, preset_tc
from polariton2d.superop import Superoperator, spost, spre, sprepost, unvec, vec

from conftest import random_density

finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(arrays(float, (3, 3), elements=finite), arrays(float, (3, 3), elements=finite), arrays(float, (3, 3), elements=finite))
def test_vectorization_identity(a, x, b):
    assert np.allclose(sprepost(a, b) @ vec(x), vec(a @ x @ b), atol=1e-9)
    assert np.allclose(spre(a) @ vec(x), vec(a @ x), atol=1e-9)
    assert np.allclose(spost(b) @ vec(x), vec(x @ b), atol=1e-9)
    assert np.array_equal(unvec(vec(x), 3), x)


def test_lindblad_generator_matches_bare_basis_master_equation(rng):
    """Eigenbasis generator against the master equation written in the bare basis."""
    p = preset_tc(2).with_(dephasing="lindblad")
    s = build_hamiltonian(p)
    L = assemble_liouvillian(s)
    v = s.eigenvectors
    a = s.a_bare
    h = s.hamiltonian
    rho = random_density(rng, s.dim)
    bare = v @ rho @ v.T
    rhs = -1j * (h @ bare - bare @ h)
    rhs += p.kappa * (a @ bare @ a.T - 0.5 * (a.T @ a @ bare + bare @ a.T @ a))
    for sig in s.sigma_bare:
        o = sig.T @ sig
        rhs += p.gamma * (o @ bare @ o - 0.5 * (o @ bare + bare @ o))
    assert np.allclose(L.apply(rho), v.T @ rhs @ v, atol=1e-14)


@pytest.mark.parametrize("params", [preset_tc(1), preset_tc(3), preset_debye_n5().with_(n_emitters=3)])
def test_trace_preservation_left_null_vector(params):
    s = build_hamiltonian(params)
    L = assemble_liouvillian(s)
    ident = vec(np.eye(s.dim))
    assert np.abs(ident @ L.matrix).max() < 1e-12 * L.norm()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_generator_keeps_hermiticity(seed):
    s = build_hamiltonian(preset_debye_n5().with_(n_emitters=2))
    L = assemble_liouvillian(s)
    rho = random_density(np.random.default_rng(seed), s.dim)
    out = L.apply(rho)
    assert np.allclose(out, out.conj().T, atol=1e-14)
    assert abs(np.trace(out)) < 1e-14


def test_eigen_reconstruction_and_biorthogonality(tc2):
    e = tc2.eig
    assert e.size == 64
    assert np.allclose(e.left_matrix() @ e.right_matrix(), np.eye(64), atol=1e-10)
    assert np.allclose(e.reconstruct(), tc2.L.matrix, atol=1e-12)


def test_blocks_and_full_strategies_agree(tc2):
    full = diagonalize(tc2.L, tc2.system, strategy="full")
    a = np.sort_complex(np.round(full.eigenvalues, 10))
    b = np.sort_complex(np.round(tc2.eig.eigenvalues, 10))
    assert np.allclose(a, b, atol=1e-10)


def test_conjugate_pairs(tc2):
    lam = tc2.eig.eigenvalues
    for x in lam:
        assert np.min(np.abs(lam - np.conj(x))) < 1e-10


def test_propagation_matches_matrix_exponential(jc, rng):
    rho = random_density(rng, jc.system.dim)
    t = 23.7
    ref = scipy.linalg.expm(jc.L.matrix * t / HBAR) @ vec(rho)
    assert np.allclose(propagate(jc.eig, rho, t), ref, atol=1e-12)
    many = propagate(jc.eig, rho, np.array([0.0, t]))
    assert many.shape == (2, 25)
    assert np.allclose(many[0], vec(rho), atol=1e-12)


def test_population_decays_to_ground(jc):
    d = jc.system.dim
    rho = np.zeros((d, d))
    rho[jc.system.index("U2"), jc.system.index("U2")] = 1.0
    late = unvec(propagate(jc.eig, rho, 2000.0), d)
    assert late[0, 0].real == pytest.approx(1.0, abs=1e-6)


def test_jc_block_structure(jc):
    report = block_structure(jc.L, jc.system)
    assert report.sizes == [9, 6, 6, 2, 2]
    text = report.render(jc.system.labels)
    assert "G" in text


def test_invariant_blocks_of_permuted_block_matrix(rng):
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    m = scipy.linalg.block_diag(a, b)
    perm = np.array([3, 0, 4, 1, 2])
    blocks = invariant_blocks(m[np.ix_(perm, perm)])
    assert sorted(len(x) for x in blocks) == [2, 3]


def test_defective_generator_raises():
    jordan = np.array([[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
    with pytest.raises(DefectiveLiouvillian):
        diagonalize(Superoperator(2, jordan - 0.1 * np.eye(4)), strategy="full")


def test_labels_identify_polariton_coherences(jc):
    e = jc.eig
    i = e.find("U", "L")
    # dissipation pulls the U-L coherence slightly below the Rabi splitting
    assert abs(e.omega[i]) == pytest.approx(0.0976, abs=1e-3)
    assert e.label(e.find("G", "G")) == "G-G"
    assert e.eigenvalue("G", "G") == pytest.approx(0.0, abs=1e-14)


def test_reduced_matrix_order(jc):
    r = reduced_matrix(jc.L, jc.system, [("G", "G"), ("L", "L")])
    assert r.shape == (2, 2)
    assert r[0, 1].real == pytest.approx(jc.params.kappa / 2)


def test_debye_finite_temperature_steady_state_has_thermal_weight():
    p = preset_debye_n5().with_(n_emitters=1, bath_temperature=20000.0)
    s = build_hamiltonian(p)
    e = diagonalize(assemble_liouvillian(s), s)
    i = e.steady_state_index()
    assert abs(e.eigenvalues[i]) < 1e-12


def test_frequency_shift_diagnostic(jc):
    from polariton2d.liouville import frequency_shifts

    pi = frequency_shifts(jc.eig, jc.system)
    i = jc.eig.find("U", "L")
    assert pi[i] == pytest.approx(jc.eig.omega[i] - 0.1, abs=1e-12)
    assert pi[i] < 0
    assert abs(pi[jc.eig.find("L", "L")]) < 1e-12


def test_printed_cubic_roots_are_scaled_eigenvalues(jc):
    """The cubic's roots equal 8 lambda for the LL, LU and UL modes."""
    p = jc.params
    k, g, w = p.kappa, p.gamma, p.rabi_splitting
    printed = [1, 2 * g + 12 * k, 16 * g * k + 32 * k**2 + 64 * w**2, 256 * k * w**2]
    lam = [8 * jc.eig.eigenvalue(a, b) for a, b in (("L", "L"), ("L", "U"), ("U", "L"))]
    assert np.allclose(np.poly(lam), printed, rtol=1e-10, atol=1e-14)
