import numpy as np
import pytest

from polariton2d.errors import UnknownPathway
from polariton2d.pathways import PATHWAYS, buildup_trace, pathway_insertions, pathway_spectrum
from polariton2d.twodes import build_masks, spectrum_2d


@pytest.fixture(scope="module")
def total(request):
    m = request.getfixturevalue("tc2")
    return build_masks(m.eig, m.system, prune_threshold=0.0)


@pytest.mark.parametrize("T", [0.0, 20.0, 150.0])
def test_pathways_sum_to_total(tc2, total, T):
    parts = sum(pathway_spectrum(tc2.eig, tc2.system, T, pw, component="total").values for pw in PATHWAYS)
    ref = spectrum_2d(total, T, "total").values
    assert np.abs(parts - ref).max() < 1e-10 * np.abs(ref).max()


def test_ground_state_bleach_is_static(tc2):
    a = pathway_spectrum(tc2.eig, tc2.system, 0.0, "GSB").values
    b = pathway_spectrum(tc2.eig, tc2.system, 300.0, "GSB").values
    assert np.abs(a - b).max() < 1e-12 * np.abs(a).max()


def test_ground_state_recovery_starts_at_zero(tc2):
    gsr = pathway_spectrum(tc2.eig, tc2.system, 0.0, "GSR", component="total").values
    gsb = pathway_spectrum(tc2.eig, tc2.system, 0.0, "GSB", component="total").values
    assert np.abs(gsr).max() < 1e-10 * np.abs(gsb).max()


def test_pathway_names(tc2):
    a, b = pathway_insertions(tc2.system, "ESA′"), pathway_insertions(tc2.system, "ESAprime")
    assert a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)
    for alias in ("ESA'", "ESA′", "ESAprime"):
        pathway_spectrum(tc2.eig, tc2.system, 0.0, alias)
    with pytest.raises(UnknownPathway):
        pathway_spectrum(tc2.eig, tc2.system, 0.0, "SE2")


def test_buildup_after_second_pulse(tc2):
    b = buildup_trace(tc2.eig, tc2.system, "after-pulse-2")
    ax = b.axis
    il, iu = np.argmin(abs(ax - 1.95)), np.argmin(abs(ax - 2.05))
    assert b.components["L-L"][il] > b.components["L-L"][iu]
    assert b.components["U-U"][iu] > b.components["U-U"][il]
    assert b.components["G-G"][il] < 0


def test_detection_stage_entries_add_up(tc2, total):
    T = 5 * tc2.params.rabi_period
    b = buildup_trace(tc2.eig, tc2.system, "detection", T=T)
    ref = spectrum_2d(total, T, "absorptive").values
    i = np.argmin(abs(total.omega_tau - 1.95))
    summed = sum(b.components.values())
    assert np.allclose(summed, ref[:, i], atol=1e-9 * np.abs(ref).max())


def test_unknown_stage(tc2):
    with pytest.raises(ValueError):
        buildup_trace(tc2.eig, tc2.system, "after-pulse-4")


def test_late_waiting_time_esa_dominates_negative_signal(tc2, total):
    T = 5 * tc2.params.rabi_period
    parts = {pw: pathway_spectrum(tc2.eig, tc2.system, T, pw).values.real for pw in ("SE", "ESA", "ESAprime")}
    assert -parts["ESA"].min() > 3 * max(np.abs(parts["SE"]).max(), np.abs(parts["ESAprime"]).max())


def test_late_se_and_esa_prime_small_against_initial_maximum(tc2, total):
    T = 5 * tc2.params.rabi_period
    ref = np.abs(spectrum_2d(total, 0.0).values).max()
    for pw in ("SE", "ESAprime"):
        assert np.abs(pathway_spectrum(tc2.eig, tc2.system, T, pw).values).max() < 0.05 * ref
