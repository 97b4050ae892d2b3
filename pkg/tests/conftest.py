import numpy as np
import pytest

from polariton2d.liouville import assemble_liouvillian, diagonalize
from polariton2d.manifold import build_hamiltonian
from polariton2d.params import preset_jc, preset_tc


class Model:
    def __init__(self, params):
        self.params = params
        self.system = build_hamiltonian(params)
        self.L = assemble_liouvillian(self.system)
        self.eig = diagonalize(self.L, self.system)


@pytest.fixture(scope="session")
def jc():
    return Model(preset_jc())


@pytest.fixture(scope="session")
def tc2():
    return Model(preset_tc(2))


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def random_density(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho)
