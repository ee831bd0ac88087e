import numpy as np
import pytest

from nleig import ModelSpec, build_model
from nleig.spectra import compute_eigentriple, symmetrize_eigenvector


def make_toy(alpha, n):
    return build_model(ModelSpec("toy_robin", {"alpha": alpha}, n=n))


def toy_triple(problem, target, symmetrize=True):
    triple = compute_eigentriple(problem, target)
    if symmetrize:
        triple = symmetrize_eigenvector(triple, problem.symmetry("PT"),
                                        phase_node=problem.phase_node)
    return triple


@pytest.fixture(scope="session")
def toy_2048():
    return make_toy(0.5, 2048)


@pytest.fixture(scope="session")
def toy_2048_triple(toy_2048):
    return toy_triple(toy_2048, 0.2)


@pytest.fixture(scope="session")
def toy_2047():
    return make_toy(0.5, 2047)


@pytest.fixture(scope="session")
def toy_256():
    return make_toy(0.5, 256)


@pytest.fixture(scope="session")
def toy_256_triple(toy_256):
    return toy_triple(toy_256, 0.2)


@pytest.fixture(scope="session")
def toy_a04_4096():
    return make_toy(0.4, 4096)


@pytest.fixture(scope="session")
def toy_a04_4096_triple(toy_a04_4096):
    """Eigentriple at the first excited state mu0 ~ 1."""
    return toy_triple(toy_a04_4096, 0.9)


@pytest.fixture(scope="session")
def dnls_n2_g03():
    return build_model(ModelSpec("dnls", {"N": 2, "gamma": 0.3}))


@pytest.fixture(scope="session")
def dnls_n2_g03_triple(dnls_n2_g03):
    """Lowest real eigenvalue of the N=2, gamma=0.3 chain."""
    triple = compute_eigentriple(dnls_n2_g03, -1.7)
    return symmetrize_eigenvector(triple, dnls_n2_g03.symmetry("lattice-PT"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
