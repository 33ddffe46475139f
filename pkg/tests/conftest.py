import numpy as np
import pytest

from netkernel.core.model import InitialDistribution, SystemSpec, sample_weight_matrix
from netkernel.core.presets import lennard_jones_basis, lennard_jones_kernel
from netkernel.core.simulate import simulate
from netkernel.core.utils.parallel import set_threads


@pytest.fixture(autouse=True)
def _single_thread():
    set_threads(None)
    yield
    set_threads(None)


@pytest.fixture
def lj_basis():
    return lennard_jones_basis(d=2, p=3)


@pytest.fixture
def lj_coef():
    return lennard_jones_kernel(2).coef


@pytest.fixture
def lj_spec():
    return SystemSpec(N=6, d=2, sigma=0.0, dt=1e-3, L=5, init=InitialDistribution.uniform(0.0, 1.5), seed=11)


@pytest.fixture
def lj_graph():
    return sample_weight_matrix(6, 2, seed=3)


@pytest.fixture
def lj_data(lj_spec, lj_graph, lj_basis, lj_coef):
    """Noiseless Lennard-Jones trajectories, N=6, d=2, L=5, M=50."""
    return simulate(lj_spec, lj_graph, lj_basis, lj_coef, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    """Write a YAML experiment file under tmp_path and return its path."""
    import yaml

    def _write(payload, name="experiment.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(payload))
        return path

    return _write
