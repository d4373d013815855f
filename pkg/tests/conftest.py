from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from spinfanout.spin_hamiltonian import CouplingMatrix

settings.register_profile("default", deadline=None, max_examples=30)
settings.load_profile("default")


def random_couplings(rng: np.random.Generator, p: int, scale: float = 3.0) -> CouplingMatrix:
    """Unstructured symmetric couplings on ``2p`` qubits."""
    n = 2 * p
    J = np.triu(rng.uniform(-scale, scale, size=(n, n)), 1)
    return CouplingMatrix.from_matrix(J + J.T)


def random_pair_couplings(rng: np.random.Generator, p: int, scale: float = 3.0) -> CouplingMatrix:
    ext = np.triu(rng.uniform(-scale, scale, size=(p, p)), 1)
    return CouplingMatrix.from_pairs(ext + ext.T, rng.uniform(-scale, scale, size=p))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
