import numpy as np
import pytest

from comixup.graphcut import PairwiseEnergy, alpha_beta_swap, binary_fuse


@pytest.fixture(scope="session", autouse=True)
def warm_solver_kernels():
    """Compile/load the jitted kernels once so timed tests measure steady state."""
    states = np.array([[1.0, 0.0], [0.0, 1.0]])
    energy = PairwiseEnergy(states, np.zeros((2, 2)), 1.0, np.array([[0, 1]]))
    binary_fuse(energy)
    alpha_beta_swap(energy, np.array([0, 1]))
