import numpy as np
import pytest

from lptnsim.tensor_core import as_tensor


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, shape):
    return as_tensor(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_hermitian(rng, dim, scale=1.0):
    m = random_complex(rng, (dim, dim))
    return as_tensor(scale * 0.5 * (m + m.conj().T))


def random_model(seed, n_sites, h_scale=1.0, l_scale=0.5, bond_lindblads=True):
    """Seeded random nearest-neighbor model on qubits."""
    from lptnsim.models import LindbladModel

    rng = np.random.default_rng(seed)
    h_terms = {(l, l + 1): random_hermitian(rng, 4, h_scale) for l in range(n_sites - 1)}
    if bond_lindblads:
        lb = {(l, l + 1): [l_scale * random_complex(rng, (4, 4))] for l in range(n_sites - 1)}
        return LindbladModel(local_dims=[2] * n_sites, h_terms=h_terms, lindblads_bond=lb)
    lo = {s: [l_scale * random_complex(rng, (2, 2))] for s in range(n_sites)}
    return LindbladModel(local_dims=[2] * n_sites, h_terms=h_terms, lindblads_onsite=lo)
