import numpy as np
import pytest

from morreylab.grid import Cube, ExponentPair, GridDomain, GridFunction


@pytest.fixture
def pq():
    return ExponentPair(2.0, 4.0 / 3.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_function(rng, domain, nonnegative=False, density=0.8):
    vals = rng.uniform(0.0 if nonnegative else -1.0, 1.0, domain.shape)
    vals *= rng.uniform(0.0, 1.0, domain.shape) < density
    return GridFunction(domain, vals)


def random_admissible_block(rng, domain, pq, headroom=(0.3, 1.0)):
    from morreylab.blocks import Block

    N = domain.cells_per_side
    m = int(rng.integers(1, N + 1))
    anchor = tuple(int(rng.integers(0, N - m + 1)) for _ in range(domain.dimension))
    cube = Cube(anchor, m)
    vals = np.zeros(domain.shape)
    sl = cube.slices()
    vals[sl] = rng.normal(0.0, 1.0, vals[sl].shape)
    qc = pq.q_conj
    nrm = (np.sum(np.abs(vals) ** qc) * domain.cell_measure) ** (1.0 / qc)
    if nrm > 0.0:
        vals *= cube.measure(domain) ** pq.measure_exponent / nrm * rng.uniform(*headroom)
    return Block(cube, vals)
