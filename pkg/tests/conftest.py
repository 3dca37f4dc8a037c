import random

import numpy as np
import pytest

from rgc import delegation
from rgc.oracle import OracleFamily
from rgc.symcrypt import CryptoParams


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture
def params():
    """Hash-oracle crypto context at the toy test size."""
    return delegation.make_params(16, oracle_seed=b"test-oracle")


@pytest.fixture
def table_params():
    return delegation.make_params(16, table_mode=True, table_seed=11)


def make_params(kappa_bits=16, tag_len_bits=128, seed=b"test-oracle", table=False,
                table_seed=0):
    family = OracleFamily(mode="table" if table else "hash", seed=seed,
                          rng_seed=table_seed)
    return CryptoParams(kappa_bits, family, tag_len_bits)


def random_density(dim: int, rng: np.random.Generator, pure: bool = True) -> np.ndarray:
    if pure:
        vec = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        vec /= np.linalg.norm(vec)
        return np.outer(vec, vec.conj())
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)
