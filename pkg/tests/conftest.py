import numpy as np
import pytest

from coopmimo.model import SystemConfig


@pytest.fixture
def desk_config():
    """Small scenario used throughout: 4 relays, 2 antennas everywhere."""
    return SystemConfig(
        n_as=2,
        n_ar=2,
        n_ad=2,
        n_r=4,
        n_asub=2,
        n_rem=1,
        n_symbols=100,
        n_packets=10,
        snr_db_grid=(10.0,),
        estimation_mode="perfect",
        selection_scheme="tds_rs",
        selection_method="dsa",
        rng_seed=1,
    )


@pytest.fixture
def paper_config():
    """The large configuration quoted for the complexity comparison."""
    return SystemConfig(
        n_as=2, n_ar=2, n_ad=2, n_r=10, n_asub=4, n_rem=2, n_symbols=500
    )


def complex_gaussian(rng: np.random.Generator, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
