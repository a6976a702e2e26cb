import numpy as np
import pytest
import structlog

from dslab.models import AppConfig, Params, Scheme
from dslab.spectral.grid import build_grid
from dslab.spectral.operators import compute_omega0


@pytest.fixture(scope="session")
def params():
    return Params(gamma1=1.0, gamma2=1.0, gamma3=1.0)


@pytest.fixture(scope="session")
def skewed_params():
    return Params.from_gamma2(0.6, 2.0)


@pytest.fixture(scope="session")
def spectral_grid():
    return build_grid(20.0, 256, Scheme.FOURIER)


@pytest.fixture(scope="session")
def coarse_spectral_grid():
    return build_grid(20.0, 128, Scheme.FOURIER)


@pytest.fixture(scope="session")
def fd_grid():
    return build_grid(12.0, 128, Scheme.FINITE_DIFFERENCE)


@pytest.fixture(scope="session")
def omega0(spectral_grid, params):
    return compute_omega0(spectral_grid, params)


@pytest.fixture(scope="session")
def coarse_omega0(coarse_spectral_grid, params):
    return compute_omega0(coarse_spectral_grid, params)


@pytest.fixture(autouse=True)
def reset_logging():
    """Tests that configure logging bind the captured stream; drop it afterwards."""
    yield
    structlog.reset_defaults()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def small_config(tmp_path):
    """Configuration sized for quick CLI runs."""
    return AppConfig(
        grid={"Lx": 20.0, "N": 128, "scheme": "fourier"},
        continuation={"M": 8, "N": 96, "s_max": 0.01, "ds": 0.005},
        growth={"kappa_count": 3},
        evolve={"Nx": 128, "Ny": 8, "dt": 1e-2, "T": 2.0},
        output_dir=str(tmp_path / "out"),
    )
