import pytest

from mhd_evans.params import PhysicalParams
from mhd_evans.profile import compute_profile
from mhd_evans.shooting import EvansFunction


@pytest.fixture(scope="session")
def base_params():
    return PhysicalParams(gamma=5 / 3, v_plus=1e-2, b1=2.0, mu0=1.0, sigma=1.0)


@pytest.fixture(scope="session")
def base_profile(base_params):
    return compute_profile(base_params)


@pytest.fixture(scope="session")
def base_evans(base_params, base_profile):
    return EvansFunction(base_params, profile=base_profile, anchor=4.5)
