"""Shared fixtures: working-point device, bases, decoherence sets."""

import math

import pytest

from cavityw.device import DecoherenceParams, derive_params
from cavityw.experiments import reference_device, simulation_basis

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def params_b9():
    """n=3 working point: deltas -2*pi*0.5*j GHz, g_1 = |delta_1|/9."""
    return reference_device(b=9.0, n=3)


@pytest.fixture(scope="session")
def params_b9_ct():
    return reference_device(b=9.0, n=3, crosstalk_multiple=0.01)


@pytest.fixture(scope="session")
def sector_basis():
    """Single-excitation sector of the n=3 system (14 states)."""
    return simulation_basis(3, e_max=1)


@pytest.fixture(scope="session")
def small_basis():
    """Unrestricted n=1 system (3 qutrits x 2 cavities, 108 states)."""
    return simulation_basis(1, e_max=None)


@pytest.fixture(scope="session")
def small_sector():
    return simulation_basis(1, e_max=1)


@pytest.fixture(scope="session")
def params_n1():
    return reference_device(b=9.0, n=1)


@pytest.fixture(scope="session")
def lifetimes_ref():
    """kappa 5 us, gamma 10 us, gamma21 5 us, gamma20 25 us, phi 5 us."""
    return DecoherenceParams.from_lifetimes_us(3)


def make_params(n=3, b=9.0, omega10=TWO_PI * 6.5e9):
    deltas = [-TWO_PI * 0.5e9 * j for j in range(1, n + 1)]
    return derive_params(deltas, abs(deltas[0]) / b, n, omega10)
