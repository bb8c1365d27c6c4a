"""Shared fixtures: canonical parameter sets and pre-solved mode families.

Mode solving is the only expensive step, so its results are session-scoped
and sliced by the tests that need shorter truncations (slices of one solve
are bit-identical to fresh solves by the nesting property, which is itself
under test in test_modal).
"""

import numpy as np
import pytest

from beamobs import BeamParams, SensorConfig, build_system, find_modes

DEFAULT = BeamParams(rho=0.518, EI=4.9, m=0.1, kappa=10.0, length=1.875,
                     attach=1.378)
PINNED = BeamParams(rho=2.0, EI=1.0, m=0.0, kappa=0.0, length=1.0, attach=0.8)
SENSOR_POSITIONS = (0.075, 0.716, 1.128, 1.555)
FULL_SENSORS = SensorConfig(body_output=True, positions=SENSOR_POSITIONS)
BODY_SENSOR = SensorConfig(body_output=True, positions=())


@pytest.fixture(scope="session")
def default_params():
    return DEFAULT


@pytest.fixture(scope="session")
def pinned_params():
    return PINNED


@pytest.fixture(scope="session")
def full_sensors():
    return FULL_SENSORS


@pytest.fixture(scope="session")
def modes80(default_params):
    return find_modes(default_params, 80)


@pytest.fixture(scope="session")
def modes12(modes80):
    return modes80[:12]


@pytest.fixture(scope="session")
def pinned_modes(pinned_params):
    return find_modes(pinned_params, 10)


@pytest.fixture(scope="session")
def pinned_modes40(pinned_params):
    return find_modes(pinned_params, 40)


@pytest.fixture(scope="session")
def system40(modes80):
    return build_system(modes80[:40], FULL_SENSORS, 6.0)


@pytest.fixture(scope="session")
def system16(system40):
    return system40.truncate(16)


@pytest.fixture(scope="session")
def system6(system40):
    return system40.truncate(6)


@pytest.fixture(scope="session")
def body_system6(modes80):
    return build_system(modes80[:6], BODY_SENSOR, 6.0)
