import sys

import numpy as np
import pytest

from leakwise import ArmaModel, FrequencyGrid, SpectralDensity, arma_spectrum

# continuous-quadrature oracle values (scipy.integrate.quad + brentq on the closed forms)
AR1_LEAKAGE_N05 = 0.8234506868434539
AR1_ZETA_N05 = 3.041277543638247
AR1_DUAL_R03_D = 2.1631418273813634


@pytest.fixture
def ar1():
    """AR(1) with pole 0.5 and unit innovations on the default grid."""
    return arma_spectrum(ArmaModel((), (-0.5,), 1.0), FrequencyGrid(4096))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def flat(value, m=4096):
    return SpectralDensity.flat(value, FrequencyGrid(m))


def random_arma(rng, m=512):
    """Stable, minimum-phase ARMA(1,1) spectrum with random innovation variance."""
    g = rng.uniform(-0.9, 0.9)
    f = rng.uniform(-0.9, 0.9)
    var = rng.uniform(0.2, 3.0)
    return arma_spectrum(ArmaModel((f,), (g,), var), FrequencyGrid(m))


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    lines = getattr(acc, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
