import numpy as np
import pytest

from locsep.filter_kernel import LowPassFilter, make_kernel_weights
from locsep.model_synth import table1_model


def direct_trig_poly(coeffs, x):
    """Independent oracle: explicit sum_l c_l exp(i l x) with a Python loop over l."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = (coeffs.size + 1) // 2
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(x.shape, dtype=complex)
    for c, l in zip(coeffs, range(-(n - 1), n)):
        out += c * np.exp(1j * l * x)
    return out


@pytest.fixture(scope="session")
def weights_1024():
    return make_kernel_weights(LowPassFilter(), 1024)


@pytest.fixture(scope="session")
def three_sources():
    return table1_model()
