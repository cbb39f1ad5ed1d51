import numpy as np
import pytest

import perspec as ps


@pytest.fixture(scope="session")
def sine_model():
    return ps.OperatorModel(profile=ps.sine_profile(), epsilon=1.0)


@pytest.fixture(scope="session")
def tent_model():
    return ps.OperatorModel(profile=ps.piecewise_linear_profile(), epsilon=1.0)


@pytest.fixture(scope="session")
def kernel_256(sine_model):
    return ps.assemble_kernel(sine_model, 1j, 256)


@pytest.fixture(scope="session")
def kernel_512(sine_model):
    return ps.assemble_kernel(sine_model, 1j, 512)


@pytest.fixture(scope="session")
def scan_8(sine_model):
    return ps.scan_and_refine(sine_model, 8.0, 0.05)


# refined from an independently coded scipy-based shooting run (RK45 +
# two-term endpoint fit); agreement below 1e-5 cross-validates the stack
REFERENCE_POSITIVE_EIGS = np.array([1.239839, 3.328857, 6.331584])


@pytest.fixture(scope="session")
def reference_eigs():
    return REFERENCE_POSITIVE_EIGS
