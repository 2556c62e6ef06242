"""Shared fixtures: jitted kernels are compiled once per session."""

import numpy as np
import pytest

from extsteklov import SteklovBasis, build_rule, default_order, kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    kernels.warmup()


@pytest.fixture(scope="session")
def basis4():
    return SteklovBasis(4)


@pytest.fixture(scope="session")
def rule4(basis4):
    return build_rule(default_order(basis4.lmax))


def random_coeffs(rng, size, scale=1.0):
    return scale * rng.standard_normal(size)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
