import numpy as np
import pytest

from channels import fig3_channel, fig4_channel


@pytest.fixture
def fig3():
    return fig3_channel()


@pytest.fixture
def fig4():
    return fig4_channel()


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
