import sys
import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def random_channel(rng, sizes=(2, 2, 2, 2)):
    from avmac.channel import ChannelSpec
    W = rng.dirichlet(np.ones(sizes[-1]), size=sizes[:-1])
    return ChannelSpec(W, "random")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
