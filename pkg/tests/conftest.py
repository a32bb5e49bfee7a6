import numpy as np
import pytest

from dynirs.channel import ChannelSet


def random_channels(rng, L=4, M=2, Q=3, N=6, K=2, scale=1.0):
    """Unit-scale i.i.d. channel set; large IRS terms make the optimizer's choices matter."""
    def cn(r, c):
        return scale * (rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))) / np.sqrt(2)

    return ChannelSet.from_forward(
        bu=cn(M, L), bi=cn(N, L), br=cn(Q, L), ru=cn(M, Q), ri=cn(N, Q),
        rt=cn(K, Q), iu=cn(M, N), it=cn(K, N), tu=cn(M, K), bt=cn(K, L),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.REPORT:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(mod.REPORT):
            terminalreporter.write_line(mod.REPORT[cid])
