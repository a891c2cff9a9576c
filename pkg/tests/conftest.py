import numpy as np
import pytest

from percoflow.config import l_shape, unit_square
from percoflow.geometry import BoundaryPatch, ConvexPolytope, Domain


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def lshape():
    return l_shape()


def box_domain(lo, hi, g1=0, g2=None):
    """Box with patches on two facets (box facets: -x0, -x1, ..., +x0, +x1, ...)."""
    d = len(lo)
    if g2 is None:
        g2 = g1 + d
    return Domain([ConvexPolytope.box(lo, hi)], [BoundaryPatch(0, g1)], [BoundaryPatch(0, g2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record a one-line verdict for an acceptance criterion."""
    def record(k, ok, detail):
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[k] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
