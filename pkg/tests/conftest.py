import math

import pytest

from slicelab import _accel

LAM = 2 / 3
PATHS = [False, True] if _accel.USE_NUMBA else [False]


@pytest.fixture(params=PATHS, ids=lambda v: "numba" if v else "numpy")
def use_numba(request):
    return request.param


def close(a, b, rel=1e-12, abs_=0.0):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
