import pytest

from polyelliptic.atlas import sector_partition
from polyelliptic.geometry import build_polygon

REF_F = (1.39, 2.595, 2.44)
EQUI_F = (1.3, 1.3, 1.3)
SQUARE_F = (1.0, 1.0, 1.0, 1.0)
SHAPES = {"reference": REF_F, "equilateral": EQUI_F, "square": SQUARE_F}


@pytest.fixture(scope="session")
def ref_spec():
    return build_polygon(REF_F)


@pytest.fixture(scope="session")
def ref_table(ref_spec):
    return sector_partition(ref_spec)


@pytest.fixture(scope="session")
def equi_table():
    return sector_partition(build_polygon(EQUI_F))


@pytest.fixture(scope="session", params=sorted(SHAPES))
def any_table(request):
    return sector_partition(build_polygon(SHAPES[request.param]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
