import pytest

from slabadjoint.bvp import Grid
from slabadjoint.model import nominal_parameters
from slabadjoint.pipeline import analyze_detector

from paper_values import DETECTORS


@pytest.fixture(scope="session")
def analyses():
    """Analyses at b = 10, 40, 49.5, -10, -40, -49.5 on the default grid."""
    out = []
    for b in DETECTORS + tuple(-d for d in DETECTORS):
        p = nominal_parameters(b)
        out.append(analyze_detector(p, Grid.for_params(p, 4001)))
    return out


@pytest.fixture
def p10():
    return nominal_parameters(10.0)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    lines = [test_acceptance.RESULTS[k] for k in sorted(k for k in test_acceptance.RESULTS if isinstance(k, int))]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
