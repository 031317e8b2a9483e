import pytest

from wirebill import CurveSpec, build_curve

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def circle():
    return build_curve(CurveSpec.circle())


@pytest.fixture(scope="session")
def ellipse():
    return build_curve(CurveSpec.ellipse(2.0, 1.0))


@pytest.fixture(scope="session")
def ellipse15():
    return build_curve(CurveSpec.ellipse(1.5, 1.0))


@pytest.fixture(scope="session")
def coil():
    return build_curve(CurveSpec.coil(0.05, 2))


@pytest.fixture(scope="session")
def flat():
    return build_curve(CurveSpec.flat_point())
