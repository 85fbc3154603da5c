import sys
from math import sqrt
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oam_noon import Projector, PumpSpec, ScenarioConfig, unit_override  # noqa: E402

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture
def qutrit_pump():
    return PumpSpec.from_modes([(-2, sqrt(2.5)), (0, 1.0), (2, sqrt(2.5))], w0=1.0)


@pytest.fixture
def unit_config():
    """Factory for unit-table configs from ``{l: w}`` projector maps."""

    def make(d, a, l_max=3, **kw):
        return ScenarioConfig(
            proj_D=Projector.of("D", d),
            proj_A=Projector.of("A", a),
            l_max=l_max,
            amplitude_override=unit_override(l_max),
            **kw,
        )

    return make


@pytest.fixture
def configs_dir():
    return REPO / "configs"


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
