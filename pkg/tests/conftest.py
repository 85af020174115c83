import math
import os

import pytest
from hypothesis import HealthCheck, assume, settings
from hypothesis import strategies as st

from plantedcycle.model import Params

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(autouse=True, scope="session")
def _feasible_cache(tmp_path_factory):
    # keep enumerations out of the user's home cache during tests
    if "PLANTEDCYCLE_CACHE" not in os.environ:
        os.environ["PLANTEDCYCLE_CACHE"] = str(tmp_path_factory.mktemp("feasible-cache"))
    yield


@st.composite
def valid_params(draw, n=st.integers(2, 60)):
    """Params with 0 < q < r < p <= 1 and tau in (0, 1/2)."""
    tau = draw(st.floats(0.01, 0.49))
    p = draw(st.floats(0.02, 1.0))
    q = draw(st.floats(1e-3, 0.99).filter(lambda v: v < p * 0.999))
    params = Params.unchecked(draw(n), tau, p, q)
    assume(0 < params.q < params.r < params.p <= 1 and not math.isclose(params.p, params.q))
    return Params.create(params.n, tau, p, q)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
