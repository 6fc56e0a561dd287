import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qlab.dyadic import DyadicInterval, StepFunction
from qlab.exact import DyadicRational, ExactScalar

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("QLAB_HYPOTHESIS", "default"))

dyadics = st.builds(DyadicRational, st.integers(-2**40, 2**40), st.integers(-8, 30))
scalars = st.builds(ExactScalar, dyadics, dyadics)


@st.composite
def intervals(draw, K=3, N=4):
    j = draw(st.integers(-N, K))
    return DyadicInterval(draw(st.integers(0, (1 << (K - j)) - 1)), j)


@st.composite
def step_functions(draw, N=3, K=1, dim=1):
    n = 1 << (N + K)
    nums = draw(st.lists(st.integers(-64, 64), min_size=n * dim, max_size=n * dim))
    vals = [[DyadicRational(nums[c * dim + i], 3) for i in range(dim)] for c in range(n)]
    return StepFunction.from_values(N, K, vals)


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE: list = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
