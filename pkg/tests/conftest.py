import numpy as np
import pytest
from hypothesis import strategies as st

from variety_test.poly import PolyTuple, basis_size, make_poly


def circle(r=0.5):
    return make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [0, 2], 1.0), (1, [0, 0], -r * r)])


def random_poly(rng, n, c, d):
    return PolyTuple(n, c, d, rng.normal(size=(c, basis_size(n, d))))


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


shapes = st.tuples(st.integers(1, 3), st.integers(1, 2), st.integers(0, 4)).filter(lambda s: s[1] <= s[0])
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA: dict = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    """Remember one acceptance line; printed in the terminal summary."""
    CRITERIA[number] = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    print(CRITERIA[number])


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
