import numpy as np
import pytest

from gptd.instances import square_problem
from gptd.model import polygon_model

S = 2 ** 0.25  # vertex radius of the square model

ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def square():
    return polygon_model(4)


@pytest.fixture
def square_uniform():
    return square_problem()


@pytest.fixture
def square_pair():
    # w_1 and w_3
    return square_problem((0, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
