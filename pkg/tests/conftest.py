import numpy as np
from hypothesis import strategies as st

from elusive.perm import Permutation


@st.composite
def permutations(draw, degree=None, max_degree=12):
    n = degree if degree is not None else draw(st.integers(1, max_degree))
    images = draw(st.permutations(list(range(n))))
    return Permutation(np.array(images))


@st.composite
def permutation_lists(draw, count=3, max_degree=10):
    n = draw(st.integers(1, max_degree))
    return [draw(permutations(degree=n)) for _ in range(count)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
