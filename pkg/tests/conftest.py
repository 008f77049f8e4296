from fractions import Fraction

import pytest
from hypothesis import strategies as st

from lincomp.model import InteractionMatrix, ModelSpec


@st.composite
def rational_matrices(draw, max_n=5, min_n=1, max_num=3, max_den=4, density=None):
    """Nonnegative rational matrices with zero diagonal, entries in {0..max_num}/{1..max_den}."""
    n = draw(st.integers(min_n, max_n))
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                row.append(Fraction(0))
            else:
                num = draw(st.integers(0, max_num))
                den = draw(st.integers(1, max_den))
                row.append(Fraction(num, den))
        rows.append(row)
    return InteractionMatrix.from_array(rows)


@st.composite
def models(draw, max_n=5, **kw):
    a = draw(rational_matrices(max_n=max_n, **kw))
    alpha = Fraction(draw(st.integers(1, 6)), draw(st.integers(1, 4)))
    return ModelSpec(alpha, a)


@st.composite
def positive_states(draw, n, hi=20):
    return tuple(draw(st.integers(1, hi)) for _ in range(n))


@st.composite
def models_with_state(draw, max_n=5):
    spec = draw(models(max_n=max_n))
    return spec, draw(positive_states(spec.n))


@pytest.fixture
def complete2():
    from lincomp import families

    return ModelSpec(1, families.complete(2, 1))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
