from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincomp import families
from lincomp.diagnostics import (
    R_drift_bound,
    T_drift,
    T_functional,
    U_second_moment_check,
    V_drift_triangular,
    component_drift,
    component_drift_closed,
    drift_report,
    extinction_bound,
    outcomes,
    projected_drift,
    second_moment_drift,
    tail_exponent_info,
    total_rate,
    urn_fraction_drift,
)
from lincomp.model import InteractionMatrix, Mode, ModelSpec
from lincomp.spectral import PreconditionError, is_subcritical_exact

from conftest import models_with_state

HALF = Fraction(1, 2)


def test_total_rate_examples(complete2):
    assert total_rate((2, 3), complete2) == 10
    assert total_rate((0, 0), complete2) == 0
    assert total_rate((0, 5), ModelSpec(1, families.triangular(2))) == 5


def test_component_drift_examples(complete2):
    assert component_drift((2, 3), complete2) == (Fraction(-1, 10), Fraction(1, 10))
    pure = ModelSpec(2, InteractionMatrix.zeros(3))
    assert component_drift((1, 2, 5), pure) == (Fraction(1, 8), Fraction(2, 8), Fraction(5, 8))
    sym = ModelSpec(1, families.cycle(5, HALF))
    assert len(set(component_drift((4,) * 5, sym))) == 1


def test_boundary_drift_uses_indicator():
    spec = ModelSpec(1, families.complete(3, 1))
    d = component_drift((0, 2, 3), spec)
    assert d[0] == 0


def test_projected_drift_examples(complete2):
    assert projected_drift((2, 3), complete2, (1, -1), -1) == (Fraction(-1, 5), Fraction(-1, 5))
    assert projected_drift((2, 3), complete2, (1, 1), 1) == (0, 0)
    pure = ModelSpec(3, InteractionMatrix.zeros(2))
    lhs, rhs = projected_drift((2, 5), pure, (1, 4), 0)
    assert lhs == rhs == Fraction(3 * 22, 21)


def test_T_examples():
    spec = ModelSpec(1, families.complete(2, HALF))
    assert T_functional((1, 1), spec) == 6
    assert total_rate((1, 1), spec) == 3
    assert T_drift((1, 1), spec) == 1
    pure = ModelSpec(2, InteractionMatrix.zeros(3))
    assert T_functional((1, 2, 3), pure) == total_rate((1, 2, 3), pure) == 12


def test_T_requires_subcritical(complete2):
    with pytest.raises(PreconditionError):
        T_drift((1, 1), complete2)


def test_R_drift_examples(complete2):
    assert R_drift_bound((2, 3), complete2) == (0, 1)
    pure = ModelSpec(Fraction(3, 2), InteractionMatrix.zeros(2))
    assert R_drift_bound((4, 7), pure) == (Fraction(3, 2), Fraction(3, 2))


def test_V_drift_examples():
    assert V_drift_triangular(3, 2, 1) == (Fraction(-9, 160), Fraction(-9, 160))
    assert V_drift_triangular(1, 1, 2) == (Fraction(-1, 4), Fraction(-1, 4))
    closed, enum = V_drift_triangular(4, 9, Fraction(1, 10**9))
    assert abs(closed) < Fraction(1, 10**8) and closed == enum
    with pytest.raises(PreconditionError):
        V_drift_triangular(1, 1, 1, alpha=2)


def test_second_moment_examples(complete2):
    # cross term: 2*1*2*3 - 2*(A z)_2 - 3*(A z)_1 = 12 - 4 - 9
    assert second_moment_drift((2, 3), complete2, 0, 1) == (-1, -1)
    assert second_moment_drift((2, 3), complete2, 0, 0) == (1, 1)
    pure = ModelSpec(2, InteractionMatrix.zeros(3))
    assert second_moment_drift((2, 3, 4), pure, 0, 2) == (32, 32)


def test_second_moment_cross_term_by_hand(complete2):
    # outcomes at (2,3): (3,3) 2/10, (2,4) 3/10, (1,3) 3/10, (2,2) 2/10
    expected = Fraction(2, 10) * 3 + Fraction(3, 10) * 2 + Fraction(3, 10) * -3 + Fraction(2, 10) * -2
    assert expected * 10 == -1


def test_U_second_moment_examples(complete2):
    lhs, rhs = U_second_moment_check((2, 3), complete2)
    assert rhs == pytest.approx(4)
    assert lhs >= rhs
    lhs, rhs = U_second_moment_check((2, 2), complete2)
    assert rhs == 0 and lhs >= 0
    with pytest.raises(PreconditionError):
        U_second_moment_check((2, 2), ModelSpec(1, InteractionMatrix.zeros(2)))


def test_extinction_bound_example():
    spec = ModelSpec(1, families.complete(2, Fraction(3, 2)))
    assert extinction_bound(spec, (50, 50)) == pytest.approx(500)
    assert extinction_bound(spec, (100, 100)) == pytest.approx(1000)
    assert extinction_bound(ModelSpec(1, families.complete(2, Fraction(1001, 1000))), (50, 50)) > 1e4
    with pytest.raises(PreconditionError):
        extinction_bound(ModelSpec(1, families.complete(2, HALF)), (50, 50))


def test_tail_exponent_example():
    spec = ModelSpec(1, families.complete(2, HALF))
    info = tail_exponent_info(spec)
    eps = info.epsilon
    assert eps >= Fraction(1, 8)
    e = float(eps)
    assert 1.5 > (1 + 2 * e) * (1 + e / 2)
    assert not 1.5 > (1 + 2 * (e + 1 / 1024)) * (1 + (e + 1 / 1024) / 2)
    assert info.exponent == pytest.approx(e / (4 + 2 * e) / 1.5)
    assert info.exponent >= 0.0196


def test_tail_exponent_near_critical_is_positive():
    info = tail_exponent_info(ModelSpec(1, families.complete(2, Fraction(999, 1000))))
    assert info.exponent > 0


def test_tail_exponent_reports_infeasible():
    # complete N=3: lambda_N = -beta, gap alpha + beta is small once beta is tiny
    info = tail_exponent_info(ModelSpec(1, families.complete(3, Fraction(1, 1000))))
    assert info.exponent is None and info.warning


def test_urn_outcomes_and_polya_martingale():
    spec = ModelSpec(1, InteractionMatrix.zeros(2), mode=Mode.URN)
    for y in [(1, 1), (3, 5), (10, 1)]:
        assert urn_fraction_drift(y, spec) == 0
    ok = ModelSpec(0, [[0, 1], [1, 0]], mode=Mode.URN)
    assert outcomes((10, 10), ok) == [(HALF, (10, 9)), (HALF, (9, 10))]


def test_drift_report(complete2):
    rep = drift_report((2, 3), complete2)
    assert rep.R == 10
    assert rep.T is None
    assert rep.V == Fraction(3, 5)
    assert rep.U == pytest.approx(-1)
    assert rep.second_moments[0][1] == -1


def test_diagnostics_are_pure(complete2):
    assert drift_report((4, 1), complete2) == drift_report((4, 1), complete2)


@settings(max_examples=200, deadline=None)
@given(models_with_state())
def test_exact_identities(ms):
    spec, x = ms
    r = total_rate(x, spec)
    assert r > 0
    assert component_drift(x, spec) == component_drift_closed(x, spec)
    for i in range(spec.n):
        for j in range(spec.n):
            brute, closed = second_moment_drift(x, spec, i, j)
            assert brute == closed
    lhs, a = R_drift_bound(x, spec)
    assert lhs <= a
    if is_subcritical_exact(spec.alpha, spec.matrix):
        assert T_drift(x, spec) == spec.alpha
        assert T_functional(x, spec) >= r


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.fractions(min_value=Fraction(1, 8), max_value=4, max_denominator=8),
       st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=4), st.data())
def test_eigenpair_martingale_identity_complete_graph(n, beta, alpha, data):
    spec = ModelSpec(alpha, families.complete(n, beta))
    x = tuple(data.draw(st.integers(1, 20)) for _ in range(n))
    pairs = [([1] * n, (n - 1) * beta)]
    for k in range(1, n):
        v = [0] * n
        v[0], v[k] = 1, -1
        pairs.append((v, -beta))
    for v, lam in pairs:
        lhs, rhs = projected_drift(x, spec, v, lam)
        assert lhs == rhs


@settings(max_examples=50, deadline=None)
@given(models_with_state(max_n=4))
def test_U_inequality_random(ms):
    spec, x = ms
    from lincomp.spectral import perron_root

    if perron_root(spec.matrix)[0] <= 0:
        return
    lhs, rhs = U_second_moment_check(x, spec)
    assert lhs >= rhs - 1e-9 * max(1.0, abs(rhs))


@pytest.mark.parametrize("beta", [HALF, 1, 2])
def test_V_drift_grid(beta):
    for x in range(1, 31):
        for y in range(1, 31):
            if x + y > 1:
                closed, enum = V_drift_triangular(x, y, beta)
                assert closed == enum
