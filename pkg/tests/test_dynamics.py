from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincomp import families
from lincomp.diagnostics import outcomes
from lincomp.dynamics import (
    ExtinctError,
    IntegerRates,
    StopReason,
    ctmc_step,
    dtmc_step,
    first_extinction,
    reference_simulate,
    sample_jumps,
    simulate,
    urn_step,
)
from lincomp.graph import enumerate_limit_sets, is_non_interacting
from lincomp.model import InteractionMatrix, Mode, ModelSpec
from lincomp.rng import RandomStream, streams

from conftest import models


def test_integer_weights_of_two_type_model(complete2):
    assert IntegerRates.of(complete2).chain_weights((2, 3)) == [2, 3, 3, 2]


def test_rational_rates_scaled_by_common_denominator():
    spec = ModelSpec(Fraction(1, 2), families.complete(2, Fraction(1, 3)), immigration=(Fraction(1, 4), 0))
    r = IntegerRates.of(spec)
    assert r.scale == 12
    w = r.chain_weights((2, 3))
    assert [Fraction(x, 12) for x in w] == [Fraction(5, 4), Fraction(3, 2), 1, Fraction(2, 3)]


def test_dead_component_has_no_weight():
    spec = ModelSpec(1, families.complete(3, 1))
    w = IntegerRates.of(spec).chain_weights((0, 2, 3))
    assert w[0] == 0 and w[3] == 0


def test_pure_birth_never_decrements():
    spec = ModelSpec(1, InteractionMatrix.zeros(3))
    s = RandomStream(1)
    x = (1, 2, 3)
    for _ in range(200):
        y = dtmc_step(x, spec, s)
        assert all(b >= a for a, b in zip(x, y))
        x = y.counts


def test_zero_rate_errors(complete2):
    with pytest.raises(ExtinctError):
        dtmc_step((0, 0), complete2, RandomStream(0))
    with pytest.raises(ExtinctError):
        ctmc_step((0, 0), complete2, RandomStream(0))
    with pytest.raises(ExtinctError):
        urn_step((0, 0), ModelSpec(0, [[0, 1], [1, 0]], mode=Mode.URN), RandomStream(0))


def test_ctmc_holding_rate(complete2):
    # mean of Exp(10) is 0.1
    s = RandomStream(3)
    dts = [ctmc_step((2, 3), complete2, s)[0] for _ in range(20000)]
    assert np.mean(dts) == pytest.approx(0.1, rel=0.03)


def test_yule_holding_time():
    spec = ModelSpec(2, InteractionMatrix.zeros(1))
    s = RandomStream(5)
    dts = []
    for _ in range(20000):
        dt, y = ctmc_step((3,), spec, s)
        assert y.counts == (4,)
        dts.append(dt)
    assert np.mean(dts) == pytest.approx(1 / 6, rel=0.03)


def test_urn_step_clamped_removal():
    spec = ModelSpec(1, [[0, 2], [2, 0]], mode=Mode.URN)
    assert sorted(y for _, y in outcomes((3, 1), spec)) == [(1, 2), (4, 0)]
    seen = {urn_step((3, 1), spec, RandomStream(0, r)).counts for r in range(50)}
    assert seen == {(4, 0), (1, 2)}


def test_ok_corral_step():
    spec = ModelSpec(0, [[0, 1], [1, 0]], mode=Mode.URN)
    y = urn_step((10, 10), spec, RandomStream(0))
    assert sorted(y.counts) == [9, 10]


def test_empirical_step_law(complete2):
    counts = np.bincount(sample_jumps((2, 3), complete2, 200000, seed=11), minlength=4)
    np.testing.assert_allclose(counts / counts.sum(), [0.2, 0.3, 0.3, 0.2], atol=0.005)


def test_sample_jumps_matches_dtmc_step(complete2):
    picks = sample_jumps((2, 3), complete2, 300, seed=2)
    s = RandomStream(2)
    for k in picks:
        y = dtmc_step((2, 3), complete2, s)
        d = [b - a for a, b in zip((2, 3), y)]
        assert k == (d.index(1) if 1 in d else 2 + d.index(-1))


def test_zero_matrix_stops_immediately():
    tr = simulate(ModelSpec(1, InteractionMatrix.zeros(3)), (1, 0, 2), max_steps=100)
    assert tr.stop_reason is StopReason.FROZEN
    assert tr.steps == 0
    assert tr.survivors.labels() == (1, 3)


def test_triangular_always_keeps_component_one():
    spec = ModelSpec(1, families.triangular(1))
    finished = 0
    for r in range(200):
        tr = simulate(spec, (1, 1), max_steps=10**5, seed=4, replicate=r)
        assert not np.any((tr.components == 0) & (tr.kinds < 0))
        if tr.stop_reason is StopReason.STEP_BUDGET:
            continue
        finished += 1
        assert tr.stop_reason is StopReason.FROZEN
        assert tr.survivors.labels() == (1,)
    assert finished > 180


def test_determinism(complete2):
    a = simulate(complete2, (5, 5), max_steps=1000, seed=9, replicate=3)
    b = simulate(complete2, (5, 5), max_steps=1000, seed=9, replicate=3)
    assert a == b
    c = simulate(complete2, (5, 5), max_steps=1000, seed=9, replicate=4)
    assert a != c


def test_time_budget():
    spec = ModelSpec(1, families.complete(2, Fraction(1, 2)), mode=Mode.LCP)
    tr = simulate(spec, (5, 5), max_time=0.5, seed=1)
    assert tr.stop_reason in (StopReason.TIME_BUDGET, StopReason.FROZEN)
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times.size == 0 or tr.times[-1] <= 0.5
    with pytest.raises(ValueError):
        simulate(ModelSpec(1, families.complete(2, 1)), (5, 5), max_time=1.0)


def test_budget_required(complete2):
    with pytest.raises(ValueError):
        simulate(complete2, (1, 1))


def test_dtmc_and_ctmc_share_jump_chain():
    a = families.cycle(4, Fraction(1, 2))
    d = simulate(ModelSpec(1, a, mode=Mode.DTMC), (3, 3, 3, 3), max_steps=500, seed=5)
    c = simulate(ModelSpec(1, a, mode=Mode.LCP), (3, 3, 3, 3), max_steps=500, seed=5)
    assert np.array_equal(d.components, c.components) and np.array_equal(d.kinds, c.kinds)
    assert d.times is None and c.times is not None


def test_immigration_runs_to_budget():
    spec = ModelSpec(1, families.complete(2, 2), immigration=(1, 1))
    tr = simulate(spec, (1, 1), max_steps=2000, seed=0)
    assert tr.stop_reason is StopReason.STEP_BUDGET


def test_overflow_is_reported():
    spec = ModelSpec(4, InteractionMatrix.zeros(1), immigration=(1,))
    with pytest.raises(OverflowError):
        simulate(spec, (2**61,), max_steps=10)


def test_first_extinction_examples(complete2):
    for r in range(50):
        rec = first_extinction(complete2, (1, 1), cap=10**6, seed=1, replicate=r)
        assert not rec.censored and rec.sigma >= 1
    rec = first_extinction(ModelSpec(1, InteractionMatrix.zeros(2)), (3, 3), cap=100)
    assert rec.censored and rec.sigma is None


def test_first_extinction_needs_positive_start(complete2):
    with pytest.raises(ValueError):
        first_extinction(complete2, (0, 1), cap=10)


def test_first_extinction_ctmc_time():
    spec = ModelSpec(1, families.complete(2, Fraction(3, 2)), mode=Mode.LCP)
    rec = first_extinction(spec, (5, 5), cap=10**6, seed=2)
    tr = simulate(spec, (5, 5), max_steps=rec.sigma, seed=2)
    assert rec.sigma_tilde == tr.times[-1]


def test_supercritical_extinction_uncensored():
    spec = ModelSpec(1, families.complete(2, Fraction(3, 2)))
    assert all(not first_extinction(spec, (50, 50), 10**6, 0, r).censored for r in range(100))


@settings(max_examples=40, deadline=None)
@given(models(max_n=4), st.integers(0, 3), st.sampled_from([Mode.DTMC, Mode.LCP]))
def test_kernel_matches_reference(spec, rep, mode):
    spec = ModelSpec(spec.alpha, spec.matrix, mode=mode)
    init = tuple(range(1, spec.n + 1))
    tr = simulate(spec, init, max_steps=300, seed=7, replicate=rep)
    states, times, reason = reference_simulate(spec, init, 300, seed=7, replicate=rep)
    assert np.array_equal(tr.states(), np.array([s.counts for s in states]))
    assert reason is tr.stop_reason
    if mode is Mode.LCP:
        assert np.array_equal(tr.times, np.array(times))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(1, 3), st.integers(0, 50))
def test_urn_kernel_matches_reference(alpha, removal, rep):
    spec = ModelSpec(alpha, [[0, removal, 0], [removal, 0, 1], [0, 2, 0]], mode=Mode.URN)
    tr = simulate(spec, (4, 3, 5), max_steps=300, seed=1, replicate=rep)
    states, _, reason = reference_simulate(spec, (4, 3, 5), 300, seed=1, replicate=rep)
    assert np.array_equal(tr.states(), np.array([s.counts for s in states]))
    assert reason is tr.stop_reason


@settings(max_examples=40, deadline=None)
@given(models(max_n=5), st.integers(0, 10))
def test_trajectory_invariants(spec, rep):
    init = (2,) * spec.n
    tr = simulate(spec, init, max_steps=2000, seed=3, replicate=rep)
    states = tr.states()
    assert np.all(states >= 0)
    steps = np.abs(np.diff(states, axis=0))
    assert np.all(steps.sum(axis=1) == 1)
    # zero is absorbing without immigration
    dead = states[:-1] == 0
    assert not np.any(dead & (states[1:] > 0))
    # components with zero death row never decrease
    for i in range(spec.n):
        if sum(spec.matrix.rows()[i]) == 0:
            assert np.all(np.diff(states[:, i]) >= 0)
    if tr.stop_reason is StopReason.FROZEN:
        s = tr.survivors
        assert is_non_interacting(spec.matrix, s.members)
        assert s in enumerate_limit_sets(spec.matrix)


def test_events_and_terminal_state():
    spec = ModelSpec(1, families.line(3))
    tr = simulate(spec, (3, 3, 3), max_steps=10**6, seed=8)
    ev = tr.events
    assert len(ev) == tr.steps
    assert ev[0][0] == 1
    assert tuple(tr.states()[-1]) == tr.terminal_state.counts


def test_streams_are_keyed():
    a, b = streams(1, 2)
    assert a.key == (1, 2, 0) and b.key == (1, 2, 1)
    assert RandomStream(1, 2).word() == RandomStream(1, 2).word()
    assert RandomStream(1, 2).word() != RandomStream(1, 3).word()


def test_below_is_unbiased_for_small_totals():
    s = RandomStream(0)
    draws = np.array([s.below(3) for _ in range(30000)])
    np.testing.assert_allclose(np.bincount(draws) / draws.size, [1 / 3] * 3, atol=0.01)


def test_below_handles_wide_totals():
    s = RandomStream(0)
    total = 3 * 2**70
    assert all(0 <= s.below(total) < total for _ in range(100))
