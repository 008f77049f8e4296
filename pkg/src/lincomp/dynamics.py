"""Sampling the competition process, its embedded chain and the removal urn.

Rates are turned into integers by multiplying with the least common
denominator of all model parameters; a transition is then chosen by an exact
uniform integer draw over the cumulative weights. Outcomes are ordered
births ``+e_1..+e_n`` then deaths ``-e_1..-e_n``.

Jumps and CTMC holding times come from two separate streams, so the CTMC and
DTMC runs of one (seed, replicate) share the same jump chain.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import lcm
from typing import Optional

import numpy as np

from . import _kernel
from .graph import interaction_masks
from .model import INT64_MAX, Mode, ModelSpec, PopulationState, SurvivorSet, as_state, check_model
from .rng import RandomStream, streams

log = logging.getLogger(__name__)

SAFE_TOTAL = 2**62


class ExtinctError(RuntimeError):
    """The total transition rate is zero, so the chain cannot move."""


class StopReason(str, Enum):
    FROZEN = "SurvivorSetFrozen"
    STEP_BUDGET = "StepBudget"
    TIME_BUDGET = "TimeBudget"
    FULL_EXTINCTION = "FullExtinction"
    FIRST_EXTINCTION = "FirstExtinction"


@dataclass(frozen=True)
class IntegerRates:
    """Model rates scaled to integers: every rate equals ``weight / scale``."""

    scale: int
    birth: int  # scale * alpha
    immigration: tuple
    matrix: tuple  # scale * a_ij (urn: a_ij itself, scale 1)

    @classmethod
    def of(cls, spec: ModelSpec) -> "IntegerRates":
        if spec.mode is Mode.URN:
            return cls(1, int(spec.alpha), (0,) * spec.n, tuple(tuple(int(v) for v in row) for row in spec.matrix.entries))
        dens = [spec.alpha.denominator] + [v.denominator for row in spec.matrix.entries for v in row]
        imm = spec.immigration_rates()
        dens += [v.denominator for v in imm]
        scale = lcm(*dens)
        return cls(
            scale,
            int(spec.alpha * scale),
            tuple(int(v * scale) for v in imm),
            tuple(tuple(int(v * scale) for v in row) for row in spec.matrix.entries),
        )

    def chain_weights(self, x):
        """Integer weights of the 2n outcomes (births then deaths) at state ``x``."""
        n = len(x)
        births = [self.birth * x[i] + self.immigration[i] for i in range(n)]
        deaths = [sum(self.matrix[i][j] * x[j] for j in range(n)) if x[i] > 0 else 0 for i in range(n)]
        return births + deaths


def _chain_apply(x, k):
    n = len(x)
    y = list(x)
    if k < n:
        y[k] += 1
    else:
        y[k - n] -= 1
    if y[k % n] > INT64_MAX:
        raise OverflowError("population count exceeds 64-bit range")
    return PopulationState(tuple(y))


def urn_apply(x, i, rates: IntegerRates):
    """Draw type ``i``: add ``alpha`` balls of it, remove ``min(a_ji, Y_j)`` of each other type."""
    y = list(x)
    y[i] += rates.birth
    for j in range(len(y)):
        if j != i:
            y[j] -= min(rates.matrix[j][i], y[j])
    if y[i] > INT64_MAX:
        raise OverflowError("ball count exceeds 64-bit range")
    return PopulationState(tuple(y))


def _pick(weights, r):
    for k, w in enumerate(weights):
        if r < w:
            return k
        r -= w
    raise AssertionError("draw outside total weight")


def dtmc_step(state, spec: ModelSpec, stream: RandomStream) -> PopulationState:
    """One step of the embedded jump chain."""
    x = as_state(state, spec.n)
    rates = IntegerRates.of(spec)
    w = rates.chain_weights(x)
    total = sum(w)
    if total == 0:
        raise ExtinctError("total rate is zero")
    return _chain_apply(x, _pick(w, stream.below(total)))


def ctmc_step(state, spec: ModelSpec, stream: RandomStream, clock: Optional[RandomStream] = None):
    """One CTMC jump: ``(holding_time, new_state)``.

    The holding time is exponential with rate ``R(state)``; the jump has the
    embedded-chain law. ``clock`` defaults to ``stream``.
    """
    x = as_state(state, spec.n)
    rates = IntegerRates.of(spec)
    w = rates.chain_weights(x)
    total = sum(w)
    if total == 0:
        raise ExtinctError("total rate is zero")
    k = _pick(w, stream.below(total))
    # same float arithmetic as the compiled kernel
    dt = (clock or stream).exponential(float(total) / float(rates.scale))
    return dt, _chain_apply(x, k)


def urn_step(state, spec: ModelSpec, stream: RandomStream) -> PopulationState:
    x = as_state(state, spec.n)
    total = sum(x)
    if total == 0:
        raise ExtinctError("the urn is empty")
    rates = IntegerRates.of(spec)
    return urn_apply(x, _pick(list(x), stream.below(total)), rates)


# ------------------------------------------------------------------ trajectories


@dataclass
class Trajectory:
    """Event log of one run.

    ``components[k]`` is the component touched by event ``k`` (the drawn
    type in urn mode), ``kinds[k]`` is +1/-1 for births/deaths (0 in urn
    mode) and ``times[k]`` the CTMC clock after the event (None outside
    LCP mode; the clock there is the step index ``k + 1``).
    """

    spec: ModelSpec
    initial: PopulationState
    components: np.ndarray
    kinds: np.ndarray
    times: Optional[np.ndarray]
    terminal_state: PopulationState
    stop_reason: StopReason
    steps: int
    first_zero_step: Optional[int] = None
    first_zero_time: Optional[float] = None
    seed: int = 0
    replicate: int = 0
    final_time: Optional[float] = None

    @property
    def mode(self) -> Mode:
        return self.spec.mode

    @property
    def survivors(self) -> Optional[SurvivorSet]:
        if self.stop_reason is not StopReason.FROZEN:
            return None
        return SurvivorSet.of(i for i, v in enumerate(self.terminal_state) if v > 0)

    @property
    def recorded(self) -> bool:
        return self.components is not None

    def deltas(self):
        """Per-event change vectors, by replaying the log."""
        rates = IntegerRates.of(self.spec)
        x = self.initial
        for comp, kind in zip(self.components, self.kinds):
            if self.spec.mode is Mode.URN:
                y = urn_apply(x, int(comp), rates)
            else:
                y = _chain_apply(x, int(comp) if kind > 0 else int(comp) + len(x))
            yield tuple(b - a for a, b in zip(x, y))
            x = y

    @property
    def events(self):
        """List of ``(clock, component, delta)``."""
        clocks = self.times if self.times is not None else np.arange(1, self.steps + 1)
        return [(c, int(comp), d) for c, comp, d in zip(clocks.tolist(), self.components.tolist(), self.deltas())]

    def states(self) -> np.ndarray:
        """All visited states, shape ``(steps + 1, n)``."""
        rows = [self.initial.counts]
        x = np.array(self.initial.counts, dtype=np.int64)
        for d in self.deltas():
            x = x + np.array(d, dtype=np.int64)
            rows.append(tuple(x.tolist()))
        return np.array(rows, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(a, b)

        return (
            self.spec == other.spec
            and self.initial == other.initial
            and same(self.components, other.components)
            and same(self.kinds, other.kinds)
            and same(self.times, other.times)
            and self.terminal_state == other.terminal_state
            and self.stop_reason == other.stop_reason
            and self.steps == other.steps
            and self.first_zero_step == other.first_zero_step
            and self.first_zero_time == other.first_zero_time
        )


@dataclass(frozen=True)
class ExtinctionRecord:
    """First time some component hits zero, or censoring at the cap."""

    sigma: Optional[int]
    censored: bool
    sigma_tilde: Optional[float] = None
    survivor_set: Optional[SurvivorSet] = None
    steps: int = 0
    stop_reason: Optional[StopReason] = None
    error: Optional[str] = None


_STATUS = {
    _kernel.FROZEN: StopReason.FROZEN,
    _kernel.EXTINCT: StopReason.FULL_EXTINCTION,
    _kernel.STEP_BUDGET: StopReason.STEP_BUDGET,
    _kernel.TIME_BUDGET: StopReason.TIME_BUDGET,
    _kernel.FIRST_ZERO: StopReason.FIRST_EXTINCTION,
}


def _is_frozen(nbr, x):
    pos = [i for i, v in enumerate(x) if v > 0]
    pmask = sum(1 << i for i in pos)
    return all(nbr[i] & pmask == 0 for i in pos)


def _run(spec, initial, seed, replicate, max_steps, max_time, record, stop_first_zero):
    check_model(spec)
    x0 = as_state(initial, spec.n)
    if spec.n > _kernel.MAX_COMPONENTS:
        raise ValueError(f"simulation supports at most {_kernel.MAX_COMPONENTS} components")
    if max_steps is None and max_time is None:
        raise ValueError("give max_steps and/or max_time")
    if max_time is not None and spec.mode is not Mode.LCP:
        raise ValueError("a time budget needs the continuous-time (lcp) mode")
    rates = IntegerRates.of(spec)
    n = spec.n
    urn = spec.mode is Mode.URN
    use_clock = spec.mode is Mode.LCP
    freeze = not spec.has_immigration
    nbr = interaction_masks(spec.matrix)

    state = np.array(x0.counts, dtype=np.int64)
    aint = np.array(rates.matrix, dtype=np.int64).reshape(n, n)
    death = aint @ state if not urn else np.zeros(n, dtype=np.int64)
    if urn:
        per_count = max(rates.birth, 1)
        safe_sum = SAFE_TOTAL - per_count
    else:
        col = max(int(aint[:, j].sum()) for j in range(n))
        per_count = rates.birth + col
        safe_sum = (SAFE_TOTAL - sum(rates.immigration)) // max(per_count, 1) - 1
    pmask = sum(1 << i for i in range(n) if state[i] > 0)
    zstep = 0 if any(v == 0 for v in x0.counts) else -1
    ctl = np.array([0, 0, 0, 0, pmask, int(state.sum()), zstep], dtype=np.int64)
    fctl = np.array([0.0, 0.0 if zstep == 0 else np.nan])
    jump, clock = streams(seed, replicate)
    cap = 1024 if record else 0
    rec_comp = np.empty(cap, dtype=np.int32)
    rec_kind = np.empty(cap, dtype=np.int8)
    rec_time = np.empty(cap, dtype=np.float64)
    steps_cap = INT64_MAX if max_steps is None else int(max_steps)
    time_cap = np.inf if max_time is None else float(max_time)

    if freeze and _is_frozen(nbr, x0.counts) and any(x0.counts):
        status = _kernel.FROZEN
    elif zstep == 0 and stop_first_zero:
        status = _kernel.FIRST_ZERO
    else:
        while True:
            jump.ensure(64)
            if use_clock:
                clock.ensure(64)
            ctl[_kernel.C_WPOS] = jump.pos
            ctl[_kernel.C_CPOS] = clock.pos if use_clock else 0
            status = _kernel.run(
                _kernel.URN if urn else _kernel.CHAIN,
                rates.birth,
                np.array(rates.immigration, dtype=np.int64),
                aint,
                np.array(nbr, dtype=np.int64),
                freeze,
                state,
                death,
                ctl,
                fctl,
                jump.buf,
                clock.buf if use_clock else np.empty(0, dtype=np.uint64),
                use_clock,
                rates.scale,
                steps_cap,
                time_cap,
                safe_sum,
                stop_first_zero,
                record,
                rec_comp,
                rec_kind,
                rec_time,
            )
            jump.pos = int(ctl[_kernel.C_WPOS])
            if use_clock:
                clock.pos = int(ctl[_kernel.C_CPOS])
            if status == _kernel.NEED_WORDS:
                jump.ensure(jump.buf.size - jump.pos + 64)
                if use_clock:
                    clock.ensure(clock.buf.size - clock.pos + 64)
                continue
            if status == _kernel.RECORD_FULL:
                grow = max(1024, rec_comp.size)
                rec_comp = np.concatenate([rec_comp, np.empty(grow, dtype=np.int32)])
                rec_kind = np.concatenate([rec_kind, np.empty(grow, dtype=np.int8)])
                rec_time = np.concatenate([rec_time, np.empty(grow, dtype=np.float64)])
                continue
            break
    if status == _kernel.OVERFLOW:
        raise OverflowError(f"rates would exceed 64-bit range after {int(ctl[_kernel.C_STEP])} steps")
    nrec = int(ctl[_kernel.C_REC])
    return {
        "state": PopulationState(tuple(state.tolist())),
        "reason": _STATUS[status],
        "steps": int(ctl[_kernel.C_STEP]),
        "zstep": None if ctl[_kernel.C_ZSTEP] < 0 else int(ctl[_kernel.C_ZSTEP]),
        "ztime": (None if ctl[_kernel.C_ZSTEP] < 0 or not use_clock else float(fctl[_kernel.F_ZTIME])),
        "time": float(fctl[_kernel.F_TIME]) if use_clock else None,
        "components": rec_comp[:nrec].copy() if record else None,
        "kinds": rec_kind[:nrec].copy() if record else None,
        "times": rec_time[:nrec].copy() if record and use_clock else None,
    }


def simulate(spec: ModelSpec, initial, max_steps=None, max_time=None, seed=0, replicate=0, record=True) -> Trajectory:
    """Run until the positive set freezes, everything dies, or the budget runs out.

    Freezing means the strictly positive components are pairwise
    non-interacting, so no death can ever happen again. With immigration
    there is no freezing and runs stop on budget only. Deterministic given
    ``(seed, replicate)``.
    """
    out = _run(spec, initial, seed, replicate, max_steps, max_time, record, False)
    return Trajectory(
        spec=spec,
        initial=as_state(initial, spec.n),
        components=out["components"],
        kinds=out["kinds"],
        times=out["times"],
        terminal_state=out["state"],
        stop_reason=out["reason"],
        steps=out["steps"],
        first_zero_step=out["zstep"],
        first_zero_time=out["ztime"],
        seed=seed,
        replicate=replicate,
        final_time=out["time"],
    )


def first_extinction(spec: ModelSpec, initial, cap, seed=0, replicate=0) -> ExtinctionRecord:
    """Step (and in LCP mode, time) at which some component first hits zero."""
    x0 = as_state(initial, spec.n)
    if not x0.positive:
        raise ValueError("first_extinction needs a strictly positive initial state")
    out = _run(spec, x0, seed, replicate, cap, None, False, True)
    reason = out["reason"]
    if reason is StopReason.FIRST_EXTINCTION:
        return ExtinctionRecord(out["zstep"], False, out["ztime"], None, out["steps"], reason)
    survivors = None
    if reason is StopReason.FROZEN:
        survivors = SurvivorSet.of(i for i, v in enumerate(out["state"]) if v > 0)
    return ExtinctionRecord(None, True, None, survivors, out["steps"], reason)


def run_replicate(spec: ModelSpec, initial, step_cap, seed, replicate) -> ExtinctionRecord:
    """Run to freeze (or the cap), recording the first extinction on the way.

    Overflow is reported in the record instead of raised, so one runaway
    replicate does not sink a batch.
    """
    try:
        out = _run(spec, initial, seed, replicate, step_cap, None, False, False)
    except OverflowError as exc:
        return ExtinctionRecord(None, True, None, None, 0, None, str(exc))
    survivors = None
    if out["reason"] is StopReason.FROZEN:
        survivors = SurvivorSet.of(i for i, v in enumerate(out["state"]) if v > 0)
    zstep = out["zstep"]
    return ExtinctionRecord(zstep, zstep is None, out["ztime"], survivors, out["steps"], out["reason"])


def reference_simulate(spec: ModelSpec, initial, max_steps, seed=0, replicate=0):
    """Pure-Python twin of :func:`simulate` built from the single-step functions.

    Slow; meant for cross-checking the compiled kernel on short runs.
    Returns ``(states, times, stop_reason)``.
    """
    check_model(spec)
    jump, clock = streams(seed, replicate)
    nbr = interaction_masks(spec.matrix)
    freeze = not spec.has_immigration
    x = as_state(initial, spec.n)
    states = [x]
    times = []
    t = 0.0
    if freeze and any(x.counts) and _is_frozen(nbr, x.counts):
        return states, times, StopReason.FROZEN
    for _ in range(max_steps):
        try:
            if spec.mode is Mode.URN:
                y = urn_step(x, spec, jump)
            elif spec.mode is Mode.LCP:
                dt, y = ctmc_step(x, spec, jump, clock)
                t += dt
                times.append(t)
            else:
                y = dtmc_step(x, spec, jump)
        except ExtinctError:
            return states, times, StopReason.FULL_EXTINCTION
        hit_zero = any(a > 0 and b == 0 for a, b in zip(x.counts, y.counts))
        x = y
        states.append(x)
        if hit_zero and freeze and _is_frozen(nbr, x.counts):
            return states, times, StopReason.FROZEN
    return states, times, StopReason.STEP_BUDGET


def sample_jumps(state, spec: ModelSpec, size: int, seed=0, replicate=0) -> np.ndarray:
    """Outcome indices of ``size`` independent jump-chain steps from one fixed state.

    Index ``k < n`` is a birth of component ``k``, ``k >= n`` a death of
    ``k - n``. Uses the same masked-rejection draw as :func:`dtmc_step`, so
    it matches ``size`` repeated calls of that function from the same state
    on a fresh stream.
    """
    if spec.mode is Mode.URN:
        raise ValueError("sample_jumps is for the jump chain; use urn_step for urns")
    x = as_state(state, spec.n)
    w = IntegerRates.of(spec).chain_weights(x)
    total = sum(w)
    if total == 0:
        raise ExtinctError("total rate is zero")
    if total >= 2**63:
        raise OverflowError("total weight exceeds 64 bits")
    mask = np.uint64((1 << (total - 1).bit_length()) - 1)
    stream = RandomStream(seed, replicate)
    picks = []
    need = size
    while need > 0:
        stream.ensure(2 * need + 64)
        words = stream.buf[stream.pos:]
        stream.pos = stream.buf.size
        r = (words & mask).astype(np.int64)
        r = r[r < total]
        picks.append(r[:need])
        need -= min(need, r.size)
    r = np.concatenate(picks)
    return np.searchsorted(np.cumsum(w), r, side="right")
