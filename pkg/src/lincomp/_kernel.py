"""Compiled inner loop for trajectory sampling.

Consumes the same raw 64-bit words as :mod:`lincomp.rng` and makes the same
choices as the pure-Python steppers in :mod:`lincomp.dynamics`, so the two
paths produce identical trajectories. All rates are integers (rational
rates multiplied by a common denominator), so outcome selection is exact.
"""
import math

import numpy as np
from numba import njit

# status codes
NEED_WORDS = 0
FROZEN = 1
EXTINCT = 2
STEP_BUDGET = 3
TIME_BUDGET = 4
RECORD_FULL = 5
OVERFLOW = 6
FIRST_ZERO = 7

CHAIN = 0
URN = 1

# slots of the integer control vector
C_WPOS, C_CPOS, C_STEP, C_REC, C_PMASK, C_SUM, C_ZSTEP = range(7)
# slots of the float control vector
F_TIME, F_ZTIME = range(2)

MAX_COMPONENTS = 62


@njit(cache=True)
def _mask(total):
    m = np.uint64(0)
    t = total - 1
    while t > 0:
        m = (m << np.uint64(1)) | np.uint64(1)
        t >>= 1
    return m


@njit(cache=True)
def _frozen(nbr, pmask, n):
    for i in range(n):
        if (pmask >> i) & 1 and (nbr[i] & pmask) != 0:
            return False
    return True


@njit(cache=True)
def run(mode, alpha_w, imm_w, aint, nbr, freeze, state, death, ctl, fctl,
        words, cwords, use_clock, scale, max_steps, max_time, safe_sum,
        stop_first_zero, record, rec_comp, rec_kind, rec_time):
    n = state.shape[0]
    wb = np.zeros(n, dtype=np.int64)
    wd = np.zeros(n, dtype=np.int64)
    nwords = words.shape[0]
    while True:
        if ctl[C_STEP] >= max_steps:
            return STEP_BUDGET
        if ctl[C_SUM] > safe_sum:
            return OVERFLOW
        if record and ctl[C_REC] >= rec_comp.shape[0]:
            return RECORD_FULL
        total = 0
        if mode == CHAIN:
            for i in range(n):
                wb[i] = alpha_w * state[i] + imm_w[i]
                wd[i] = death[i] if state[i] > 0 else 0
                total += wb[i] + wd[i]
        else:
            for i in range(n):
                total += state[i]
        if total == 0:
            return EXTINCT
        if use_clock and ctl[C_CPOS] >= cwords.shape[0]:
            return NEED_WORDS
        mask = _mask(total)
        p = ctl[C_WPOS]
        while True:
            if p >= nwords:
                return NEED_WORDS
            r = np.int64(words[p] & mask)
            p += 1
            if r < total:
                break
        ctl[C_WPOS] = p
        if use_clock:
            w = cwords[ctl[C_CPOS]]
            ctl[C_CPOS] += 1
            u = (float(w >> np.uint64(11)) + 0.5) * 1.1102230246251565e-16
            dt = -math.log(u) / (float(total) / float(scale))
            if fctl[F_TIME] + dt > max_time:
                fctl[F_TIME] = max_time
                return TIME_BUDGET
            fctl[F_TIME] += dt

        hit_zero = False
        if mode == CHAIN:
            comp = -1
            kind = 0
            for i in range(n):
                if r < wb[i]:
                    comp = i
                    kind = 1
                    break
                r -= wb[i]
            if comp < 0:
                for i in range(n):
                    if r < wd[i]:
                        comp = i
                        kind = -1
                        break
                    r -= wd[i]
            state[comp] += kind
            ctl[C_SUM] += kind
            for k in range(n):
                death[k] += aint[k, comp] * kind
            if kind < 0 and state[comp] == 0:
                ctl[C_PMASK] &= ~(np.int64(1) << comp)
                hit_zero = True
            elif kind > 0 and state[comp] == 1:
                ctl[C_PMASK] |= np.int64(1) << comp
        else:
            comp = -1
            for i in range(n):
                if r < state[i]:
                    comp = i
                    break
                r -= state[i]
            kind = 0
            state[comp] += alpha_w
            ctl[C_SUM] += alpha_w
            for j in range(n):
                if j != comp and state[j] > 0:
                    rem = aint[j, comp]
                    if rem > state[j]:
                        rem = state[j]
                    state[j] -= rem
                    ctl[C_SUM] -= rem
                    if state[j] == 0:
                        ctl[C_PMASK] &= ~(np.int64(1) << j)
                        hit_zero = True

        ctl[C_STEP] += 1
        if record:
            k = ctl[C_REC]
            rec_comp[k] = comp
            rec_kind[k] = kind
            rec_time[k] = fctl[F_TIME]
            ctl[C_REC] = k + 1
        if hit_zero:
            if ctl[C_ZSTEP] < 0:
                ctl[C_ZSTEP] = ctl[C_STEP]
                fctl[F_ZTIME] = fctl[F_TIME]
                if stop_first_zero:
                    return FIRST_ZERO
            if freeze and _frozen(nbr, ctl[C_PMASK], n):
                return FROZEN
