"""Exact one-step drifts and the functionals built on them.

Every conditional expectation ``E[f(next) - f(state)]`` is computed the same
way: enumerate the at most ``2n`` outcomes of the embedded chain with exact
rational probabilities and sum. Closed-form expressions are provided next to
them so tests can compare the two paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _exact
from .model import Mode, ModelSpec, PopulationState, as_state
from .spectral import (
    PreconditionError,
    compute_u,
    gamma_constant,
    is_subcritical_exact,
    min_real_eigenpair,
    perron_root,
)

TAIL_GRID = 1024


def _counts(state, spec):
    return as_state(state, spec.n).counts


def _row_dot(spec, i, x):
    return sum((spec.matrix[i, j] * x[j] for j in range(spec.n)), Fraction(0))


def transition_rates(state, spec: ModelSpec):
    """``[(rate, delta_index, sign)]`` for the births then deaths of the jump chain.

    Outcomes with zero rate are kept so the list always has ``2n`` entries.
    """
    x = _counts(state, spec)
    imm = spec.immigration_rates()
    births = [(spec.alpha * x[i] + imm[i], i, 1) for i in range(spec.n)]
    deaths = [(_row_dot(spec, i, x) if x[i] > 0 else Fraction(0), i, -1) for i in range(spec.n)]
    return births + deaths


def total_rate(state, spec: ModelSpec) -> Fraction:
    """Sum of all transition rates (the CTMC holding rate)."""
    return sum((r for r, _, _ in transition_rates(state, spec)), Fraction(0))


def outcomes(state, spec: ModelSpec):
    """All next states with positive probability, as ``[(prob, next_state)]``.

    Works for the jump chain and, in urn mode, for the urn step.
    """
    x = _counts(state, spec)
    if spec.mode is Mode.URN:
        total = sum(x)
        if total == 0:
            raise ZeroDivisionError("the urn is empty")
        out = []
        for i in range(spec.n):
            if x[i] == 0:
                continue
            y = list(x)
            y[i] += int(spec.alpha)
            for j in range(spec.n):
                if j != i:
                    y[j] -= min(int(spec.matrix[j, i]), y[j])
            out.append((Fraction(x[i], total), tuple(y)))
        return out
    rates = transition_rates(x, spec)
    total = sum((r for r, _, _ in rates), Fraction(0))
    if total == 0:
        raise ZeroDivisionError("total rate is zero")
    out = []
    for r, i, s in rates:
        if r:
            y = list(x)
            y[i] += s
            out.append((r / total, tuple(y)))
    return out


def expected_change(state, spec: ModelSpec, f):
    """``E[f(next) - f(state)]`` by outcome enumeration."""
    x = _counts(state, spec)
    fx = f(x)
    return sum((p * (f(y) - fx) for p, y in outcomes(x, spec)), Fraction(0))


def _dot(v, x):
    return sum((vi * xi for vi, xi in zip(v, x)), Fraction(0))


# ------------------------------------------------------------------ first moments


def component_drift(state, spec: ModelSpec):
    """``E[delta zeta_i]`` for every component, exact."""
    x = _counts(state, spec)
    res = [Fraction(0)] * spec.n
    for p, y in outcomes(x, spec):
        for i in range(spec.n):
            res[i] += p * (y[i] - x[i])
    return tuple(res)


def component_drift_closed(state, spec: ModelSpec):
    """``((alpha I - A) zeta)_i / R``, valid on strictly positive states."""
    x = _counts(state, spec)
    r = total_rate(x, spec)
    return tuple((spec.alpha * x[i] - _row_dot(spec, i, x)) / r for i in range(spec.n))


def projected_drift(state, spec: ModelSpec, v, lam):
    """``(lhs, rhs)`` with lhs the enumerated ``E[delta (v . zeta)]`` and rhs ``(alpha - lam)(v . zeta)/R``.

    Exact when ``v`` and ``lam`` are rational; float or complex otherwise.
    """
    x = _counts(state, spec)
    lhs = expected_change(x, spec, lambda y: _dot(v, y))
    rhs = (spec.alpha - lam) * _dot(v, x) / total_rate(x, spec)
    return lhs, rhs


def R_drift_bound(state, spec: ModelSpec):
    """``(E[delta R], alpha)``; on positive states the first never exceeds the second."""
    x = _counts(state, spec)
    return expected_change(x, spec, lambda y: total_rate(y, spec)), spec.alpha


def T_functional(state, spec: ModelSpec, u=None) -> Fraction:
    """``alpha u . zeta``; requires ``lambda1 < alpha``."""
    if u is None:
        u = compute_u(spec.alpha, spec.matrix)
    return spec.alpha * _dot(u, _counts(state, spec))


def T_drift(state, spec: ModelSpec, u=None) -> Fraction:
    """Enumerated ``E[delta T]``; equals ``alpha`` exactly on positive states."""
    if u is None:
        u = compute_u(spec.alpha, spec.matrix)
    x = _counts(state, spec)
    if not all(x):
        raise PreconditionError("T drift identity holds on strictly positive states")
    return expected_change(x, spec, lambda y: T_functional(y, spec, u))


def V_drift_triangular(x: int, y: int, beta, alpha=1):
    """Drift of ``V = y/(x+y)`` for the two-type model where 1 kills 2.

    Returns ``(closed, enumerated)``; the closed form is
    ``-beta x^2 / ((x+y)(x+y-1)(x+y+beta x))``.
    """
    beta = _exact.as_fraction(beta)
    alpha = _exact.as_fraction(alpha)
    if alpha != 1:
        raise PreconditionError("the closed form assumes alpha = 1")
    if x <= 0 or y <= 0:
        raise PreconditionError("x and y must be positive")
    if x + y <= 1:
        raise PreconditionError("degenerate denominator")
    from .families import triangular

    spec = ModelSpec(alpha, triangular(beta))
    closed = -beta * x * x / ((x + y) * (x + y - 1) * (x + y + beta * x))
    enum = expected_change((x, y), spec, lambda s: Fraction(s[1], s[0] + s[1]))
    return closed, enum


# ------------------------------------------------------------------ second moments


def second_moment_drift(state, spec: ModelSpec, i: int, j: int):
    """``(brute, closed)`` for ``R E[delta(zeta_i zeta_j)]`` (0-based ``i, j``)."""
    x = _counts(state, spec)
    r = total_rate(x, spec)
    brute = r * expected_change(x, spec, lambda y: Fraction(y[i] * y[j]))
    a = spec.alpha
    ai = _row_dot(spec, i, x)
    aj = _row_dot(spec, j, x)
    if i != j:
        closed = 2 * a * x[i] * x[j] - x[i] * aj - x[j] * ai
    else:
        closed = 2 * a * x[i] ** 2 + a * x[i] + (-2 * x[i] + 1) * ai
    return brute, closed


def U_second_moment_check(state, spec: ModelSpec, v=None, lam=None):
    """``(lhs, rhs)`` with lhs ``= R E[delta |U|^2]`` and rhs ``= 2(alpha - Re lam_N)|U|^2``.

    ``U = v_N . zeta``. Floating point, since ``v_N`` is irrational in
    general; the contract is ``lhs >= rhs`` up to 1e-9 relative.
    """
    x = _counts(state, spec)
    if v is None or lam is None:
        lam1, _ = perron_root(spec.matrix)
        if lam1 <= 0:
            raise PreconditionError("needs lambda1 > 0 so that Re(lambda_N) < 0")
        lam, v = min_real_eigenpair(spec.matrix)
    v = np.asarray(v, dtype=complex)
    a = float(spec.alpha)

    def sq(y):
        u = complex(np.dot(v, np.asarray(y, dtype=float)))
        return abs(u) ** 2

    r = float(total_rate(x, spec))
    lhs = r * sum(float(p) * (sq(y) - sq(x)) for p, y in outcomes(x, spec))
    rhs = 2 * (a - complex(lam).real) * sq(x)
    return lhs, rhs


# ------------------------------------------------------------------ regime constants


def extinction_bound(spec: ModelSpec, initial) -> float:
    """Upper bound ``v1 . zeta(0) / ((lambda1 - alpha) rho)`` on the mean extinction step.

    ``rho = min_j v1_j / (alpha + sum_k a_kj)``; the bound does not depend on
    how ``v1`` is normalized. Requires ``lambda1 > alpha``.
    """
    x = _counts(initial, spec)
    if not all(x):
        raise PreconditionError("initial state must be strictly positive")
    lam1, v1 = perron_root(spec.matrix)
    alpha = float(spec.alpha)
    if is_subcritical_exact(spec.alpha, spec.matrix) or lam1 <= alpha:
        raise PreconditionError("extinction bound needs lambda1 > alpha")
    cols = [float(c) for c in spec.matrix.column_sums()]
    rho = min(v1[j] / (alpha + cols[j]) for j in range(spec.n))
    if rho <= 0:
        raise PreconditionError("rho is not positive; the Perron vector has a zero entry")
    return float(np.dot(v1, x)) / ((lam1 - alpha) * rho)


@dataclass(frozen=True)
class TailExponent:
    epsilon: Optional[Fraction]
    exponent: Optional[float]
    warning: Optional[str] = None


def tail_exponent_info(spec: ModelSpec) -> TailExponent:
    """Largest grid ``eps`` with ``alpha - Re(lam_N) > (alpha + 2 eps)(1 + eps/2)`` and its exponent.

    The exponent is ``eps / (4 + 2 eps) * alpha / (gamma + alpha)`` with
    ``gamma`` the largest column sum. Grid step ``1/1024``, ``eps`` in
    ``(0, 1]``. When no grid point works the result carries a warning.
    """
    if not is_subcritical_exact(spec.alpha, spec.matrix):
        raise PreconditionError("tail exponent needs lambda1 < alpha")
    alpha = float(spec.alpha)
    lam1, _ = perron_root(spec.matrix)
    if lam1 > 0:
        lamN, _ = min_real_eigenpair(spec.matrix)
        gap = alpha - lamN.real
    else:
        gap = alpha
    best = None
    for k in range(TAIL_GRID, 0, -1):
        eps = Fraction(k, TAIL_GRID)
        e = float(eps)
        if gap > (alpha + 2 * e) * (1 + e / 2):
            best = eps
            break
    if best is None:
        return TailExponent(None, None, "no grid epsilon satisfies the gap inequality")
    e = float(best)
    gamma = float(gamma_constant(spec.matrix))
    return TailExponent(best, e / (4 + 2 * e) * alpha / (gamma + alpha))


# ------------------------------------------------------------------ urn


def urn_fraction_drift(state, spec: ModelSpec, i: int = 0) -> Fraction:
    """Exact ``E[delta (Y_i / sum Y)]`` for one urn step."""
    if spec.mode is not Mode.URN:
        raise ValueError("urn_fraction_drift needs an urn-mode model")

    def frac(y):
        s = sum(y)
        return Fraction(y[i], s) if s else Fraction(0)

    return expected_change(state, spec, frac)


# ------------------------------------------------------------------ report


@dataclass(frozen=True)
class DriftReport:
    state: PopulationState
    R: Fraction
    component_drift: tuple
    S: float
    T: Optional[Fraction]
    U: Optional[complex]
    projected_drifts: dict
    V: Optional[Fraction]
    second_moments: tuple


def drift_report(state, spec: ModelSpec) -> DriftReport:
    """All diagnostics at one state. Functionals needing ``zeta > 0`` are None on the boundary."""
    s = as_state(state, spec.n)
    x = s.counts
    positive = all(x)
    lam1, v1 = perron_root(spec.matrix)
    t = None
    if positive and is_subcritical_exact(spec.alpha, spec.matrix):
        t = T_functional(x, spec)
    u_val = None
    proj = {1: projected_drift(x, spec, [float(c) for c in v1], lam1)[0]}
    if lam1 > 0:
        lamN, vN = min_real_eigenpair(spec.matrix)
        u_val = complex(np.dot(vN, np.asarray(x, dtype=float)))
        proj[spec.n] = projected_drift(x, spec, list(vN), lamN)[0]
    v = Fraction(x[1], x[0] + x[1]) if spec.n == 2 and sum(x) else None
    second = tuple(
        tuple(second_moment_drift(x, spec, i, j)[0] for j in range(spec.n)) for i in range(spec.n)
    )
    return DriftReport(
        state=s,
        R=total_rate(x, spec),
        component_drift=component_drift(x, spec),
        S=float(np.dot(v1, x)),
        T=t,
        U=u_val,
        projected_drifts=proj,
        V=v,
        second_moments=second,
    )
