"""Spectrum, Perron and minimal-real-part left eigenpairs, and regime classification."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _exact
from .graph import build_graph, is_irreducible, scc_decompose
from .model import InteractionMatrix, ModelSpec, check_model

log = logging.getLogger(__name__)

PERRON_TOL = 1e-10
SPECTRUM_TOL = 1e-9
MAX_SPECTRUM_SIZE = 64


class ConvergenceError(ArithmeticError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")


class PreconditionError(ValueError):
    pass


class Regime(str, Enum):
    SUBCRITICAL = "subcritical"  # lambda1 < alpha
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"  # lambda1 > alpha


@dataclass(frozen=True)
class SpectralSummary:
    lambda1: float
    v1: np.ndarray
    lambdaN: Optional[complex]
    vN: Optional[np.ndarray]
    spectrum: np.ndarray
    u: Optional[tuple]
    gamma: Fraction
    regime: Regime


def _matrix(a):
    a = InteractionMatrix.from_array(a)
    return a, a.to_numpy()


def _perron_residual(at, v, lam):
    return float(np.max(np.abs(at @ v - lam * v)))


def perron_root(a, max_iter=5000):
    """Perron root and nonnegative left eigenvector (entries sum to 1).

    Each strongly connected block is handled by power iteration on
    ``B^T + cI`` (``c`` bounds the block's spectral radius, so the iteration
    matrix is primitive and the Perron root is strictly dominant), followed
    by a few inverse-iteration steps to reach machine precision. The root
    of ``A`` is the largest block root. The left vector lives on the first
    block, in topological order, attaining it, plus every vertex upstream of
    that block; the upstream part solves a nonsingular M-matrix system and
    is therefore nonnegative.
    """
    a, m = _matrix(a)
    n = a.n
    if not m.any():
        return 0.0, np.full(n, 1.0 / n)
    at = m.T
    dec = scc_decompose(build_graph(a))
    roots = []
    vecs = []
    for comp in dec.components:
        idx = sorted(comp)
        lam, v = _block_perron(at[np.ix_(idx, idx)], max_iter)
        roots.append(lam)
        vecs.append(v)
    lam1 = max(roots)
    k = next(k for k, r in enumerate(roots) if r >= lam1 - 1e-12 * max(1.0, lam1))
    lam1 = roots[k]
    block = sorted(dec.components[k])
    out = build_graph(a).out_masks()
    upstream = _upstream(out, block, n)
    v = np.zeros(n)
    v[block] = vecs[k]
    if upstream:
        # (lam1 I - A^T) v = 0 restricted to the upstream rows
        rhs = at[np.ix_(upstream, block)] @ vecs[k]
        lhs = lam1 * np.eye(len(upstream)) - at[np.ix_(upstream, upstream)]
        v[upstream] = np.linalg.solve(lhs, rhs)
    v = _clean(v)
    res = _perron_residual(at, v, lam1)
    if res > PERRON_TOL * max(1.0, lam1):
        raise ConvergenceError("Perron iteration did not converge", res)
    return lam1, v


def _upstream(out, block, n):
    """Vertices outside ``block`` with a directed path into it."""
    target = set(block)
    found = set()
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i in target or i in found:
                continue
            if any((out[i] >> j) & 1 for j in target | found):
                found.add(i)
                changed = True
    return sorted(found)


def _block_perron(bt, max_iter):
    k = bt.shape[0]
    if k == 1:
        return 0.0, np.ones(1)
    c = min(bt.sum(axis=0).max(), bt.sum(axis=1).max())
    b = bt + c * np.eye(k)
    v = np.full(k, 1.0 / k)
    lam = 0.0
    for _ in range(max_iter):
        w = b @ v
        w /= w.sum()
        v = w
        lam = float((bt @ v).sum())
        if _perron_residual(bt, v, lam) <= 1e-3 * PERRON_TOL * max(1.0, lam):
            break
    return _inverse_polish(bt, v, lam)


def _inverse_polish(bt, v, lam, steps=4):
    k = bt.shape[0]
    best = (_perron_residual(bt, v, lam), v, lam)
    for _ in range(steps):
        shift = lam + 1e-8 * max(1.0, lam)
        try:
            w = np.linalg.solve(shift * np.eye(k) - bt, v)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(w)):
            break
        w = np.abs(w)
        w /= w.sum()
        lam_w = float((bt @ w).sum())
        res = _perron_residual(bt, w, lam_w)
        if res < best[0]:
            best = (res, w, lam_w)
        v, lam = w, lam_w
    return best[2], best[1]


def _clean(v):
    v = np.where(np.abs(v) < 1e-15, 0.0, v)
    v = np.clip(v, 0.0, None)
    return v / v.sum()


def full_spectrum(a) -> np.ndarray:
    """All n eigenvalues, sorted by decreasing real part with conjugates adjacent."""
    a, m = _matrix(a)
    if a.n > MAX_SPECTRUM_SIZE:
        raise ValueError(f"full_spectrum supports n <= {MAX_SPECTRUM_SIZE}")
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    ev = np.asarray(ev, dtype=complex)
    order = sorted(range(len(ev)), key=lambda k: (-ev[k].real, abs(ev[k].imag), -ev[k].imag))
    ev = ev[order]
    scale = max(1.0, float(np.abs(m).sum(axis=1).max()))
    for lam in ev:
        smin = np.linalg.svd(m - lam * np.eye(a.n), compute_uv=False)[-1]
        if smin > SPECTRUM_TOL * scale:
            raise ConvergenceError(f"eigenvalue {lam} failed the residual check", smin)
    return ev


def min_real_eigenpair(a):
    """Eigenvalue with minimal real part and its left eigenvector.

    Ties in the real part (within 1e-9) go to the largest imaginary part.
    The eigenvector is scaled so that its largest-modulus coordinate (first
    one on ties) equals 1.
    """
    a, m = _matrix(a)
    lam1, _ = perron_root(a)
    if lam1 <= 0:
        raise PreconditionError("min_real_eigenpair needs a positive Perron root")
    ev, vecs = np.linalg.eig(m.T)
    re_min = ev.real.min()
    ties = [k for k in range(len(ev)) if ev[k].real <= re_min + SPECTRUM_TOL * max(1.0, lam1)]
    k = max(ties, key=lambda t: (ev[t].imag, -t))
    lam = complex(ev[k])
    v = vecs[:, k].astype(complex)
    v = _refine_left(m, lam, v)
    mod = np.abs(v)
    pivot = int(np.flatnonzero(mod >= mod.max() * (1 - 1e-12))[0])
    v = v / v[pivot]
    res = float(np.max(np.abs(v @ m - lam * v)))
    if res > SPECTRUM_TOL * max(1.0, abs(lam)):
        raise ConvergenceError("left eigenvector residual too large", res)
    if abs(lam.imag) < 1e-14 * max(1.0, abs(lam)):
        lam = complex(lam.real, 0.0)
    if not np.any(np.abs(v.imag) > 1e-14):
        v = v.real.astype(complex)
    return lam, v


def _refine_left(m, lam, v, steps=3):
    """A couple of inverse-iteration steps to tighten a computed eigenvector."""
    n = m.shape[0]
    shift = lam + 1e-10 * max(1.0, abs(lam))
    for _ in range(steps):
        try:
            w = np.linalg.solve((m.T - shift * np.eye(n)), v)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(w)):
            break
        v = w / np.linalg.norm(w)
    return v


def is_subcritical_exact(alpha, a) -> bool:
    """Exact test of ``lambda1 < alpha``.

    ``alpha I - A`` is a Z-matrix, and it is a nonsingular M-matrix (all
    leading principal minors positive) exactly when ``alpha`` exceeds the
    spectral radius of ``A``.
    """
    a = InteractionMatrix.from_array(a)
    alpha = _exact.as_fraction(alpha)
    m = _exact.add(_exact.identity(a.n, alpha), a.rows(), sign=-1)
    return _exact.is_nonsingular_m_matrix(m)


def compute_u(alpha, a):
    """``u = (alpha I + A^T)(alpha I - A^T)^{-1} 1`` by an exact rational solve.

    Raises PreconditionError unless ``lambda1 < alpha``.
    """
    a = InteractionMatrix.from_array(a)
    alpha = _exact.as_fraction(alpha)
    if not is_subcritical_exact(alpha, a):
        raise PreconditionError("u requires lambda1 < alpha")
    n = a.n
    at = _exact.transpose(a.rows())
    lhs = _exact.add(_exact.identity(n, alpha), at, sign=-1)
    x = _exact.solve(lhs, [Fraction(1)] * n)
    return tuple(_exact.matvec(_exact.add(_exact.identity(n, alpha), at), x))


def gamma_constant(a) -> Fraction:
    """Largest column sum of A."""
    a = InteractionMatrix.from_array(a)
    return max(a.column_sums())


def exact_perron_root(a) -> Optional[Fraction]:
    """The Perron root when it is known exactly, else None.

    Recognized: every row sum equal (complete graphs, cycles, any regular
    pattern with equal weights), where the common row sum is the Perron root.
    """
    a = InteractionMatrix.from_array(a)
    sums = set(a.row_sums())
    if len(sums) == 1:
        return sums.pop()
    return None


def classify_regime(alpha, a) -> Regime:
    a = InteractionMatrix.from_array(a)
    alpha = _exact.as_fraction(alpha)
    exact = exact_perron_root(a)
    if exact is not None:
        if exact < alpha:
            return Regime.SUBCRITICAL
        if exact > alpha:
            return Regime.SUPERCRITICAL
        return Regime.CRITICAL
    lam1, _ = perron_root(a)
    tol = 1e-9 * max(1.0, float(alpha))
    if lam1 < float(alpha) - tol:
        return Regime.SUBCRITICAL
    if lam1 > float(alpha) + tol:
        return Regime.SUPERCRITICAL
    return Regime.CRITICAL


def spectral_summary(spec: ModelSpec) -> SpectralSummary:
    check_model(spec)
    a = spec.matrix
    lam1, v1 = perron_root(a)
    if is_irreducible(a) and a.n > 1 and not np.all(v1 > 0):
        raise ConvergenceError("Perron vector of an irreducible matrix is not strictly positive")
    lamN = vN = None
    if lam1 > 0:
        lamN, vN = min_real_eigenpair(a)
    regime = classify_regime(spec.alpha, a)
    u = compute_u(spec.alpha, a) if spec.alpha > 0 and is_subcritical_exact(spec.alpha, a) else None
    return SpectralSummary(lam1, v1, lamN, vN, full_spectrum(a), u, gamma_constant(a), regime)
