"""Small exact linear algebra over :class:`fractions.Fraction`.

Matrices are lists of rows. Nothing here is fast; the matrices we care
about are at most a few dozen rows.
"""
from fractions import Fraction


def as_fraction(value):
    """Convert ints, Fractions, decimal/fraction strings and floats exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def identity(n, scale=1):
    scale = as_fraction(scale)
    return [[scale if i == j else Fraction(0) for j in range(n)] for i in range(n)]


def transpose(m):
    return [list(col) for col in zip(*m)]


def matvec(m, x):
    return [sum((a * b for a, b in zip(row, x)), Fraction(0)) for row in m]


def vecmat(x, m):
    """Row vector times matrix, ``x^T m``."""
    n_cols = len(m[0]) if m else 0
    return [sum((x[i] * m[i][j] for i in range(len(m))), Fraction(0)) for j in range(n_cols)]


def add(a, b, sign=1):
    return [[x + sign * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def solve(m, b):
    """Solve ``m x = b`` exactly by Gauss-Jordan elimination.

    Raises
    ------
    ZeroDivisionError
        If ``m`` is singular.
    """
    n = len(m)
    aug = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(m, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [row[n] for row in aug]


def leading_minors(m):
    """Leading principal minors ``det(m[:k, :k])`` for k = 1..n.

    Fraction-free in spirit: plain elimination without pivoting, stopping
    (with zeros for the remaining minors) when a zero pivot appears.
    """
    n = len(m)
    work = [[Fraction(v) for v in row] for row in m]
    minors = []
    det = Fraction(1)
    for k in range(n):
        p = work[k][k]
        if p == 0:
            # a zero pivot means det of this leading block is zero; later
            # minors need pivoting, which we never need for our use
            minors.append(Fraction(0))
            minors.extend([None] * (n - k - 1))
            return minors
        det *= p
        minors.append(det)
        for r in range(k + 1, n):
            f = work[r][k] / p
            if f:
                work[r] = [v - f * w for v, w in zip(work[r], work[k])]
    return minors


def is_nonsingular_m_matrix(m):
    """True iff the Z-matrix ``m`` is a nonsingular M-matrix.

    For a Z-matrix (nonpositive off-diagonal) this holds exactly when every
    leading principal minor is positive.
    """
    return all(d is not None and d > 0 for d in leading_minors(m))
