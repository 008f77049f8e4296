"""Interaction matrices of standard graph families and their closed forms.

All families are undirected: ``a_ij = a_ji = beta`` for every edge ``i ~ j``.
"""
import math
from fractions import Fraction

from ._exact import as_fraction
from .model import InteractionMatrix


def _from_edges(n, edges, beta):
    beta = as_fraction(beta)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, j in edges:
        rows[i][j] = rows[j][i] = beta
    return InteractionMatrix(tuple(tuple(r) for r in rows))


def complete(n, beta=1):
    return _from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], beta)


def line(n, beta=1):
    """Path ``1 ~ 2 ~ ... ~ n``."""
    return _from_edges(n, [(i, i + 1) for i in range(n - 1)], beta)


def cycle(n, beta=1):
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return _from_edges(n, [(i, (i + 1) % n) for i in range(n)], beta)


def star(n, beta=1):
    """Vertex 1 is the centre, joined to vertices 2..n."""
    return _from_edges(n, [(0, k) for k in range(1, n)], beta)


def triangular(beta=1):
    """Two components where component 1 kills component 2 and nothing else."""
    beta = as_fraction(beta)
    return InteractionMatrix(((0, 0), (beta, 0)))


def shifted_fibonacci(k):
    """Fibonacci numbers indexed so that F(0)=1, F(1)=2, F(2)=3, F(3)=5.

    This is the indexing under which the limit-configuration counts of the
    line and cycle graphs come out as ``F(N) - 1`` and ``F(N-1) + F(N-3) - 1``;
    it equals the standard Fibonacci number with index ``k + 2``.
    """
    if k < -1:
        raise ValueError("index must be >= -1")
    a, b = 0, 1  # standard F(0), F(1)
    for _ in range(k + 2):
        a, b = b, a + b
    return a


def limit_count_closed_form(family, n):
    if family == "line":
        return shifted_fibonacci(n) - 1
    if family == "cycle":
        return shifted_fibonacci(n - 1) + shifted_fibonacci(n - 3) - 1
    if family == "star":
        return 2 ** (n - 1)
    if family == "complete":
        return n
    raise ValueError(f"unknown family {family!r}")


def perron_closed_form(family, n, beta=1.0):
    beta = float(beta)
    if family == "line":
        return 2 * beta * math.cos(math.pi / (n + 1))
    if family == "cycle":
        return 2 * beta
    if family == "star":
        return beta * math.sqrt(n - 1)
    if family == "complete":
        return (n - 1) * beta
    raise ValueError(f"unknown family {family!r}")


def min_real_closed_form(family, n, beta=1.0):
    beta = float(beta)
    if family == "line":
        return -2 * beta * math.cos(math.pi / (n + 1))
    if family == "cycle":
        return -2 * beta * math.cos(math.pi * (n % 2) / n)
    if family == "star":
        return -beta * math.sqrt(n - 1)
    if family == "complete":
        return -beta if n > 1 else 0.0
    raise ValueError(f"unknown family {family!r}")


BUILDERS = {"line": line, "cycle": cycle, "star": star, "complete": complete}
