import itertools
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincomp import families
from lincomp.graph import (
    EnumerationLimitError,
    build_graph,
    count_limit_sets,
    enumerate_limit_sets,
    is_admissible_limit_set,
    is_irreducible,
    is_non_interacting,
    restrict,
    scc_decompose,
    source_subgraphs,
)
from lincomp.model import InteractionMatrix, ModelSpec, SurvivorSet

from conftest import rational_matrices


def _nx(a):
    g = nx.DiGraph()
    g.add_nodes_from(range(a.n))
    g.add_edges_from(build_graph(a).edges)
    return g


def naive_limit_sets(a):
    """Unmemoized removal process that branches over every source SCC choice."""
    g = _nx(a)
    found = set()

    def go(alive, survivors):
        if not alive:
            found.add(frozenset(survivors))
            return
        sub = g.subgraph(alive)
        cond = nx.condensation(sub)
        for k in cond.nodes:
            if cond.in_degree(k):
                continue
            comp = cond.nodes[k]["members"]
            if len(comp) > 1:
                for v in comp:
                    go(alive - {v}, survivors)
            else:
                (v,) = comp
                killed = set(sub.successors(v))
                go(alive - {v} - killed, survivors | {v})

    go(frozenset(range(a.n)), frozenset())
    return {SurvivorSet.of(s) for s in found}


def independent_sets(a):
    n = a.n
    out = set()
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            if is_non_interacting(a, combo):
                out.add(SurvivorSet.of(combo))
    return out


def test_build_graph_single_edge():
    g = build_graph(families.triangular(Fraction(1, 2)))
    assert g.labelled_edges() == [(1, 2)]


def test_build_graph_zero_and_two_cycle():
    assert build_graph(InteractionMatrix.zeros(3)).edges == frozenset()
    assert build_graph([[0, 1], [1, 0]]).labelled_edges() == [(1, 2), (2, 1)]


def test_scc_examples():
    d = scc_decompose(build_graph(families.triangular(1)))
    assert d.components == (frozenset({0}), frozenset({1}))
    assert d.condensation == frozenset({(0, 1)})
    assert scc_decompose(build_graph([[0, 1], [1, 0]])).components == (frozenset({0, 1}),)
    three = [[0, 0, 1], [1, 0, 0], [0, 1, 0]]  # 1->2->3->1
    assert scc_decompose(build_graph(three)).components == (frozenset({0, 1, 2}),)


def test_source_subgraph_examples():
    assert source_subgraphs(scc_decompose(build_graph(families.triangular(1)))) == [{0}]
    assert source_subgraphs(scc_decompose(build_graph([[0, 1], [1, 0]]))) == [{0, 1}]
    a = [[0, 0, 0], [1, 0, 1], [0, 0, 0]]  # 1->2, 3->2
    assert sorted(map(sorted, source_subgraphs(scc_decompose(build_graph(a))))) == [[0], [2]]


@settings(max_examples=100, deadline=None)
@given(rational_matrices(max_n=7))
def test_scc_matches_networkx(a):
    d = scc_decompose(build_graph(a))
    g = _nx(a)
    assert set(d.components) == {frozenset(c) for c in nx.strongly_connected_components(g)}
    # condensation is acyclic and ordered sources first
    cond = nx.DiGraph(list(d.condensation))
    cond.add_nodes_from(range(len(d.components)))
    assert nx.is_directed_acyclic_graph(cond)
    assert all(k < l for k, l in d.condensation)
    assert source_subgraphs(d)


def test_restrict_to_source_component():
    n = 8
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i, j in itertools.permutations([5, 6, 7], 2):
        rows[i][j] = Fraction(i + 1, j + 1)
    # the source block attacks vertex 1 (edge 6 -> 1 means a_{1,6} > 0)
    rows[0][5] = Fraction(1)
    rows[1][2] = Fraction(2)
    spec = ModelSpec(1, rows)
    sub = restrict(spec, {5, 6, 7})
    assert sub.n == 3
    assert sub.matrix[0, 1] == rows[5][6] and sub.matrix[2, 1] == rows[7][6]
    assert sub.alpha == spec.alpha


def test_restrict_identity_and_rejection():
    spec = ModelSpec(1, families.triangular(1))
    assert restrict(spec, {0, 1}) == spec
    with pytest.raises(ValueError, match=r"\(1, 2\)"):
        restrict(spec, {1})


def test_enumeration_examples():
    assert [s.labels() for s in enumerate_limit_sets(families.triangular(1))] == [(1,)]
    assert [s.labels() for s in enumerate_limit_sets(families.complete(3))] == [(1,), (2,), (3,)]
    line3 = enumerate_limit_sets(families.line(3))
    assert {s.labels() for s in line3} == {(1,), (2,), (3,), (1, 3)}
    assert line3.count == 4


def test_count_examples():
    assert count_limit_sets(families.star(4)) == 8
    assert count_limit_sets(families.cycle(5)) == 10
    assert count_limit_sets(InteractionMatrix.zeros(1)) == 1


def test_admissibility_examples():
    assert is_admissible_limit_set(families.line(3), {0, 2})
    assert not is_admissible_limit_set(families.line(3), {0, 1})
    assert not is_admissible_limit_set(families.complete(3), {0, 1})


def test_size_limit():
    with pytest.raises(EnumerationLimitError):
        enumerate_limit_sets(InteractionMatrix.zeros(25))


def test_isolated_vertices_survive():
    cat = enumerate_limit_sets(InteractionMatrix.zeros(4))
    assert [s.labels() for s in cat] == [(1, 2, 3, 4)]


def test_output_sorted_by_mask():
    masks = [s.mask for s in enumerate_limit_sets(families.cycle(7))]
    assert masks == sorted(masks)


@settings(max_examples=120, deadline=None)
@given(rational_matrices(max_n=6))
def test_enumeration_matches_naive_oracle(a):
    assert set(enumerate_limit_sets(a)) == naive_limit_sets(a)


@settings(max_examples=80, deadline=None)
@given(rational_matrices(max_n=7))
def test_catalog_sets_are_non_interacting(a):
    for s in enumerate_limit_sets(a):
        assert len(s) > 0
        assert is_non_interacting(a, s.members)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.data())
def test_symmetric_pattern_gives_all_independent_sets(n, data):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    rows = [[0] * n for _ in range(n)]
    for i, j in chosen:
        rows[i][j] = rows[j][i] = 1
    a = InteractionMatrix.from_array(rows)
    g = nx.Graph(chosen)
    g.add_nodes_from(range(n))
    if nx.is_connected(g):
        assert set(enumerate_limit_sets(a)) == independent_sets(a)


@settings(max_examples=60, deadline=None)
@given(rational_matrices(max_n=6), st.data())
def test_relabelling_equivariance(a, data):
    perm = data.draw(st.permutations(range(a.n)))
    b = a.permuted(perm)  # new k is old perm[k]
    mapped = {SurvivorSet.of(perm.index(i) for i in s.members) for s in enumerate_limit_sets(a)}
    assert set(enumerate_limit_sets(b)) == mapped


@settings(max_examples=40, deadline=None)
@given(rational_matrices(max_n=6), st.fractions(min_value=Fraction(1, 10), max_value=10))
def test_scaling_invariance(a, c):
    b = a.scaled(c)
    assert build_graph(b) == build_graph(a)
    assert scc_decompose(build_graph(b)) == scc_decompose(build_graph(a))
    assert enumerate_limit_sets(b) == enumerate_limit_sets(a)


def test_irreducible():
    assert is_irreducible(families.cycle(4))
    assert not is_irreducible(families.triangular(1))


@pytest.mark.parametrize("n", range(1, 11))
def test_line_counts_closed_form(n):
    assert count_limit_sets(families.line(n)) == families.limit_count_closed_form("line", n)


@pytest.mark.parametrize("n", range(3, 11))
def test_cycle_counts_closed_form(n):
    assert count_limit_sets(families.cycle(n)) == families.limit_count_closed_form("cycle", n)


def test_shifted_fibonacci_convention():
    assert [families.shifted_fibonacci(k) for k in range(6)] == [1, 2, 3, 5, 8, 13]
    assert [count_limit_sets(families.line(n)) for n in range(1, 6)] == [1, 2, 4, 7, 12]
