"""Interaction graph, strongly connected components and survivor-set enumeration.

The graph has an edge ``i -> j`` exactly when ``a_ji > 0`` (``i`` harms ``j``).
Vertex sets are handled as int bitmasks internally; bit ``i`` is component ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .model import InteractionMatrix, ModelSpec, SurvivorSet, check_model

MAX_ENUMERATION_SIZE = 24


class EnumerationLimitError(ValueError):
    pass


@dataclass(frozen=True)
class GraphView:
    n: int
    edges: frozenset  # of (i, j) pairs, 0-based

    def out_masks(self):
        out = [0] * self.n
        for i, j in self.edges:
            out[i] |= 1 << j
        return out

    def in_masks(self):
        inn = [0] * self.n
        for i, j in self.edges:
            inn[j] |= 1 << i
        return inn

    def labelled_edges(self):
        return sorted((i + 1, j + 1) for i, j in self.edges)


@dataclass(frozen=True)
class SccDecomposition:
    n: int
    components: tuple  # of frozensets, in topological order of the condensation
    condensation: frozenset  # of (k, l) index pairs into ``components``

    def component_of(self, v):
        for k, comp in enumerate(self.components):
            if v in comp:
                return k
        raise KeyError(v)


@dataclass(frozen=True)
class LimitSetCatalog:
    sets: tuple  # of SurvivorSet, ascending by bitmask

    @property
    def count(self) -> int:
        return len(self.sets)

    def __contains__(self, item):
        if not isinstance(item, SurvivorSet):
            item = SurvivorSet.of(item)
        return item in self.sets

    def __iter__(self):
        return iter(self.sets)

    def __len__(self):
        return len(self.sets)


def build_graph(a) -> GraphView:
    a = InteractionMatrix.from_array(a)
    n = a.n
    edges = frozenset((i, j) for i in range(n) for j in range(n) if i != j and a[j, i] > 0)
    return GraphView(n, edges)


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _scc_masks(out, alive):
    """Tarjan's algorithm on the subgraph induced by ``alive``.

    Returns SCC bitmasks in reverse topological order (sinks first), which is
    the order Tarjan emits them. Iterative to avoid recursion limits.
    """
    index = {}
    low = {}
    on_stack = 0
    stack = []
    result = []
    counter = 0
    for root in _bits(alive):
        if root in index:
            continue
        work = [(root, _bits(out[root] & alive))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack |= 1 << root
        while work:
            v, successors = work[-1]
            advanced = False
            for w in successors:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack |= 1 << w
                    work.append((w, _bits(out[w] & alive)))
                    advanced = True
                    break
                if on_stack >> w & 1:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = 0
                while True:
                    w = stack.pop()
                    on_stack &= ~(1 << w)
                    comp |= 1 << w
                    if w == v:
                        break
                result.append(comp)
    return result


def scc_decompose(g: GraphView) -> SccDecomposition:
    out = g.out_masks()
    masks = _scc_masks(out, (1 << g.n) - 1)[::-1]  # sources first
    where = {}
    for k, m in enumerate(masks):
        for v in _bits(m):
            where[v] = k
    cond = frozenset((where[i], where[j]) for i, j in g.edges if where[i] != where[j])
    comps = tuple(frozenset(_bits(m)) for m in masks)
    return SccDecomposition(g.n, comps, cond)


def source_subgraphs(d: SccDecomposition) -> list:
    """Every SCC with no incoming condensation edge, as a set of 0-based vertices."""
    has_incoming = {l for _, l in d.condensation}
    return [set(c) for k, c in enumerate(d.components) if k not in has_incoming]


def is_source_set(g: GraphView, vertices) -> bool:
    """True if no edge enters ``vertices`` from outside."""
    vs = set(vertices)
    return bool(vs) and not any(j in vs and i not in vs for i, j in g.edges)


def restrict(spec: ModelSpec, vertices) -> ModelSpec:
    """The model seen on a source subgraph: same alpha, interaction submatrix.

    Raises ValueError if an edge enters ``vertices`` from outside, since the
    restricted process would then not be a competition process on its own.
    """
    vertices = sorted(set(vertices))
    if not vertices or min(vertices) < 0 or max(vertices) >= spec.n:
        raise ValueError(f"vertex set {vertices} out of range")
    g = build_graph(spec.matrix)
    if not is_source_set(g, vertices):
        entering = sorted((i + 1, j + 1) for i, j in g.edges if j in vertices and i not in vertices)
        raise ValueError(f"not a source subgraph: incoming edges {entering}")
    imm = None if spec.immigration is None else tuple(spec.immigration[v] for v in vertices)
    init = None if spec.initial is None else tuple(spec.initial[v] for v in vertices)
    return ModelSpec(spec.alpha, spec.matrix.submatrix(vertices), imm, spec.mode, init)


def _source_scc(out, alive):
    """One strongly connected source subgraph of the induced graph (a bitmask).

    Tarjan emits SCCs sinks-first, so the last one emitted has no incoming
    edges from the rest of ``alive``.
    """
    return _scc_masks(out, alive)[-1]


def _weak_components(und, alive):
    pieces = []
    left = alive
    while left:
        seed = left & -left
        comp = seed
        frontier = seed
        while frontier:
            nxt = 0
            for v in _bits(frontier):
                nxt |= und[v]
            frontier = nxt & left & ~comp
            comp |= frontier
        pieces.append(comp)
        left &= ~comp
    return pieces


def _enumerate_masks(a: InteractionMatrix):
    g = build_graph(a)
    n = g.n
    out = g.out_masks()
    inn = g.in_masks()
    und = [o | i for o, i in zip(out, inn)]

    def survivors(alive):
        # only connected pieces are memoized; products of pieces are large
        # and cheap to rebuild
        acc = {0}
        for piece in _weak_components(und, alive):
            acc = {s | t for s in acc for t in connected(piece)}
        return acc

    @lru_cache(maxsize=None)
    def connected(alive):
        src = _source_scc(out, alive)
        if src & (src - 1):
            # some vertex of the multi-vertex source SCC dies first;
            # any of them may, so branch over all
            acc = set()
            for v in _bits(src):
                acc |= survivors(alive & ~(1 << v))
            return frozenset(acc)
        # a single source vertex has no death rate and survives;
        # everything it attacks dies out
        v = src.bit_length() - 1
        killed = out[v] & alive
        return frozenset(s | src for s in survivors(alive & ~src & ~killed))

    try:
        return survivors((1 << n) - 1)
    finally:
        connected.cache_clear()


def enumerate_limit_sets(a) -> LimitSetCatalog:
    """All survivor configurations reachable by the recursive removal procedure.

    Repeatedly take a strongly connected source subgraph. If it has two or
    more vertices, branch over which of them goes extinct. If it is a single
    vertex, that vertex survives and all vertices it attacks are removed.
    Memoized on the bitmask of remaining vertices.
    """
    a = InteractionMatrix.from_array(a)
    if a.n > MAX_ENUMERATION_SIZE:
        raise EnumerationLimitError(f"enumeration supports n <= {MAX_ENUMERATION_SIZE}, got {a.n}")
    masks = sorted(_enumerate_masks(a))
    return LimitSetCatalog(tuple(SurvivorSet(m) for m in masks))


def count_limit_sets(a) -> int:
    return enumerate_limit_sets(a).count


def is_admissible_limit_set(a, survivors) -> bool:
    if not isinstance(survivors, SurvivorSet):
        survivors = SurvivorSet.of(survivors)
    return survivors in enumerate_limit_sets(a)


def interaction_masks(a) -> list:
    """Per-vertex bitmask of vertices it interacts with in either direction."""
    a = InteractionMatrix.from_array(a)
    n = a.n
    masks = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and (a[i, j] > 0 or a[j, i] > 0):
                masks[i] |= 1 << j
    return masks


def is_non_interacting(a, members) -> bool:
    """True if ``a_ij = a_ji = 0`` for every pair in ``members``."""
    a = InteractionMatrix.from_array(a)
    members = list(members)
    return all(a[i, j] == 0 for i in members for j in members)


def is_irreducible(a) -> bool:
    a = InteractionMatrix.from_array(a)
    return len(scc_decompose(build_graph(a)).components) == 1


def model_limit_sets(spec: ModelSpec) -> LimitSetCatalog:
    check_model(spec)
    return enumerate_limit_sets(spec.matrix)
