"""Immutable graph values and the structural predicates the toolkit builds on.

Vertices are dense integer ids 0..p-1 internally; user-facing names appear
only in I/O. Undirected pairs are stored canonically with the smaller index
first. All graph values are immutable; edits produce new values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import GraphFormatError, InconsistencyError

Arc = tuple[int, int]


def _bits(mask: int):
    """Iterate set bit positions of ``mask`` in ascending order."""
    while mask:
        lsb = mask & -mask
        yield lsb.bit_length() - 1
        mask ^= lsb


@dataclass(frozen=True)
class PartiallyDirectedGraph:
    """A graph with disjoint directed and undirected edge sets.

    Covers essential graphs, chain graphs, rooted essential graphs and
    hypothesis graphs. Invariants (checked at construction): no self-loops,
    a vertex pair appears in at most one edge set and at most once per set,
    undirected pairs stored with the smaller index first.
    """

    vertex_names: tuple[str, ...]
    directed: frozenset[Arc] = frozenset()
    undirected: frozenset[Arc] = frozenset()

    def __post_init__(self):
        names = self.vertex_names
        if len(set(names)) != len(names):
            raise GraphFormatError("vertex names must be distinct")
        p = len(names)
        seen: set[Arc] = set()
        for a, b in self.directed:
            if not (0 <= a < p and 0 <= b < p):
                raise GraphFormatError(f"edge ({a},{b}) out of range")
            if a == b:
                raise GraphFormatError(f"self-loop at vertex {a}")
            key = (a, b) if a < b else (b, a)
            if key in seen:
                raise GraphFormatError(f"duplicate or conflicting edge on pair {key}")
            seen.add(key)
        for a, b in self.undirected:
            if not (0 <= a < p and 0 <= b < p):
                raise GraphFormatError(f"edge ({a},{b}) out of range")
            if a == b:
                raise GraphFormatError(f"self-loop at vertex {a}")
            if a > b:
                raise GraphFormatError(f"undirected pair ({a},{b}) not in canonical order")
            if (a, b) in seen:
                raise GraphFormatError(f"duplicate or conflicting edge on pair ({a},{b})")
            seen.add((a, b))

    @classmethod
    def build(cls, vertices: int | Sequence[str],
              directed: Iterable[Arc] = (),
              undirected: Iterable[Arc] = ()) -> "PartiallyDirectedGraph":
        """Construct from any iterables, canonicalizing undirected pairs."""
        names = _names_of(vertices)
        und = frozenset((a, b) if a < b else (b, a) for a, b in undirected)
        return cls(names, frozenset(tuple(e) for e in directed), und)

    @property
    def p(self) -> int:
        return len(self.vertex_names)

    @property
    def edge_count(self) -> int:
        return len(self.directed) + len(self.undirected)

    @cached_property
    def _masks(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        """(undirected, parent, child) neighbor bitmasks per vertex."""
        p = self.p
        und = [0] * p
        par = [0] * p
        ch = [0] * p
        for a, b in self.undirected:
            und[a] |= 1 << b
            und[b] |= 1 << a
        for a, b in self.directed:
            ch[a] |= 1 << b
            par[b] |= 1 << a
        return tuple(und), tuple(par), tuple(ch)

    @cached_property
    def adjacency_masks(self) -> tuple[int, ...]:
        und, par, ch = self._masks
        return tuple(u | q | c for u, q, c in zip(und, par, ch))

    @property
    def undirected_masks(self) -> tuple[int, ...]:
        return self._masks[0]

    @property
    def parent_masks(self) -> tuple[int, ...]:
        return self._masks[1]

    @property
    def child_masks(self) -> tuple[int, ...]:
        return self._masks[2]

    def has_edge(self, a: int, b: int) -> bool:
        return bool((self.adjacency_masks[a] >> b) & 1)

    def is_fully_directed(self) -> bool:
        return not self.undirected

    def is_fully_undirected(self) -> bool:
        return not self.directed

    def name_of(self, v: int) -> str:
        return self.vertex_names[v]

    def index_of(self, name: str) -> int:
        try:
            return self._name_index[name]
        except KeyError:
            raise GraphFormatError(f"unknown vertex name {name!r}") from None

    @cached_property
    def _name_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.vertex_names)}

    def with_arcs(self, arcs: Iterable[Arc]) -> "PartiallyDirectedGraph":
        """Orient the given undirected pairs, returning a new graph.

        Raises InconsistencyError if an arc conflicts with an existing
        directed edge; arcs already directed the same way are no-ops.
        """
        directed = set(self.directed)
        und = set(self.undirected)
        for a, b in arcs:
            key = (a, b) if a < b else (b, a)
            if key in und:
                und.remove(key)
                directed.add((a, b))
            elif (a, b) in directed:
                continue
            elif (b, a) in directed:
                raise InconsistencyError(
                    f"arc {self.name_of(a)}->{self.name_of(b)} conflicts with existing orientation")
            else:
                raise GraphFormatError(
                    f"pair ({self.name_of(a)},{self.name_of(b)}) is not an edge")
        return PartiallyDirectedGraph(self.vertex_names, frozenset(directed), frozenset(und))


@dataclass(frozen=True)
class Dag(PartiallyDirectedGraph):
    """A fully directed acyclic graph."""

    def __post_init__(self):
        super().__post_init__()
        if self.undirected:
            raise GraphFormatError("a DAG cannot contain undirected edges")
        if self.topological_order is None:
            raise GraphFormatError("directed cycles present; not a DAG")

    @classmethod
    def from_arcs(cls, vertices: int | Sequence[str], arcs: Iterable[Arc]) -> "Dag":
        return cls(_names_of(vertices), frozenset(tuple(e) for e in arcs), frozenset())

    @cached_property
    def topological_order(self) -> tuple[int, ...] | None:
        order = _topological_order(self.p, self.parent_masks, self.child_masks)
        return tuple(order) if order is not None else None


@dataclass(frozen=True)
class ChainComponent:
    """One chain component, with a mapping back to the parent graph.

    ``vertices[i]`` is the parent-graph id of local vertex ``i`` of
    ``subgraph``. Singleton components are flagged trivial.
    """

    vertices: tuple[int, ...]
    subgraph: PartiallyDirectedGraph
    trivial: bool = field(default=False)

    def to_global(self, local: int) -> int:
        return self.vertices[local]


def _names_of(vertices: int | Sequence[str]) -> tuple[str, ...]:
    if isinstance(vertices, int):
        return tuple(f"X{i + 1}" for i in range(vertices))
    return tuple(vertices)


def _topological_order(p: int, par: Sequence[int], ch: Sequence[int]) -> list[int] | None:
    indeg = [bin(par[v]).count("1") for v in range(p)]
    stack = [v for v in range(p) if indeg[v] == 0]
    order: list[int] = []
    while stack:
        v = stack.pop()
        order.append(v)
        for w in _bits(ch[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return order if len(order) == p else None


def skeleton(g: PartiallyDirectedGraph) -> PartiallyDirectedGraph:
    """Same adjacency, all edges undirected."""
    und = set(g.undirected)
    und.update((a, b) if a < b else (b, a) for a, b in g.directed)
    return PartiallyDirectedGraph(g.vertex_names, frozenset(), frozenset(und))


def v_structures(g: PartiallyDirectedGraph) -> set[tuple[int, int, int]]:
    """All triples (a, c, b) with a->c<-b and a, b nonadjacent, a < b."""
    adj = g.adjacency_masks
    par = g.parent_masks
    out: set[tuple[int, int, int]] = set()
    for c in range(g.p):
        parents = list(_bits(par[c]))
        for i, a in enumerate(parents):
            for b in parents[i + 1:]:
                if not (adj[a] >> b) & 1:
                    out.add((a, c, b))
    return out


def is_markov_equivalent(a: Dag, b: Dag) -> bool:
    """True iff the DAGs have the same skeleton and v-structures."""
    if a.p != b.p:
        raise GraphFormatError("vertex-count mismatch")
    if skeleton(a).undirected != skeleton(b).undirected:
        return False
    return v_structures(a) == v_structures(b)


def chain_components(g: PartiallyDirectedGraph) -> list[ChainComponent]:
    """Connected components left after deleting all directed edges.

    Components are vertex-induced on the undirected part and returned in
    ascending order of their smallest vertex id.
    """
    und = g.undirected_masks
    seen = 0
    comps: list[ChainComponent] = []
    for start in range(g.p):
        if (seen >> start) & 1:
            continue
        comp = 1 << start
        frontier = [start]
        while frontier:
            v = frontier.pop()
            for w in _bits(und[v] & ~comp):
                comp |= 1 << w
                frontier.append(w)
        seen |= comp
        verts = tuple(_bits(comp))
        local = {v: i for i, v in enumerate(verts)}
        edges = frozenset((local[a], local[b]) for a, b in g.undirected
                          if a in local and b in local)
        sub = PartiallyDirectedGraph(tuple(g.vertex_names[v] for v in verts),
                                     frozenset(), edges)
        comps.append(ChainComponent(verts, sub, trivial=len(verts) == 1))
    return comps


def is_chordal(g: PartiallyDirectedGraph) -> bool:
    """Perfect-elimination-ordering test via maximum-cardinality search.

    Requires a fully undirected input.
    """
    if g.directed:
        raise GraphFormatError("chordality test expects an undirected graph")
    adj = g.adjacency_masks
    p = g.p
    if p == 0:
        return True
    weight = [0] * p
    numbered = 0
    order: list[int] = []
    for _ in range(p):
        best = -1
        best_w = -1
        for v in range(p):
            if not (numbered >> v) & 1 and weight[v] > best_w:
                best, best_w = v, weight[v]
        order.append(best)
        numbered |= 1 << best
        for w in _bits(adj[best] & ~numbered):
            weight[w] += 1
    # Reversed MCS order is a PEO iff the graph is chordal: for each vertex,
    # its earlier-visited neighbors minus the latest one must all be adjacent
    # to that latest one.
    pos = [0] * p
    for i, v in enumerate(order):
        pos[v] = i
    earlier = 0
    for v in order:
        back = adj[v] & earlier
        if back:
            m = max(_bits(back), key=lambda u: pos[u])
            rest = back & ~(1 << m)
            if rest & ~adj[m]:
                return False
        earlier |= 1 << v
    return True


def descendants(d: Dag, v: int) -> set[int]:
    """Vertices reachable from ``v`` by directed paths, including ``v``."""
    if not 0 <= v < d.p:
        raise GraphFormatError(f"vertex {v} out of range")
    ch = d.child_masks
    seen = 1 << v
    frontier = [v]
    while frontier:
        u = frontier.pop()
        for w in _bits(ch[u] & ~seen):
            seen |= 1 << w
            frontier.append(w)
    return set(_bits(seen))


def validate_chain_graph(g: PartiallyDirectedGraph) -> bool:
    """No directed edge inside an undirected component and an acyclic quotient.

    This is the partially-directed-cycle screen for chain graphs; together
    with per-component chordality it is the (partial) essential-graph
    validator used across the toolkit.
    """
    comps = chain_components(g)
    comp_of = [0] * g.p
    for idx, c in enumerate(comps):
        for v in c.vertices:
            comp_of[v] = idx
    n = len(comps)
    qpar = [0] * n
    qch = [0] * n
    for a, b in g.directed:
        ca, cb = comp_of[a], comp_of[b]
        if ca == cb:
            return False
        qch[ca] |= 1 << cb
        qpar[cb] |= 1 << ca
    return _topological_order(n, qpar, qch) is not None
