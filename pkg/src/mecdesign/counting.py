"""Exact counting of equivalence-class members, with optional prior knowledge.

The class size of an essential graph factorizes over chain components, and
each component's size is the sum over its vertices of the size of the
corresponding rooted essential graph; the recursion bottoms out at fully
directed graphs. Counts are arbitrary-precision integers throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import (CapExceededError, GraphFormatError,
                     InvalidEssentialGraphError)
from .graphs import (Arc, Dag, PartiallyDirectedGraph, _bits, chain_components,
                     is_chordal, validate_chain_graph, v_structures)
from .orientation import _close_masks


def validate_essential_input(g: PartiallyDirectedGraph) -> None:
    """Screen an input for essential-graph shape.

    Checks the chain-graph condition and chordality of every nontrivial
    chain component. This is a documented partial validator: it does not
    certify that every directed edge is strongly protected.
    """
    if not validate_chain_graph(g):
        raise InvalidEssentialGraphError("directed or partially directed cycle present")
    for comp in chain_components(g):
        if not comp.trivial and not is_chordal(comp.subgraph):
            raise InvalidEssentialGraphError(
                f"chain component containing {comp.subgraph.vertex_names[0]} is not chordal")


def _cross_dist(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    """Product of two config distributions over disjoint bit positions."""
    if a == {0: 1}:
        return dict(b)
    if b == {0: 1}:
        return dict(a)
    out: dict[int, int] = {}
    for b1, c1 in a.items():
        for b2, c2 in b.items():
            key = b1 | b2
            out[key] = out.get(key, 0) + c1 * c2
    return out


class CountingContext:
    """Memoized counting machinery bound to one essential graph.

    Component subsets are vertex bitmasks over the parent graph; their
    induced undirected structure never changes across the recursion, so a
    subset identifies a subproblem. Memo keys relabel each subset's
    vertices by sorted id, letting structurally identical subsets share
    entries. A context is cheap to create; sharing one across many calls
    amortizes the counting recursion.
    """

    def __init__(self, essential: PartiallyDirectedGraph, *, validate: bool = True):
        if validate:
            validate_essential_input(essential)
        self.graph = essential
        self._und = essential.undirected_masks
        self._size_memo: dict[tuple, int] = {}
        self._size_h_memo: dict[tuple, int] = {}
        self._rooted_memo: dict[tuple[int, int], tuple[tuple[Arc, ...], tuple[int, ...]]] = {}
        self._canon_cache: dict[int, tuple] = {}
        self._dist_memo: dict[tuple, dict[int, int]] = {}
        self.top_components: tuple[int, ...] = tuple(
            mask for mask in self._undirected_components((1 << essential.p) - 1)
            if mask & (mask - 1))

    def _undirected_components(self, within: int, masks=None) -> list[int]:
        und = self._und if masks is None else masks
        out = []
        seen = 0
        rest = within
        while rest:
            start = (rest & -rest).bit_length() - 1
            comp = 1 << start
            frontier = [start]
            while frontier:
                v = frontier.pop()
                for w in _bits(und[v] & within & ~comp):
                    comp |= 1 << w
                    frontier.append(w)
            out.append(comp)
            seen |= comp
            rest = within & ~seen
        return out

    def _canon(self, sub: int) -> tuple:
        hit = self._canon_cache.get(sub)
        if hit is not None:
            return hit
        verts = list(_bits(sub))
        rank = {v: i for i, v in enumerate(verts)}
        edges = []
        for v in verts:
            for w in _bits(self._und[v] & sub):
                if w > v:
                    edges.append((rank[v], rank[w]))
        key = tuple(edges)
        self._canon_cache[sub] = key
        return key

    def rooted(self, sub: int, root: int) -> tuple[tuple[Arc, ...], tuple[int, ...]]:
        """Orient ``sub`` at ``root`` and close: (directed arcs, chain components)."""
        key = (sub, root)
        hit = self._rooted_memo.get(key)
        if hit is not None:
            return hit
        p = self.graph.p
        und = [self._und[v] & sub if (sub >> v) & 1 else 0 for v in range(p)]
        par = [0] * p
        ch = [0] * p
        arcs = []
        for w in _bits(und[root]):
            und[root] &= ~(1 << w)
            und[w] &= ~(1 << root)
            ch[root] |= 1 << w
            par[w] |= 1 << root
            arcs.append((root, w))
        pending = [(a, b) for a in _bits(sub) for b in _bits(und[a]) if a < b]
        arcs.extend(_close_masks(p, und, par, ch, pending))
        remaining = 0
        for v in _bits(sub):
            if und[v]:
                remaining |= (1 << v) | und[v]
        # Connectivity must follow the post-closure undirected structure; the
        # induced edges within each child still equal the original ones (a
        # chain component of the rooted graph has no internal directed edge).
        children = tuple(m for m in self._undirected_components(remaining, und)
                         if m & (m - 1))
        result = (tuple(arcs), children)
        self._rooted_memo[key] = result
        return result

    def component_size(self, sub: int) -> int:
        """Class size of one connected undirected component given as a bitmask."""
        if not sub & (sub - 1):
            return 1
        key = self._canon(sub)
        hit = self._size_memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for x in _bits(sub):
            prod = 1
            for child in self.rooted(sub, x)[1]:
                prod *= self.component_size(child)
            total += prod
        self._size_memo[key] = total
        return total

    def root_weights(self, sub: int) -> tuple[list[int], list[int]]:
        """Per-root subclass sizes of a component: (vertices, sizes)."""
        verts = list(_bits(sub))
        sizes = []
        for x in verts:
            prod = 1
            for child in self.rooted(sub, x)[1]:
                prod *= self.component_size(child)
            sizes.append(prod)
        return verts, sizes

    def size(self) -> int:
        total = 1
        for comp in self.top_components:
            total *= self.component_size(comp)
        return total

    def _component_size_h(self, sub: int, opposite: frozenset[Arc]) -> int:
        """Component size counting only members consistent with the prior.

        ``opposite`` holds the reversed prior arcs: a rooted orientation is
        inconsistent exactly when it produces an arc in this set.
        """
        if not sub & (sub - 1):
            return 1
        verts = list(_bits(sub))
        rank = {v: i for i, v in enumerate(verts)}
        local_opp = tuple(sorted((rank[a], rank[b]) for a, b in opposite
                                 if (sub >> a) & 1 and (sub >> b) & 1))
        key = (self._canon(sub), local_opp)
        hit = self._size_h_memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for x in verts:
            arcs, children = self.rooted(sub, x)
            if any(arc in opposite for arc in arcs):
                continue
            prod = 1
            for child in children:
                prod *= self._component_size_h(child, opposite)
                if prod == 0:
                    break
            total += prod
        self._size_h_memo[key] = total
        return total

    def size_with_prior_arcs(self, arcs) -> int:
        """Members whose orientation of each given pair matches the arc."""
        opposite = frozenset((b, a) for a, b in arcs)
        for a, b in arcs:
            if not (self._und[a] >> b) & 1:
                raise GraphFormatError(
                    f"prior arc ({a},{b}) does not orient an undirected edge")
        total = 1
        for comp in self.top_components:
            total *= self._component_size_h(comp, opposite)
            if total == 0:
                return 0
        return total

    def config_distribution(self, edge_bits: dict[tuple[int, int], int]) -> dict[int, int]:
        """Member counts by orientation pattern of tracked undirected edges.

        ``edge_bits`` maps canonical undirected pairs to bit positions; in a
        returned key, bit j is set iff tracked edge j is oriented from its
        lower to its higher endpoint. Only patterns realized by some member
        appear, and the counts sum to the class size. Components free of
        tracked edges collapse to the plain memoized count.
        """
        for (a, b), _bit in edge_bits.items():
            if a > b or not (self._und[a] >> b) & 1:
                raise GraphFormatError(
                    f"tracked pair ({a},{b}) is not a canonical undirected edge")
        dist = {0: 1}
        for comp in self.top_components:
            dist = _cross_dist(dist, self._component_dist(comp, edge_bits))
        return dist

    def _component_dist(self, sub: int, edge_bits) -> dict[int, int]:
        tracked = tuple(sorted(
            (e, bit) for e, bit in edge_bits.items()
            if (sub >> e[0]) & 1 and (sub >> e[1]) & 1))
        if not tracked:
            return {0: self.component_size(sub)}
        key = (sub, tracked)
        hit = self._dist_memo.get(key)
        if hit is not None:
            return hit
        out: dict[int, int] = {}
        for x in _bits(sub):
            arcs, children = self.rooted(sub, x)
            bits = 0
            for u, v in arcs:
                e = (u, v) if u < v else (v, u)
                pos = edge_bits.get(e)
                if pos is not None and u < v:
                    bits |= 1 << pos
            acc = {bits: 1}
            for child in children:
                acc = _cross_dist(acc, self._component_dist(child, edge_bits))
            for b, c in acc.items():
                out[b] = out.get(b, 0) + c
        self._dist_memo[key] = out
        return out


def count_mec(essential: PartiallyDirectedGraph, *,
              context: CountingContext | None = None) -> int:
    """Number of DAGs in the class of ``essential``; 1 if fully directed."""
    ctx = context if context is not None else CountingContext(essential)
    return ctx.size()


def hypothesis_arcs(essential: PartiallyDirectedGraph,
                    hypothesis: PartiallyDirectedGraph) -> frozenset[Arc]:
    """Validate a hypothesis graph and return its extra orientations.

    A hypothesis shares the essential graph's skeleton and contains all of
    its directed edges plus orientations for some undirected ones.
    """
    if hypothesis.p != essential.p:
        raise GraphFormatError("hypothesis vertex count differs from essential graph")
    skel_e = {(min(a, b), max(a, b)) for a, b in essential.directed} | set(essential.undirected)
    skel_h = {(min(a, b), max(a, b)) for a, b in hypothesis.directed} | set(hypothesis.undirected)
    if skel_e != skel_h:
        raise GraphFormatError("hypothesis skeleton differs from essential graph")
    if not set(essential.directed) <= set(hypothesis.directed):
        raise GraphFormatError("hypothesis drops or reverses an essential orientation")
    return frozenset(set(hypothesis.directed) - set(essential.directed))


def count_with_prior(essential: PartiallyDirectedGraph,
                     hypothesis: PartiallyDirectedGraph, *,
                     context: CountingContext | None = None) -> int:
    """Members of the class consistent with the hypothesis's orientations."""
    extra = hypothesis_arcs(essential, hypothesis)
    ctx = context if context is not None else CountingContext(essential)
    return ctx.size_with_prior_arcs(extra)


def rooted_sizes(uceg: PartiallyDirectedGraph, *,
                 context: CountingContext | None = None) -> dict[int, int]:
    """Per-root subclass sizes of a UCEG; values sum to the class size."""
    from .orientation import is_uceg

    if not is_uceg(uceg):
        from .errors import NotAUcegError
        raise NotAUcegError("rooted sizes require a connected undirected chordal input")
    ctx = context if context is not None else CountingContext(uceg)
    verts, sizes = ctx.root_weights((1 << uceg.p) - 1)
    return dict(zip(verts, sizes))


@dataclass
class _EnumState:
    work: int = 0


def enumerate_mec(essential: PartiallyDirectedGraph, *,
                  max_work: int = 2_000_000,
                  validate: bool = True) -> list[Dag]:
    """All class members, by depth-first orientation of the undirected edges.

    Exponential-time oracle: branches on each undirected edge, pruning
    orientations that create a v-structure absent from the input or a
    directed cycle. Raises CapExceededError beyond ``max_work`` branch
    steps.
    """
    if validate:
        validate_essential_input(essential)
    p = essential.p
    adj = essential.adjacency_masks
    edges = sorted(essential.undirected)
    par = list(essential.parent_masks)
    ch = list(essential.child_masks)
    state = _EnumState()
    members: list[Dag] = []
    base = frozenset(essential.directed)

    def reaches(src: int, dst: int) -> bool:
        seen = 1 << src
        frontier = [src]
        while frontier:
            v = frontier.pop()
            if v == dst:
                return True
            for w in _bits(ch[v] & ~seen):
                seen |= 1 << w
                frontier.append(w)
        return False

    def ok(a: int, b: int) -> bool:
        # a->b forms a collider a->b<-c for any parent c of b nonadjacent to
        # a; the pair a-b was undirected, so such a collider is always new.
        if par[b] & ~(adj[a] | (1 << a)):
            return False
        return not reaches(b, a)

    def assign(i: int, acc: list[Arc]) -> None:
        state.work += 1
        if state.work > max_work:
            raise CapExceededError(f"enumeration exceeded {max_work} branch steps")
        if i == len(edges):
            members.append(Dag(essential.vertex_names, base | frozenset(acc), frozenset()))
            return
        a, b = edges[i]
        for tail, head in ((a, b), (b, a)):
            if ok(tail, head):
                ch[tail] |= 1 << head
                par[head] |= 1 << tail
                acc.append((tail, head))
                assign(i + 1, acc)
                acc.pop()
                ch[tail] &= ~(1 << head)
                par[head] &= ~(1 << tail)

    assign(0, [])
    return members


def mec_members_match_count(essential: PartiallyDirectedGraph) -> bool:
    """Cross-check: the enumeration length equals the counted size."""
    return len(enumerate_mec(essential)) == count_mec(essential)
