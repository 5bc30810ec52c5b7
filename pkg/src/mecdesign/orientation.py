"""Meek-rule closure and the orientation machinery built on it.

Covers: essential graphs of DAGs, the edges revealed by single-vertex
interventions, resolved-edge sets and gains, and rooted essential graphs
of undirected chordal components.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import GraphFormatError, InconsistencyError, NotAUcegError
from .graphs import (Arc, Dag, PartiallyDirectedGraph, _bits, is_chordal,
                     skeleton, v_structures)


@dataclass(frozen=True)
class OrientationResult:
    """A closed graph plus the edges that gained a direction.

    ``newly_directed`` holds ordered pairs that were undirected in the
    input and are directed in the closure; it never overlaps the input's
    directed edges, and the closure preserves the skeleton.
    """

    closed_graph: PartiallyDirectedGraph
    newly_directed: frozenset[Arc]


def _close_masks(p: int, und: list[int], par: list[int], ch: list[int],
                 pending=None) -> list[Arc]:
    """Run the four orientation rules to fixpoint on mutable bitmasks.

    Returns the arcs oriented by the closure in the order applied. The
    worklist holds undirected pairs whose premises may have changed; each
    orientation re-enqueues only pairs within one hop of its endpoints.

    Rules, each orienting an undirected pair a-b as a->b:
      1. some c->a with c, b nonadjacent;
      2. a chain a->c->b;
      3. c->b and d->b with a-c, a-d undirected and c, d nonadjacent;
      4. d->c->b with a-d undirected and b, d nonadjacent.
    The fourth premise, stated elsewhere with a-b and b-c both undirected
    and only d->c directed, reaches the same fixpoint: rule 1 orients c->b
    from d->c first.
    """
    adj = [und[v] | par[v] | ch[v] for v in range(p)]

    def wants(a: int, b: int) -> bool:
        nb = ~(adj[b] | (1 << b))
        if par[a] & nb:
            return True
        if ch[a] & par[b]:
            return True
        s = und[a] & par[b]
        t = s
        while t:
            lsb = t & -t
            c = lsb.bit_length() - 1
            if s & ~(adj[c] | lsb):
                return True
            t ^= lsb
        t = und[a] & nb
        while t:
            lsb = t & -t
            d = lsb.bit_length() - 1
            if ch[d] & par[b]:
                return True
            t ^= lsb
        return False

    if pending is None:
        pending = [(a, b) for a in range(p) for b in _bits(und[a]) if a < b]
    queue = deque(pending)
    queued = set(pending)
    newly: list[Arc] = []

    def push_near(x: int, y: int) -> None:
        region = adj[x] | adj[y] | (1 << x) | (1 << y)
        for v in _bits(region):
            for w in _bits(und[v]):
                key = (v, w) if v < w else (w, v)
                if key not in queued:
                    queued.add(key)
                    queue.append(key)

    while queue:
        a, b = queue.popleft()
        queued.discard((a, b))
        if not (und[a] >> b) & 1:
            continue
        fwd = wants(a, b)
        bwd = wants(b, a)
        if fwd and bwd:
            raise InconsistencyError(
                f"rules demand both orientations of pair ({a},{b}); input is not a valid class")
        if not (fwd or bwd):
            continue
        if bwd:
            a, b = b, a
        und[a] &= ~(1 << b)
        und[b] &= ~(1 << a)
        ch[a] |= 1 << b
        par[b] |= 1 << a
        newly.append((a, b))
        push_near(a, b)
    return newly


def meek_closure(g: PartiallyDirectedGraph) -> OrientationResult:
    """Apply the four orientation rules until none fires."""
    p = g.p
    und = list(g.undirected_masks)
    par = list(g.parent_masks)
    ch = list(g.child_masks)
    newly = _close_masks(p, und, par, ch)
    closed = PartiallyDirectedGraph(
        g.vertex_names,
        frozenset(g.directed) | frozenset(newly),
        frozenset((a, b) for a in range(p) for b in _bits(und[a]) if a < b),
    )
    return OrientationResult(closed, frozenset(newly))


def _imposed_closure(g: PartiallyDirectedGraph, arcs) -> OrientationResult:
    """Impose arcs on ``g``'s undirected edges, then close; delta is vs ``g``."""
    p = g.p
    und = list(g.undirected_masks)
    par = list(g.parent_masks)
    ch = list(g.child_masks)
    imposed: list[Arc] = []
    for a, b in arcs:
        if (und[a] >> b) & 1:
            und[a] &= ~(1 << b)
            und[b] &= ~(1 << a)
            ch[a] |= 1 << b
            par[b] |= 1 << a
            imposed.append((a, b))
        elif (ch[a] >> b) & 1:
            continue
        elif (ch[b] >> a) & 1:
            raise InconsistencyError(
                f"imposed arc ({a},{b}) conflicts with an existing orientation")
        else:
            raise GraphFormatError(f"imposed pair ({a},{b}) is not an edge")
    newly = _close_masks(p, und, par, ch)
    closed = PartiallyDirectedGraph(
        g.vertex_names,
        frozenset(g.directed) | frozenset(imposed) | frozenset(newly),
        frozenset((a, b) for a in range(p) for b in _bits(und[a]) if a < b),
    )
    return OrientationResult(closed, frozenset(imposed) | frozenset(newly))


def essential_graph_of(d: Dag) -> PartiallyDirectedGraph:
    """The observational essential graph: skeleton + v-structures + closure."""
    skel = skeleton(d)
    arcs = set()
    for a, c, b in v_structures(d):
        arcs.add((a, c))
        arcs.add((b, c))
    return _imposed_closure(skel, arcs).closed_graph


def incident_orientations(targets, truth: Dag) -> frozenset[Arc]:
    """Directed edges of ``truth`` with at least one endpoint in ``targets``."""
    tset = set(targets)
    for v in tset:
        if not 0 <= v < truth.p:
            raise GraphFormatError(f"target {v} out of range")
    return frozenset((a, b) for a, b in truth.directed if a in tset or b in tset)


def interventional_essential_graph(essential: PartiallyDirectedGraph, targets,
                                   truth: Dag, *, trust_member: bool = False
                                   ) -> OrientationResult:
    """Essential graph after single-vertex interventions on ``targets``.

    Imposes the truth's orientations incident to the targets and closes
    under the rules; ``newly_directed`` is the full resolved set relative
    to the input essential graph. Unless ``trust_member`` is set, checks
    that ``truth`` belongs to the class (one extra closure run).
    """
    if not trust_member:
        if essential_graph_of(truth) != essential:
            raise InconsistencyError("truth DAG is not a member of the given class")
    return _imposed_closure(essential, incident_orientations(targets, truth))


def resolved_edges(essential: PartiallyDirectedGraph, targets, truth: Dag,
                   *, trust_member: bool = False) -> frozenset[Arc]:
    return interventional_essential_graph(
        essential, targets, truth, trust_member=trust_member).newly_directed


def gain(essential: PartiallyDirectedGraph, targets, truth: Dag,
         *, trust_member: bool = False) -> int:
    """Number of edge directions learned from intervening on ``targets``."""
    return len(resolved_edges(essential, targets, truth, trust_member=trust_member))


def is_uceg(g: PartiallyDirectedGraph) -> bool:
    """Connected, fully undirected, and chordal."""
    if g.directed or g.p == 0:
        return False
    und = g.undirected_masks
    seen = 1
    frontier = [0]
    while frontier:
        v = frontier.pop()
        for w in _bits(und[v] & ~seen):
            seen |= 1 << w
            frontier.append(w)
    if seen != (1 << g.p) - 1:
        return False
    return is_chordal(g)


def rooted_essential_graph(uceg: PartiallyDirectedGraph, root: int) -> PartiallyDirectedGraph:
    """Union graph of the class members rooted at ``root``.

    Orients every edge at the root outward and closes under the rules.
    The input must be a UCEG.
    """
    if not 0 <= root < uceg.p:
        raise GraphFormatError(f"root {root} out of range")
    if not is_uceg(uceg):
        raise NotAUcegError("rooted essential graph requires a connected undirected chordal input")
    arcs = [(root, w) for w in _bits(uceg.undirected_masks[root])]
    return _imposed_closure(uceg, arcs).closed_graph
