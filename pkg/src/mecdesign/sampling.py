"""Samplers over equivalence-class members.

The uniform sampler picks each component root with probability proportional
to the exact rooted subclass size, drawing uniform big integers so the
member distribution is exactly uniform. The fast sampler randomizes edge
orientations triple-by-triple and is close to uniform in practice but
carries no uniformity guarantee.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .counting import CountingContext
from .errors import MecDesignError
from .graphs import Arc, Dag, PartiallyDirectedGraph, _bits, v_structures

import random as _random


@dataclass(frozen=True)
class RandomSource:
    """Deterministic stream family keyed by (seed, stream index).

    Streams are derived by hashing, so distinct indices give
    independent-quality generators and the same key always replays the
    same stream, independent of platform.
    """

    seed: int = 0

    def _derive(self, stream: int, tag: bytes) -> int:
        h = hashlib.sha256()
        h.update(tag)
        h.update(self.seed.to_bytes(16, "little", signed=True))
        h.update(stream.to_bytes(16, "little", signed=True))
        return int.from_bytes(h.digest(), "little")

    def rng(self, stream: int = 0) -> _random.Random:
        return _random.Random(self._derive(stream, b"py"))

    def numpy_rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng(self._derive(stream, b"np"))


def sample_uniform(essential: PartiallyDirectedGraph, source: RandomSource,
                   stream: int = 0, *,
                   context: CountingContext | None = None) -> Dag:
    """Draw one member uniformly at random.

    Each call builds its own counting context unless one is supplied, so
    the per-sample cost includes the counting recursion; callers drawing
    many samples should share a context.
    """
    ctx = context if context is not None else CountingContext(essential)
    return _uniform_draw(essential, ctx, source.rng(stream))


def _uniform_draw(essential: PartiallyDirectedGraph, ctx: CountingContext,
                  rng: _random.Random) -> Dag:
    arcs: set[Arc] = set(essential.directed)
    worklist = sorted(ctx.top_components)
    while worklist:
        sub = worklist.pop(0)
        verts, sizes = ctx.root_weights(sub)
        total = sum(sizes)
        draw = rng.randrange(total)
        acc = 0
        for x, w in zip(verts, sizes):
            acc += w
            if draw < acc:
                root = x
                break
        oriented, children = ctx.rooted(sub, root)
        arcs.update(oriented)
        worklist.extend(sorted(children))
    return Dag(essential.vertex_names, frozenset(arcs), frozenset())


class FastSamplerStuck(MecDesignError):
    """Internal: a sweep reached a state no local re-randomization can fix."""


class _FastStatics:
    """Per-graph precomputation for the triple sampler.

    Triples without edges orient nothing and are always valid, so only
    edge-containing triples are kept; validity within a triple reduces to
    a collider check at the shared vertex (two edges) or a directed
    3-cycle check (triangles).
    """

    def __init__(self, essential: PartiallyDirectedGraph):
        self.graph = essential
        p = essential.p
        adj = essential.adjacency_masks
        self.original_vs = v_structures(essential)
        self.base_ch = list(essential.child_masks)
        self.base_und = list(essential.undirected_masks)
        triples = []
        for a, b, c in combinations(range(p), 3):
            pairs = []
            if (adj[a] >> b) & 1:
                pairs.append((a, b))
            if (adj[a] >> c) & 1:
                pairs.append((a, c))
            if (adj[b] >> c) & 1:
                pairs.append((b, c))
            if pairs:
                triples.append(((a, b, c), tuple(pairs)))
        self.edge_triples = triples


def _two_edge_invalid(pairs, ch, original_vs) -> bool:
    (u1, v1), (u2, v2) = pairs
    if u1 == u2:
        s, x, y = u1, v1, v2
    elif v1 == v2:
        s, x, y = v1, u1, u2
    else:
        s, x, y = (u2, v1, v2) if u2 == v1 else (u1, v2, u2)
    # collider at the shared vertex; the outer pair is nonadjacent here
    if (ch[x] >> s) & 1 and (ch[y] >> s) & 1:
        key = (x, s, y) if x < y else (y, s, x)
        return key not in original_vs
    return False


def _triangle_cycle(tri, ch) -> bool:
    a, b, c = tri
    for x, y, z in ((a, b, c), (a, c, b)):
        if (ch[x] >> y) & 1 and (ch[y] >> z) & 1 and (ch[z] >> x) & 1:
            return True
    return False


def sample_fast(essential: PartiallyDirectedGraph, source: RandomSource,
                stream: int = 0, *,
                max_restarts: int = 10,
                events_coeff: int = 100) -> Dag:
    """Draw one member by per-triple orientation, restarting on dead ends.

    Sweeps all vertex triples in a shuffled label order; within a triple,
    undirected edges are re-drawn as fair coin flips until the triple is
    directed with no directed 3-cycle and no collider absent from the
    input. A triple left invalid with nothing to re-draw aborts the
    attempt; after ``max_restarts`` failed attempts the exact uniform
    sampler takes over. Re-draw events per attempt are capped at
    ``events_coeff * p**3``.
    """
    from .counting import validate_essential_input

    validate_essential_input(essential)
    return _fast_draw(essential, source.rng(stream),
                      max_restarts=max_restarts, events_coeff=events_coeff)


def _fast_draw(essential: PartiallyDirectedGraph, rng: _random.Random, *,
               statics: _FastStatics | None = None,
               max_restarts: int = 10, events_coeff: int = 100) -> Dag:
    p = essential.p
    if not essential.undirected:
        return Dag(essential.vertex_names, frozenset(essential.directed), frozenset())
    if p == 2:
        a, b = sorted(essential.undirected)[0]
        arc = (a, b) if rng.getrandbits(1) else (b, a)
        return Dag(essential.vertex_names, frozenset(essential.directed) | {arc}, frozenset())
    if statics is None:
        statics = _FastStatics(essential)
    original_vs = statics.original_vs
    event_cap = events_coeff * p ** 3
    positions = list(range(p))

    for _attempt in range(max_restarts):
        rng.shuffle(positions)
        ordered = sorted(
            statics.edge_triples,
            key=lambda t: sorted((positions[t[0][0]], positions[t[0][1]], positions[t[0][2]])))
        ch = list(statics.base_ch)
        und = list(statics.base_und)
        events = 0
        stuck = False
        for tri, pairs in ordered:
            open_edges = [(x, y) for x, y in pairs if (und[x] >> y) & 1]
            n_edges = len(pairs)
            if not open_edges:
                if n_edges >= 2:
                    bad = (_triangle_cycle(tri, ch) if n_edges == 3
                           else _two_edge_invalid(pairs, ch, original_vs))
                    if bad:
                        stuck = True
                        break
                continue
            if n_edges == 1:
                x, y = open_edges[0]
                if rng.getrandbits(1):
                    ch[x] |= 1 << y
                else:
                    ch[y] |= 1 << x
            else:
                while True:
                    events += 1
                    if events > event_cap:
                        stuck = True
                        break
                    for x, y in open_edges:
                        if rng.getrandbits(1):
                            ch[x] |= 1 << y
                        else:
                            ch[y] |= 1 << x
                    bad = (_triangle_cycle(tri, ch) if n_edges == 3
                           else _two_edge_invalid(pairs, ch, original_vs))
                    if not bad:
                        break
                    for x, y in open_edges:
                        ch[x] &= ~(1 << y)
                        ch[y] &= ~(1 << x)
                if stuck:
                    break
            for x, y in open_edges:
                und[x] &= ~(1 << y)
                und[y] &= ~(1 << x)
        if stuck:
            continue
        arcs = frozenset((v, w) for v in range(p) for w in _bits(ch[v]))
        try:
            candidate = Dag(essential.vertex_names, arcs, frozenset())
        except MecDesignError:
            continue
        if v_structures(candidate) == original_vs:
            return candidate
    return _uniform_draw(essential, CountingContext(essential, validate=False), rng)


class BulkUniformSampler:
    """Vectorized uniform member sampling for Monte-Carlo estimators.

    Precomputes the root-choice decomposition once, then draws whole
    batches with numpy. Root probabilities use exact integer weights
    rescaled to 63-bit thresholds, so each choice is within 2**-63 of
    exact; the batch path trades that rounding for bulk speed, while
    ``sample_uniform`` stays exact.

    ``sample_orientation_bits`` returns one row per draw with bit ``j`` set
    iff undirected edge ``j`` (in ``edge_order``) is oriented from its
    lower to its higher endpoint.
    """

    _SCALE = 1 << 63

    def __init__(self, essential: PartiallyDirectedGraph, *,
                 context: CountingContext | None = None):
        self.graph = essential
        self.context = context if context is not None else CountingContext(essential)
        self.edge_order: list[tuple[int, int]] = sorted(essential.undirected)
        self._edge_idx = {e: i for i, e in enumerate(self.edge_order)}
        self.m = len(self.edge_order)
        self._node_of: dict[int, int] = {}
        self._thresholds: list[np.ndarray] = []
        self._rows: list[np.ndarray] = []
        self._rows_packed: list[np.ndarray] = []
        self._children: list[list[list[int]]] = []
        self.top_nodes = [self._build(sub) for sub in sorted(self.context.top_components)]

    def _build(self, sub: int) -> int:
        hit = self._node_of.get(sub)
        if hit is not None:
            return hit
        ctx = self.context
        verts, sizes = ctx.root_weights(sub)
        total = sum(sizes)
        acc = 0
        thresholds = np.empty(len(verts), dtype=np.uint64)
        rows = np.zeros((len(verts), self.m), dtype=np.uint8)
        children: list[list[int]] = []
        for i, (x, w) in enumerate(zip(verts, sizes)):
            acc += w
            thresholds[i] = (acc * self._SCALE) // total
            arcs, kids = ctx.rooted(sub, x)
            for a, b in arcs:
                if a < b:
                    rows[i, self._edge_idx[(a, b)]] = 1
            children.append([self._build(k) for k in sorted(kids)])
        idx = len(self._thresholds)
        self._node_of[sub] = idx
        self._thresholds.append(thresholds)
        self._rows.append(rows)
        if self.m <= 64:
            packed = np.zeros(len(verts), dtype=np.uint64)
            for i in range(len(verts)):
                word = 0
                for j in np.nonzero(rows[i])[0]:
                    word |= 1 << int(j)
                packed[i] = word
            self._rows_packed.append(packed)
        self._children.append(children)
        return idx

    def sample_orientation_bits(self, n: int, rng: np.random.Generator) -> np.ndarray:
        bits = np.zeros((n, self.m), dtype=np.uint8)
        all_idx = np.arange(n)
        # Batches headed for the same node are coalesced per sweep; without
        # this the per-root splits fragment into one tiny batch per sample.
        current: dict[int, list[np.ndarray]] = {}
        for node in self.top_nodes:
            current.setdefault(node, []).append(all_idx)
        while current:
            nxt: dict[int, list[np.ndarray]] = {}
            for node in sorted(current):
                parts = current[node]
                idx = parts[0] if len(parts) == 1 else np.concatenate(parts)
                draws = rng.integers(0, self._SCALE, size=idx.shape[0], dtype=np.uint64)
                choice = np.searchsorted(self._thresholds[node], draws, side="right")
                bits[idx] |= self._rows[node][choice]
                for r, kids in enumerate(self._children[node]):
                    if not kids:
                        continue
                    sel = idx[choice == r]
                    if sel.shape[0]:
                        for kid in kids:
                            nxt.setdefault(kid, []).append(sel)
            current = nxt
        return bits

    def sample_packed_bits(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Like ``sample_orientation_bits`` but one uint64 word per draw.

        Available when the graph has at most 64 undirected edges; bit j of
        a word corresponds to edge j of ``edge_order``. Consumes the stream
        identically to the unpacked variant.
        """
        if self.m > 64:
            raise ValueError("packed sampling requires at most 64 undirected edges")
        bits = np.zeros(n, dtype=np.uint64)
        all_idx = np.arange(n)
        current: dict[int, list[np.ndarray]] = {}
        for node in self.top_nodes:
            current.setdefault(node, []).append(all_idx)
        while current:
            nxt: dict[int, list[np.ndarray]] = {}
            for node in sorted(current):
                parts = current[node]
                idx = parts[0] if len(parts) == 1 else np.concatenate(parts)
                draws = rng.integers(0, self._SCALE, size=idx.shape[0], dtype=np.uint64)
                choice = np.searchsorted(self._thresholds[node], draws, side="right")
                bits[idx] |= self._rows_packed[node][choice]
                for r, kids in enumerate(self._children[node]):
                    if not kids:
                        continue
                    sel = idx[choice == r]
                    if sel.shape[0]:
                        for kid in kids:
                            nxt.setdefault(kid, []).append(sel)
            current = nxt
        return bits

    def arcs_from_bits(self, row: np.ndarray) -> frozenset[Arc]:
        arcs = set(self.graph.directed)
        for j, (a, b) in enumerate(self.edge_order):
            arcs.add((a, b) if row[j] else (b, a))
        return frozenset(arcs)

    def sample_members(self, n: int, rng: np.random.Generator) -> list[Dag]:
        bits = self.sample_orientation_bits(n, rng)
        return [Dag(self.graph.vertex_names, self.arcs_from_bits(bits[i]), frozenset())
                for i in range(n)]
