import random

import pytest

from mecdesign.graphs import Dag, PartiallyDirectedGraph
from mecdesign.orientation import essential_graph_of
from mecdesign.sampling import RandomSource
from mecdesign.synth import GeneratorConfig, gen_random_chordal, gen_random_tree


@pytest.fixture
def diamond4() -> PartiallyDirectedGraph:
    """The 4-vertex chordal graph X1-X2, X1-X3, X2-X3, X2-X4, X3-X4."""
    return PartiallyDirectedGraph.build(4, undirected=[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])


@pytest.fixture
def diamond4_member() -> Dag:
    """One member of the diamond class: rooted at X1 with X2->X3."""
    return Dag.from_arcs(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])


def path_graph(n: int) -> PartiallyDirectedGraph:
    return PartiallyDirectedGraph.build(n, undirected=[(i, i + 1) for i in range(n - 1)])


def star_graph(n: int) -> PartiallyDirectedGraph:
    return PartiallyDirectedGraph.build(n, undirected=[(0, i) for i in range(1, n)])


def random_dag(p: int, rng: random.Random, density: float = 0.4) -> Dag:
    order = list(range(p))
    rng.shuffle(order)
    pos = {v: i for i, v in enumerate(order)}
    arcs = []
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < density:
                arcs.append((a, b) if pos[a] < pos[b] else (b, a))
    return Dag.from_arcs(p, arcs)


def random_essential(p: int, rng: random.Random, density: float = 0.4) -> PartiallyDirectedGraph:
    return essential_graph_of(random_dag(p, rng, density))


def random_chordal(p: int, r: float, stream: int, seed: int = 0) -> PartiallyDirectedGraph:
    cfg = GeneratorConfig(model="chordal-peo", p=p, r=r)
    return gen_random_chordal(cfg, RandomSource(seed).rng(stream))


def random_tree(p: int, stream: int, seed: int = 0, model: str = "tree-ba",
                degree_bound: int = 3) -> PartiallyDirectedGraph:
    cfg = GeneratorConfig(model=model, p=p, degree_bound=degree_bound)
    return gen_random_tree(cfg, RandomSource(seed).rng(stream))
