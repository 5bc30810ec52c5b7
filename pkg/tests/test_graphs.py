import random

import pytest

from mecdesign import (Dag, GraphFormatError, PartiallyDirectedGraph,
                       chain_components, descendants, is_chordal,
                       is_markov_equivalent, skeleton, v_structures,
                       validate_chain_graph)
from mecdesign.graphio import (graph_from_dict, graph_to_dict, load_graph,
                               parse_edge_list, save_graph)

from conftest import path_graph, random_dag, star_graph
from oracles import brute_is_chordal


class TestConstruction:
    def test_duplicate_names_rejected(self):
        with pytest.raises(GraphFormatError):
            PartiallyDirectedGraph.build(["a", "a"], undirected=[(0, 1)])

    def test_self_loop_rejected(self):
        with pytest.raises(GraphFormatError):
            PartiallyDirectedGraph.build(2, directed=[(1, 1)])

    def test_pair_in_both_sets_rejected(self):
        with pytest.raises(GraphFormatError):
            PartiallyDirectedGraph.build(2, directed=[(0, 1)], undirected=[(0, 1)])

    def test_double_orientation_rejected(self):
        with pytest.raises(GraphFormatError):
            PartiallyDirectedGraph.build(2, directed=[(0, 1), (1, 0)])

    def test_undirected_pairs_canonicalized(self):
        g = PartiallyDirectedGraph.build(3, undirected=[(2, 0)])
        assert g.undirected == frozenset({(0, 2)})

    def test_dag_rejects_cycles_and_undirected(self):
        with pytest.raises(GraphFormatError):
            Dag.from_arcs(3, [(0, 1), (1, 2), (2, 0)])
        with pytest.raises(GraphFormatError):
            Dag(("a", "b"), frozenset(), frozenset({(0, 1)}))


class TestSkeleton:
    def test_directed_chain(self):
        d = Dag.from_arcs(3, [(0, 1), (1, 2)])
        assert skeleton(d).undirected == {(0, 1), (1, 2)}

    def test_undirected_identity(self, diamond4):
        assert skeleton(diamond4) == diamond4

    def test_diamond_pairs(self, diamond4_member):
        assert skeleton(diamond4_member).undirected == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}

    def test_idempotent_on_random_graphs(self):
        rng = random.Random(0)
        for _ in range(25):
            d = random_dag(6, rng)
            s = skeleton(d)
            assert skeleton(s) == s


class TestVStructures:
    def test_simple_collider(self):
        d = Dag.from_arcs(3, [(0, 2), (1, 2)])
        assert v_structures(d) == {(0, 2, 1)}

    def test_shielded_collider_excluded(self):
        d = Dag.from_arcs(3, [(0, 2), (1, 2), (0, 1)])
        assert v_structures(d) == set()

    def test_rooted_trees_have_none(self):
        # every rooted orientation of paths and stars up to p=6
        for p in range(2, 7):
            for tree in (path_graph(p), star_graph(p)):
                und = tree.undirected_masks
                for root in range(p):
                    arcs = []
                    seen = 1 << root
                    stack = [root]
                    while stack:
                        v = stack.pop()
                        m = und[v] & ~seen
                        w = 0
                        while m:
                            if m & 1:
                                arcs.append((v, w))
                                seen |= 1 << w
                                stack.append(w)
                            m >>= 1
                            w += 1
                    assert v_structures(Dag.from_arcs(p, arcs)) == set()


class TestMarkovEquivalence:
    def test_chain_and_fork(self):
        chain = Dag.from_arcs(3, [(0, 1), (1, 2)])
        fork = Dag.from_arcs(3, [(1, 0), (1, 2)])
        assert is_markov_equivalent(chain, fork)

    def test_collider_differs(self):
        collider = Dag.from_arcs(3, [(0, 2), (1, 2)])
        through = Dag.from_arcs(3, [(0, 2), (2, 1)])
        assert not is_markov_equivalent(collider, through)

    def test_identity(self, diamond4_member):
        assert is_markov_equivalent(diamond4_member, diamond4_member)

    def test_mismatched_sizes_raise(self):
        with pytest.raises(GraphFormatError):
            is_markov_equivalent(Dag.from_arcs(2, [(0, 1)]), Dag.from_arcs(3, []))

    def test_equivalence_relation_on_random_dags(self):
        rng = random.Random(3)
        for _ in range(40):
            a = random_dag(6, rng)
            b = random_dag(6, rng)
            c = random_dag(6, rng)
            assert is_markov_equivalent(a, a)
            assert is_markov_equivalent(a, b) == is_markov_equivalent(b, a)
            if is_markov_equivalent(a, b) and is_markov_equivalent(b, c):
                assert is_markov_equivalent(a, c)


class TestChainComponents:
    def test_diamond_single_component(self, diamond4):
        comps = chain_components(diamond4)
        assert len(comps) == 1 and comps[0].vertices == (0, 1, 2, 3)
        assert not comps[0].trivial

    def test_fully_directed_all_trivial(self, diamond4_member):
        comps = chain_components(diamond4_member)
        assert len(comps) == 4 and all(c.trivial for c in comps)

    def test_rooted_diamond_leaves_one_pair(self, diamond4):
        from mecdesign import rooted_essential_graph

        rooted = rooted_essential_graph(diamond4, 0)
        comps = chain_components(rooted)
        nontrivial = [c for c in comps if not c.trivial]
        assert len(nontrivial) == 1 and nontrivial[0].vertices == (1, 2)

    def test_partition_property(self):
        rng = random.Random(5)
        for _ in range(25):
            d = random_dag(7, rng)
            from mecdesign import essential_graph_of

            comps = chain_components(essential_graph_of(d))
            seen = [v for c in comps for v in c.vertices]
            assert sorted(seen) == list(range(7))


class TestChordality:
    def test_four_cycle_not_chordal(self):
        g = PartiallyDirectedGraph.build(4, undirected=[(0, 1), (1, 2), (2, 3), (0, 3)])
        assert not is_chordal(g)

    def test_diamond_chordal(self, diamond4):
        assert is_chordal(diamond4)

    def test_trees_chordal(self):
        for p in range(1, 8):
            assert is_chordal(path_graph(p))
            assert is_chordal(star_graph(max(p, 2)))

    def test_agrees_with_brute_force(self):
        rng = random.Random(9)
        for _ in range(60):
            p = rng.randint(4, 10)
            edges = [(a, b) for a in range(p) for b in range(a + 1, p)
                     if rng.random() < 0.35]
            g = PartiallyDirectedGraph.build(p, undirected=edges)
            assert is_chordal(g) == brute_is_chordal(g)

    def test_rejects_directed_input(self, diamond4_member):
        with pytest.raises(GraphFormatError):
            is_chordal(diamond4_member)


class TestDescendants:
    def test_chain_middle(self):
        d = Dag.from_arcs(3, [(0, 1), (1, 2)])
        assert descendants(d, 1) == {1, 2}

    def test_sink_is_self(self):
        d = Dag.from_arcs(3, [(0, 2), (1, 2)])
        assert descendants(d, 2) == {2}

    def test_root_reaches_all(self):
        d = Dag.from_arcs(4, [(0, 1), (0, 2), (2, 3)])
        assert descendants(d, 0) == {0, 1, 2, 3}

    def test_self_membership_property(self):
        rng = random.Random(2)
        for _ in range(20):
            d = random_dag(6, rng)
            for v in range(6):
                assert v in descendants(d, v)


class TestChainGraphValidation:
    def test_diamond(self, diamond4):
        assert validate_chain_graph(diamond4)

    def test_partially_directed_cycle(self):
        g = PartiallyDirectedGraph.build(3, directed=[(0, 1), (2, 0)], undirected=[(1, 2)])
        assert not validate_chain_graph(g)

    def test_any_dag(self):
        rng = random.Random(4)
        for _ in range(20):
            assert validate_chain_graph(random_dag(6, rng))


class TestIO:
    def test_json_roundtrip(self, diamond4, tmp_path):
        path = tmp_path / "g.json"
        save_graph(diamond4, path)
        assert load_graph(path) == diamond4

    def test_dict_roundtrip_directed(self, diamond4_member):
        assert graph_from_dict(graph_to_dict(diamond4_member)).directed == diamond4_member.directed

    def test_edge_list(self):
        g = parse_edge_list("a -> b\nb -- c  # comment\n\n# full comment\n")
        assert g.vertex_names == ("a", "b", "c")
        assert g.directed == {(0, 1)} and g.undirected == {(1, 2)}

    def test_edge_list_file(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("x -> y\n")
        assert load_graph(path).directed == {(0, 1)}

    def test_duplicate_edge_rejected(self):
        with pytest.raises(GraphFormatError):
            graph_from_dict({"vertices": ["a", "b"],
                             "directed": [["a", "b"]],
                             "undirected": [["a", "b"]]})
        with pytest.raises(GraphFormatError):
            parse_edge_list("a -> b\nb -- a\n")

    def test_unknown_vertex_rejected(self):
        with pytest.raises(GraphFormatError):
            graph_from_dict({"vertices": ["a"], "directed": [["a", "b"]]})

    def test_malformed_line_rejected(self):
        with pytest.raises(GraphFormatError):
            parse_edge_list("a b c\n")
