import itertools
import random
from fractions import Fraction

import pytest

from mecdesign import (BudgetError, Dag, ForestDecomposition, MinimaxTable,
                       NotATreeError, PartiallyDirectedGraph, allocate_budget,
                       forest_worst_case_gain, gain, minimax_forest,
                       minimax_single_tree, tree_average_gain, tree_gain,
                       tree_greedy_average)
from mecdesign.synth import orient_tree_from_root

from conftest import path_graph, random_tree, star_graph
from oracles import brute_minimax_tree


def forest_of(g) -> ForestDecomposition:
    return ForestDecomposition.from_graph(g)


class TestForestDecomposition:
    def test_single_tree(self):
        f = forest_of(path_graph(5))
        assert len(f.trees) == 1 and f.p_u == 5

    def test_trivial_components_skipped(self):
        g = PartiallyDirectedGraph.build(4, directed=[(3, 0)], undirected=[(0, 1), (1, 2)])
        f = forest_of(g)
        assert len(f.trees) == 1 and f.trees[0].vertices == (0, 1, 2)

    def test_non_tree_component_rejected(self, diamond4):
        with pytest.raises(NotATreeError):
            forest_of(diamond4)

    def test_targets_outside_forest_rejected(self):
        g = PartiallyDirectedGraph.build(4, directed=[(3, 0)], undirected=[(0, 1), (1, 2)])
        f = forest_of(g)
        with pytest.raises(BudgetError):
            f.local_targets([3])


class TestTreeGain:
    def test_path5_middle_target(self):
        tree = forest_of(path_graph(5)).trees[0]
        assert tree_gain(tree, [2], 0) == 3

    def test_root_in_targets(self):
        tree = forest_of(path_graph(5)).trees[0]
        assert tree_gain(tree, [2], 2) == 4

    def test_empty_targets(self):
        tree = forest_of(path_graph(5)).trees[0]
        for root in range(5):
            assert tree_gain(tree, [], root) == 0

    def test_matches_closure_gain_on_random_trees(self):
        rng = random.Random(41)
        for stream in range(25):
            p = rng.randint(3, 10)
            tree = random_tree(p, stream, seed=7)
            comp = forest_of(tree).trees[0]
            k = rng.randint(0, p)
            targets = rng.sample(range(p), k)
            for root in range(p):
                truth = orient_tree_from_root(tree, root)
                assert tree_gain(comp, targets, root) == \
                    gain(tree, targets, truth, trust_member=True)


class TestTreeAverageGain:
    def test_path3_values(self):
        f = forest_of(path_graph(3))
        assert tree_average_gain(f, [1]) == 2
        assert tree_average_gain(f, [0]) == Fraction(4, 3)
        assert tree_average_gain(f, []) == 0

    def test_equals_mean_over_roots(self):
        rng = random.Random(43)
        for stream in range(20):
            p = rng.randint(3, 10)
            tree = random_tree(p, stream, seed=9)
            f = forest_of(tree)
            comp = f.trees[0]
            targets = rng.sample(range(p), rng.randint(0, p))
            mean = Fraction(sum(tree_gain(comp, targets, r) for r in range(p)), p)
            assert tree_average_gain(f, targets) == mean

    def test_monotone_and_submodular(self):
        rng = random.Random(47)
        for stream in range(25):
            p = rng.randint(4, 10)
            tree = random_tree(p, stream, seed=11)
            f = forest_of(tree)
            s2 = set(rng.sample(range(p), rng.randint(1, p - 1)))
            s1 = {v for v in s2 if rng.random() < 0.5}
            x = rng.choice([v for v in range(p) if v not in s2])
            m1 = tree_average_gain(f, s1 | {x}) - tree_average_gain(f, s1)
            m2 = tree_average_gain(f, s2 | {x}) - tree_average_gain(f, s2)
            assert m1 >= m2 >= 0
            assert tree_average_gain(f, s1) <= tree_average_gain(f, s2)


class TestMinimaxSingleTree:
    def test_path5_budget1(self):
        tree = forest_of(path_graph(5)).trees[0]
        targets, worst = minimax_single_tree(tree, 1)
        assert targets == [2] and worst == 2

    def test_star_budget1(self):
        tree = forest_of(star_graph(5)).trees[0]
        targets, worst = minimax_single_tree(tree, 1)
        assert targets == [0] and worst == 1

    def test_budget0(self):
        tree = forest_of(path_graph(4)).trees[0]
        targets, worst = minimax_single_tree(tree, 0)
        assert targets == [] and worst == 4

    def test_budget_covers_everything(self):
        tree = forest_of(path_graph(4)).trees[0]
        targets, worst = minimax_single_tree(tree, 4)
        assert worst == 0 and len(targets) <= 4

    def test_optimal_on_random_trees(self):
        rng = random.Random(53)
        for stream in range(30):
            p = rng.randint(3, 11)
            tree = random_tree(p, stream, seed=13,
                               model="tree-ba" if stream % 2 else "tree-bounded-degree")
            comp = forest_of(tree).trees[0]
            for budget in range(0, min(3, p) + 1):
                _, worst = minimax_single_tree(comp, budget)
                assert worst == brute_minimax_tree(comp.adjacency, budget)


class TestAllocation:
    def test_single_tree_gets_everything(self):
        f = forest_of(path_graph(5))
        table = MinimaxTable.build(f, 2)
        budgets, objective = allocate_budget(table, 2)
        assert budgets == [2] and objective == table.values[0][2]

    def test_two_paths_split(self):
        g = PartiallyDirectedGraph.build(
            10, undirected=[(i, i + 1) for i in range(4)] + [(i, i + 1) for i in range(5, 9)])
        f = forest_of(g)
        table = MinimaxTable.build(f, 2)
        budgets, objective = allocate_budget(table, 2)
        assert budgets == [1, 1] and objective == 4

    def test_matches_exhaustive_allocation(self):
        rng = random.Random(59)
        for trial in range(12):
            n_trees = rng.randint(1, 4)
            k = rng.randint(0, 5)
            sizes = [rng.randint(2, 6) for _ in range(n_trees)]
            edges = []
            offset = 0
            for s in sizes:
                tree = random_tree(s, trial * 10 + s, seed=17)
                edges.extend((a + offset, b + offset) for a, b in tree.undirected)
                offset += s
            f = forest_of(PartiallyDirectedGraph.build(offset, undirected=edges))
            table = MinimaxTable.build(f, k)
            _, objective = allocate_budget(table, k)
            best = min(
                sum(table.values[r][j] for r, j in enumerate(combo))
                for combo in itertools.product(range(k + 1), repeat=n_trees)
                if sum(combo) <= k)
            assert objective == best

    def test_table_invariants(self):
        f = forest_of(path_graph(6))
        table = MinimaxTable.build(f, 4)
        row = table.values[0]
        assert row[0] == 6
        assert all(row[j] >= row[j + 1] for j in range(len(row) - 1))
        assert all(v >= 0 for v in row)


class TestMinimaxForest:
    def test_path5_k1(self):
        f = forest_of(path_graph(5))
        targets, objective = minimax_forest(f, 1)
        assert targets == [2] and objective == 2

    def test_two_stars_k2(self):
        g = PartiallyDirectedGraph.build(
            10, undirected=[(0, i) for i in range(1, 5)] + [(5, i) for i in range(6, 10)])
        f = forest_of(g)
        targets, objective = minimax_forest(f, 2)
        assert targets == [0, 5] and objective == 2

    def test_budget_at_least_order_clears_all(self):
        f = forest_of(path_graph(4))
        targets, objective = minimax_forest(f, 10)
        assert objective == 0

    def test_worst_case_gain_evaluation(self):
        f = forest_of(path_graph(5))
        assert forest_worst_case_gain(f, [2]) == 3  # worst root: an endpoint
        assert forest_worst_case_gain(f, []) == 0
        assert forest_worst_case_gain(f, list(range(5))) == 4


class TestTreeGreedy:
    def test_path3_picks_middle(self):
        chosen, steps, value = tree_greedy_average(forest_of(path_graph(3)), 1)
        assert chosen == [1] and value == 2
        assert len(steps) == 1 and steps[0][0] == 1

    def test_star_picks_center(self):
        chosen, _, _ = tree_greedy_average(forest_of(star_graph(6)), 1)
        assert chosen == [0]

    def test_k0(self):
        chosen, steps, value = tree_greedy_average(forest_of(path_graph(4)), 0)
        assert chosen == [] and steps == [] and value == 0

    def test_budget_validation(self):
        with pytest.raises(BudgetError):
            tree_greedy_average(forest_of(path_graph(3)), 4)

    def test_marginals_nonincreasing(self):
        rng = random.Random(61)
        for stream in range(10):
            tree = random_tree(8, stream, seed=19)
            _, steps, _ = tree_greedy_average(forest_of(tree), 4)
            deltas = [s[1] for s in steps]
            assert all(deltas[i] >= deltas[i + 1] for i in range(len(deltas) - 1))
            assert all(d >= 0 for d in deltas)
