"""Experiment design on forests of tree-shaped chain components.

Gains on trees have closed forms: rooting a tree fixes every edge
direction, so the gain of a target set depends only on the component of
the removed-target forest containing the root. The minimax designer is
exact per tree; budgets are split across trees by dynamic programming
(a multi-choice knapsack); the average-gain designer is greedy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, NotATreeError
from .graphs import PartiallyDirectedGraph, _bits, chain_components


@dataclass(frozen=True)
class TreeComponent:
    """A tree chain component with its mapping back to global vertex ids."""

    vertices: tuple[int, ...]
    adjacency: tuple[int, ...]  # local bitmasks

    @property
    def order(self) -> int:
        return len(self.vertices)

    def to_global(self, local: int) -> int:
        return self.vertices[local]


@dataclass(frozen=True)
class ForestDecomposition:
    """Nontrivial tree chain components of an essential graph."""

    trees: tuple[TreeComponent, ...]
    vertex_names: tuple[str, ...]

    @property
    def p_u(self) -> int:
        return sum(t.order for t in self.trees)

    @classmethod
    def from_graph(cls, g: PartiallyDirectedGraph) -> "ForestDecomposition":
        trees = []
        for comp in chain_components(g):
            if comp.trivial:
                continue
            sub = comp.subgraph
            if len(sub.undirected) != sub.p - 1:
                raise NotATreeError(
                    f"chain component containing {sub.vertex_names[0]} is not a tree")
            trees.append(TreeComponent(comp.vertices, sub.undirected_masks))
        return cls(tuple(trees), g.vertex_names)

    def local_targets(self, targets) -> list[list[int]]:
        """Split global target ids by tree, in local coordinates."""
        index = {}
        for ti, tree in enumerate(self.trees):
            for li, v in enumerate(tree.vertices):
                index[v] = (ti, li)
        out: list[list[int]] = [[] for _ in self.trees]
        for v in set(targets):
            if v not in index:
                raise BudgetError(f"target {v} is not in a nontrivial tree component")
            ti, li = index[v]
            out[ti].append(li)
        return out


def _component_sizes(adj: tuple[int, ...], removed: int) -> list[int]:
    """Sizes of the connected pieces left after deleting ``removed`` vertices."""
    n = len(adj)
    seen = removed
    sizes = []
    for s in range(n):
        if (seen >> s) & 1:
            continue
        comp = 1 << s
        frontier = [s]
        while frontier:
            v = frontier.pop()
            for w in _bits(adj[v] & ~comp & ~removed):
                comp |= 1 << w
                frontier.append(w)
        seen |= comp
        sizes.append(bin(comp).count("1"))
    return sizes


def tree_gain(tree: TreeComponent, targets, root: int) -> int:
    """Edges learned in the tree rooted at ``root`` from intervening on ``targets``.

    Equals order-1 when the root is a target, otherwise order minus the
    size of the leftover component containing the root.
    """
    tset = set(targets)
    if root in tset:
        return tree.order - 1
    removed = 0
    for v in tset:
        removed |= 1 << v
    comp = 1 << root
    frontier = [root]
    adj = tree.adjacency
    while frontier:
        v = frontier.pop()
        for w in _bits(adj[v] & ~comp & ~removed):
            comp |= 1 << w
            frontier.append(w)
    return tree.order - bin(comp).count("1")


def tree_average_gain(forest: ForestDecomposition, targets) -> Fraction:
    """Mean gain over all rooted members, as an exact rational.

    Closed form: (sum of squared tree orders - k - sum of squared leftover
    component sizes) / total tree order; evaluated by one traversal per
    tree.
    """
    per_tree = forest.local_targets(targets)
    p_u = forest.p_u
    if p_u == 0:
        return Fraction(0)
    k = sum(len(t) for t in per_tree)
    acc = 0
    for tree, local in zip(forest.trees, per_tree):
        acc += tree.order ** 2
        removed = 0
        for v in local:
            removed |= 1 << v
        acc -= sum(s * s for s in _component_sizes(tree.adjacency, removed))
    return Fraction(acc - k, p_u)


def _min_removals(adj: tuple[int, ...], start: int, threshold: int) -> tuple[int, list[int]]:
    """Greedy subtree removal along a DFS from ``start``.

    Post-order over the tree rooted at ``start``: a vertex is removed when
    its live-descendant count (itself plus surviving subtrees) exceeds the
    threshold. Returns (#removals, removed vertices).
    """
    n = len(adj)
    removed: list[int] = []
    live = [0] * n
    stack: list[tuple[int, int, bool]] = [(start, -1, False)]
    while stack:
        v, parent, processed = stack.pop()
        if not processed:
            stack.append((v, parent, True))
            for w in _bits(adj[v]):
                if w != parent:
                    stack.append((w, v, False))
        else:
            size = 1
            for w in _bits(adj[v]):
                if w != parent:
                    size += live[w]
            if size > threshold:
                removed.append(v)
                live[v] = 0
            else:
                live[v] = size
    return len(removed), removed


def minimax_single_tree(tree: TreeComponent, budget: int) -> tuple[list[int], int]:
    """Targets of size <= budget minimizing the largest leftover component.

    For each DFS start vertex, binary-search the smallest feasible
    component-size threshold; the best start achieves the optimum. Returns
    (local target ids sorted, worst leftover component size).
    """
    if budget < 0:
        raise BudgetError("budget must be nonnegative")
    n = tree.order
    best_mid = n + 1
    best_targets: list[int] = []
    for start in range(n):
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            used, _ = _min_removals(tree.adjacency, start, mid)
            if used <= budget:
                hi = mid
            else:
                lo = mid + 1
        if lo < best_mid:
            _, removed = _min_removals(tree.adjacency, start, lo)
            best_mid = lo
            best_targets = sorted(removed)
    return best_targets, best_mid


@dataclass
class MinimaxTable:
    """Optimal worst-component values per (tree, assigned budget).

    ``values[r][j]`` is nonincreasing in ``j`` and starts at the tree
    order; ``targets[r][j]`` is an achieving local target set.
    """

    values: list[list[int]] = field(default_factory=list)
    targets: list[list[list[int]]] = field(default_factory=list)

    @classmethod
    def build(cls, forest: ForestDecomposition, k: int) -> "MinimaxTable":
        table = cls()
        for tree in forest.trees:
            row_v: list[int] = []
            row_t: list[list[int]] = []
            for j in range(k + 1):
                tgt, worst = minimax_single_tree(tree, j)
                row_v.append(worst)
                row_t.append(tgt)
            table.values.append(row_v)
            table.targets.append(row_t)
        return table


def allocate_budget(table: MinimaxTable, k: int) -> tuple[list[int], int]:
    """Split budget k across trees minimizing the summed table values.

    Multi-choice knapsack by dynamic programming over (tree, remaining
    budget); total assigned budget is allowed to fall below k since values
    never increase with budget.
    """
    rows = table.values
    n_trees = len(rows)
    INF = float("inf")
    dp = [[INF] * (k + 1) for _ in range(n_trees + 1)]
    choice = [[0] * (k + 1) for _ in range(n_trees)]
    dp[0] = [0] * (k + 1)
    for r in range(n_trees):
        for b in range(k + 1):
            best = INF
            best_j = 0
            for j in range(min(b, len(rows[r]) - 1) + 1):
                cand = dp[r][b - j] + rows[r][j]
                if cand < best:
                    best = cand
                    best_j = j
            dp[r + 1][b] = best
            choice[r][b] = best_j
    budgets = [0] * n_trees
    b = k
    for r in range(n_trees - 1, -1, -1):
        budgets[r] = choice[r][b]
        b -= budgets[r]
    return budgets, int(dp[n_trees][k]) if n_trees else 0


def minimax_forest(forest: ForestDecomposition, k: int) -> tuple[list[int], int]:
    """Worst-case-optimal targets for the whole forest.

    Returns (global target ids sorted, summed worst leftover component
    size).
    """
    if k < 0:
        raise BudgetError("budget must be nonnegative")
    table = MinimaxTable.build(forest, k)
    budgets, objective = allocate_budget(table, k)
    targets: list[int] = []
    for tree, row_t, kr in zip(forest.trees, table.targets, budgets):
        targets.extend(tree.to_global(v) for v in row_t[kr])
    return sorted(targets), objective


def forest_worst_case_gain(forest: ForestDecomposition, targets) -> int:
    """Gain against the least favorable rooting of every tree."""
    per_tree = forest.local_targets(targets)
    total = 0
    for tree, local in zip(forest.trees, per_tree):
        total += min(tree_gain(tree, local, root) for root in range(tree.order))
    return total


def tree_greedy_average(forest: ForestDecomposition, k: int):
    """Greedy average-gain designer over the forest.

    Returns (global targets in pick order, per-step (vertex, marginal,
    objective) records, final objective). Marginals are exact rationals;
    submodularity gives the usual greedy guarantee.
    """
    if not 0 <= k <= forest.p_u:
        raise BudgetError(f"budget {k} outside [0, {forest.p_u}]")
    chosen: list[int] = []
    steps: list[tuple[int, Fraction, Fraction]] = []
    current = Fraction(0)
    candidates = sorted(v for tree in forest.trees for v in tree.vertices)
    for _ in range(k):
        best_v = -1
        best_val = None
        for v in candidates:
            if v in chosen:
                continue
            val = tree_average_gain(forest, chosen + [v])
            if best_val is None or val > best_val:
                best_val = val
                best_v = v
        chosen.append(best_v)
        steps.append((best_v, best_val - current, best_val))
        current = best_val
    return chosen, steps, current
