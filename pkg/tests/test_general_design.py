import math
import random
from fractions import Fraction

import pytest

from mecdesign import (BudgetError, CapExceededError, CountingContext, Dag,
                       GainEvaluator, PartiallyDirectedGraph, RandomSource,
                       brute_force_design, enumerate_mec, exact_average_gain,
                       gain, greedy_design, guarantee_parameters,
                       lazy_greedy_design, required_samples, worst_case_gain)

from conftest import random_chordal, random_essential
from oracles import brute_members


def single_edge() -> PartiallyDirectedGraph:
    return PartiallyDirectedGraph.build(["a", "b"], undirected=[(0, 1)])


def enumeration_average(essential, targets) -> Fraction:
    members = enumerate_mec(essential)
    total = sum(gain(essential, targets, m, trust_member=True) for m in members)
    return Fraction(total, len(members))


class TestExactAverageGain:
    def test_empty_targets(self, diamond4):
        assert exact_average_gain(diamond4, []) == 0

    def test_single_edge_resolves_everything(self):
        assert exact_average_gain(single_edge(), [0]) == 1

    def test_diamond_matches_enumeration(self, diamond4):
        for targets in ([0], [1], [3], [0, 3], [1, 2]):
            assert exact_average_gain(diamond4, targets) == \
                enumeration_average(diamond4, targets)

    def test_matches_enumeration_on_random_classes(self):
        rng = random.Random(67)
        for _ in range(25):
            p = rng.randint(3, 7)
            ess = random_essential(p, rng, density=0.5)
            k = rng.randint(0, 3)
            targets = rng.sample(range(p), min(k, p))
            assert exact_average_gain(ess, targets) == \
                enumeration_average(ess, targets)

    def test_incident_cap(self, diamond4):
        with pytest.raises(CapExceededError):
            exact_average_gain(diamond4, [1], max_incident=2)

    def test_monotone_submodular_random(self):
        rng = random.Random(71)
        for _ in range(30):
            p = rng.randint(4, 8)
            ess = random_essential(p, rng, density=0.45)
            ctx = CountingContext(ess)
            s2 = set(rng.sample(range(p), rng.randint(1, p - 1)))
            s1 = {v for v in s2 if rng.random() < 0.5}
            x = rng.choice([v for v in range(p) if v not in s2])
            f = lambda s: exact_average_gain(ess, s, context=ctx)
            m1 = f(s1 | {x}) - f(s1)
            m2 = f(s2 | {x}) - f(s2)
            assert m1 >= m2 >= 0


class TestEstimators:
    def test_unbiased_close_to_exact(self, diamond4):
        src = RandomSource(101)
        ev = GainEvaluator(diamond4, "unbiased", samples=4000, source=src)
        for targets in ([0], [1], [1, 2]):
            exact = float(exact_average_gain(diamond4, targets))
            est = ev.average_gain(targets)
            # per-sample std is < 2 here; 4 sigma margin at N=4000
            assert abs(est - exact) < 4 * 2 / math.sqrt(4000)

    def test_fast_mode_runs_and_is_deterministic(self, diamond4):
        ev1 = GainEvaluator(diamond4, "fast", samples=300, source=RandomSource(5))
        ev2 = GainEvaluator(diamond4, "fast", samples=300, source=RandomSource(5))
        assert ev1.average_gain([1]) == ev2.average_gain([1])

    def test_unbiased_deterministic_per_seed_and_order(self, diamond4):
        ev1 = GainEvaluator(diamond4, "unbiased", samples=500, source=RandomSource(9))
        ev2 = GainEvaluator(diamond4, "unbiased", samples=500, source=RandomSource(9))
        seq1 = [ev1.average_gain([0]), ev1.average_gain([1])]
        seq2 = [ev2.average_gain([0]), ev2.average_gain([1])]
        assert seq1 == seq2

    def test_exact_repeatable(self, diamond4):
        ev = GainEvaluator(diamond4, "exact")
        assert ev.average_gain([1]) == ev.average_gain([1]) == Fraction(4)

    def test_directed_graph_estimates_zero(self, diamond4_member):
        ev = GainEvaluator(diamond4_member, "unbiased", samples=10, source=RandomSource(1))
        assert ev.average_gain([0, 1]) == 0.0

    def test_sample_count_validation(self, diamond4):
        with pytest.raises(ValueError):
            GainEvaluator(diamond4, "unbiased")
        with pytest.raises(ValueError):
            GainEvaluator(diamond4, "bogus")


class TestSampleBounds:
    def test_required_samples_m0(self):
        assert required_samples(0.5, 0.5, 0) == 1

    def test_required_samples_formula(self):
        want = math.floor(5 * 2.1 / 0.01 * math.log(40)) + 1
        assert required_samples(0.1, 0.05, 5) == want == 3874

    def test_required_samples_delta_one(self):
        # at delta=1 only the ln 2 term remains
        assert required_samples(1.0, 1.0, 7) == math.floor(21 * math.log(2)) + 1

    def test_required_samples_validation(self):
        with pytest.raises(ValueError):
            required_samples(0.0, 0.5, 3)
        with pytest.raises(ValueError):
            required_samples(0.1, 0.0, 3)
        with pytest.raises(ValueError):
            required_samples(0.1, 1.5, 3)

    def test_guarantee_parameters(self):
        assert guarantee_parameters(0.4, 0.4, 1) == (0.1, 0.1)
        assert guarantee_parameters(0.4, 0.4, 2) == (0.05, 0.025)

    def test_guarantee_parameters_shrink(self):
        e1, d1 = guarantee_parameters(0.4, 0.4, 2)
        e2, d2 = guarantee_parameters(0.4, 0.4, 8)
        assert e2 < e1 and d2 < d1

    def test_guarantee_parameters_validation(self):
        with pytest.raises(ValueError):
            guarantee_parameters(0.0, 0.1, 2)
        with pytest.raises(ValueError):
            guarantee_parameters(0.1, 0.1, 0)


class TestGreedy:
    def test_single_edge_k1(self):
        g = single_edge()
        report = greedy_design(g, 1, GainEvaluator(g, "exact"))
        assert report.targets == [0] and report.objective_value == 1.0
        assert report.target_names == ["a"]

    def test_full_budget_resolves_all(self, diamond4):
        report = greedy_design(diamond4, 4, GainEvaluator(diamond4, "exact"))
        assert report.objective_value == len(diamond4.undirected)

    def test_k0(self, diamond4):
        report = greedy_design(diamond4, 0, GainEvaluator(diamond4, "exact"))
        assert report.targets == [] and report.per_step == []

    def test_diamond_k1_is_singleton_argmax(self, diamond4):
        singles = {v: enumeration_average(diamond4, [v]) for v in range(4)}
        best = max(singles.values())
        report = greedy_design(diamond4, 1, GainEvaluator(diamond4, "exact"))
        assert Fraction(report.objective_exact) == best
        assert report.targets[0] == min(v for v, val in singles.items() if val == best)

    def test_budget_validation(self, diamond4):
        with pytest.raises(BudgetError):
            greedy_design(diamond4, 5, GainEvaluator(diamond4, "exact"))

    def test_exact_marginals_nonnegative_nonincreasing(self):
        rng = random.Random(73)
        for stream in range(6):
            g = random_chordal(8, 0.3, stream, seed=23)
            report = greedy_design(g, 3, GainEvaluator(g, "exact"))
            deltas = [s.marginal for s in report.per_step]
            assert all(d >= 0 for d in deltas)
            assert all(deltas[i] >= deltas[i + 1] - 1e-12 for i in range(len(deltas) - 1))
            assert len(report.per_step) == len(report.targets) == 3

    def test_report_serializes(self, diamond4):
        report = greedy_design(diamond4, 2, GainEvaluator(diamond4, "exact"), seed=0)
        d = report.to_dict()
        assert d["targets"] == report.target_names
        assert d["evaluations"] == report.evaluations


class TestLazyGreedy:
    def test_matches_greedy_on_random_instances(self):
        rng = random.Random(79)
        for stream in range(8):
            g = random_chordal(rng.randint(6, 9), 0.3, stream, seed=29)
            k = rng.randint(1, 3)
            plain = greedy_design(g, k, GainEvaluator(g, "exact"))
            lazy = lazy_greedy_design(g, k, GainEvaluator(g, "exact"))
            assert lazy.targets == plain.targets
            assert lazy.evaluations <= plain.evaluations

    def test_k0(self, diamond4):
        report = lazy_greedy_design(diamond4, 0, GainEvaluator(diamond4, "exact"))
        assert report.targets == [] and report.evaluations == 0

    def test_saves_evaluations_somewhere(self):
        saved = 0
        for stream in range(8):
            g = random_chordal(9, 0.3, stream, seed=31)
            plain = greedy_design(g, 3, GainEvaluator(g, "exact"))
            lazy = lazy_greedy_design(g, 3, GainEvaluator(g, "exact"))
            if lazy.evaluations < plain.evaluations:
                saved += 1
        assert saved >= 4


class TestWorstCase:
    def test_empty_targets(self, diamond4):
        assert worst_case_gain(diamond4, []) == 0

    def test_single_edge(self):
        assert worst_case_gain(single_edge(), [0]) == 1

    def test_diamond_matches_enumeration(self, diamond4):
        for targets in ([0], [1], [0, 3], [1, 2]):
            members = enumerate_mec(diamond4)
            want = min(gain(diamond4, targets, m, trust_member=True) for m in members)
            assert worst_case_gain(diamond4, targets) == want

    def test_random_matches_enumeration(self):
        rng = random.Random(83)
        for _ in range(10):
            ess = random_essential(6, rng, density=0.5)
            targets = rng.sample(range(6), 2)
            members = enumerate_mec(ess)
            if not members:
                continue
            want = min(gain(ess, targets, m, trust_member=True) for m in members)
            assert worst_case_gain(ess, targets) == want


class TestBruteForce:
    def test_k0(self, diamond4):
        report = brute_force_design(diamond4, 0, "average")
        assert report.targets == [] and report.objective_value == 0.0

    def test_single_edge(self):
        report = brute_force_design(single_edge(), 1, "average")
        assert report.objective_value == 1.0

    def test_set_cap(self, diamond4):
        with pytest.raises(CapExceededError):
            brute_force_design(diamond4, 2, "average", max_sets=3)

    def test_greedy_within_guarantee(self):
        rng = random.Random(89)
        bound = 1 - 1 / math.e
        for stream in range(6):
            g = random_chordal(rng.randint(7, 10), 0.25, stream, seed=37)
            greedy = greedy_design(g, 2, GainEvaluator(g, "exact"))
            brute = brute_force_design(g, 2, "average")
            assert brute.objective_value >= greedy.objective_value - 1e-9
            assert greedy.objective_value >= bound * brute.objective_value - 1e-9

    def test_worst_objective(self, diamond4):
        report = brute_force_design(diamond4, 1, "worst")
        want = max(
            min(gain(diamond4, [v], m, trust_member=True) for m in enumerate_mec(diamond4))
            for v in range(4))
        assert report.objective_value == want
        assert report.objective == "worst"
