import itertools
from fractions import Fraction

from django.test import SimpleTestCase

from adaptive_greedy_app.constraints import estimate_p, is_independent
from adaptive_greedy_app.exceptions import GroundSizeMismatch, InvalidSpec
from adaptive_greedy_app.instances import (
    CONSTRAINT_FAMILIES,
    Instance,
    MatchmakingSpec,
    SmallInstanceCaps,
    make_coverage,
    make_matchmaking,
    random_small_instance,
)
from adaptive_greedy_app.objectives import (
    check_adaptive_monotone,
    check_adaptive_submodular,
    evaluate,
    expected_marginal_gain,
)
from adaptive_greedy_app.policies import PolicyConfig, expected_value_exact
from adaptive_greedy_app.stochastic_model import EMPTY, Realization

from .fixtures import SUITE_SEEDS, count, m1, uniform


class MakeCoverageTests(SimpleTestCase):
    def test_single_sure_item(self):
        instance = make_coverage(1, [([0], 1.0)])
        works = Realization((0,))
        self.assertEqual(evaluate(instance.objective, {0}, works), 1.0)
        self.assertEqual(instance.model.outcomes[0], ("works", "fails"))

    def test_gain_of_a_is_one_half(self):
        instance = make_coverage(2, [([0], 0.5), ([1], 0.5)])
        gain = expected_marginal_gain(instance.model, instance.objective, 0, EMPTY)
        self.assertAlmostEqual(gain, 0.5)

    def test_overlapping_sets(self):
        instance = make_coverage(2, [([0, 1], 1.0), ([1], 1.0)], k=2)
        phi = Realization((0, 0))
        self.assertEqual(evaluate(instance.objective, {0}, phi), 2.0)
        self.assertEqual(evaluate(instance.objective, {0, 1}, phi), 2.0)

    def test_default_system_is_uniform(self):
        instance = make_coverage(3, [([0], 0.5), ([1], 0.5), ([2], 0.5)], k=2)
        self.assertEqual(instance.system.kind, "uniform")
        self.assertEqual(instance.system.params["k"], 2)

    def test_passes_both_checkers(self):
        instance = make_coverage(3, [([0, 1], 0.3), ([1, 2], 0.6), ([2], 0.9)], k=2)
        self.assertTrue(check_adaptive_monotone(instance.model, instance.objective).passed)
        self.assertTrue(check_adaptive_submodular(instance.model, instance.objective).passed)

    def test_invalid_coverage_set(self):
        with self.assertRaises(InvalidSpec):
            make_coverage(2, [([0, 2], 0.5)])

    def test_invalid_probability(self):
        with self.assertRaises(InvalidSpec):
            make_coverage(2, [([0], 1.5)])


class InstanceTests(SimpleTestCase):
    def test_ground_sizes_must_agree(self):
        with self.assertRaises(GroundSizeMismatch):
            Instance(m1(), count(), uniform(1, n=3), "broken")

    def test_declared_p_must_be_positive(self):
        with self.assertRaises(InvalidSpec):
            Instance(m1(), count(), uniform(1), "broken", declared_p=0)


class MakeMatchmakingTests(SimpleTestCase):
    def test_two_by_two(self):
        instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
        self.assertEqual(instance.model.n_items, 4)
        self.assertEqual(instance.model.labels, ("L1-R1", "L1-R2", "L2-R1", "L2-R2"))
        self.assertEqual(instance.declared_p, Fraction(2))
        self.assertEqual(estimate_p(instance.system).p_value, 2)

    def test_single_sure_date_matches_both_people(self):
        instance = make_matchmaking(MatchmakingSpec(1, 1, 1, 1, 1.0))
        value = expected_value_exact(
            instance.model, instance.objective, instance.system, PolicyConfig()
        )
        self.assertEqual(value, 2.0)

    def test_declared_p_is_overridden_by_enumeration(self):
        with self.assertLogs("adaptive_greedy_app.instances", level="WARNING") as logs:
            instance = make_matchmaking(MatchmakingSpec(1, 2, 1, 1, 0.5))
        self.assertEqual(instance.declared_p, Fraction(1))
        self.assertIn("overridden", logs.output[0])

    def test_a_date_uses_capacity_whatever_its_outcome(self):
        instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
        self.assertFalse(is_independent(instance.system, {0, 1}))
        self.assertTrue(is_independent(instance.system, {0, 3}))

    def test_per_pair_probabilities(self):
        spec = MatchmakingSpec(2, 1, success_prob={(0, 0): 0.9, (1, 0): 0.2})
        instance = make_matchmaking(spec)
        self.assertAlmostEqual(instance.model.prior[0][0], 0.9)
        self.assertAlmostEqual(instance.model.prior[0][1], 0.1)
        self.assertAlmostEqual(instance.model.prior[1][0], 0.2)

    def test_objective_counts_matched_people(self):
        instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
        both_succeed = Realization((0, 0, 0, 0))
        self.assertEqual(evaluate(instance.objective, {0, 3}, both_succeed), 4.0)
        self.assertEqual(evaluate(instance.objective, {0}, both_succeed), 2.0)
        self.assertEqual(evaluate(instance.objective, {0, 3}, Realization((1, 0, 0, 0))), 2.0)

    def test_passes_both_checkers(self):
        instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
        self.assertTrue(check_adaptive_monotone(instance.model, instance.objective).passed)
        self.assertTrue(check_adaptive_submodular(instance.model, instance.objective).passed)

    def test_p_is_at_most_two(self):
        for left, right, cap_left, cap_right in itertools.product((1, 2, 3), (1, 2), (1, 2), (1,)):
            instance = make_matchmaking(MatchmakingSpec(left, right, cap_left, cap_right, 0.5))
            self.assertLessEqual(instance.declared_p, 2)
            if left >= 2 and right >= 2 and cap_left == 1:
                self.assertEqual(instance.declared_p, 2)

    def test_invalid_specs(self):
        for spec in (
            MatchmakingSpec(0, 2),
            MatchmakingSpec(2, 2, cap_left=0),
            MatchmakingSpec(1, 1, success_prob=1.5),
            MatchmakingSpec(1, 1, success_prob={(3, 0): 0.5}),
        ):
            with self.assertRaises(InvalidSpec):
                make_matchmaking(spec)


class RandomSmallInstanceTests(SimpleTestCase):
    def test_deterministic_in_seed(self):
        first, second = random_small_instance(4), random_small_instance(4)
        self.assertEqual(first.model, second.model)
        self.assertEqual(first.name, second.name)
        for s in itertools.product((False, True), repeat=first.model.n_items):
            chosen = {i for i, flag in enumerate(s) if flag}
            self.assertEqual(
                is_independent(first.system, chosen), is_independent(second.system, chosen)
            )

    def test_families_cycle_with_seed(self):
        for seed in range(6):
            family = random_small_instance(seed).name.rsplit("-", 1)[1]
            self.assertEqual(family, CONSTRAINT_FAMILIES[seed % 3])

    def test_quantized_probabilities(self):
        for seed in SUITE_SEEDS:
            for probs in random_small_instance(seed).model.prior:
                self.assertGreaterEqual(probs[0], 0.1 - 1e-12)
                self.assertLessEqual(probs[0], 0.9 + 1e-12)
                self.assertAlmostEqual(probs[0] * 20, round(probs[0] * 20), places=9)

    def test_respects_caps(self):
        caps = SmallInstanceCaps(min_items=3, max_items=3, max_universe=2)
        instance = random_small_instance(1, caps)
        self.assertEqual(instance.model.n_items, 3)
        self.assertLessEqual(instance.objective.params["universe_size"], 2)

    def test_rejects_caps_without_room_for_two_items(self):
        for caps in (
            dict(min_items=1, max_items=1),
            dict(min_items=4, max_items=3),
            dict(max_universe=1),
        ):
            with self.subTest(**caps):
                with self.assertRaises(InvalidSpec):
                    SmallInstanceCaps(**caps)

    def test_suite_passes_the_checkers_and_has_p_one_or_two(self):
        for seed in SUITE_SEEDS:
            instance = random_small_instance(seed)
            self.assertTrue(
                check_adaptive_submodular(instance.model, instance.objective).passed, seed
            )
            self.assertTrue(check_adaptive_monotone(instance.model, instance.objective).passed)
            p = estimate_p(instance.system).p_value
            self.assertIn(p, (1, 2), seed)
            if instance.declared_p is not None:
                self.assertEqual(instance.declared_p, p)
