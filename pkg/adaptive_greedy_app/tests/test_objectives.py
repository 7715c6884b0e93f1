from unittest import mock

from django.test import SimpleTestCase

from adaptive_greedy_app.exceptions import IndexOutOfRange, InstanceTooLarge, ItemAlreadyObserved
from adaptive_greedy_app.objectives import (
    GainTable,
    Objective,
    check_adaptive_monotone,
    check_adaptive_submodular,
    coverage_objective,
    evaluate,
    expected_marginal_gain,
    modular_objective,
)
from adaptive_greedy_app.stochastic_model import (
    EMPTY,
    Model,
    Realization,
    enumerate_consistent,
    enumerate_partial_realizations,
)

from .fixtures import A, B, BAD, GOOD, conjunction, count, m1


def negative_size() -> Objective:
    return Objective("minus size", lambda selected, phi: -float(len(selected)))


class EvaluateTests(SimpleTestCase):
    def test_count(self):
        self.assertEqual(evaluate(count(), {A, B}, Realization((GOOD, BAD))), 1.0)

    def test_count_of_empty_set(self):
        self.assertEqual(evaluate(count(), set(), Realization((GOOD, GOOD))), 0.0)

    def test_and(self):
        self.assertEqual(evaluate(conjunction(), {A, B}, Realization((GOOD, GOOD))), 1.0)
        self.assertEqual(evaluate(conjunction(), {A}, Realization((GOOD, GOOD))), 0.0)

    def test_index_out_of_range(self):
        with self.assertRaises(IndexOutOfRange):
            evaluate(count(), {2}, Realization((GOOD, GOOD)))

    def test_weighted_coverage(self):
        objective = coverage_objective([[0, 1], [1, 2]], 3, weights=[1.0, 2.0, 4.0])
        phi = Realization((0, 1))
        self.assertEqual(evaluate(objective, {0, 1}, phi), 3.0)
        self.assertEqual(evaluate(objective, {0, 1}, Realization((0, 0))), 7.0)

    def test_overlapping_coverage(self):
        objective = coverage_objective([[0, 1], [1]], 2)
        phi = Realization((0, 0))
        self.assertEqual(evaluate(objective, {0}, phi), 2.0)
        self.assertEqual(evaluate(objective, {0, 1}, phi), 2.0)

    def test_coverage_rejects_elements_outside_universe(self):
        with self.assertRaises(ValueError):
            coverage_objective([[0, 3]], 2)


class ExpectedMarginalGainTests(SimpleTestCase):
    def test_count_gain_of_a_at_empty(self):
        self.assertAlmostEqual(expected_marginal_gain(m1(), count(), A, EMPTY), 0.5, places=12)

    def test_and_gain_of_b_at_empty_is_zero(self):
        self.assertEqual(expected_marginal_gain(m1(), conjunction(), B, EMPTY), 0.0)

    def test_and_gain_of_b_after_a_good(self):
        psi = EMPTY.extend(A, GOOD)
        self.assertAlmostEqual(expected_marginal_gain(m1(), conjunction(), B, psi), 0.5, places=12)

    def test_item_already_observed(self):
        with self.assertRaises(ItemAlreadyObserved):
            expected_marginal_gain(m1(), count(), A, EMPTY.extend(A, GOOD))

    def test_item_out_of_range(self):
        with self.assertRaises(IndexOutOfRange):
            expected_marginal_gain(m1(), count(), 5, EMPTY)

    def test_modular_gain_does_not_depend_on_observations(self):
        model = Model(
            [("lo", "mid", "hi"), ("no", "yes"), ("x", "y")],
            [(0.2, 0.5, 0.3), (0.4, 0.6), (0.75, 0.25)],
        )
        objective = modular_objective([[0.0, 1.0, 3.0], [0.0, 2.0], [5.0, 1.0]])
        for item in model.items:
            reference = expected_marginal_gain(model, objective, item, EMPTY)
            for psi in enumerate_partial_realizations(model):
                if item in psi:
                    continue
                self.assertAlmostEqual(
                    expected_marginal_gain(model, objective, item, psi), reference, delta=1e-9
                )

    def test_gain_table_memoizes(self):
        gains = GainTable(m1(), count())
        first = gains(A, EMPTY)
        self.assertEqual(gains(A, EMPTY), first)
        self.assertEqual(len(gains), 1)

    def test_gain_table_keeps_only_the_latest_worlds(self):
        with mock.patch(
            "adaptive_greedy_app.objectives.enumerate_consistent", wraps=enumerate_consistent
        ) as enumerate_spy:
            gains = GainTable(m1(), count())
            gains(A, EMPTY)
            gains(B, EMPTY)
            self.assertEqual(enumerate_spy.call_count, 1)
            observed = EMPTY.extend(A, GOOD)
            self.assertAlmostEqual(gains(B, observed), 0.5)
            self.assertEqual(enumerate_spy.call_count, 2)
            gains(B, EMPTY)
            self.assertEqual(enumerate_spy.call_count, 2)

    def test_gain_table_checks_the_item(self):
        gains = GainTable(m1(), count())
        with self.assertRaises(ItemAlreadyObserved):
            gains(A, EMPTY.extend(A, GOOD))
        with self.assertRaises(IndexOutOfRange):
            gains(5, EMPTY)


class CheckAdaptiveMonotoneTests(SimpleTestCase):
    def test_count_passes(self):
        report = check_adaptive_monotone(m1(), count())
        self.assertTrue(report.passed)
        self.assertGreater(report.cells_checked, 0)

    def test_decreasing_objective_fails_at_empty(self):
        report = check_adaptive_monotone(m1(), negative_size())
        self.assertFalse(report.passed)
        first = report.witnesses[0]
        self.assertEqual(first.psi, EMPTY)
        self.assertIsNone(first.psi_prime)
        self.assertEqual(first.item, A)
        self.assertAlmostEqual(first.gain_at_psi, -1.0)

    def test_single_item_pointwise_dominance(self):
        model = Model([("on", "off")], [(0.3, 0.7)])
        objective = Objective("bonus", lambda selected, phi: 2.0 if selected else 1.0)
        self.assertTrue(check_adaptive_monotone(model, objective).passed)

    def test_cap(self):
        model = Model([("x", "y")] * 6, [(0.5, 0.5)] * 6)
        with self.assertRaises(InstanceTooLarge) as ctx:
            check_adaptive_monotone(model, count(), cap=100)
        self.assertIn("too large to check exhaustively", str(ctx.exception))


class CheckAdaptiveSubmodularTests(SimpleTestCase):
    def test_count_passes(self):
        self.assertTrue(check_adaptive_submodular(m1(), count()).passed)

    def test_and_fails_with_the_expected_witness(self):
        report = check_adaptive_submodular(m1(), conjunction())
        self.assertFalse(report.passed)
        first = report.witnesses[0]
        self.assertEqual(first.psi, EMPTY)
        self.assertEqual(first.psi_prime, EMPTY.extend(A, GOOD))
        self.assertEqual(first.item, B)
        self.assertEqual(first.gain_at_psi, 0.0)
        self.assertAlmostEqual(first.gain_at_psi_prime, 0.5, places=12)

    def test_zero_objective_passes(self):
        zero = Objective("zero", lambda selected, phi: 0.0)
        model = Model([("x", "y", "z")] * 3, [(0.2, 0.3, 0.5)] * 3)
        self.assertTrue(check_adaptive_submodular(model, zero).passed)

    def test_witnesses_are_sorted(self):
        report = check_adaptive_submodular(m1(), conjunction())
        keys = [w.sort_key() for w in report.witnesses]
        self.assertEqual(keys, sorted(keys))

    def test_summary_uses_labels(self):
        report = check_adaptive_submodular(m1(), conjunction())
        summary = report.summary(m1())
        self.assertFalse(summary["passed"])
        self.assertEqual(summary["witnesses"][0]["psi_prime"], {"a": "good"})
        self.assertEqual(summary["witnesses"][0]["item"], "b")

    def test_weighted_coverage_passes(self):
        model = Model([("works", "fails")] * 3, [(0.3, 0.7), (0.6, 0.4), (0.85, 0.15)])
        objective = coverage_objective([[0, 1], [1, 2], [0]], 3, weights=[3.0, 1.0, 2.0])
        self.assertTrue(check_adaptive_monotone(model, objective).passed)
        self.assertTrue(check_adaptive_submodular(model, objective).passed)
