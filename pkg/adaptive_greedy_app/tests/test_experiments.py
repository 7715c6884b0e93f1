import tempfile
from fractions import Fraction
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase, TestCase

from adaptive_greedy_app.constraints import uniform_matroid
from adaptive_greedy_app.exceptions import NoPAvailable, ParseError
from adaptive_greedy_app.experiments import (
    CSV_HEADER,
    ExperimentRecord,
    append_records,
    approximation_ratio,
    format_number,
    read_records,
    record_from_row,
    resolve_p,
    run_experiment,
)
from adaptive_greedy_app.instances import (
    Instance,
    MatchmakingSpec,
    make_matchmaking,
)
from adaptive_greedy_app.models import ExperimentRun
from adaptive_greedy_app.objectives import count_objective
from adaptive_greedy_app.policies import PolicyConfig, PolicyKind
from adaptive_greedy_app.stochastic_model import Model

from .fixtures import count, m1, uniform

GREEDY = PolicyConfig()


def m1_instance(k=1):
    return Instance(m1(), count(), uniform(k), "m1-count")


def sure_single_item():
    model = Model([("good", "bad")], [(1.0, 0.0)], labels=["only"])
    return Instance(model, count_objective(0), uniform_matroid(1, 1), "single")


class FormattingTests(SimpleTestCase):
    def test_twelve_significant_digits(self):
        self.assertEqual(format_number(1 / 3), "0.333333333333")
        self.assertEqual(format_number(2.0), "2")
        self.assertEqual(format_number(Fraction(3, 2)), "1.5")
        self.assertEqual(format_number(None), "")

    def test_ratio_with_zero_optimum(self):
        self.assertEqual(approximation_ratio(0.0, 0.0), 1.0)
        self.assertEqual(approximation_ratio(0.25, 0.5), 0.5)


class ResolvePTests(SimpleTestCase):
    def test_enumerates_small_grounds(self):
        self.assertEqual(resolve_p(m1_instance()), 1)

    @mock.patch("adaptive_greedy_app.experiments.library_setting", return_value=1)
    def test_falls_back_to_declared_p(self, _setting):
        instance = Instance(m1(), count(), uniform(1), "declared", declared_p=Fraction(5, 2))
        self.assertEqual(resolve_p(instance), Fraction(5, 2))

    @mock.patch("adaptive_greedy_app.experiments.library_setting", return_value=1)
    def test_no_p_available(self, _setting):
        with self.assertRaises(NoPAvailable) as ctx:
            resolve_p(m1_instance())
        self.assertIn("no p available", str(ctx.exception))


class RunExperimentTests(SimpleTestCase):
    def test_m1_count_k1(self):
        result = run_experiment(m1_instance(), GREEDY, with_oracle=True)
        self.assertAlmostEqual(result.policy_value, 0.5)
        self.assertAlmostEqual(result.opt_adaptive, 0.5)
        self.assertAlmostEqual(result.ratio, 1.0)
        self.assertEqual(result.bound, 0.5)
        self.assertEqual(result.p_value, 1)
        self.assertIsNone(result.samples)
        self.assertTrue(result.meets_bound)

    def test_matchmaking_meets_one_third(self):
        instance = make_matchmaking(MatchmakingSpec(2, 2, 1, 1, 0.5))
        result = run_experiment(instance, GREEDY, with_oracle=True)
        self.assertEqual(result.p_value, 2)
        self.assertAlmostEqual(result.bound, 1 / 3)
        self.assertGreaterEqual(result.ratio, 1 / 3 - 1e-9)
        self.assertIsNotNone(result.opt_nonadaptive)

    def test_single_item_ratio_is_one(self):
        result = run_experiment(sure_single_item(), GREEDY, with_oracle=True)
        self.assertEqual(result.ratio, 1.0)

    def test_without_oracle(self):
        result = run_experiment(m1_instance(), GREEDY)
        self.assertIsNone(result.opt_adaptive)
        self.assertIsNone(result.ratio)
        self.assertIsNone(result.meets_bound)

    def test_monte_carlo(self):
        result = run_experiment(m1_instance(), GREEDY, eval_mode="mc", samples=2000, seed=3)
        self.assertEqual(result.samples, 2000)
        self.assertIsNotNone(result.policy_stderr)
        self.assertLessEqual(abs(result.policy_value - 0.5), 4 * result.policy_stderr)

    def test_unknown_eval_mode(self):
        with self.assertRaises(ValueError):
            run_experiment(m1_instance(), GREEDY, eval_mode="approximate")

    def test_random_feasible_baseline(self):
        config = PolicyConfig(policy_kind=PolicyKind.RANDOM_FEASIBLE, seed=1)
        result = run_experiment(m1_instance(k=2), config, with_oracle=True)
        self.assertAlmostEqual(result.policy_value, 1.0)
        self.assertEqual(result.policy_kind, "random_feasible")


class CsvOutputTests(SimpleTestCase):
    def test_header_and_rows(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "results.csv"
            run_experiment(m1_instance(), GREEDY, with_oracle=True, out=out)
            run_experiment(m1_instance(k=2), GREEDY, out=out)
            lines = out.read_text(encoding="utf-8").splitlines()
            rows = read_records(out)
        self.assertEqual(lines[0], ",".join(CSV_HEADER))
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0]["p"], "1")
        self.assertEqual(rows[0]["ratio"], "1")
        self.assertEqual(rows[0]["bound"], "0.5")
        self.assertEqual(rows[0]["samples"], "")
        self.assertEqual(rows[1]["opt_adaptive"], "")
        self.assertEqual(rows[1]["policy_value"], "1")

    def test_rows_parse_back_to_records(self):
        result = run_experiment(m1_instance(), GREEDY, with_oracle=True)
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "results.csv"
            append_records(out, [result])
            parsed = record_from_row(read_records(out)[0])
        self.assertEqual(parsed.instance_name, "m1-count")
        self.assertEqual(parsed.p_value, Fraction(1))
        self.assertAlmostEqual(parsed.ratio, result.ratio)
        self.assertGreaterEqual(parsed.ratio, parsed.bound - 1e-9)

    def test_rejects_foreign_csv(self):
        result = ExperimentRecord("x", "adaptive_greedy", Fraction(1), None, None, 1.0, None, 0.5,
                                  "exact", None, 0, 1.0)
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "other.csv"
            out.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
            with self.assertRaises(ParseError):
                append_records(out, [result])
            self.assertEqual(out.read_text(encoding="utf-8"), "a,b,c\n1,2,3\n")


class RecordedRunTests(TestCase):
    def test_completed_run_is_stored(self):
        result = run_experiment(m1_instance(), GREEDY, with_oracle=True, record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, "completed")
        self.assertEqual(run.instance_name, "m1-count")
        self.assertEqual(run.p_value, "1")
        self.assertEqual(run.to_record(), result)

    @mock.patch("adaptive_greedy_app.experiments.library_setting", return_value=1)
    def test_failed_run_keeps_the_error(self, _setting):
        with self.assertRaises(NoPAvailable):
            run_experiment(m1_instance(), GREEDY, record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, "failed")
        self.assertIn("no p available", run.error_message[0]["error"])

    def test_incomplete_run_has_no_record(self):
        run = ExperimentRun.objects.create(
            instance_name="pending", policy_kind="adaptive_greedy", eval_mode="exact"
        )
        with self.assertRaises(ValueError):
            run.to_record()
