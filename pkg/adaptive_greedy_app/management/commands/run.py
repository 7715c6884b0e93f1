import logging

from adaptive_greedy_app.conf import library_setting
from adaptive_greedy_app.experiments import EVAL_MODES, run_experiment
from adaptive_greedy_app.policies import PolicyConfig, PolicyKind

from ._common import InstanceCommand

logger = logging.getLogger("adaptive_greedy_app.cli")


class Command(InstanceCommand):
    help = "Evaluate a policy on an instance and optionally append the result to a CSV file"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--policy",
            choices=[kind.value for kind in PolicyKind],
            default=PolicyKind.ADAPTIVE_GREEDY.value,
        )
        parser.add_argument("--eval", dest="eval_mode", choices=EVAL_MODES, default="exact")
        parser.add_argument("--samples", type=int, default=1000, help="Monte Carlo sample count")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument(
            "--oracle", action="store_true", help="Also compute the optimal policy values"
        )
        parser.add_argument("--out", help="CSV file to append the experiment record to")
        parser.add_argument(
            "--record", action="store_true", help="Store the run in the experiment database"
        )
        parser.add_argument("--tolerance", type=float, default=None)
        parser.add_argument(
            "--fill-maximal",
            action="store_true",
            help="Keep selecting while feasible items remain, even at zero gain",
        )

    def run_instance(self, instance, options):
        tolerance = options["tolerance"]
        config = PolicyConfig(
            policy_kind=options["policy"],
            stop_on_zero_gain=not options["fill_maximal"],
            tolerance=library_setting("GAIN_TOLERANCE") if tolerance is None else tolerance,
            seed=options["seed"],
        )
        result = run_experiment(
            instance,
            config,
            eval_mode=options["eval_mode"],
            samples=options["samples"],
            seed=options["seed"],
            with_oracle=options["oracle"],
            out=options["out"],
            record=options["record"],
        )
        logger.info(f"run finished for {instance.name} in {result.runtime_ms:.1f} ms")
        document = result.as_dict()
        document["meets_bound"] = result.meets_bound
        return document
