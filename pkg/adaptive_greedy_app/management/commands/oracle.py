import logging
import math

from adaptive_greedy_app.oracle import (
    adaptivity_gap,
    optimal_adaptive_value,
    optimal_nonadaptive_value,
)

from ._common import InstanceCommand

logger = logging.getLogger("adaptive_greedy_app.cli")


class Command(InstanceCommand):
    help = "Compute the optimal adaptive policy value of a small instance"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--nonadaptive",
            action="store_true",
            help="Also compute the best committed set and the adaptivity gap",
        )
        parser.add_argument(
            "--no-memo", action="store_true", help="Search the decision tree without memoization"
        )

    def run_instance(self, instance, options):
        model, objective, system = instance.model, instance.objective, instance.system
        result = optimal_adaptive_value(model, objective, system, use_memo=not options["no_memo"])
        document = {
            "instance": instance.name,
            "value": result.value,
            "explored_states": result.explored_states,
            "best_first_action": (
                None if result.best_first_action is None else model.label(result.best_first_action)
            ),
        }
        if options["nonadaptive"]:
            committed = optimal_nonadaptive_value(model, objective, system)
            gap = adaptivity_gap(result.value, committed.value)
            document["nonadaptive_value"] = committed.value
            document["nonadaptive_set"] = [model.label(item) for item in sorted(committed.best_set)]
            document["adaptivity_gap"] = None if math.isinf(gap) else gap
        logger.info(f"oracle on {instance.name}: value {result.value:.12g}")
        return document
