import logging

from django.core.management.base import CommandError

from adaptive_greedy_app.constraints import check_downward_closed, estimate_p
from adaptive_greedy_app.exceptions import InstanceTooLarge, NotDownwardClosed
from adaptive_greedy_app.objectives import check_adaptive_monotone, check_adaptive_submodular
from adaptive_greedy_app.stochastic_model import validate_model

from ._common import InstanceCommand, error_payload

logger = logging.getLogger("adaptive_greedy_app.cli")

CHECK_FAILED_EXIT_CODE = 1


def _skipped(error: Exception) -> dict:
    return {"skipped": True, "reason": str(error)}


class Command(InstanceCommand):
    help = (
        "Validate the model, verify downward closure, compute p and run the adaptive "
        "monotonicity and submodularity checkers"
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--tolerance", type=float, default=None)

    def run_instance(self, instance, options):
        model, system = instance.model, instance.system
        tolerance = options["tolerance"]
        report = {"instance": instance.name, "items": model.n_items}
        failures = []

        validation = validate_model(model)
        report["model"] = {
            "valid": validation.valid,
            "item": validation.item,
            "reason": validation.reason,
        }
        if not validation:
            failures.append("model")

        try:
            closure = check_downward_closed(system)
            report["downward_closed"] = {
                "closed": closure.closed,
                "witness": [sorted(s) for s in closure.witness] if closure.witness else None,
            }
            if not closure:
                failures.append("downward_closed")
        except InstanceTooLarge as e:
            report["downward_closed"] = _skipped(e)

        try:
            report["p"] = estimate_p(system).summary()
        except (InstanceTooLarge, NotDownwardClosed) as e:
            report["p"] = _skipped(e)
        report["declared_p"] = None if instance.declared_p is None else str(instance.declared_p)

        for name, checker in (
            ("adaptive_monotone", check_adaptive_monotone),
            ("adaptive_submodular", check_adaptive_submodular),
        ):
            try:
                result = checker(model, instance.objective, tolerance=tolerance)
                report[name] = result.summary(model)
                if not result.passed:
                    failures.append(name)
            except InstanceTooLarge as e:
                report[name] = _skipped(e)

        report["failed_checks"] = failures
        report["passed"] = not failures
        logger.info(
            f"check_instance on {instance.name}: "
            f"{'passed' if not failures else 'failed ' + ', '.join(failures)}"
        )
        return report

    def after_output(self, document) -> None:
        if not document["passed"]:
            raise CommandError(
                error_payload(
                    f"checks failed: {', '.join(document['failed_checks'])}", "CheckFailed"
                ),
                returncode=CHECK_FAILED_EXIT_CODE,
            )
