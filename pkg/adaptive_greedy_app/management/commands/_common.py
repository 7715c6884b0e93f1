import json
import logging

from django.core.management.base import BaseCommand, CommandError

from adaptive_greedy_app.exceptions import AdaptiveGreedyError
from adaptive_greedy_app.instance_files import parse_instance

logger = logging.getLogger("adaptive_greedy_app.cli")

USAGE_EXIT_CODE = 2


def error_payload(message: str, kind: str, errors=None) -> str:
    payload = {"error": message, "kind": kind}
    if errors:
        payload["errors"] = errors
    return json.dumps(payload)


class InstanceCommand(BaseCommand):
    """Base for commands that read one instance file and print a JSON document."""

    def add_arguments(self, parser):
        parser.add_argument("--instance", required=True, help="Path to a JSON instance file")

    def handle(self, *args, **options):
        try:
            instance = parse_instance(options["instance"])
            document = self.run_instance(instance, options)
        except AdaptiveGreedyError as e:
            logger.error(f"{self.command_name()} failed: {e}")
            raise CommandError(
                error_payload(str(e), type(e).__name__, e.errors), returncode=e.exit_code
            )
        except ValueError as e:
            logger.error(f"{self.command_name()} rejected its arguments: {e}")
            raise CommandError(error_payload(str(e), "UsageError"), returncode=USAGE_EXIT_CODE)

        self.stdout.write(json.dumps(document, indent=2))
        self.after_output(document)

    def command_name(self) -> str:
        return self.__module__.rsplit(".", 1)[-1]

    def run_instance(self, instance, options):
        raise NotImplementedError

    def after_output(self, document) -> None:
        pass
