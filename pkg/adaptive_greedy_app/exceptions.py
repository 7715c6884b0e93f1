from typing import Any, Dict, List, Optional


class AdaptiveGreedyError(Exception):
    exit_code = 1

    def __init__(self, message: str, errors: Optional[List[Dict[str, Any]]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.errors = errors or []

    def __str__(self) -> str:
        return self.message


class ModelValidationError(AdaptiveGreedyError):
    pass


class ZeroProbabilityObservation(AdaptiveGreedyError):
    pass


class IndexOutOfRange(AdaptiveGreedyError):
    pass


class ItemAlreadyObserved(AdaptiveGreedyError):
    pass


class InstanceTooLarge(AdaptiveGreedyError):
    pass


class GroundSizeMismatch(AdaptiveGreedyError):
    pass


class NotDownwardClosed(AdaptiveGreedyError):
    pass


class InvalidSpec(AdaptiveGreedyError):
    pass


class PolicyError(AdaptiveGreedyError):
    pass


class NoPAvailable(AdaptiveGreedyError):
    pass


class InstanceFileError(AdaptiveGreedyError):
    exit_code = 2


class ParseError(InstanceFileError):
    pass


class UnknownObjectiveKind(InstanceFileError):
    pass


class InstanceValidationError(AdaptiveGreedyError):
    """Instance file parsed but a domain invariant failed."""
