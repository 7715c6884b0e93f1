import json
import logging
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from rest_framework.exceptions import ErrorDetail

from .conf import library_setting
from .constraints import (
    IndependenceSystem,
    estimate_p,
    intersect,
    partition_matroid,
    uniform_matroid,
)
from .exceptions import (
    AdaptiveGreedyError,
    InstanceFileError,
    InstanceValidationError,
    ParseError,
    UnknownObjectiveKind,
)
from .instances import (
    Instance,
    MatchmakingSpec,
    SmallInstanceCaps,
    make_matchmaking,
    random_small_instance,
)
from .objectives import (
    Objective,
    and_objective,
    count_objective,
    coverage_objective,
    modular_objective,
)
from .serializers import InstanceFileSerializer
from .stochastic_model import Model, validate_model

logger = logging.getLogger("adaptive_greedy_app.instance_files")

CAP_FIELDS = ("min_items", "max_items", "max_universe")


def flatten_errors(detail: Any, location: str = "") -> List[Dict[str, str]]:
    """Turn nested serializer errors into a flat list of {location, message, code}."""
    where = location or "<root>"
    if isinstance(detail, ErrorDetail):
        return [{"location": where, "message": str(detail), "code": detail.code}]
    if isinstance(detail, str):
        return [{"location": where, "message": detail, "code": "invalid"}]
    if isinstance(detail, Mapping):
        flat = []
        for key, value in detail.items():
            # ListField child errors are keyed by int position
            key = str(key)
            if key == "non_field_errors":
                flat.extend(flatten_errors(value, location))
            elif key.isdigit():
                flat.extend(flatten_errors(value, f"{location}[{key}]"))
            else:
                flat.extend(flatten_errors(value, f"{location}.{key}" if location else key))
        return flat
    if isinstance(detail, list):
        if all(isinstance(entry, (ErrorDetail, str)) for entry in detail):
            flat = []
            for entry in detail:
                flat.extend(flatten_errors(entry, location))
            return flat
        flat = []
        for position, entry in enumerate(detail):
            if entry:
                flat.extend(flatten_errors(entry, f"{location}[{position}]"))
        return flat
    return [{"location": where, "message": str(detail), "code": "invalid"}]


def parse_instance(path: Union[str, Path]) -> Instance:
    """
    Read and validate an instance file.

    Raises:
        ParseError: unreadable file, malformed JSON, or a schema violation
        UnknownObjectiveKind: the objective kind is not one of the built-ins
        InstanceValidationError: the document is well formed but a domain invariant fails
    """
    path = Path(path)
    logger.debug(f"Reading instance file: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"parse error at {path}: {e.strerror}") from e
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"parse error at line {e.lineno} column {e.colno}: {e.msg}") from e
    return load_instance(document, default_name=path.stem)


def load_instance(document: Any, default_name: str = "instance") -> Instance:
    if not isinstance(document, dict):
        raise ParseError("parse error at <root>: expected a JSON object")

    serializer = InstanceFileSerializer(data=document)
    if not serializer.is_valid():
        errors = flatten_errors(serializer.errors)
        logger.error(f"Instance document rejected with {len(errors)} errors")
        for error in errors:
            if error["code"] == "unknown_kind":
                raise UnknownObjectiveKind(error["message"], errors=errors)
        first = errors[0]
        raise ParseError(f"parse error at {first['location']}: {first['message']}", errors=errors)

    try:
        instance = build_instance(serializer.validated_data, default_name)
    except InstanceFileError:
        raise
    except (AdaptiveGreedyError, ValueError) as e:
        logger.error(f"Instance validation failed: {e}")
        raise InstanceValidationError(
            f"validation failed: {e}", errors=getattr(e, "errors", None)
        ) from e

    logger.info(
        f"Loaded instance {instance.name}: {instance.model.n_items} items, "
        f"objective {instance.objective.name}, constraint {instance.system.name}"
    )
    return instance


def _outcome_indices(model: Model, choice: Optional[Union[str, List[str]]]) -> List[int]:
    if choice is None:
        return [0] * model.n_items
    if isinstance(choice, str):
        return [model.outcome_index(item, choice) for item in model.items]
    if len(choice) != model.n_items:
        raise ValueError(f"expected {model.n_items} outcome labels, got {len(choice)}")
    return [model.outcome_index(item, label) for item, label in zip(model.items, choice)]


def _build_objective(data: Mapping[str, Any], model: Model) -> Objective:
    kind = data["kind"]
    if kind == "count":
        return count_objective(_outcome_indices(model, data.get("success_outcome")), model.n_items)
    if kind == "and":
        items = [model.item_index(label) for label in data["items"]]
        return and_objective(items, _outcome_indices(model, data.get("success_outcome")))
    if kind == "coverage":
        for label in data["sets"]:
            model.item_index(label)
        sets = [data["sets"].get(model.label(item), []) for item in model.items]
        return coverage_objective(
            sets,
            data["universe_size"],
            weights=data.get("weights"),
            working_outcome=_outcome_indices(model, data.get("working_outcome")),
        )
    if kind == "modular":
        values = []
        for item in model.items:
            row = data["values"].get(model.label(item))
            if row is None or len(row) != len(model.outcomes[item]):
                raise ValueError(
                    f"modular values for item {model.label(item)} need one per outcome"
                )
            values.append(row)
        return modular_objective(values)
    raise UnknownObjectiveKind(f"unknown objective kind '{kind}'")


def _build_constraint(data: Mapping[str, Any], model: Model) -> IndependenceSystem:
    kind = data["kind"]
    if kind == "uniform":
        return uniform_matroid(model.n_items, data["k"])
    if kind == "partition":
        blocks = [[model.item_index(label) for label in block] for block in data["blocks"]]
        return partition_matroid(model.n_items, blocks, data["capacities"])
    return intersect([_build_constraint(member, model) for member in data["members"]])


def _confirm_declared_p(instance: Instance) -> Instance:
    if instance.declared_p is None:
        return instance
    if instance.system.ground_size > library_setting("P_ESTIMATE_MAX_GROUND"):
        return instance
    found = estimate_p(instance.system).p_value
    if found != instance.declared_p:
        raise InstanceValidationError(
            f"declared p {instance.declared_p} but enumeration gives {found}"
        )
    return instance


def build_instance(data: Mapping[str, Any], default_name: str = "instance") -> Instance:
    """Construct an Instance from validated instance-file data."""
    if "generator" in data:
        generator = data["generator"]
        caps = SmallInstanceCaps(
            **{k: generator[k] for k in CAP_FIELDS if k in generator}
        )
        instance = random_small_instance(generator["seed"], caps)
        if "name" in data:
            instance = _renamed(instance, data["name"])
        return instance

    name = data.get("name", default_name)
    objective_data = data["objective"]
    if objective_data["kind"] == "matchmaking":
        spec = MatchmakingSpec(**objective_data["spec"])
        instance = _renamed(make_matchmaking(spec), data.get("name"))
        if data.get("declared_p") is not None:
            instance = Instance(
                instance.model,
                instance.objective,
                instance.system,
                instance.name,
                data["declared_p"],
                instance.matchmaking,
            )
        return _confirm_declared_p(instance)

    items = data["items"]
    model = Model(
        outcomes=[item["outcomes"] for item in items],
        prior=[item["probabilities"] for item in items],
        labels=[item["label"] for item in items],
    )
    validate_model(model).raise_if_invalid()
    objective = _build_objective(objective_data, model)
    system = _build_constraint(data["constraint"], model)
    return _confirm_declared_p(Instance(model, objective, system, name, data.get("declared_p")))


def _renamed(instance: Instance, name: Optional[str]) -> Instance:
    if not name:
        return instance
    return Instance(
        instance.model,
        instance.objective,
        instance.system,
        name,
        instance.declared_p,
        instance.matchmaking,
    )


def _outcome_labels(model: Model, choice: Any) -> Union[str, List[str]]:
    indices = [choice] * model.n_items if isinstance(choice, int) else list(choice)
    labels = [model.outcome_label(item, o) for item, o in zip(model.items, indices)]
    return labels[0] if len(set(labels)) == 1 else labels


def _dump_objective(objective: Objective, model: Model) -> Dict[str, Any]:
    params = objective.params
    if objective.kind == "count":
        success = _outcome_labels(model, params["success_outcome"])
        return {"kind": "count", "success_outcome": success}
    if objective.kind == "and":
        return {
            "kind": "and",
            "items": [model.label(item) for item in params["items"]],
            "success_outcome": _outcome_labels(model, params["success_outcome"]),
        }
    if objective.kind == "coverage":
        document = {
            "kind": "coverage",
            "universe_size": params["universe_size"],
            "sets": {model.label(item): list(s) for item, s in enumerate(params["sets"])},
            "working_outcome": _outcome_labels(model, params["working_outcome"]),
        }
        if params.get("weights") is not None:
            document["weights"] = list(params["weights"])
        return document
    if objective.kind == "modular":
        return {
            "kind": "modular",
            "values": {model.label(item): list(row) for item, row in enumerate(params["values"])},
        }
    raise InstanceFileError(f"cannot serialize objective kind '{objective.kind}'")


def _dump_constraint(system: IndependenceSystem, model: Model) -> Dict[str, Any]:
    if system.kind == "uniform":
        return {"kind": "uniform", "k": system.params["k"]}
    if system.kind == "partition":
        return {
            "kind": "partition",
            "blocks": [[model.label(item) for item in block] for block in system.params["blocks"]],
            "capacities": list(system.params["capacities"]),
        }
    if system.kind == "intersection":
        return {
            "kind": "intersection",
            "members": [_dump_constraint(member, model) for member in system.members],
        }
    raise InstanceFileError(f"cannot serialize constraint kind '{system.kind}'")


def dump_instance(instance: Instance) -> Dict[str, Any]:
    """The instance-file document that parses back to an equivalent Instance."""
    document: Dict[str, Any] = {"name": instance.name}
    if instance.matchmaking is not None:
        document["objective"] = {"kind": "matchmaking", "spec": instance.matchmaking.as_dict()}
    else:
        model = instance.model
        document["items"] = [
            {
                "label": model.label(item),
                "outcomes": list(model.outcomes[item]),
                "probabilities": list(model.prior[item]),
            }
            for item in model.items
        ]
        document["objective"] = _dump_objective(instance.objective, model)
        document["constraint"] = _dump_constraint(instance.system, model)
    if instance.declared_p is not None:
        document["declared_p"] = str(Fraction(instance.declared_p))
    return document


def write_atomic(path: Union[str, Path], text: str) -> None:
    """Write text to a temporary file next to path, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temporary, path)
    except Exception:
        if os.path.exists(temporary):
            os.remove(temporary)
        raise


def write_instance(instance: Instance, path: Union[str, Path]) -> None:
    write_atomic(path, json.dumps(dump_instance(instance), indent=2) + "\n")
