import logging
import math
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from .conf import library_setting
from .exceptions import IndexOutOfRange, InstanceTooLarge, ItemAlreadyObserved
from .stochastic_model import (
    Model,
    PartialRealization,
    Realization,
    enumerate_consistent,
    enumerate_partial_realizations,
    ensure_valid,
    subrealizations,
)

logger = logging.getLogger("adaptive_greedy_app.objectives")

Evaluator = Callable[[FrozenSet[int], Realization], float]
OutcomeChoice = Union[int, Sequence[int]]


@dataclass(frozen=True, eq=False)
class Objective:
    """A pointwise objective f(S, phi).

    kind and params describe built-in objectives so they can be written back to instance files;
    custom objectives keep kind "custom".
    """

    name: str
    evaluator: Evaluator
    kind: str = "custom"
    params: Mapping[str, Any] = field(default_factory=dict)

    def __call__(self, selected: FrozenSet[int], phi: Realization) -> float:
        return self.evaluator(selected, phi)


def evaluate(objective: Objective, selected: Iterable[int], phi: Realization) -> float:
    chosen = frozenset(selected)
    for item in chosen:
        if not 0 <= item < len(phi):
            raise IndexOutOfRange(f"item index {item} out of range for {len(phi)} items")
    return float(objective.evaluator(chosen, phi))


def _per_item(choice: OutcomeChoice, n_items: Optional[int]) -> Callable[[int], int]:
    if isinstance(choice, int):
        return lambda item: choice
    table = tuple(int(c) for c in choice)
    if n_items is not None and len(table) != n_items:
        raise ValueError(f"expected {n_items} success outcomes, got {len(table)}")
    return lambda item: table[item]


def count_objective(success_outcome: OutcomeChoice = 0, n_items: Optional[int] = None) -> Objective:
    """Number of selected items whose outcome is the success outcome (index 0 by default)."""
    success = _per_item(success_outcome, n_items)

    def count(selected: FrozenSet[int], phi: Realization) -> float:
        return float(sum(1 for item in selected if phi[item] == success(item)))

    return Objective(
        name="count", evaluator=count, kind="count", params={"success_outcome": success_outcome}
    )


def and_objective(items: Sequence[int], success_outcome: OutcomeChoice = 0) -> Objective:
    """1 iff every listed item is selected and successful. Not adaptive submodular."""
    required = tuple(items)
    success = _per_item(success_outcome, None)

    def conjunction(selected: FrozenSet[int], phi: Realization) -> float:
        if all(item in selected and phi[item] == success(item) for item in required):
            return 1.0
        return 0.0

    return Objective(
        name=f"and({', '.join(str(i) for i in required)})",
        evaluator=conjunction,
        kind="and",
        params={"items": required, "success_outcome": success_outcome},
    )


def modular_objective(values: Sequence[Sequence[float]]) -> Objective:
    """f(S, phi) = sum over e in S of values[e][phi(e)]."""
    table = tuple(tuple(float(v) for v in row) for row in values)

    def modular(selected: FrozenSet[int], phi: Realization) -> float:
        return math.fsum(table[item][phi[item]] for item in selected)

    return Objective(name="modular", evaluator=modular, kind="modular", params={"values": table})


def coverage_objective(
    coverage: Sequence[Iterable[int]],
    universe_size: int,
    weights: Optional[Sequence[float]] = None,
    working_outcome: OutcomeChoice = 0,
    name: str = "coverage",
    kind: str = "coverage",
    params: Optional[Mapping[str, Any]] = None,
) -> Objective:
    """
    Weighted stochastic coverage: total weight of universe elements covered by some selected
    item whose outcome is the working outcome.
    """
    sets = tuple(frozenset(int(x) for x in covered) for covered in coverage)
    for item, covered in enumerate(sets):
        bad = [x for x in covered if not 0 <= x < universe_size]
        if bad:
            raise ValueError(
                f"coverage set of item {item} has elements outside the universe: {bad}"
            )
    element_weights = tuple(float(w) for w in weights) if weights is not None else None
    if element_weights is not None and len(element_weights) != universe_size:
        raise ValueError(f"expected {universe_size} element weights, got {len(element_weights)}")
    works = _per_item(working_outcome, len(sets))

    def covered_weight(selected: FrozenSet[int], phi: Realization) -> float:
        covered = set()
        for item in selected:
            if phi[item] == works(item):
                covered |= sets[item]
        if element_weights is None:
            return float(len(covered))
        return math.fsum(element_weights[x] for x in sorted(covered))

    if params is None:
        params = {
            "universe_size": universe_size,
            "sets": tuple(tuple(sorted(s)) for s in sets),
            "weights": element_weights,
            "working_outcome": working_outcome,
        }
    return Objective(name=name, evaluator=covered_weight, kind=kind, params=params)


def expected_marginal_gain(
    model: Model,
    objective: Objective,
    item: int,
    psi: PartialRealization,
    cap: Optional[int] = None,
) -> float:
    """
    Conditional expected marginal benefit of item given psi, by exact enumeration of the
    realizations consistent with psi.
    """
    _check_candidate(model, item, psi)
    return _gain_over(objective, item, psi.domain, enumerate_consistent(model, psi, cap))


def _check_candidate(model: Model, item: int, psi: PartialRealization) -> None:
    if not 0 <= item < model.n_items:
        raise IndexOutOfRange(f"item index {item} out of range for {model.n_items} items")
    if item in psi:
        raise ItemAlreadyObserved(f"item already observed: {model.label(item)}")


def _gain_over(
    objective: Objective,
    item: int,
    base: FrozenSet[int],
    worlds: Sequence[Tuple[Realization, float]],
) -> float:
    grown = base | {item}
    return math.fsum(
        weight * (objective.evaluator(grown, phi) - objective.evaluator(base, phi))
        for phi, weight in worlds
    )


class GainTable:
    """
    Memoized expected_marginal_gain for one (model, objective) pair.

    Only the consistent worlds of the most recent psi are kept.
    """

    def __init__(self, model: Model, objective: Objective):
        self.model = model
        self.objective = objective
        self._gains: Dict[Tuple[int, Tuple[Tuple[int, int], ...]], float] = {}
        self._worlds_key: Optional[Tuple[Tuple[int, int], ...]] = None
        self._worlds: List[Tuple[Realization, float]] = []

    def _worlds_for(self, psi: PartialRealization) -> List[Tuple[Realization, float]]:
        if self._worlds_key != psi.key:
            self._worlds = enumerate_consistent(self.model, psi)
            self._worlds_key = psi.key
        return self._worlds

    def __call__(self, item: int, psi: PartialRealization) -> float:
        key = (item, psi.key)
        if key not in self._gains:
            _check_candidate(self.model, item, psi)
            self._gains[key] = _gain_over(
                self.objective, item, psi.domain, self._worlds_for(psi)
            )
        return self._gains[key]

    def __len__(self) -> int:
        return len(self._gains)


@dataclass(frozen=True)
class Witness:
    psi: PartialRealization
    psi_prime: Optional[PartialRealization]
    item: int
    gain_at_psi: float
    gain_at_psi_prime: Optional[float] = None

    def sort_key(self):
        prime_key = self.psi_prime.key if self.psi_prime is not None else ()
        return (self.psi.key, prime_key, self.item)

    def describe(self, model: Model) -> Dict[str, Any]:
        return {
            "psi": self.psi.describe(model),
            "psi_prime": self.psi_prime.describe(model) if self.psi_prime is not None else None,
            "item": model.label(self.item),
            "gain_at_psi": self.gain_at_psi,
            "gain_at_psi_prime": self.gain_at_psi_prime,
        }


@dataclass(frozen=True)
class CheckReport:
    property_name: str
    witnesses: Tuple[Witness, ...] = ()
    cells_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def summary(self, model: Model, limit: int = 10) -> Dict[str, Any]:
        return {
            "property": self.property_name,
            "passed": self.passed,
            "cells_checked": self.cells_checked,
            "violations": len(self.witnesses),
            "witnesses": [w.describe(model) for w in self.witnesses[:limit]],
        }


def _guard(model: Model, cap: Optional[int]) -> None:
    ensure_valid(model)
    cap = library_setting("CHECKER_STATE_CAP") if cap is None else cap
    states = (model.max_outcomes() + 1) ** model.n_items
    if states > cap:
        raise InstanceTooLarge(
            f"instance too large to check exhaustively: {states} partial realizations exceed "
            f"the cap of {cap}"
        )


def check_adaptive_monotone(
    model: Model,
    objective: Objective,
    cap: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """Every conditional expected marginal benefit must be nonnegative."""
    _guard(model, cap)
    tolerance = library_setting("GAIN_TOLERANCE") if tolerance is None else tolerance
    gains = GainTable(model, objective)

    witnesses: List[Witness] = []
    cells = 0
    for psi in enumerate_partial_realizations(model):
        for item in model.items:
            if item in psi:
                continue
            cells += 1
            gain = gains(item, psi)
            if gain < -tolerance:
                witnesses.append(Witness(psi, None, item, gain))

    witnesses.sort(key=Witness.sort_key)
    logger.debug(
        f"Adaptive monotonicity of {objective.name}: {cells} cells, {len(witnesses)} violations"
    )
    return CheckReport("adaptive_monotone", tuple(witnesses), cells)


def check_adaptive_submodular(
    model: Model,
    objective: Objective,
    cap: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> CheckReport:
    """Gains must not grow when psi is refined to any psi' that extends it."""
    _guard(model, cap)
    tolerance = library_setting("GAIN_TOLERANCE") if tolerance is None else tolerance
    gains = GainTable(model, objective)

    witnesses: List[Witness] = []
    cells = 0
    for psi_prime in enumerate_partial_realizations(model):
        candidates = [item for item in model.items if item not in psi_prime]
        if not candidates:
            continue
        for psi in subrealizations(psi_prime):
            if psi == psi_prime:
                continue
            for item in candidates:
                cells += 1
                coarse = gains(item, psi)
                fine = gains(item, psi_prime)
                if coarse < fine - tolerance:
                    witnesses.append(Witness(psi, psi_prime, item, coarse, fine))

    witnesses.sort(key=Witness.sort_key)
    logger.debug(
        f"Adaptive submodularity of {objective.name}: {cells} cells over {len(gains)} gains, "
        f"{len(witnesses)} violations"
    )
    return CheckReport("adaptive_submodular", tuple(witnesses), cells)
