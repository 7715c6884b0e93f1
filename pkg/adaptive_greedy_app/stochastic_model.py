import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import (
    IndexOutOfRange,
    InstanceTooLarge,
    ItemAlreadyObserved,
    ModelValidationError,
    ZeroProbabilityObservation,
)

logger = logging.getLogger("adaptive_greedy_app.model")

PROBABILITY_TOLERANCE = 1e-9

ItemRef = Union[int, str]


@dataclass(frozen=True)
class Model:
    """Items with finite outcome sets and independent priors.

    Items and outcomes are dense indices; labels only matter for presentation and for
    instance files.
    """

    outcomes: Tuple[Tuple[str, ...], ...]
    prior: Tuple[Tuple[float, ...], ...]
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(
            self, "outcomes", tuple(tuple(str(o) for o in row) for row in self.outcomes)
        )
        object.__setattr__(self, "prior", tuple(tuple(float(p) for p in row) for row in self.prior))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))

    @property
    def n_items(self) -> int:
        return len(self.outcomes)

    @property
    def items(self) -> range:
        return range(self.n_items)

    def label(self, item: int) -> str:
        if self.labels is not None and item < len(self.labels):
            return self.labels[item]
        return str(item)

    def item_index(self, ref: ItemRef) -> int:
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            if 0 <= int(ref) < self.n_items:
                return int(ref)
            raise IndexOutOfRange(f"item index {ref} out of range for {self.n_items} items")
        if self.labels is not None and ref in self.labels:
            return self.labels.index(ref)
        raise IndexOutOfRange(f"unknown item label '{ref}'")

    def outcome_index(self, item: int, ref: ItemRef) -> int:
        names = self.outcomes[item]
        if isinstance(ref, (int, np.integer)) and not isinstance(ref, bool):
            if 0 <= int(ref) < len(names):
                return int(ref)
            raise IndexOutOfRange(f"outcome index {ref} out of range for item {self.label(item)}")
        if ref in names:
            return names.index(ref)
        raise IndexOutOfRange(f"unknown outcome '{ref}' for item {self.label(item)}")

    def outcome_label(self, item: int, outcome: int) -> str:
        return self.outcomes[item][outcome]

    def support(self, item: int) -> Tuple[int, ...]:
        """Outcome indices with positive prior probability."""
        return tuple(o for o, p in enumerate(self.prior[item]) if p > 0.0)

    def realization_count(self) -> int:
        return math.prod(len(row) for row in self.outcomes)

    def max_outcomes(self) -> int:
        return max((len(row) for row in self.outcomes), default=0)

    def realization(self, assignment: Mapping[ItemRef, ItemRef]) -> "Realization":
        """Build a total Realization from an item -> outcome mapping (labels or indices)."""
        resolved = self._resolve(assignment)
        missing = [self.label(i) for i in self.items if i not in resolved]
        if missing:
            raise IndexOutOfRange(f"realization is missing items: {', '.join(missing)}")
        return Realization(tuple(resolved[i] for i in self.items))

    def partial(self, observed: Optional[Mapping[ItemRef, ItemRef]] = None) -> "PartialRealization":
        return PartialRealization.from_mapping(self._resolve(observed or {}))

    def _resolve(self, mapping: Mapping[ItemRef, ItemRef]) -> Dict[int, int]:
        resolved = {}
        for item_ref, outcome_ref in mapping.items():
            item = self.item_index(item_ref)
            resolved[item] = self.outcome_index(item, outcome_ref)
        return resolved


@dataclass(frozen=True)
class Realization:
    """A total assignment of one outcome index to every item."""

    assignment: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(o) for o in self.assignment))

    def __getitem__(self, item: int) -> int:
        return self.assignment[item]

    def __len__(self) -> int:
        return len(self.assignment)


@dataclass(frozen=True)
class PartialRealization:
    """Observations so far, stored canonically as sorted (item, outcome) pairs."""

    observed: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        pairs = tuple(sorted((int(i), int(o)) for i, o in self.observed))
        items = [i for i, _ in pairs]
        if len(set(items)) != len(items):
            raise ValueError(f"partial realization observes an item twice: {pairs}")
        object.__setattr__(self, "observed", pairs)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int]) -> "PartialRealization":
        return cls(tuple(mapping.items()))

    @property
    def key(self) -> Tuple[Tuple[int, int], ...]:
        return self.observed

    @property
    def domain(self) -> FrozenSet[int]:
        return frozenset(i for i, _ in self.observed)

    def __contains__(self, item: int) -> bool:
        return any(i == item for i, _ in self.observed)

    def __len__(self) -> int:
        return len(self.observed)

    def get(self, item: int) -> Optional[int]:
        for i, o in self.observed:
            if i == item:
                return o
        return None

    def as_dict(self) -> Dict[int, int]:
        return dict(self.observed)

    def extend(self, item: int, outcome: int) -> "PartialRealization":
        if item in self:
            raise ItemAlreadyObserved(f"item {item} already observed")
        return PartialRealization(self.observed + ((item, outcome),))

    def is_consistent_with(self, phi: Realization) -> bool:
        return all(phi[i] == o for i, o in self.observed)

    def is_subrealization_of(self, other: "PartialRealization") -> bool:
        """True iff dom(self) is contained in dom(other) and both agree on dom(self)."""
        theirs = other.as_dict()
        return all(theirs.get(i) == o for i, o in self.observed)

    def describe(self, model: Model) -> Dict[str, str]:
        return {model.label(i): model.outcome_label(i, o) for i, o in self.observed}


EMPTY = PartialRealization()


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    item: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid

    def raise_if_invalid(self) -> None:
        if self.valid:
            return
        where = f"item {self.item}: " if self.item is not None else ""
        raise ModelValidationError(
            f"{where}{self.reason}", errors=[{"item": self.item, "reason": self.reason}]
        )


def validate_model(model: Model) -> ValidationResult:
    """Check every Model invariant, reporting the first violation."""
    if model.n_items == 0:
        return ValidationResult(False, None, "empty item set")

    if len(model.prior) != model.n_items:
        return ValidationResult(
            False, None, f"expected {model.n_items} probability lists, got {len(model.prior)}"
        )

    if model.labels is not None:
        if len(model.labels) != model.n_items:
            return ValidationResult(
                False, None, f"expected {model.n_items} item labels, got {len(model.labels)}"
            )
        seen = set()
        for item, label in enumerate(model.labels):
            if label in seen:
                return ValidationResult(False, item, f"duplicate item label '{label}'")
            seen.add(label)

    for item, (names, probs) in enumerate(zip(model.outcomes, model.prior)):
        if not names:
            return ValidationResult(False, item, "empty outcome set")
        if len(set(names)) != len(names):
            return ValidationResult(False, item, "duplicate outcome label")
        if len(probs) != len(names):
            return ValidationResult(
                False, item, f"expected {len(names)} probabilities, got {len(probs)}"
            )
        if any(not math.isfinite(p) for p in probs):
            return ValidationResult(False, item, "non-finite probability")
        if any(p < 0 for p in probs):
            return ValidationResult(False, item, "negative probability")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            return ValidationResult(
                False, item, f"probability vector sums to {total:.12g} ≠ 1"
            )

    return ValidationResult(True)


@lru_cache(maxsize=256)
def ensure_valid(model: Model) -> Model:
    validate_model(model).raise_if_invalid()
    return model


@lru_cache(maxsize=256)
def _cumulative_priors(model: Model) -> Tuple[np.ndarray, ...]:
    cdfs = []
    for probs in model.prior:
        cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
        cdfs.append(cdf / cdf[-1])
    return tuple(cdfs)


def sample_realization(model: Model, seed: int) -> Realization:
    """Draw every item's outcome independently from its prior; a pure function of (model, seed)."""
    ensure_valid(model)
    rng = np.random.default_rng(seed)
    draws = rng.random(model.n_items)
    assignment = []
    for cdf, u in zip(_cumulative_priors(model), draws):
        outcome = int(np.searchsorted(cdf, u, side="right"))
        assignment.append(min(outcome, len(cdf) - 1))
    return Realization(tuple(assignment))


def check_partial(model: Model, psi: PartialRealization) -> None:
    for item, outcome in psi.observed:
        if not 0 <= item < model.n_items:
            raise IndexOutOfRange(f"item index {item} out of range for {model.n_items} items")
        if not 0 <= outcome < len(model.outcomes[item]):
            raise IndexOutOfRange(
                f"outcome index {outcome} out of range for item {model.label(item)}"
            )


def consistent_count(model: Model, psi: PartialRealization) -> int:
    return math.prod(len(model.support(i)) for i in model.items if i not in psi)


def enumerate_consistent(
    model: Model, psi: PartialRealization, cap: Optional[int] = None
) -> List[Tuple[Realization, float]]:
    """
    Every positive-probability realization consistent with psi, paired with its conditional
    probability given psi, in lexicographic (item, outcome) order.

    Raises:
        ZeroProbabilityObservation: if psi observes an outcome whose prior probability is zero
        InstanceTooLarge: if the number of consistent realizations exceeds cap
    """
    ensure_valid(model)
    check_partial(model, psi)
    if cap is not None:
        count = consistent_count(model, psi)
        if count > cap:
            raise InstanceTooLarge(
                f"{count} consistent realizations exceed the enumeration cap of {cap}"
            )
    return _consistent_worlds(model, psi)


def _consistent_worlds(model: Model, psi: PartialRealization) -> List[Tuple[Realization, float]]:
    for item, outcome in psi.observed:
        if model.prior[item][outcome] <= 0.0:
            raise ZeroProbabilityObservation(
                f"observation has probability zero: item {model.label(item)} -> "
                f"{model.outcome_label(item, outcome)}",
                errors=[{"item": item, "outcome": outcome}],
            )

    observed = psi.as_dict()
    free = [i for i in model.items if i not in observed]
    supports = [model.support(i) for i in free]

    worlds = []
    for combo in itertools.product(*supports):
        assignment = dict(observed)
        assignment.update(zip(free, combo))
        weight = math.prod(model.prior[i][o] for i, o in zip(free, combo))
        worlds.append((Realization(tuple(assignment[i] for i in model.items)), weight))
    return worlds


def prior_probability(model: Model, phi: Realization) -> float:
    return math.prod(model.prior[i][phi[i]] for i in model.items)


def partial_realization_count(model: Model) -> int:
    return math.prod(len(model.support(i)) + 1 for i in model.items)


def enumerate_partial_realizations(
    model: Model, cap: Optional[int] = None
) -> List[PartialRealization]:
    """All positive-probability partial realizations, sorted by their canonical key."""
    ensure_valid(model)
    if cap is not None:
        count = partial_realization_count(model)
        if count > cap:
            raise InstanceTooLarge(f"{count} partial realizations exceed the cap of {cap}")

    choices: List[Sequence[Optional[int]]] = [(None,) + model.support(i) for i in model.items]
    partials = []
    for combo in itertools.product(*choices):
        partials.append(
            PartialRealization(tuple((i, o) for i, o in enumerate(combo) if o is not None))
        )
    partials.sort(key=lambda psi: psi.key)
    return partials


def subrealizations(psi: PartialRealization) -> List[PartialRealization]:
    """Every psi0 with psi0 a subrealization of psi (psi itself included), sorted by key."""
    found = []
    pairs = psi.observed
    for size in range(len(pairs) + 1):
        for chosen in itertools.combinations(pairs, size):
            found.append(PartialRealization(chosen))
    found.sort(key=lambda p: p.key)
    return found
