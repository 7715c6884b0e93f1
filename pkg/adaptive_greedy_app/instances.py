import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .conf import library_setting
from .constraints import (
    IndependenceSystem,
    estimate_p,
    intersect,
    partition_matroid,
    uniform_matroid,
)
from .exceptions import GroundSizeMismatch, InvalidSpec
from .objectives import Objective, coverage_objective
from .stochastic_model import Model, ensure_valid

logger = logging.getLogger("adaptive_greedy_app.instances")

COVERAGE_OUTCOMES = ("works", "fails")
MATCHMAKING_OUTCOMES = ("success", "failure")
CONSTRAINT_FAMILIES = ("uniform", "partition", "intersection")


@dataclass(frozen=True, eq=False)
class Instance:
    model: Model
    objective: Objective
    system: IndependenceSystem
    name: str
    declared_p: Optional[Fraction] = None
    matchmaking: Optional["MatchmakingSpec"] = None

    def __post_init__(self):
        if self.model.n_items != self.system.ground_size:
            raise GroundSizeMismatch(
                f"instance {self.name}: model has {self.model.n_items} items, system ground "
                f"size is {self.system.ground_size}"
            )
        if self.declared_p is not None:
            declared = Fraction(self.declared_p)
            if declared <= 0:
                raise InvalidSpec(f"declared p must be positive, got {declared}")
            object.__setattr__(self, "declared_p", declared)


@dataclass(frozen=True)
class MatchmakingSpec:
    """Two-sided dating market: every left x right pair is a possible date."""

    left_count: int
    right_count: int
    cap_left: int = 1
    cap_right: int = 1
    success_prob: Union[float, Mapping[Tuple[int, int], float]] = 0.5

    def validate(self) -> None:
        if self.left_count < 1 or self.right_count < 1:
            raise InvalidSpec(
                f"matchmaking needs at least one person per side, got "
                f"{self.left_count}x{self.right_count}"
            )
        if self.cap_left < 1 or self.cap_right < 1:
            raise InvalidSpec(
                f"date caps must be at least 1, got {self.cap_left}, {self.cap_right}"
            )
        if isinstance(self.success_prob, Mapping):
            for pair in self.success_prob:
                i, j = pair
                if not (0 <= i < self.left_count and 0 <= j < self.right_count):
                    raise InvalidSpec(f"success probability given for unknown pair {pair}")
        for i, j in self.pairs():
            p = self.probability(i, j)
            if not 0.0 <= p <= 1.0:
                raise InvalidSpec(f"success probability {p} of pair ({i}, {j}) outside [0, 1]")

    def pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i in range(self.left_count) for j in range(self.right_count)]

    def probability(self, i: int, j: int) -> float:
        if isinstance(self.success_prob, Mapping):
            return float(self.success_prob.get((i, j), 0.0))
        return float(self.success_prob)

    def as_dict(self) -> Dict[str, Any]:
        if isinstance(self.success_prob, Mapping):
            success_prob: Any = [
                {"left": i, "right": j, "p": p} for (i, j), p in sorted(self.success_prob.items())
            ]
        else:
            success_prob = float(self.success_prob)
        return {
            "left_count": self.left_count,
            "right_count": self.right_count,
            "cap_left": self.cap_left,
            "cap_right": self.cap_right,
            "success_prob": success_prob,
        }


def bipartite_matching_system(
    left_count: int, right_count: int, cap_left: int = 1, cap_right: int = 1
) -> IndependenceSystem:
    """Pairs (left-major order) grouped by left person and by right person, intersected."""
    pairs = [(i, j) for i in range(left_count) for j in range(right_count)]
    n = len(pairs)
    by_left = [[k for k, (i, _) in enumerate(pairs) if i == person] for person in range(left_count)]
    by_right = [
        [k for k, (_, j) in enumerate(pairs) if j == person] for person in range(right_count)
    ]
    return intersect(
        [
            partition_matroid(n, by_left, [cap_left] * left_count, name=f"left cap {cap_left}"),
            partition_matroid(
                n, by_right, [cap_right] * right_count, name=f"right cap {cap_right}"
            ),
        ]
    )


def _binary_model(probabilities: Sequence[float], outcomes, labels) -> Model:
    for item, p in enumerate(probabilities):
        if not 0.0 <= p <= 1.0:
            raise InvalidSpec(f"probability {p} of item {item} outside [0, 1]")
    prior = [(float(p), 1.0 - float(p)) for p in probabilities]
    return ensure_valid(Model([outcomes] * len(prior), prior, labels))


def make_coverage(
    universe_size: int,
    items: Sequence[Tuple[Iterable[int], float]],
    system: Optional[IndependenceSystem] = None,
    k: int = 1,
    labels: Optional[Sequence[str]] = None,
    weights: Optional[Sequence[float]] = None,
    name: str = "coverage",
) -> Instance:
    """
    Stochastic set coverage: item e covers its set when its outcome is "works". The constraint
    is the caller's system, or uniform(k).
    """
    if universe_size < 1:
        raise InvalidSpec(f"universe must hold at least one element, got {universe_size}")
    coverage = [sorted(set(int(x) for x in covered)) for covered, _ in items]
    for item, covered in enumerate(coverage):
        if any(not 0 <= x < universe_size for x in covered):
            raise InvalidSpec(f"invalid coverage set for item {item}: {covered}")

    model = _binary_model([p for _, p in items], COVERAGE_OUTCOMES, labels)
    objective = coverage_objective(coverage, universe_size, weights=weights)
    if system is None:
        system = uniform_matroid(len(coverage), k)
    return Instance(model, objective, system, name=name, declared_p=None)


def make_matchmaking(spec: MatchmakingSpec, verify_p: bool = True) -> Instance:
    """
    Adaptive matchmaking: each date is an item that succeeds or fails; the objective counts the
    people with at least one successful date. A date consumes both participants' capacity
    whatever its outcome.
    """
    spec.validate()
    pairs = spec.pairs()
    labels = [f"L{i + 1}-R{j + 1}" for i, j in pairs]
    model = _binary_model([spec.probability(i, j) for i, j in pairs], MATCHMAKING_OUTCOMES, labels)

    people = spec.left_count + spec.right_count
    objective = coverage_objective(
        [(i, spec.left_count + j) for i, j in pairs],
        people,
        name="matched people",
        kind="matchmaking",
        params=spec.as_dict(),
    )
    system = bipartite_matching_system(
        spec.left_count, spec.right_count, spec.cap_left, spec.cap_right
    )

    declared = Fraction(2)
    if verify_p and len(pairs) <= library_setting("P_ESTIMATE_MAX_GROUND"):
        found = estimate_p(system).p_value
        if found != declared:
            logger.warning(
                f"Matchmaking {spec.left_count}x{spec.right_count} (caps {spec.cap_left}, "
                f"{spec.cap_right}): declared p {declared} overridden by enumeration, p = {found}"
            )
            declared = found

    name = (
        f"matchmaking-{spec.left_count}x{spec.right_count}-caps{spec.cap_left}"
        f"{spec.cap_right}"
    )
    return Instance(model, objective, system, name=name, declared_p=declared, matchmaking=spec)


@dataclass(frozen=True)
class SmallInstanceCaps:
    min_items: int = 2
    max_items: int = 5
    max_universe: int = 4

    def __post_init__(self):
        if self.min_items < 2:
            raise InvalidSpec(f"min_items must be at least 2, got {self.min_items}")
        if self.max_items < self.min_items:
            raise InvalidSpec(
                f"max_items must be at least min_items, got {self.max_items} < {self.min_items}"
            )
        if self.max_universe < 2:
            raise InvalidSpec(f"max_universe must be at least 2, got {self.max_universe}")


def _random_partition(
    rng: np.random.Generator, n: int, max_blocks: int, capacity: Optional[int] = None
) -> IndependenceSystem:
    block_count = int(rng.integers(1, max_blocks + 1))
    assignment = rng.integers(block_count, size=n)
    blocks = [[item for item in range(n) if assignment[item] == b] for b in range(block_count)]
    blocks = [block for block in blocks if block]
    if capacity is None:
        capacities = [int(rng.integers(1, 3)) for _ in blocks]
    else:
        capacities = [capacity] * len(blocks)
    return partition_matroid(n, blocks, capacities)


def random_small_instance(seed: int, caps: Optional[SmallInstanceCaps] = None) -> Instance:
    """
    A random stochastic coverage instance, deterministic in seed. Probabilities are multiples of
    0.05 in [0.1, 0.9]. The constraint family cycles with the seed (uniform, partition,
    intersection of two unit-capacity partitions), so every run of consecutive seeds covers all
    three.
    """
    caps = caps or SmallInstanceCaps()
    rng = np.random.default_rng(seed)
    n = int(rng.integers(caps.min_items, caps.max_items + 1))
    universe = int(rng.integers(2, caps.max_universe + 1))

    items = []
    for _ in range(n):
        mask = rng.random(universe) < 0.5
        if not mask.any():
            mask[int(rng.integers(universe))] = True
        probability = round(0.05 * int(rng.integers(2, 19)), 2)
        items.append(([x for x in range(universe) if mask[x]], probability))
    weights = [float(rng.integers(1, 4)) for _ in range(universe)]

    family = CONSTRAINT_FAMILIES[seed % len(CONSTRAINT_FAMILIES)]
    if family == "uniform":
        system = uniform_matroid(n, int(rng.integers(1, n)))
        declared_p = Fraction(1)
    elif family == "partition":
        system = _random_partition(rng, n, max_blocks=min(3, n))
        declared_p = Fraction(1)
    else:
        system = intersect(
            [
                _random_partition(rng, n, max_blocks=min(3, n), capacity=1),
                _random_partition(rng, n, max_blocks=min(3, n), capacity=1),
            ]
        )
        declared_p = None

    instance = make_coverage(
        universe,
        items,
        system=system,
        labels=[f"i{item}" for item in range(n)],
        weights=weights,
        name=f"random-{seed}-{family}",
    )
    return Instance(
        instance.model, instance.objective, system, name=instance.name, declared_p=declared_p
    )
