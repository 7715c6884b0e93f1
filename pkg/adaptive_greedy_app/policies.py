import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .conf import library_setting
from .constraints import IndependenceSystem, is_independent
from .exceptions import GroundSizeMismatch, InstanceTooLarge, PolicyError
from .objectives import GainTable, Objective, evaluate
from .stochastic_model import (
    EMPTY,
    Model,
    PartialRealization,
    Realization,
    enumerate_consistent,
    ensure_valid,
    sample_realization,
)

logger = logging.getLogger("adaptive_greedy_app.policies")


class PolicyKind(str, Enum):
    ADAPTIVE_GREEDY = "adaptive_greedy"
    NONADAPTIVE_GREEDY = "nonadaptive_greedy"
    RANDOM_FEASIBLE = "random_feasible"


@dataclass(frozen=True)
class PolicyConfig:
    policy_kind: PolicyKind = PolicyKind.ADAPTIVE_GREEDY
    stop_on_zero_gain: bool = True
    tolerance: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "policy_kind", PolicyKind(self.policy_kind))
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be nonnegative, got {self.tolerance}")


@dataclass(frozen=True)
class PolicyTrace:
    steps: Tuple[Tuple[int, int], ...]
    final_value: float

    @property
    def selected(self) -> Tuple[int, ...]:
        return tuple(item for item, _ in self.steps)

    def describe(self, model: Model) -> Dict[str, Any]:
        return {
            "steps": [
                [model.label(item), model.outcome_label(item, outcome)]
                for item, outcome in self.steps
            ],
            "final_value": self.final_value,
        }


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float


def _check_sizes(model: Model, system: IndependenceSystem) -> None:
    if model.n_items != system.ground_size:
        raise GroundSizeMismatch(
            f"model has {model.n_items} items but the system's ground size is "
            f"{system.ground_size}"
        )


def feasible_items(system: IndependenceSystem, selected: FrozenSet[int]) -> List[int]:
    """Items outside selected that keep it independent, in ascending order."""
    return [
        item
        for item in range(system.ground_size)
        if item not in selected and is_independent(system, selected | {item})
    ]


def greedy_step(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    psi: PartialRealization,
    config: PolicyConfig,
    gains: Optional[GainTable] = None,
) -> Optional[int]:
    """
    The feasible item with the largest conditional expected marginal benefit given psi.

    A later item only beats the current best when its gain is larger by more than the
    tolerance, so near-ties go to the smallest index. Returns None when nothing is feasible, or
    when stop_on_zero_gain is set and the best gain is within tolerance of zero.
    """
    _check_sizes(model, system)
    selected = psi.domain
    if not is_independent(system, selected):
        raise PolicyError(f"observed items {sorted(selected)} are not independent in {system.name}")
    gains = gains or GainTable(model, objective)

    best_item, best_gain = None, None
    for item in feasible_items(system, selected):
        gain = gains(item, psi)
        if best_gain is None or gain > best_gain + config.tolerance:
            best_item, best_gain = item, gain

    if best_item is None:
        return None
    if config.stop_on_zero_gain and best_gain <= config.tolerance:
        logger.debug(f"Stopping at |psi|={len(psi)}: best gain {best_gain:.6g} is zero")
        return None
    logger.debug(f"Greedy pick at |psi|={len(psi)}: item {best_item} gain {best_gain:.6g}")
    return best_item


def _open_loop_order(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    config: PolicyConfig,
    cap: Optional[int] = None,
) -> Tuple[int, ...]:
    cap = library_setting("EXACT_REALIZATION_CAP") if cap is None else cap
    _guard_exact(model, cap, "instance too large")
    worlds = enumerate_consistent(model, EMPTY)

    def expected(chosen: FrozenSet[int]) -> float:
        return math.fsum(weight * objective.evaluator(chosen, phi) for phi, weight in worlds)

    selected: FrozenSet[int] = frozenset()
    order: List[int] = []
    current = expected(selected)
    while True:
        best_item, best_gain, best_value = None, None, None
        for item in feasible_items(system, selected):
            value = expected(selected | {item})
            gain = value - current
            if best_gain is None or gain > best_gain + config.tolerance:
                best_item, best_gain, best_value = item, gain, value
        if best_item is None:
            break
        if config.stop_on_zero_gain and best_gain <= config.tolerance:
            break
        order.append(best_item)
        selected = selected | {best_item}
        current = best_value
    return tuple(order)


def nonadaptive_greedy_set(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    config: PolicyConfig,
    cap: Optional[int] = None,
) -> FrozenSet[int]:
    """
    Greedy set built from unconditional expected gains over the full prior, with no
    observations. Stops when no feasible item improves the expectation by more than the
    tolerance, or when nothing is feasible.
    """
    _check_sizes(model, system)
    return frozenset(_open_loop_order(model, objective, system, config, cap))


class PolicyExecutor:
    """Runs one policy on many realizations.

    Greedy decisions depend only on psi, so they are memoized across runs.
    """

    def __init__(
        self,
        model: Model,
        objective: Objective,
        system: IndependenceSystem,
        config: PolicyConfig,
    ):
        ensure_valid(model)
        _check_sizes(model, system)
        self.model = model
        self.objective = objective
        self.system = system
        self.config = config
        self._gains = GainTable(model, objective)
        self._decisions: Dict[Tuple[Tuple[int, int], ...], Optional[int]] = {}
        self._plan: Optional[Tuple[int, ...]] = None

    def _next_item(self, psi: PartialRealization, rng: Optional[np.random.Generator]):
        kind = self.config.policy_kind
        if kind == PolicyKind.ADAPTIVE_GREEDY:
            if psi.key not in self._decisions:
                self._decisions[psi.key] = greedy_step(
                    self.model, self.objective, self.system, psi, self.config, self._gains
                )
            return self._decisions[psi.key]

        if kind == PolicyKind.NONADAPTIVE_GREEDY:
            if self._plan is None:
                self._plan = _open_loop_order(
                    self.model, self.objective, self.system, self.config
                )
                logger.debug(f"Open-loop greedy plan: {list(self._plan)}")
            return self._plan[len(psi)] if len(psi) < len(self._plan) else None

        feasible = feasible_items(self.system, psi.domain)
        if not feasible:
            return None
        return feasible[int(rng.integers(len(feasible)))]

    def run(self, phi: Realization, rng_seed: Optional[Sequence[int]] = None) -> PolicyTrace:
        """
        Closed-loop run on phi. random_feasible draws from rng_seed, or from config.seed when it
        is None, so with the default every run follows one fixed random policy and exact
        evaluation measures that policy.
        """
        if len(phi) != self.model.n_items:
            raise PolicyError(
                f"realization covers {len(phi)} items, model has {self.model.n_items}"
            )
        rng = None
        if self.config.policy_kind == PolicyKind.RANDOM_FEASIBLE:
            rng = np.random.default_rng(self.config.seed if rng_seed is None else rng_seed)

        psi = EMPTY
        steps = []
        while True:
            item = self._next_item(psi, rng)
            if item is None:
                break
            if not is_independent(self.system, psi.domain | {item}):
                raise PolicyError(
                    f"policy selected item {item} outside the feasible family {self.system.name}"
                )
            outcome = phi[item]
            psi = psi.extend(item, outcome)
            steps.append((item, outcome))

        return PolicyTrace(tuple(steps), evaluate(self.objective, psi.domain, phi))


def execute_policy(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    config: PolicyConfig,
    phi: Realization,
) -> PolicyTrace:
    """Closed-loop execution: after each pick the item's outcome under phi is revealed."""
    return PolicyExecutor(model, objective, system, config).run(phi)


def _guard_exact(model: Model, cap: int, message: str) -> None:
    count = model.realization_count()
    if count > cap:
        raise InstanceTooLarge(f"{message}: {count} realizations exceed the cap of {cap}")


def expected_value_exact(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    config: PolicyConfig,
    cap: Optional[int] = None,
) -> float:
    """Prior-weighted sum of the policy's final value over every realization."""
    ensure_valid(model)
    cap = library_setting("EXACT_REALIZATION_CAP") if cap is None else cap
    _guard_exact(model, cap, "instance too large for exact evaluation")

    executor = PolicyExecutor(model, objective, system, config)
    return math.fsum(
        weight * executor.run(phi).final_value for phi, weight in enumerate_consistent(model, EMPTY)
    )


def expected_value_monte_carlo(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    config: PolicyConfig,
    samples: int,
    seed: int,
) -> MonteCarloEstimate:
    """
    Sample mean and standard error of the final value. Sample i draws its realization with
    seed + i; random_feasible also draws its choices from (config.seed, seed + i).
    """
    if samples < 2:
        raise ValueError(f"Monte Carlo evaluation needs at least 2 samples, got {samples}")

    executor = PolicyExecutor(model, objective, system, config)
    values = np.fromiter(
        (
            executor.run(
                sample_realization(model, seed + index), rng_seed=(config.seed, seed + index)
            ).final_value
            for index in range(samples)
        ),
        dtype=np.float64,
        count=samples,
    )
    mean = math.fsum(values) / samples
    stderr = float(np.std(values, ddof=1) / np.sqrt(samples))
    return MonteCarloEstimate(mean, stderr)
