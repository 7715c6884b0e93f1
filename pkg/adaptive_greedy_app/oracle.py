"""Exact optimal policy values for small instances."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, NamedTuple, Optional

from toolz import memoize

from .conf import library_setting
from .constraints import IndependenceSystem, is_independent
from .exceptions import GroundSizeMismatch, InstanceTooLarge
from .objectives import Objective
from .policies import feasible_items
from .stochastic_model import EMPTY, Model, PartialRealization, enumerate_consistent, ensure_valid

logger = logging.getLogger("adaptive_greedy_app.oracle")


@dataclass(frozen=True)
class OracleResult:
    value: float
    explored_states: int
    best_first_action: Optional[int]


class NonadaptiveOptimum(NamedTuple):
    value: float
    best_set: FrozenSet[int]


def _check_instance(model: Model, system: IndependenceSystem) -> None:
    ensure_valid(model)
    if model.n_items != system.ground_size:
        raise GroundSizeMismatch(
            f"model has {model.n_items} items but the system's ground size is "
            f"{system.ground_size}"
        )


def optimal_adaptive_value(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    max_items: Optional[int] = None,
    max_outcomes: Optional[int] = None,
    use_memo: bool = True,
) -> OracleResult:
    """
    Value of the best adaptive policy by exhaustive search over partial realizations.

    V(psi) is the larger of stopping (E[f(dom psi, Phi) | psi]) and the best feasible item's
    outcome-weighted continuation. Zero-probability outcomes are skipped.
    """
    _check_instance(model, system)
    max_items = library_setting("ORACLE_MAX_ITEMS") if max_items is None else max_items
    max_outcomes = library_setting("ORACLE_MAX_OUTCOMES") if max_outcomes is None else max_outcomes
    if model.n_items > max_items or model.max_outcomes() > max_outcomes:
        raise InstanceTooLarge(
            f"instance exceeds oracle caps: {model.n_items} items (max {max_items}), "
            f"{model.max_outcomes()} outcomes per item (max {max_outcomes})"
        )

    calls = 0

    def stop_value(psi: PartialRealization) -> float:
        selected = psi.domain
        return math.fsum(
            weight * objective.evaluator(selected, phi)
            for phi, weight in enumerate_consistent(model, psi)
        )

    def continuation(psi: PartialRealization, item: int) -> float:
        return math.fsum(
            p * value(psi.extend(item, outcome))
            for outcome, p in enumerate(model.prior[item])
            if p > 0.0
        )

    def value(psi: PartialRealization) -> float:
        nonlocal calls
        calls += 1
        best = stop_value(psi)
        for item in feasible_items(system, psi.domain):
            best = max(best, continuation(psi, item))
        return best

    memo: Dict = {}
    if use_memo:
        value = memoize(value, cache=memo, key=lambda args, kwargs: args[0].key)

    root = value(EMPTY)
    explored = len(memo) if use_memo else calls

    best_action = None
    best = stop_value(EMPTY)
    for item in feasible_items(system, frozenset()):
        candidate = continuation(EMPTY, item)
        if candidate > best:
            best, best_action = candidate, item

    logger.debug(
        f"Adaptive optimum {root:.12g} for {objective.name} over {system.name}: "
        f"{explored} states, first action {best_action}"
    )
    return OracleResult(value=root, explored_states=explored, best_first_action=best_action)


def _independent_sets(system: IndependenceSystem) -> List[FrozenSet[int]]:
    """Independent sets in lexicographic order of their sorted items (downward closure assumed)."""
    found: List[FrozenSet[int]] = []

    def visit(current: FrozenSet[int], start: int) -> None:
        found.append(current)
        for item in range(start, system.ground_size):
            grown = current | {item}
            if is_independent(system, grown):
                visit(grown, item + 1)

    visit(frozenset(), 0)
    return found


def optimal_nonadaptive_value(
    model: Model,
    objective: Objective,
    system: IndependenceSystem,
    max_items: Optional[int] = None,
    cap: Optional[int] = None,
) -> NonadaptiveOptimum:
    """Best committed set: maximizes E[f(S, Phi)] over every independent S."""
    _check_instance(model, system)
    max_items = library_setting("NONADAPTIVE_ORACLE_MAX_ITEMS") if max_items is None else max_items
    cap = library_setting("EXACT_REALIZATION_CAP") if cap is None else cap
    if model.n_items > max_items or model.realization_count() > cap:
        raise InstanceTooLarge(
            f"instance exceeds caps: {model.n_items} items (max {max_items}), "
            f"{model.realization_count()} realizations (max {cap})"
        )

    worlds = enumerate_consistent(model, EMPTY)
    best_value, best_set = None, frozenset()
    for candidate in _independent_sets(system):
        expected = math.fsum(weight * objective.evaluator(candidate, phi) for phi, weight in worlds)
        if best_value is None or expected > best_value:
            best_value, best_set = expected, candidate

    logger.debug(f"Non-adaptive optimum {best_value:.12g} with {sorted(best_set)}")
    return NonadaptiveOptimum(best_value, best_set)


def adaptivity_gap(opt_adaptive: float, opt_nonadaptive: float) -> float:
    if opt_nonadaptive == 0:
        return 1.0 if opt_adaptive == 0 else math.inf
    return opt_adaptive / opt_nonadaptive
