"""Small instances shared by the test modules."""

import itertools
import math
from pathlib import Path

from adaptive_greedy_app.constraints import uniform_matroid
from adaptive_greedy_app.objectives import Objective, and_objective, count_objective
from adaptive_greedy_app.stochastic_model import Model, PartialRealization, Realization

TEST_FILES = Path(__file__).resolve().parents[2] / "test_files"

A, B = 0, 1
GOOD, BAD = 0, 1
SUITE_SEEDS = range(20)


def m1() -> Model:
    """Two items a, b with fair good/bad outcomes."""
    return Model(
        outcomes=[("good", "bad"), ("good", "bad")],
        prior=[(0.5, 0.5), (0.5, 0.5)],
        labels=["a", "b"],
    )


def forced_model() -> Model:
    """a is surely bad, b is surely good."""
    return Model(
        outcomes=[("good", "bad"), ("good", "bad")],
        prior=[(0.0, 1.0), (1.0, 0.0)],
        labels=["a", "b"],
    )


def count() -> Objective:
    return count_objective(GOOD)


def conjunction() -> Objective:
    return and_objective([A, B], GOOD)


def uniform(k: int, n: int = 2):
    return uniform_matroid(n, k)


def brute_force_gain(model: Model, objective: Objective, item: int, psi: PartialRealization):
    """Δ(item | psi) by filtering every outcome combination, zero-probability worlds included."""
    worlds = []
    for combo in itertools.product(*(range(len(row)) for row in model.outcomes)):
        phi = Realization(combo)
        if not all(phi[i] == o for i, o in psi.observed):
            continue
        worlds.append((phi, math.prod(model.prior[i][combo[i]] for i in model.items)))
    mass = math.fsum(w for _, w in worlds)
    base = psi.domain
    return math.fsum(
        (w / mass) * (objective(base | {item}, phi) - objective(base, phi)) for phi, w in worlds
    )
