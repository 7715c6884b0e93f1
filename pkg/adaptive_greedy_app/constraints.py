import logging
from dataclasses import dataclass, field
from fractions import Fraction
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
)

from .conf import library_setting
from .exceptions import (
    GroundSizeMismatch,
    IndexOutOfRange,
    InstanceTooLarge,
    InvalidSpec,
    NotDownwardClosed,
)

logger = logging.getLogger("adaptive_greedy_app.constraints")

Membership = Callable[[FrozenSet[int]], bool]


@dataclass(frozen=True, eq=False)
class IndependenceSystem:
    """A downward-closed family of feasible sets, given by a membership oracle."""

    ground_size: int
    membership: Membership
    name: str
    kind: str = "custom"
    params: Mapping[str, Any] = field(default_factory=dict)
    members: Tuple["IndependenceSystem", ...] = ()


def is_independent(system: IndependenceSystem, s: Iterable[int]) -> bool:
    chosen = frozenset(s)
    for item in chosen:
        if not 0 <= item < system.ground_size:
            raise IndexOutOfRange(
                f"item index {item} out of range for ground size {system.ground_size}"
            )
    if not chosen:
        return True
    return bool(system.membership(chosen))


def uniform_matroid(ground_size: int, k: int) -> IndependenceSystem:
    if ground_size < 0 or k < 0:
        raise InvalidSpec(
            f"uniform matroid needs ground_size >= 0 and k >= 0, got {ground_size}, {k}"
        )
    return IndependenceSystem(
        ground_size=ground_size,
        membership=lambda s: len(s) <= k,
        name=f"uniform(k={k})",
        kind="uniform",
        params={"k": k},
    )


def partition_matroid(
    ground_size: int,
    blocks: Sequence[Iterable[int]],
    capacities: Sequence[int],
    name: Optional[str] = None,
) -> IndependenceSystem:
    """At most capacities[b] items from each block b. Items outside every block are free."""
    block_sets = [tuple(sorted(int(i) for i in block)) for block in blocks]
    caps = tuple(int(c) for c in capacities)
    if len(block_sets) != len(caps):
        raise InvalidSpec(f"{len(block_sets)} blocks but {len(caps)} capacities")
    if any(c < 0 for c in caps):
        raise InvalidSpec("partition capacities must be nonnegative")

    block_of: Dict[int, int] = {}
    for b, block in enumerate(block_sets):
        for item in block:
            if not 0 <= item < ground_size:
                raise InvalidSpec(f"block {b} holds item {item} outside the ground set")
            if item in block_of:
                raise InvalidSpec(f"item {item} appears in blocks {block_of[item]} and {b}")
            block_of[item] = b

    def within_capacity(s: FrozenSet[int]) -> bool:
        used = [0] * len(caps)
        for item in s:
            b = block_of.get(item)
            if b is None:
                continue
            used[b] += 1
            if used[b] > caps[b]:
                return False
        return True

    return IndependenceSystem(
        ground_size=ground_size,
        membership=within_capacity,
        name=name or f"partition({len(block_sets)} blocks, caps {list(caps)})",
        kind="partition",
        params={"blocks": tuple(block_sets), "capacities": caps},
    )


def intersect(
    systems: Sequence[IndependenceSystem], name: Optional[str] = None
) -> IndependenceSystem:
    """The conjunction of the members' memberships."""
    members = tuple(systems)
    if not members:
        raise InvalidSpec("intersection of zero systems")
    sizes = {system.ground_size for system in members}
    if len(sizes) != 1:
        raise GroundSizeMismatch(
            f"cannot intersect systems over different ground sizes: {sorted(sizes)}"
        )

    def in_all(s: FrozenSet[int]) -> bool:
        return all(system.membership(s) for system in members)

    return IndependenceSystem(
        ground_size=members[0].ground_size,
        membership=in_all,
        name=name or " ∩ ".join(system.name for system in members),
        kind="intersection",
        members=members,
    )


def _mask_to_set(mask: int) -> FrozenSet[int]:
    return frozenset(i for i in range(mask.bit_length()) if mask >> i & 1)


def _lex_key(mask: int) -> Tuple[int, ...]:
    return tuple(sorted(_mask_to_set(mask)))


def _ground_for(system: IndependenceSystem, ground_size: Optional[int], cap: int) -> int:
    n = system.ground_size if ground_size is None else ground_size
    if n > system.ground_size:
        raise GroundSizeMismatch(
            f"ground size {n} exceeds the system's ground size {system.ground_size}"
        )
    if n > cap:
        raise InstanceTooLarge(f"ground too large: {n} items exceed the enumeration cap of {cap}")
    return n


def _independence_table(system: IndependenceSystem, n: int) -> List[bool]:
    return [is_independent(system, _mask_to_set(mask)) for mask in range(1 << n)]


def _closure_violation(table: List[bool], n: int) -> Optional[Tuple[int, int]]:
    # Checking every one-smaller subset of every independent set is enough, by induction.
    for mask in range(1 << n):
        if not table[mask]:
            continue
        smaller = sorted(mask & ~(1 << i) for i in range(n) if mask >> i & 1)
        for sub in smaller:
            if not table[sub]:
                return mask, sub
    return None


@dataclass(frozen=True)
class DownwardClosureReport:
    closed: bool
    witness: Optional[Tuple[FrozenSet[int], FrozenSet[int]]] = None

    def __bool__(self) -> bool:
        return self.closed


def check_downward_closed(
    system: IndependenceSystem, ground_size: Optional[int] = None, cap: Optional[int] = None
) -> DownwardClosureReport:
    """
    Verify that every subset of every independent set is independent.

    On failure the witness is (independent superset, rejected subset).
    """
    cap = library_setting("DOWNWARD_CLOSED_MAX_GROUND") if cap is None else cap
    n = _ground_for(system, ground_size, cap)
    violation = _closure_violation(_independence_table(system, n), n)
    if violation is None:
        return DownwardClosureReport(True)
    superset, subset = violation
    logger.debug(
        f"{system.name} is not downward-closed: {_lex_key(superset)} ⊃ {_lex_key(subset)}"
    )
    return DownwardClosureReport(False, (_mask_to_set(superset), _mask_to_set(subset)))


@dataclass(frozen=True)
class PReport:
    """
    p_value is the largest ratio between the sizes of two maximal independent subsets of one
    subset of the ground set. witness_bases holds (smaller, larger).
    """

    p_value: Fraction
    witness_set: FrozenSet[int]
    witness_bases: Tuple[FrozenSet[int], FrozenSet[int]]
    subsets_checked: int = 0

    def summary(self) -> Dict[str, Any]:
        return {
            "p_value": str(self.p_value),
            "witness_set": sorted(self.witness_set),
            "witness_bases": [sorted(b) for b in self.witness_bases],
        }


def estimate_p(
    system: IndependenceSystem, ground_size: Optional[int] = None, cap: Optional[int] = None
) -> PReport:
    """
    Exact p of the system by double enumeration: every subset S of the ground set, then every
    maximal independent subset of S. Subsets whose only maximal independent subset is the empty
    set count as ratio 1.

    Raises:
        InstanceTooLarge: ground above the cap
        NotDownwardClosed: the membership oracle is not downward-closed
    """
    cap = library_setting("P_ESTIMATE_MAX_GROUND") if cap is None else cap
    n = _ground_for(system, ground_size, cap)
    table = _independence_table(system, n)

    violation = _closure_violation(table, n)
    if violation is not None:
        superset, subset = violation
        raise NotDownwardClosed(
            f"system not downward-closed: {system.name}",
            errors=[{"independent": _lex_key(superset), "rejected": _lex_key(subset)}],
        )

    size = 1 << n
    popcount = [bin(mask).count("1") for mask in range(size)]
    # extendable[T]: items e outside T with T + e independent
    extendable = [0] * size
    for mask in range(size):
        if not table[mask]:
            continue
        for i in range(n):
            bit = 1 << i
            if not mask & bit and table[mask | bit]:
                extendable[mask] |= bit

    best_ratio = None
    best_set = 0
    best_bases = (0, 0)
    for s in range(size):
        smallest = largest = None
        t = s
        while True:
            if table[t] and not extendable[t] & s:
                if smallest is None or _better_basis(t, smallest, popcount, prefer_small=True):
                    smallest = t
                if largest is None or _better_basis(t, largest, popcount, prefer_small=False):
                    largest = t
            if t == 0:
                break
            t = (t - 1) & s

        if popcount[smallest] == 0:
            ratio = Fraction(1)
        else:
            ratio = Fraction(popcount[largest], popcount[smallest])

        if (
            best_ratio is None
            or ratio > best_ratio
            or (ratio == best_ratio and _lex_key(s) < _lex_key(best_set))
        ):
            best_ratio, best_set, best_bases = ratio, s, (smallest, largest)

    logger.debug(
        f"p({system.name}) = {best_ratio} on {_lex_key(best_set)} over {size} subsets"
    )
    return PReport(
        p_value=best_ratio,
        witness_set=_mask_to_set(best_set),
        witness_bases=(_mask_to_set(best_bases[0]), _mask_to_set(best_bases[1])),
        subsets_checked=size,
    )


def _better_basis(candidate: int, current: int, popcount: List[int], prefer_small: bool) -> bool:
    a, b = popcount[candidate], popcount[current]
    if a != b:
        return a < b if prefer_small else a > b
    return _lex_key(candidate) < _lex_key(current)


def is_maximal_independent(
    system: IndependenceSystem, subset: Iterable[int], within: Iterable[int]
) -> bool:
    """True iff subset is independent, inside within, and no item of within extends it."""
    basis = frozenset(subset)
    pool = frozenset(within)
    if not basis <= pool or not is_independent(system, basis):
        return False
    return not any(is_independent(system, basis | {e}) for e in pool - basis)
