from typing import Any

from django.conf import settings

DEFAULTS = {
    "CHECKER_STATE_CAP": 200_000,
    "EXACT_REALIZATION_CAP": 100_000,
    "ORACLE_MAX_ITEMS": 7,
    "ORACLE_MAX_OUTCOMES": 3,
    "DOWNWARD_CLOSED_MAX_GROUND": 20,
    "P_ESTIMATE_MAX_GROUND": 12,
    "NONADAPTIVE_ORACLE_MAX_ITEMS": 20,
    "GAIN_TOLERANCE": 1e-9,
}


def library_setting(key: str) -> Any:
    """Read a key of settings.ADAPTIVE_GREEDY, falling back to the library default."""
    overrides = getattr(settings, "ADAPTIVE_GREEDY", {}) or {}
    if key in overrides:
        return overrides[key]
    return DEFAULTS[key]
