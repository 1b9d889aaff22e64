"""
Inclusion/exclusion of containers for the next collection shift.

Containers whose estimated fill exceeds the mandatory threshold must be
collected; those above the optional threshold may be collected if routes
have room; the rest stay out. Operators can force containers in or out
regardless of the forecast.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Sequence

from .model import Forecast

REASON_MANDATORY = "above mandatory threshold"
REASON_OPTIONAL = "above optional threshold"
REASON_BELOW = "below optional threshold"
REASON_NO_DATA = "no data"
REASON_FORCED_IN = "forced include"
REASON_FORCED_OUT = "forced exclude"


@dataclass(frozen=True)
class SelectionCriteria:
    """Thresholds are fill fractions; comparisons are strict by default
    ("greater than"), switchable to inclusive."""
    mandatory_threshold: float = 0.80
    optional_threshold: float = 0.50
    force_include: FrozenSet[str] = frozenset()
    force_exclude: FrozenSet[str] = frozenset()
    inclusive: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.optional_threshold <= self.mandatory_threshold <= 1.0:
            raise ValueError(
                "thresholds must satisfy 0 <= optional <= mandatory <= 1")
        overlap = set(self.force_include) & set(self.force_exclude)
        if overlap:
            raise ValueError(f"containers forced both ways: {sorted(overlap)}")


@dataclass(frozen=True)
class SelectionResult:
    """A partition of the container universe with a reason per container."""
    mandatory: FrozenSet[str]
    optional: FrozenSet[str]
    excluded: FrozenSet[str]
    reasons: Dict[str, str] = field(default_factory=dict)

    @property
    def selected(self) -> FrozenSet[str]:
        return self.mandatory | self.optional


def select(forecasts: Iterable[Forecast], criteria: SelectionCriteria,
           universe: Optional[Sequence[str]] = None) -> SelectionResult:
    """Partition containers into mandatory / optional / excluded.

    The universe defaults to the forecast containers; containers in the
    universe without a forecast are excluded with reason "no data" (forced
    inclusion still wins). Forced overrides are applied after thresholds.
    """
    criteria.validate()
    fills = {f.container_id: f.predicted_fill for f in forecasts}
    ids = list(universe) if universe is not None else sorted(fills)

    mandatory, optional, excluded = set(), set(), set()
    reasons: Dict[str, str] = {}
    for cid in ids:
        if cid in criteria.force_exclude:
            excluded.add(cid)
            reasons[cid] = REASON_FORCED_OUT
            continue
        if cid in criteria.force_include:
            mandatory.add(cid)
            reasons[cid] = REASON_FORCED_IN
            continue
        fill = fills.get(cid)
        if fill is None:
            excluded.add(cid)
            reasons[cid] = REASON_NO_DATA
        elif _above(fill, criteria.mandatory_threshold, criteria.inclusive):
            mandatory.add(cid)
            reasons[cid] = REASON_MANDATORY
        elif _above(fill, criteria.optional_threshold, criteria.inclusive):
            optional.add(cid)
            reasons[cid] = REASON_OPTIONAL
        else:
            excluded.add(cid)
            reasons[cid] = REASON_BELOW
    return SelectionResult(frozenset(mandatory), frozenset(optional),
                           frozenset(excluded), reasons)


def _above(fill: float, threshold: float, inclusive: bool) -> bool:
    return fill >= threshold if inclusive else fill > threshold
