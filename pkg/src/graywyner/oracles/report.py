"""Uniform result container for all oracle runs."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

VERDICT_PASS = "pass"
VERDICT_FAIL = "fail"
VERDICT_INCONCLUSIVE = "inconclusive"


def _jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays so ``json.dumps`` works."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one independent check.

    ``verdict`` is ``"pass"`` exactly when the estimate lies inside
    ``[closed_form_lower - tolerance, closed_form_upper + tolerance]``, with a
    missing bound treated as infinite, and ``"inconclusive"`` only when no
    closed form applies on either side.
    """

    name: str
    estimate: float
    closed_form_lower: float | None
    closed_form_upper: float | None
    tolerance: float
    verdict: str
    mc_stderr: float | None = None
    inputs: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        lo = -math.inf if self.closed_form_lower is None else self.closed_form_lower
        hi = math.inf if self.closed_form_upper is None else self.closed_form_upper
        if self.closed_form_lower is None and self.closed_form_upper is None:
            expected = VERDICT_INCONCLUSIVE
        elif lo - self.tolerance <= self.estimate <= hi + self.tolerance:
            expected = VERDICT_PASS
        else:
            expected = VERDICT_FAIL
        if self.verdict != expected:
            raise AssertionError(
                f"verdict {self.verdict!r} inconsistent with bounds: "
                f"estimate={self.estimate!r}, window=[{lo - self.tolerance!r}, "
                f"{hi + self.tolerance!r}] implies {expected!r}"
            )

    @property
    def passed(self) -> bool:
        return self.verdict == VERDICT_PASS

    def as_dict(self) -> dict[str, Any]:
        return _jsonable(dataclasses.asdict(self))

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent)


def make_report(
    name: str,
    estimate: float,
    closed_form_lower: float | None,
    closed_form_upper: float | None,
    tolerance: float,
    **kwargs: Any,
) -> OracleReport:
    """Build a report, deriving the verdict from the comparison window."""
    if closed_form_lower is None and closed_form_upper is None:
        verdict = VERDICT_INCONCLUSIVE
    else:
        lo = -math.inf if closed_form_lower is None else closed_form_lower
        hi = math.inf if closed_form_upper is None else closed_form_upper
        inside = lo - tolerance <= estimate <= hi + tolerance
        verdict = VERDICT_PASS if inside else VERDICT_FAIL
    return OracleReport(
        name=name,
        estimate=float(estimate),
        closed_form_lower=closed_form_lower,
        closed_form_upper=closed_form_upper,
        tolerance=float(tolerance),
        verdict=verdict,
        **kwargs,
    )
