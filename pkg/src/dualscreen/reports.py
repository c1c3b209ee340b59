"""Small report containers shared by the assumption and property checkers.

Every checker in this package reports rather than throws: a report carries
named sub-checks, each with a pass flag, the worst violating point and the
worst margin, and serializes to JSON with stable lowercase field names.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["CheckResult", "AssumptionReport"]

MAX_LISTED_VIOLATIONS = 20


@dataclass
class CheckResult:
    """Outcome of one pointwise check.

    ``margin`` is the signed worst value of the checked inequality written
    as ``expr >= -tol``; negative margins below the tolerance fail.
    """

    name: str
    passed: bool
    margin: float = 0.0
    worst_point: tuple | None = None
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "violations": [list(v) for v in self.violations[:MAX_LISTED_VIOLATIONS]],
        }


@dataclass
class AssumptionReport:
    """Bundle of named checks; ``passed`` reflects the gating ones only."""

    kind: str
    passed: bool
    checks: list = field(default_factory=list)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": bool(self.passed),
            "checks": [c.to_dict() for c in self.checks],
        }


def run_pointwise_check(name, values, points, tol) -> CheckResult:
    """Build a CheckResult for ``values >= -tol`` evaluated pointwise."""
    import numpy as np

    values = np.asarray(values, dtype=float)
    flat = values.ravel()
    worst = int(np.argmin(flat))
    margin = float(flat[worst])
    bad = np.nonzero(flat < -tol)[0]
    violations = [tuple(points[i]) + (float(flat[i]),) for i in bad[:MAX_LISTED_VIOLATIONS]]
    return CheckResult(
        name=name,
        passed=bad.size == 0,
        margin=margin,
        worst_point=tuple(points[worst]),
        violations=violations,
    )
