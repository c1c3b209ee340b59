"""Contract menus: retention schedules, premia, and the IC premium rule.

A menu assigns every type node a marginal retention row (piecewise-constant
slopes in [0, 1] over loss cells) and a premium.  The premium constructor
implements the envelope formula for incentive-compatible schedules:

    p(theta) = p_base + int [1 - g(F)] r  at the bottom type
             - int_bottom^theta int d/ds[g_s(F_s)] r_s dl ds
             - int [1 - g(F)] r  at theta

The inner type integral is accumulated once over the ordered grid.  The
d/ds factor is integrated exactly between adjacent nodes (it telescopes to
differences of the composed distortion), and the retention factor is
averaged trapezoidally.  With that quadrature the discrete menu inherits
the exact structural facts the continuum construction has: built from a
submodular retention it passes every pairwise IC comparison on the grid,
premia are monotone whenever the retention is submodular, and per-node
agent utility steps are exactly the envelope increments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, InvalidSlope, ParseError
from .grids import LossGrid, TypeGrid
from .scenario import Scenario

__all__ = [
    "RetentionSchedule",
    "PremiumSchedule",
    "Menu",
    "SubmodularityReport",
    "premium_from_ic",
    "max_ir_premium",
    "check_submodular",
]

SLOPE_TOL = 1e-12
SUBMODULAR_TOL = 1e-12


@dataclass(frozen=True)
class RetentionSchedule:
    """Marginal retention slopes on the (type node, loss cell) grid."""

    slopes: np.ndarray
    type_grid: TypeGrid
    loss_grid: LossGrid

    def __post_init__(self):
        slopes = np.ascontiguousarray(np.asarray(self.slopes, dtype=float))
        expected = (self.type_grid.count, self.loss_grid.cells)
        if slopes.shape != expected:
            raise GridMismatch(f"slope matrix shape {slopes.shape}, grids imply {expected}")
        if np.any(slopes < -SLOPE_TOL) or np.any(slopes > 1.0 + SLOPE_TOL):
            raise InvalidSlope("marginal retention outside [0, 1]")
        object.__setattr__(self, "slopes", slopes)

    def retention(self) -> np.ndarray:
        """Cumulative retained loss at every cell right edge, zero at l = 0.

        Shape (type nodes, cells + 1); row functions are non-decreasing and
        1-Lipschitz by the slope bounds.
        """
        r = np.cumsum(self.slopes * self.loss_grid.cell_widths, axis=1)
        return np.hstack([np.zeros((self.slopes.shape[0], 1)), r])

    def total_retention(self) -> np.ndarray:
        """Retained amount at the loss cap, per type."""
        return self.slopes @ self.loss_grid.cell_widths


@dataclass(frozen=True)
class PremiumSchedule:
    premia: np.ndarray

    def __post_init__(self):
        premia = np.ascontiguousarray(np.asarray(self.premia, dtype=float))
        if premia.ndim != 1:
            raise GridMismatch("premium schedule must be one value per type node")
        if not np.all(np.isfinite(premia)):
            raise InvalidSlope("premium schedule has non-finite entries")
        object.__setattr__(self, "premia", premia)


@dataclass(frozen=True)
class Menu:
    retention: RetentionSchedule
    premium: PremiumSchedule

    def __post_init__(self):
        if self.premium.premia.shape != (self.retention.type_grid.count,):
            raise GridMismatch("premium length differs from type grid")

    @property
    def type_grid(self) -> TypeGrid:
        return self.retention.type_grid

    @property
    def loss_grid(self) -> LossGrid:
        return self.retention.loss_grid

    # -- serialization ------------------------------------------------------

    CSV_COLUMNS = ("theta", "l", "slope", "retention", "premium")

    def to_csv(self, path) -> None:
        """Write one row per (type node, loss cell); ``l`` is the cell midpoint,
        ``retention`` the cumulative value at the cell's right edge, and the
        premium repeats down each type's rows."""
        cumret = self.retention.retention()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_COLUMNS)
            for i, theta in enumerate(self.type_grid.nodes):
                p = self.premium.premia[i]
                for j, mid in enumerate(self.loss_grid.midpoints):
                    writer.writerow(
                        [repr(float(theta)), repr(float(mid)),
                         repr(float(self.retention.slopes[i, j])),
                         repr(float(cumret[i, j + 1])), repr(float(p))]
                    )

    def to_json_dict(self) -> dict:
        return {
            "theta_nodes": [float(t) for t in self.type_grid.nodes],
            "loss_nodes": [float(x) for x in self.loss_grid.nodes],
            "slopes": self.retention.slopes.tolist(),
            "premia": self.premium.premia.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "Menu":
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot parse menu file {path}: {exc}") from exc
        try:
            theta = np.asarray(payload["theta_nodes"], dtype=float)
            edges = np.asarray(payload["loss_nodes"], dtype=float)
            slopes = np.asarray(payload["slopes"], dtype=float)
            premia = np.asarray(payload["premia"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"menu file {path} missing or malformed fields: {exc}") from exc
        if theta.size < 3:
            raise ParseError("menu type grid needs at least 3 nodes")
        tg = TypeGrid(float(theta[0]), float(theta[-1]), theta.size)
        if not np.allclose(tg.nodes, theta, atol=1e-9):
            raise ParseError("menu theta nodes are not a uniform grid")
        lg = LossGrid(edges)
        return cls(RetentionSchedule(slopes, tg, lg), PremiumSchedule(premia))


# ---------------------------------------------------------------------------
# operations


def _check_scenario_shape(slopes: np.ndarray, scenario: Scenario) -> None:
    expected = (scenario.n_types, scenario.n_cells)
    if slopes.shape != expected:
        raise GridMismatch(f"slopes shape {slopes.shape} does not match scenario {expected}")


def envelope_increments(retention: RetentionSchedule, scenario: Scenario) -> np.ndarray:
    """Per-interval increments of the information-rent integral.

    Entry k is int_{theta_k}^{theta_{k+1}} int d/ds[g_s(F_s)] r_s dl ds with
    the type factor integrated exactly and r averaged trapezoidally; these
    are also the exact steps of agent utility along an IC menu.
    """
    slopes = retention.slopes
    _check_scenario_shape(slopes, scenario)
    g = scenario.g_table
    w = scenario.loss_grid.cell_widths
    gdiff = (g[1:] - g[:-1]) * w
    avg = 0.5 * (slopes[1:] + slopes[:-1])
    return np.einsum("kl,kl->k", gdiff, avg)


def premium_from_ic(retention: RetentionSchedule, p_base: float, scenario: Scenario) -> PremiumSchedule:
    """Incentive-compatible premium schedule anchored at ``p_base`` for the bottom type."""
    slopes = retention.slopes
    _check_scenario_shape(slopes, scenario)
    a_diag = np.einsum("il,il->i", scenario.wc_table, slopes)
    rent = np.concatenate([[0.0], np.cumsum(envelope_increments(retention, scenario))])
    premia = p_base + (a_diag[0] - rent - a_diag)
    return PremiumSchedule(premia)


def max_ir_premium(theta: float, r, scenario: Scenario) -> float:
    """Largest premium keeping type ``theta`` weakly willing to participate.

    At this premium the agent's utility equals the no-insurance utility
    exactly (same quadrature on both sides).
    """
    slopes = np.asarray(r, dtype=float)
    if slopes.shape != (scenario.n_cells,):
        raise GridMismatch("retention row does not match the loss grid")
    if np.any(slopes < -SLOPE_TOL) or np.any(slopes > 1.0 + SLOPE_TOL):
        raise InvalidSlope("marginal retention outside [0, 1]")
    mids = scenario.loss_grid.midpoints
    w = scenario.loss_grid.cell_widths
    f = scenario.losses.cdf(theta, mids)
    c = 1.0 - scenario.distortion.eval(theta, f)
    return float(np.sum(w * c * (1.0 - slopes)))


@dataclass
class SubmodularityReport:
    passed: bool
    worst_gap: float
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "submodularity",
            "passed": bool(self.passed),
            "worst_gap": float(self.worst_gap),
            "violations": [
                {"theta": t, "l": l, "gap": g} for (t, l, g) in self.violations[:20]
            ],
        }


def check_submodular(retention: RetentionSchedule, tol: float = SUBMODULAR_TOL) -> SubmodularityReport:
    """Slopes must be non-increasing in type at every loss cell."""
    slopes = retention.slopes
    rises = slopes[1:] - slopes[:-1]
    bad = np.argwhere(rises > tol)
    violations = [
        (
            float(retention.type_grid.nodes[i + 1]),
            float(retention.loss_grid.midpoints[j]),
            float(rises[i, j]),
        )
        for i, j in bad
    ]
    worst = float(rises.max()) if rises.size else 0.0
    return SubmodularityReport(passed=bad.size == 0, worst_gap=worst, violations=violations)
