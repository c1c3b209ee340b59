"""Executable checks: incentive compatibility, participation, menu properties,
and a randomized non-dominance search.

``verify_ic`` compares every ordered pair of type nodes using one cached
matrix of cross-type retention integrals (the cache is spot-checked against
direct evaluation every run).  ``verify_ir`` checks the per-type premium cap
and the insurer's aggregate.  The property and implication checkers turn
the proved facts about optimal menus into pass/fail records with worst
margins.  The dominance search perturbs menus inside the IC-premium family
and reports any feasible menu that weakly improves every agent type and the
insurer's aggregate with at least one strict gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import GridMismatch
from .menus import Menu, RetentionSchedule, check_submodular, max_ir_premium, premium_from_ic
from .preferences import agent_utility
from .scenario import Scenario
from .welfare import agent_utilities, insurer_utilities

if TYPE_CHECKING:  # pragma: no cover
    from .synthesis import SynthesisResult

__all__ = [
    "DEFAULT_TOL",
    "ViolationRecord",
    "IRReport",
    "PropertyReport",
    "ImplicationReport",
    "DominanceReport",
    "verify_ic",
    "verify_ir",
    "verify_optimal_properties",
    "verify_ir_implications",
    "pareto_dominance_search",
]

DEFAULT_TOL = 1e-6
_CACHE_PROBES = 5


@dataclass
class ViolationRecord:
    kind: str
    theta: float
    theta_other: Optional[float] = None
    loss: Optional[float] = None
    magnitude: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "theta": float(self.theta),
            "theta_other": None if self.theta_other is None else float(self.theta_other),
            "loss": None if self.loss is None else float(self.loss),
            "magnitude": float(self.magnitude),
        }


def _cross_integrals(menu: Menu, scenario: Scenario) -> np.ndarray:
    """A[i, j] = integral of type i's retained-loss weight against type j's slopes."""
    if menu.retention.slopes.shape != (scenario.n_types, scenario.n_cells):
        raise GridMismatch("menu grids differ from scenario grids")
    return scenario.wc_table @ menu.retention.slopes.T


def _assert_cache(a: np.ndarray, menu: Menu, scenario: Scenario) -> None:
    # spot-check the cached integrals against direct evaluation
    rng = np.random.default_rng(0)
    n = scenario.n_types
    for _ in range(_CACHE_PROBES):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n))
        direct = -agent_utility(
            float(scenario.type_grid.nodes[i]),
            menu.retention.slopes[j],
            0.0,
            scenario.distortion,
            scenario.losses,
            scenario.loss_grid,
        )
        if abs(direct - a[i, j]) > 1e-11 * (1.0 + abs(direct)):
            raise AssertionError(
                f"cross-integral cache mismatch at pair ({i}, {j}): {a[i, j]} vs {direct}"
            )


def verify_ic(menu: Menu, scenario: Scenario, tol: float = DEFAULT_TOL) -> list:
    """All ordered-pair incentive checks; an empty list means IC holds on the grid."""
    a = _cross_integrals(menu, scenario)
    _assert_cache(a, menu, scenario)
    premia = menu.premium.premia
    cross = -premia[None, :] - a
    own = np.diag(cross)
    gain = cross - own[:, None]
    np.fill_diagonal(gain, -np.inf)
    violations = []
    for i, j in np.argwhere(gain > tol):
        violations.append(
            ViolationRecord(
                kind="ic",
                theta=float(scenario.type_grid.nodes[i]),
                theta_other=float(scenario.type_grid.nodes[j]),
                magnitude=float(gain[i, j]),
            )
        )
    violations.sort(key=lambda v: -v.magnitude)
    return violations


@dataclass
class IRReport:
    p1_ok: np.ndarray
    p1_margins: np.ndarray
    p2_value: float
    p2_ok: bool
    tol: float
    shortcut_consistent: bool

    @property
    def passed(self) -> bool:
        return bool(self.p1_ok.all() and self.p2_ok)

    @property
    def worst_p1_margin(self) -> float:
        return float(self.p1_margins.min())

    def to_dict(self) -> dict:
        return {
            "kind": "ir",
            "passed": self.passed,
            "p1_ok": [bool(x) for x in self.p1_ok],
            "worst_p1_margin": self.worst_p1_margin,
            "p2_value": float(self.p2_value),
            "p2_ok": bool(self.p2_ok),
            "tol": float(self.tol),
            "lowest_type_shortcut_consistent": bool(self.shortcut_consistent),
        }


def verify_ir(menu: Menu, scenario: Scenario, tol: float = DEFAULT_TOL) -> IRReport:
    """Participation checks: per-type premium cap (P1) and insurer aggregate (P2).

    ``shortcut_consistent`` records whether checking only the lowest type's
    P1 would have returned the same verdict as checking every type, the
    shortcut valid for IC menus with a non-negative insurer aggregate.
    """
    a = _cross_integrals(menu, scenario)
    caps = scenario.wc_table.sum(axis=1) - np.diag(a)
    margins = caps - menu.premium.premia
    p1_ok = margins >= -tol
    p2_value = float(np.dot(scenario.mu_weights, insurer_utilities(menu, scenario)))
    return IRReport(
        p1_ok=p1_ok,
        p1_margins=margins,
        p2_value=p2_value,
        p2_ok=p2_value >= -tol,
        tol=tol,
        shortcut_consistent=bool(p1_ok[0] == p1_ok.all()),
    )


# ---------------------------------------------------------------------------
# properties of synthesized menus


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    margin: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "note": self.note,
        }


@dataclass
class PropertyReport:
    checks: list = field(default_factory=list)
    row_kinds: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "kind": "optimal_menu_properties",
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "row_kinds": list(self.row_kinds),
        }


def _classify_rows(slopes: np.ndarray, tol: float = 1e-12) -> list:
    kinds = []
    for row in slopes:
        if np.all(row <= tol):
            kinds.append("full_coverage")
        elif np.all(row >= 1.0 - tol):
            kinds.append("zero_coverage")
        elif np.all((row > tol) & (row < 1.0 - tol)):
            kinds.append("interior")
        else:
            kinds.append("mixed")
    return kinds


def verify_optimal_properties(result: "SynthesisResult", scenario: Scenario) -> PropertyReport:
    """Check the proved shape of an optimal menu, each with its worst margin.

    (a) per-cell slopes non-increasing in type; (b) premia non-decreasing;
    (c) the top type fully covered; (d) the bottom type indifferent (only
    where the premium cap binds, i.e. outside the zero-premium regimes);
    (e) agent utility non-increasing in type; (f) the insurer utility
    profile classified row by row, with the partial-coverage sufficient
    inequality evaluated pointwise where it applies.
    """
    menu = result.menu
    slopes = menu.retention.slopes
    premia = menu.premium.premia
    report = PropertyReport(row_kinds=_classify_rows(slopes))

    sub = check_submodular(menu.retention)
    report.checks.append(
        PropertyCheck("slopes_nonincreasing_in_type", sub.passed, -sub.worst_gap)
    )

    dp = np.diff(premia)
    report.checks.append(
        PropertyCheck("premium_nondecreasing", bool(np.all(dp >= -1e-12)), float(dp.min()) if dp.size else 0.0)
    )

    top = float(np.abs(slopes[-1]).max())
    report.checks.append(PropertyCheck("top_type_full_coverage", top == 0.0, -top))

    u = agent_utilities(menu, scenario)
    no_ins = scenario.no_insurance_utilities()
    gap0 = float(u[0] - no_ins[0])
    if result.regime in ("FullCoverageZeroPremium", "AgentOnly"):
        report.checks.append(
            PropertyCheck("bottom_type_indifferent", True, gap0, note="zero-premium regime: cap not binding")
        )
    else:
        report.checks.append(
            PropertyCheck("bottom_type_indifferent", abs(gap0) <= 1e-8, -abs(gap0))
        )

    du = np.diff(u)
    report.checks.append(
        PropertyCheck("agent_utility_nonincreasing", bool(np.all(du <= 1e-12)), float(-du.max()) if du.size else 0.0)
    )

    v = insurer_utilities(menu, scenario)
    kinds = report.row_kinds
    # (f) insurer profile per the three coverage cases
    full_idx = [i for i, k in enumerate(kinds) if k == "full_coverage"]
    worst_full = 0.0
    ok_full = True
    for a, b in zip(full_idx, full_idx[1:]):
        if b == a + 1:
            step = float(v[b] - v[a])
            worst_full = min(worst_full, -step)
            if step > 1e-10:
                ok_full = False
    report.checks.append(
        PropertyCheck("insurer_utility_nonincreasing_on_full_coverage", ok_full, worst_full)
    )

    zero_idx = [i for i, k in enumerate(kinds) if k == "zero_coverage"]
    worst_zero = max((abs(float(v[i])) for i in zero_idx), default=0.0)
    report.checks.append(
        PropertyCheck("insurer_utility_zero_on_zero_coverage", worst_zero <= 1e-8, -worst_zero)
    )

    interior_idx = [i for i, k in enumerate(kinds) if k == "interior"]
    cond_ok = True
    worst_cond = 0.0
    h = scenario.type_grid.step
    for i in interior_idx:
        j = i if i + 1 < len(kinds) else i - 1
        cross = (slopes[j + 1] - slopes[j]) / h
        lhs = (scenario.g_table[i] - scenario.gin_table[i]) * cross
        rhs = -scenario.insurer.d_t(scenario.f_table[i]) * scenario.df_dtheta[i] * (1.0 - slopes[i])
        margin = float((lhs - rhs).min())
        worst_cond = min(worst_cond, margin)
        if margin < -1e-10:
            cond_ok = False
    report.checks.append(
        PropertyCheck(
            "partial_coverage_increase_condition",
            cond_ok,
            worst_cond,
            note="sufficient inequality for rising insurer utility on interior rows",
        )
    )
    return report


@dataclass
class ImplicationReport:
    case: str
    checks: list = field(default_factory=list)
    p2_impossible: Optional[bool] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "kind": "ir_implications",
            "case": self.case,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "p2_impossible": self.p2_impossible,
        }


def verify_ir_implications(result: "SynthesisResult", scenario: Scenario,
                           tol: float = 1e-8) -> ImplicationReport:
    """Participation implications for pure-coverage menus.

    Full coverage forces the insurer's aggregate distorted loss to dominate
    the bottom type's; zero coverage forces zero insurer utility; interior
    slopes force the three-term lower bound.  A zero-premium full-coverage
    menu additionally flags that P2 is impossible unless the insurer
    distortion saturates at one almost everywhere.
    """
    menu = result.menu
    slopes = menu.retention.slopes
    w = scenario.loss_grid.cell_widths
    kinds = set(_classify_rows(slopes))
    gin_mass = float(np.dot(scenario.mu_weights, (w * scenario.gin_table).sum(axis=1)))
    g_bottom = float((w * scenario.g_table[0]).sum())

    report = ImplicationReport(case="mixed")
    if kinds == {"full_coverage"}:
        report.case = "full_coverage"
        slack = gin_mass - g_bottom
        report.checks.append(
            PropertyCheck("aggregate_insurer_mass_dominates_bottom", slack >= -tol, slack)
        )
    elif kinds == {"zero_coverage"}:
        report.case = "zero_coverage"
        v = insurer_utilities(menu, scenario)
        worst = float(np.abs(v).max())
        report.checks.append(PropertyCheck("insurer_utility_identically_zero", worst <= tol, -worst))
    elif kinds == {"interior"}:
        report.case = "interior"
        u = agent_utilities(menu, scenario)
        rent = float(np.dot(scenario.mu_weights, u) - u[0])
        wedge = float(
            np.dot(
                scenario.mu_weights,
                np.einsum("il,il->i", w * (scenario.gin_table - scenario.g_table), slopes),
            )
        )
        slack = gin_mass - (g_bottom + rent + wedge)
        report.checks.append(
            PropertyCheck("interior_lower_bound_on_insurer_mass", slack >= -tol, slack)
        )

    if np.all(menu.premium.premia == 0.0) and np.all(slopes <= 1e-12):
        deficiency = float(np.dot(scenario.mu_weights, (w * (1.0 - scenario.gin_table)).sum(axis=1)))
        report.p2_impossible = deficiency > tol
    return report


# ---------------------------------------------------------------------------
# randomized dominance search


@dataclass
class DominanceRecord:
    source: str
    v_gain: float
    max_u_gain: float
    min_u_gain: float
    n_strict_u: int

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "v_gain": float(self.v_gain),
            "max_u_gain": float(self.max_u_gain),
            "min_u_gain": float(self.min_u_gain),
            "n_strict_u": int(self.n_strict_u),
        }


@dataclass
class DominanceReport:
    dominators: list
    trials: int
    feasible_trials: int
    seed: int
    tol: float

    @property
    def dominated(self) -> bool:
        return bool(self.dominators)

    def to_dict(self) -> dict:
        return {
            "kind": "dominance_search",
            "dominated": self.dominated,
            "dominators": [d.to_dict() for d in self.dominators],
            "trials": int(self.trials),
            "feasible_trials": int(self.feasible_trials),
            "seed": int(self.seed),
            "tol": float(self.tol),
        }


ROUNDING_TOL = 1e-12


def _dominates(u_base, v_base, u_new, v_new, tol) -> Optional[tuple]:
    # Utilities of both menus come from the same exact grid arithmetic, so
    # the weak clauses only absorb rounding; ``tol`` is the bar a strict
    # gain must clear to count as an improvement.
    du = u_new - u_base
    dv = v_new - v_base
    if np.any(du < -ROUNDING_TOL) or dv < -ROUNDING_TOL:
        return None
    strict_u = int(np.sum(du > tol))
    if dv > tol or strict_u > 0:
        return float(dv), float(du.max()), float(du.min()), strict_u
    return None


def pareto_dominance_search(
    menu: Menu,
    scenario: Scenario,
    alpha: float,
    trials: int,
    seed: int,
    tol: float = DEFAULT_TOL,
    seeded: Sequence[Menu] = (),
) -> DominanceReport:
    """Search for an IC and IR menu dominating ``menu``.

    Trials perturb the slope matrix by flipping a random block toward 0 or 1
    and rebuild premia through the IC envelope, anchored at the bottom
    type's cap (optionally shifted).  Candidates failing IC or IR at ``tol``
    are discarded.  A recorded dominator leaves no type and not the insurer
    worse off beyond rounding, and improves the insurer's aggregate or some
    type strictly by more than ``tol``.  Deterministic for a fixed seed;
    ``seeded`` menus are tested before the random trials.
    """
    u_base = agent_utilities(menu, scenario)
    v_base = float(np.dot(scenario.mu_weights, insurer_utilities(menu, scenario)))
    rng = np.random.default_rng(seed)
    n, c = scenario.n_types, scenario.n_cells
    cap_shift_scale = 0.05 * scenario.loss_grid.loss_cap

    dominators = []
    feasible = 0

    def consider(candidate: Menu, source: str):
        nonlocal feasible
        if verify_ic(candidate, scenario, tol):
            return
        ir = verify_ir(candidate, scenario, tol)
        if not ir.passed:
            return
        feasible += 1
        u_new = agent_utilities(candidate, scenario)
        v_new = float(np.dot(scenario.mu_weights, insurer_utilities(candidate, scenario)))
        hit = _dominates(u_base, v_base, u_new, v_new, tol)
        if hit is not None:
            dominators.append(DominanceRecord(source, *hit))

    for k, cand in enumerate(seeded):
        consider(cand, f"seeded:{k}")

    base_slopes = menu.retention.slopes
    for t in range(trials):
        i0 = int(rng.integers(0, n))
        i1 = int(rng.integers(i0, n)) + 1
        j0 = int(rng.integers(0, c))
        j1 = int(rng.integers(j0, c)) + 1
        value = float(rng.integers(0, 2))
        slopes = base_slopes.copy()
        slopes[i0:i1, j0:j1] = value
        retention = RetentionSchedule(slopes, scenario.type_grid, scenario.loss_grid)
        p_base = max_ir_premium(scenario.type_grid.theta_lo, slopes[0], scenario)
        if rng.random() < 0.5:
            p_base += float(rng.uniform(-cap_shift_scale, 0.2 * cap_shift_scale))
        candidate = Menu(retention, premium_from_ic(retention, p_base, scenario))
        consider(candidate, f"trial:{t}")

    return DominanceReport(
        dominators=dominators,
        trials=trials,
        feasible_trials=feasible,
        seed=seed,
        tol=tol,
    )
