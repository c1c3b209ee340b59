"""Virtual values, regime dispatch, and assembly of optimal menus.

The sign of the virtual value J decides the optimal marginal retention
cell by cell: coverage where J is positive, retention where it is
negative.  The social weight selects among three regimes: a fully layered
menu below the boundary weight, a layered menu pooled to full coverage
above a threshold type in the intermediate range, and full coverage at
zero premium once agent welfare dominates.  Weights 0 and 1 are routed to
the single-party problems, which reuse the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AssumptionViolated
from .measures import survival_ratio
from .menus import Menu, PremiumSchedule, RetentionSchedule, max_ir_premium, premium_from_ic
from .scenario import Scenario
from .welfare import social_welfare

__all__ = [
    "REGIME_LAYERED_FULL",
    "REGIME_LAYERED_POOLING",
    "REGIME_FULL_COVERAGE_ZERO_PREMIUM",
    "REGIME_INSURER_ONLY",
    "REGIME_AGENT_ONLY",
    "JProfile",
    "MonotonicityReport",
    "SynthesisResult",
    "ConditionsReport",
    "j_eta",
    "j_insurer",
    "j_profile",
    "theta_alpha",
    "optimal_premiums",
    "synthesize",
    "synthesize_insurer_only",
    "synthesize_agent_only",
    "check_sufficient_conditions",
]

REGIME_LAYERED_FULL = "LayeredFull"
REGIME_LAYERED_POOLING = "LayeredWithPooling"
REGIME_FULL_COVERAGE_ZERO_PREMIUM = "FullCoverageZeroPremium"
REGIME_INSURER_ONLY = "InsurerOnly"
REGIME_AGENT_ONLY = "AgentOnly"

TIE_TOL = 1e-9
BISECTION_WIDTH = 1e-10
FD_STEP = 1e-5


@dataclass(frozen=True)
class JProfile:
    """Virtual values sampled on the (type node, loss cell) grid."""

    values: np.ndarray
    kind: str  # "with_eta" or "insurer_only"
    alpha: float


@dataclass
class MonotonicityReport:
    """Discrete check that J is non-decreasing in type at every loss cell.

    ``sign_pattern_ok`` records the operative consequence separately: per
    loss cell, the set of types with negative J forms a bottom interval, so
    the sign rule yields a submodular retention even when the values
    themselves wiggle where they do not change sign.
    """

    passed: bool
    worst_gap: float
    worst_point: tuple | None
    n_violations: int
    sign_pattern_ok: bool = True

    def to_dict(self) -> dict:
        return {
            "kind": "j_monotone_in_type",
            "passed": bool(self.passed),
            "worst_gap": float(self.worst_gap),
            "worst_point": list(self.worst_point) if self.worst_point else None,
            "n_violations": int(self.n_violations),
            "sign_pattern_ok": bool(self.sign_pattern_ok),
        }


def j_eta(theta: float, l: float, alpha: float, scenario: Scenario) -> float:
    """Virtual value at one point.

    At the top type the information-rent term is dropped exactly (the
    population survival vanishes there), leaving the distortion wedge.
    Where the population density vanishes (permitted at the interval
    endpoints) the virtual value diverges; the density-weighted limit of
    q * J is returned instead, which is finite and carries the same sign.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    f = float(scenario.losses.cdf(theta, np.asarray(l, dtype=float)))
    wedge = (1.0 - alpha) * (float(scenario.insurer.eval(f)) - float(scenario.distortion.eval(theta, f)))
    qbar = float(scenario.mu.survival(theta))
    if qbar <= 1e-14:
        return wedge
    q = float(scenario.mu.density(theta))
    d = float(scenario.distortion.d_theta(theta, f)) + float(
        scenario.distortion.d_t(theta, f)
    ) * float(scenario.losses.d_theta(theta, l))
    if q <= 0.0:
        mass = (1.0 - alpha) * qbar - alpha * float(scenario.eta.survival(theta))
        return d * mass
    bracket = (1.0 - alpha) - alpha * survival_ratio(scenario.eta, scenario.mu, theta)
    return wedge + (qbar / q) * d * bracket


def j_insurer(theta: float, l: float, scenario: Scenario) -> float:
    """Insurer-only virtual value; equals the weighted one at alpha = 0."""
    return j_eta(theta, l, 0.0, scenario)


def j_profile(alpha: float, scenario: Scenario, kind: str = "with_eta") -> JProfile:
    """Virtual-value table over the whole grid; the top row keeps only the wedge.

    Rows with vanishing population density hold the density-weighted limit
    of q * J (finite, sign-faithful) as in :func:`j_eta`.
    """
    wedge = (1.0 - alpha) * (scenario.gin_table - scenario.g_table)
    with np.errstate(divide="ignore", invalid="ignore"):
        invhaz = scenario.qbar_nodes / scenario.q_nodes
        bracket = (1.0 - alpha) - alpha * scenario.ratio_nodes
        values = wedge + (invhaz * bracket)[:, None] * scenario.d_table
    degenerate = scenario.q_nodes <= 0.0
    if degenerate.any():
        mass = (1.0 - alpha) * scenario.qbar_nodes - alpha * scenario.qbar_eta_nodes
        values[degenerate] = mass[degenerate, None] * scenario.d_table[degenerate]
    values[-1] = wedge[-1]
    return JProfile(values=values, kind=kind, alpha=alpha)


def monotonicity_report(profile: JProfile, scenario: Scenario, tol: float = 1e-12,
                        tie_tol: float = TIE_TOL) -> MonotonicityReport:
    steps = np.diff(profile.values, axis=0)
    bad = steps < -tol
    if steps.size == 0:
        return MonotonicityReport(True, 0.0, None, 0)
    worst_flat = int(np.argmin(steps))
    i, j = np.unravel_index(worst_flat, steps.shape)
    induced = slopes_from_sign_rule(profile.values, tie_tol)
    sign_ok = bool(np.all(np.diff(induced, axis=0) <= 0.0))
    return MonotonicityReport(
        passed=not bool(bad.any()),
        worst_gap=float(steps[i, j]),
        worst_point=(float(scenario.type_grid.nodes[i + 1]), float(scenario.loss_grid.midpoints[j])),
        n_violations=int(bad.sum()),
        sign_pattern_ok=sign_ok,
    )


def theta_alpha(alpha: float, scenario: Scenario) -> float:
    """Pooling threshold: root of survival_ratio(theta) = (1 - alpha) / alpha.

    Bisection down to an interval of 1e-10, justified by the monotone
    survival ratio under hazard dominance.  Conventions for the degenerate
    cases: returns the top type when the ratio never reaches the target
    (empty pooling region) and the bottom type when it meets or exceeds the
    target everywhere.
    """
    if not 0.0 < alpha <= 0.5 + 1e-15:
        raise ValueError("theta_alpha is defined for alpha in (0, 1/2]")
    hazard = scenario.hazard_report()
    if not hazard.passed:
        raise AssumptionViolated(
            "hazard dominance fails; survival ratio not monotone, bisection unjustified"
        )
    target = (1.0 - alpha) / alpha
    lo, hi = scenario.type_grid.theta_lo, scenario.type_grid.theta_hi
    if scenario.survival_ratio(lo) - target >= 0.0:
        return lo
    if scenario.survival_ratio(hi) - target < 0.0:
        return hi
    a, b = lo, hi
    while b - a > BISECTION_WIDTH:
        mid = 0.5 * (a + b)
        if scenario.survival_ratio(mid) - target < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def slopes_from_sign_rule(values: np.ndarray, tie_tol: float = TIE_TOL) -> np.ndarray:
    """0 where J > tie_tol, 1 where J < -tie_tol, 0 in the tie band.

    The tie value 0 (full coverage) keeps the output deterministic and
    preserves submodularity when J is monotone in type.
    """
    return np.where(values < -tie_tol, 1.0, 0.0)


def optimal_premiums(retention: RetentionSchedule, scenario: Scenario) -> PremiumSchedule:
    """IC premia anchored at the bottom type's binding participation cap."""
    p_base = max_ir_premium(scenario.type_grid.theta_lo, retention.slopes[0], scenario)
    return premium_from_ic(retention, p_base, scenario)


@dataclass
class SynthesisResult:
    menu: Menu
    regime: str
    alpha: float
    theta_alpha: Optional[float]
    j_monotone: MonotonicityReport
    ir_status: "IRReport"
    welfare: float
    assumption_reports: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "alpha": float(self.alpha),
            "theta_alpha": None if self.theta_alpha is None else float(self.theta_alpha),
            "welfare": float(self.welfare),
            "j_monotone": self.j_monotone.to_dict(),
            "ir_status": self.ir_status.to_dict(),
            "assumption_reports": [r.to_dict() for r in self.assumption_reports],
        }


def _assumption_reports(scenario: Scenario, mode: str) -> list:
    from .preferences import check_preference_assumptions

    return [
        scenario.hazard_report(),
        check_preference_assumptions(
            scenario.distortion,
            scenario.insurer,
            scenario.losses,
            mode,
            scenario.type_grid.nodes,
            scenario.loss_grid,
        ),
    ]


def _finish(menu, regime, alpha, theta_a, j_mono, scenario, reports) -> SynthesisResult:
    from .verification import verify_ir

    return SynthesisResult(
        menu=menu,
        regime=regime,
        alpha=alpha,
        theta_alpha=theta_a,
        j_monotone=j_mono,
        ir_status=verify_ir(menu, scenario),
        welfare=social_welfare(menu, alpha, scenario),
        assumption_reports=reports,
    )


def synthesize(alpha: float, scenario: Scenario, mode: Optional[str] = None,
               strict: bool = False, tie_tol: float = TIE_TOL) -> SynthesisResult:
    """Build the optimal menu for social weight ``alpha``.

    Regimes by weight: below the boundary weight the whole menu is layered;
    between the boundary and one half, types above the pooling threshold get
    full coverage; above one half everyone gets full coverage at zero
    premium.  Weights 0 and 1 route to the single-party solvers.  Assumption
    failures are recorded in the result and raise only under ``strict``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0:
        return synthesize_insurer_only(scenario, strict=strict, tie_tol=tie_tol)
    if alpha == 1.0:
        return synthesize_agent_only(scenario)

    mode = mode or scenario.ordering_mode
    reports = _assumption_reports(scenario, mode)
    if strict and not all(r.passed for r in reports):
        failed = [r.kind for r in reports if not r.passed]
        raise AssumptionViolated(f"assumption checks failed: {', '.join(failed)}")

    profile = j_profile(alpha, scenario)
    j_mono = monotonicity_report(profile, scenario)
    tg = scenario.type_grid

    if alpha > 0.5:
        slopes = np.zeros((scenario.n_types, scenario.n_cells))
        menu = Menu(
            RetentionSchedule(slopes, tg, scenario.loss_grid),
            PremiumSchedule(np.zeros(scenario.n_types)),
        )
        return _finish(menu, REGIME_FULL_COVERAGE_ZERO_PREMIUM, alpha, None, j_mono, scenario, reports)

    slopes = slopes_from_sign_rule(profile.values, tie_tol)
    boundary = scenario.boundary_alpha()
    if alpha < boundary:
        regime, theta_a = REGIME_LAYERED_FULL, None
    else:
        regime = REGIME_LAYERED_POOLING
        theta_a = theta_alpha(alpha, scenario)
        # snap to grid nodes: the bisected root carries ~1e-10 slack
        slopes[tg.nodes >= theta_a - 1e-9] = 0.0
    retention = RetentionSchedule(slopes, tg, scenario.loss_grid)
    menu = Menu(retention, optimal_premiums(retention, scenario))
    return _finish(menu, regime, alpha, theta_a, j_mono, scenario, reports)


def synthesize_insurer_only(scenario: Scenario, strict: bool = False,
                            tie_tol: float = TIE_TOL) -> SynthesisResult:
    """Pure insurer-welfare problem: sign rule on the insurer-only virtual value."""
    mode = scenario.ordering_mode
    reports = _assumption_reports(scenario, mode)
    if strict and not all(r.passed for r in reports):
        failed = [r.kind for r in reports if not r.passed]
        raise AssumptionViolated(f"assumption checks failed: {', '.join(failed)}")
    profile = j_profile(0.0, scenario, kind="insurer_only")
    j_mono = monotonicity_report(profile, scenario)
    retention = RetentionSchedule(
        slopes_from_sign_rule(profile.values, tie_tol), scenario.type_grid, scenario.loss_grid
    )
    menu = Menu(retention, optimal_premiums(retention, scenario))
    return _finish(menu, REGIME_INSURER_ONLY, 0.0, None, j_mono, scenario, reports)


def synthesize_agent_only(scenario: Scenario) -> SynthesisResult:
    """Pure agent-welfare problem: full coverage, zero premium for everyone."""
    slopes = np.zeros((scenario.n_types, scenario.n_cells))
    menu = Menu(
        RetentionSchedule(slopes, scenario.type_grid, scenario.loss_grid),
        PremiumSchedule(np.zeros(scenario.n_types)),
    )
    profile = j_profile(1.0, scenario)
    j_mono = monotonicity_report(profile, scenario)
    return _finish(menu, REGIME_AGENT_ONLY, 1.0, None, j_mono, scenario, [])


# ---------------------------------------------------------------------------
# sufficient conditions for J-monotonicity


@dataclass
class ConditionsReport:
    mode: str
    alpha: float
    conditions: list
    j_monotone: MonotonicityReport
    all_sufficient_hold: bool

    def to_dict(self) -> dict:
        return {
            "kind": "sufficient_conditions",
            "mode": self.mode,
            "alpha": float(self.alpha),
            "all_sufficient_hold": bool(self.all_sufficient_hold),
            "conditions": [c.to_dict() for c in self.conditions],
            "j_monotone": self.j_monotone.to_dict(),
        }


def _second_partial(fn2, base_fn, theta, t, step=FD_STEP, arg="theta2"):
    """Analytic second partial if the family carries it, else central differences."""
    if fn2 is not None:
        return fn2(theta, t)
    if arg == "theta2":
        return (base_fn(theta + step, t) - 2.0 * base_fn(theta, t) + base_fn(theta - step, t)) / step**2
    if arg == "mixed":
        return (
            base_fn(theta + step, t + step)
            - base_fn(theta + step, t - step)
            - base_fn(theta - step, t + step)
            + base_fn(theta - step, t - step)
        ) / (4.0 * step**2)
    raise ValueError(arg)


def _ratio_derivative(num_fn, den_fn, num_d, den_d, theta, step=FD_STEP):
    """Derivative of num/den, analytic when both density derivatives exist."""
    if num_d is not None and den_d is not None:
        n, d = num_fn(theta), den_fn(theta)
        return (num_d(theta) * d - n * den_d(theta)) / d**2
    return (num_fn(theta + step) / den_fn(theta + step)
            - num_fn(theta - step) / den_fn(theta - step)) / (2.0 * step)


def check_sufficient_conditions(scenario: Scenario, alpha: float,
                                mode: Optional[str] = None) -> ConditionsReport:
    """Evaluate the C1-C5 sufficient conditions and the direct monotonicity test.

    The conditions are sufficient, not necessary, so the report keeps the two
    verdicts separate; synthesis gates on the direct test only.
    """
    from .reports import run_pointwise_check

    mode = mode or scenario.ordering_mode
    tol = 1e-10
    tg = scenario.type_grid
    theta = tg.nodes[:, None]
    mids = scenario.loss_grid.midpoints
    f = scenario.f_table
    points = [(float(a), float(b)) for a in tg.nodes for b in mids]

    # density-ratio conditions are only defined where the density is positive;
    # the spec allows it to vanish at the interval endpoints
    live = scenario.q_nodes > 0.0
    live_nodes = tg.nodes[live]
    points_th = [(float(a),) for a in live_nodes]

    conditions = []

    # C1: inverse hazard drift in [0, 1]
    qbar = lambda t: scenario.mu.survival(t)
    q = lambda t: scenario.mu.density(t)
    neg_q = None
    if scenario.mu.d_density is not None:
        neg_q = lambda t: -scenario.mu.density(t)  # d/dtheta of Qbar is -q
    drift = _ratio_derivative(qbar, q, neg_q, scenario.mu.d_density, live_nodes)
    conditions.append(run_pointwise_check("C1_lower_inverse_hazard_drift", drift, points_th, tol))
    conditions.append(run_pointwise_check("C1_upper_inverse_hazard_drift", 1.0 - drift, points_th, tol))

    # C2: loss cdf convex in type
    d2f = _second_partial(scenario.losses.d2_theta, scenario.losses.cdf, theta, mids)
    conditions.append(run_pointwise_check("C2_loss_cdf_convex_in_type", d2f, points, tol))

    # C3: distortion convex in type (at t = F)
    d2g_theta = _second_partial(scenario.distortion.d2_theta, scenario.distortion.eval, theta, f)
    conditions.append(run_pointwise_check("C3_distortion_convex_in_type", d2g_theta, points, tol))

    # C4: distortion convex in t (at t = F)
    if scenario.distortion.d2_t is not None:
        d2g_t = scenario.distortion.d2_t(theta, f)
    else:
        step = FD_STEP
        d2g_t = (
            scenario.distortion.eval(theta, f + step)
            - 2.0 * scenario.distortion.eval(theta, f)
            + scenario.distortion.eval(theta, f - step)
        ) / step**2
    conditions.append(run_pointwise_check("C4_distortion_convex_in_t", d2g_t, points, tol))

    # C5: submodular distortion plus the cross bound with the insurer slope
    gmix = _second_partial(scenario.distortion.d2_mixed, scenario.distortion.eval, theta, f, arg="mixed")
    conditions.append(run_pointwise_check("C5_distortion_submodular", -gmix, points, tol))
    points_live = [(float(a), float(b)) for a in live_nodes for b in mids]
    invhaz = (scenario.qbar_nodes[live] / scenario.q_nodes[live])[:, None]
    gin_slope = scenario.insurer.d_t(f[live])
    conditions.append(
        run_pointwise_check("C5_cross_bound", -gin_slope - invhaz * gmix[live], points_live, tol)
    )

    if mode == "less_averse_larger_loss":
        qeta_surv = lambda t: scenario.eta.survival(t)
        neg_qeta = (lambda t: -scenario.eta.density(t)) if scenario.eta.d_density is not None else None
        drift_eta = _ratio_derivative(qeta_surv, q, neg_qeta, scenario.mu.d_density, live_nodes)
        lhs = drift_eta[:, None] * scenario.d_table[live]
        rhs = -(qeta_surv(live_nodes) / q(live_nodes))[:, None] * scenario.df_dtheta[live] * gmix[live]
        conditions.append(
            run_pointwise_check("C5_alternative_ordering_bound", rhs - lhs, points_live, tol)
        )

    profile = j_profile(alpha, scenario)
    j_mono = monotonicity_report(profile, scenario)
    return ConditionsReport(
        mode=mode,
        alpha=alpha,
        conditions=conditions,
        j_monotone=j_mono,
        all_sufficient_hold=all(c.passed for c in conditions),
    )
