"""Distortion and loss families plus the dual-utility functionals.

Under dual (rank-dependent, linear-in-outcomes) preferences every utility
in this market is an integral of ``1 - g(F(l))`` against a marginal
retention, so this module owns three things: the family objects carrying
closed forms and their partials, composite midpoint quadrature of those
integrands on a loss grid, and the ordering checks the synthesis theorems
assume about the families.

Built-in families are power-shaped with affine-in-type exponents:

* agent distortion   g(theta, t) = t ** (a + b * theta)
* insurer distortion g_in(t)     = t ** beta
* loss cdf           F(theta, l) = (l / loss_cap) ** (c + d * theta)

All partials are analytic, so the sign-critical virtual values downstream
carry no differencing error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridMismatch, InvalidSlope
from .grids import LossGrid
from .reports import AssumptionReport, CheckResult, run_pointwise_check

__all__ = [
    "DistortionFamily",
    "InsurerDistortion",
    "LossFamily",
    "power_distortion",
    "identity_distortion",
    "power_insurer",
    "power_loss_family",
    "no_insurance_utility",
    "agent_utility",
    "insurer_utility",
    "aggregate_insurer_utility",
    "check_preference_assumptions",
]

MODE_MORE_AVERSE = "more_averse_larger_loss"
MODE_LESS_AVERSE = "less_averse_larger_loss"
CHECK_TOL = 1e-10


@dataclass(frozen=True)
class DistortionFamily:
    """Type-indexed distortion g(theta, t) with partial derivatives.

    ``eval``/``d_theta``/``d_t`` are required; second partials are optional
    and only consumed by the sufficient-condition checker, which falls back
    to central differences (step 1e-5, documented accuracy downgrade) when
    they are missing.  The Lipschitz bounds are family metadata recorded by
    the assumption checker; nothing downstream consumes them.
    """

    eval: Callable
    d_theta: Callable
    d_t: Callable
    d2_theta: Optional[Callable] = None
    d2_t: Optional[Callable] = None
    d2_mixed: Optional[Callable] = None
    lipschitz_t: Optional[float] = None
    lipschitz_theta: Optional[float] = None
    label: str = "custom"


@dataclass(frozen=True)
class InsurerDistortion:
    eval: Callable
    d_t: Callable
    label: str = "custom"


@dataclass(frozen=True)
class LossFamily:
    """Type-indexed loss cdf F(theta, l) on [0, loss_cap]."""

    cdf: Callable
    d_theta: Callable
    loss_cap: float
    d2_theta: Optional[Callable] = None
    lipschitz_theta: Optional[float] = None
    label: str = "custom"


def power_distortion(a: float, b: float, theta_lo: float, theta_hi: float) -> DistortionFamily:
    """g(theta, t) = t ** e(theta) with e(theta) = a + b * theta.

    The exponent must stay >= 1 on the type interval so the family is made
    of genuine (weakly risk-averse) distortions with bounded slope.
    """
    e_lo = min(a + b * theta_lo, a + b * theta_hi)
    e_hi = max(a + b * theta_lo, a + b * theta_hi)
    if e_lo < 1.0:
        raise ValueError("power distortion exponent must stay >= 1 on the type interval")

    def exponent(theta):
        return a + b * np.asarray(theta, dtype=float)

    def _eval(theta, t):
        t = np.asarray(t, dtype=float)
        return t ** exponent(theta)

    def d_theta(theta, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = b * np.log(t) * t ** exponent(theta)
        return np.where(t > 0, out, 0.0)

    def d_t(theta, t):
        e = exponent(theta)
        t = np.asarray(t, dtype=float)
        return e * t ** (e - 1.0)

    def d2_theta(theta, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (b * np.log(t)) ** 2 * t ** exponent(theta)
        return np.where(t > 0, out, 0.0)

    def d2_t(theta, t):
        e = exponent(theta)
        t = np.asarray(t, dtype=float)
        return e * (e - 1.0) * t ** (e - 2.0)

    def d2_mixed(theta, t):
        e = exponent(theta)
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = b * t ** (e - 1.0) * (1.0 + e * np.log(t))
        return np.where(t > 0, out, 0.0)

    # sup_t |ln t| t^e = 1/(e * exp(1)); slope sup is e at t = 1.
    lip_theta = abs(b) / (e_lo * math.e) if b != 0 else 0.0
    return DistortionFamily(
        eval=_eval,
        d_theta=d_theta,
        d_t=d_t,
        d2_theta=d2_theta,
        d2_t=d2_t,
        d2_mixed=d2_mixed,
        lipschitz_t=e_hi,
        lipschitz_theta=lip_theta,
        label=f"power(a={a:g}, b={b:g})",
    )


def identity_distortion(theta_lo: float, theta_hi: float) -> DistortionFamily:
    return power_distortion(1.0, 0.0, theta_lo, theta_hi)


def power_insurer(beta: float) -> InsurerDistortion:
    """g_in(t) = t ** beta; beta in (0, 1] keeps it above every power agent."""
    if not 0 < beta <= 1:
        raise ValueError("insurer exponent must lie in (0, 1]")
    return InsurerDistortion(
        eval=lambda t: np.asarray(t, dtype=float) ** beta,
        d_t=lambda t: beta * np.asarray(t, dtype=float) ** (beta - 1.0),
        label=f"power(beta={beta:g})",
    )


def power_loss_family(
    c: float, d: float, loss_cap: float, theta_lo: float, theta_hi: float
) -> LossFamily:
    """F(theta, l) = (l / loss_cap) ** k(theta) with k(theta) = c + d * theta."""
    k_lo = min(c + d * theta_lo, c + d * theta_hi)
    if k_lo <= 0.0:
        raise ValueError("loss cdf exponent must stay positive on the type interval")

    def k(theta):
        return c + d * np.asarray(theta, dtype=float)

    def cdf(theta, l):
        u = np.asarray(l, dtype=float) / loss_cap
        return u ** k(theta)

    def d_theta(theta, l):
        u = np.asarray(l, dtype=float) / loss_cap
        with np.errstate(divide="ignore", invalid="ignore"):
            out = d * np.log(u) * u ** k(theta)
        return np.where(u > 0, out, 0.0)

    def d2_theta(theta, l):
        u = np.asarray(l, dtype=float) / loss_cap
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (d * np.log(u)) ** 2 * u ** k(theta)
        return np.where(u > 0, out, 0.0)

    lip = abs(d) / (k_lo * math.e) if d != 0 else 0.0
    return LossFamily(
        cdf=cdf,
        d_theta=d_theta,
        loss_cap=loss_cap,
        d2_theta=d2_theta,
        lipschitz_theta=lip,
        label=f"power(c={c:g}, d={d:g})",
    )


# ---------------------------------------------------------------------------
# utility functionals


def _slope_array(r, cells: int) -> np.ndarray:
    slopes = np.asarray(r, dtype=float)
    if slopes.shape != (cells,):
        raise GridMismatch(f"expected {cells} slope cells, got shape {slopes.shape}")
    if np.any(slopes < -1e-12) or np.any(slopes > 1.0 + 1e-12):
        raise InvalidSlope("marginal retention outside [0, 1]")
    return slopes


def no_insurance_utility(theta: float, distortion: DistortionFamily, losses: LossFamily,
                         grid: LossGrid) -> float:
    """Dual utility of bearing the whole loss: minus the distorted expected loss."""
    f = losses.cdf(theta, grid.midpoints)
    return -float(np.sum(grid.cell_widths * (1.0 - distortion.eval(theta, f))))


def agent_utility(theta: float, r, premium: float, distortion: DistortionFamily,
                  losses: LossFamily, grid: LossGrid) -> float:
    """Agent's end-of-period dual utility from retaining marginally ``r`` at premium ``premium``.

    The premium enters through a single trailing subtraction, so translation
    invariance is exact: the returned value equals the zero-premium value
    minus ``premium``, bit for bit.
    """
    slopes = _slope_array(r, grid.cells)
    f = losses.cdf(theta, grid.midpoints)
    integral = -float(np.sum(grid.cell_widths * (1.0 - distortion.eval(theta, f)) * slopes))
    return integral - premium


def insurer_utility(theta: float, r, premium: float, insurer: InsurerDistortion,
                    losses: LossFamily, grid: LossGrid) -> float:
    """Insurer's dual utility from covering the complement of ``r``; zero contract gives 0."""
    slopes = _slope_array(r, grid.cells)
    f = losses.cdf(theta, grid.midpoints)
    integral = -float(
        np.sum(grid.cell_widths * (1.0 - insurer.eval(f)) * (1.0 - slopes))
    )
    return integral + premium


def aggregate_insurer_utility(menu, scenario) -> float:
    """Insurer utility integrated over types under the population measure."""
    if menu.retention.slopes.shape != (scenario.type_grid.count, scenario.loss_grid.cells):
        raise GridMismatch("menu grids differ from scenario grids")
    premia = menu.premium.premia
    v = premia - np.einsum("ij,ij->i", scenario.wb_table, 1.0 - menu.retention.slopes)
    return float(np.dot(scenario.mu_weights, v))


# ---------------------------------------------------------------------------
# assumption checks


def _t_probe(n: int = 129) -> np.ndarray:
    # open probe grid: distortion partials may be singular at the corners
    return np.linspace(0.0, 1.0, n + 1)[1:-1]


def check_preference_assumptions(
    distortion: DistortionFamily,
    insurer: InsurerDistortion,
    losses: LossFamily,
    mode: str,
    type_nodes: np.ndarray,
    loss_grid: LossGrid,
    tol: float = CHECK_TOL,
) -> AssumptionReport:
    """Pointwise ordering checks on the (theta, t) and (theta, l) probe grids.

    ``mode`` selects the type ordering: ``more_averse_larger_loss`` requires
    the distortion to fall with type, ``less_averse_larger_loss`` requires it
    to rise while the loss shift dominates it.  In both modes the composed
    distorted cdf must fall with type and the insurer must dominate every
    agent type.  Reports, never throws; the recorded Lipschitz probe does
    not gate ``passed``.
    """
    theta = np.asarray(type_nodes, dtype=float)
    t = _t_probe()
    tt = np.broadcast_to(t, (theta.size, t.size))
    th_t = theta[:, None]
    mids = loss_grid.midpoints
    th_l = theta[:, None]
    f = losses.cdf(th_l, mids)
    df_dtheta = losses.d_theta(th_l, mids)

    points_t = [(float(a), float(b)) for a in theta for b in t]
    points_l = [(float(a), float(b)) for a in theta for b in mids]

    checks = []

    g0 = distortion.eval(theta, np.zeros_like(theta))
    g1 = distortion.eval(theta, np.ones_like(theta))
    norm_margin = -max(float(np.max(np.abs(g0))), float(np.max(np.abs(g1 - 1.0))))
    checks.append(
        CheckResult(
            "distortion_normalized",
            passed=norm_margin >= -1e-12,
            margin=norm_margin,
            worst_point=(float(theta[int(np.argmax(np.abs(g1 - 1.0)))]),),
        )
    )

    g_probe = distortion.eval(th_t, tt)
    mono = np.diff(g_probe, axis=1)
    checks.append(
        run_pointwise_check(
            "distortion_monotone_t",
            mono,
            [(float(a), float(b)) for a in theta for b in t[:-1]],
            tol,
        )
    )

    checks.append(
        run_pointwise_check("insurer_dominates", insurer.eval(tt) - g_probe, points_t, tol)
    )
    checks.append(
        run_pointwise_check(
            "insurer_dominates_composed", insurer.eval(f) - distortion.eval(th_l, f), points_l, tol
        )
    )

    checks.append(run_pointwise_check("loss_fosd_in_type", -df_dtheta, points_l, tol))

    fcap = losses.cdf(theta, np.full_like(theta, losses.loss_cap))
    cap_margin = -float(np.max(np.abs(fcap - 1.0)))
    checks.append(
        CheckResult(
            "loss_cdf_reaches_one",
            passed=cap_margin >= -1e-12,
            margin=cap_margin,
            worst_point=(float(theta[int(np.argmax(np.abs(fcap - 1.0)))]), losses.loss_cap),
        )
    )

    dg_dtheta_t = distortion.d_theta(th_t, tt)
    if mode == MODE_MORE_AVERSE:
        checks.append(
            run_pointwise_check("distortion_nonincreasing_in_type", -dg_dtheta_t, points_t, tol)
        )
    elif mode == MODE_LESS_AVERSE:
        checks.append(
            run_pointwise_check("distortion_nondecreasing_in_type", dg_dtheta_t, points_t, tol)
        )
        slope_at_f = distortion.d_t(th_l, f)
        dominance = slope_at_f * np.abs(df_dtheta) - np.abs(distortion.d_theta(th_l, f))
        checks.append(
            run_pointwise_check("loss_dominates_aversion", dominance, points_l, tol)
        )
    else:
        raise ValueError(f"unknown ordering mode: {mode!r}")

    composed = distortion.d_theta(th_l, f) + distortion.d_t(th_l, f) * df_dtheta
    checks.append(
        run_pointwise_check("composition_nonincreasing_in_type", -composed, points_l, tol)
    )

    passed = all(c.passed for c in checks)

    if distortion.lipschitz_t is not None:
        gaps = distortion.lipschitz_t * np.diff(tt, axis=1) - np.abs(np.diff(g_probe, axis=1))
        checks.append(
            run_pointwise_check(
                "lipschitz_t_bound",
                gaps,
                [(float(a), float(b)) for a in theta for b in t[:-1]],
                tol,
            )
        )

    return AssumptionReport(kind=f"preferences[{mode}]", passed=passed, checks=checks)
