"""Type-space measures and their hazard-rate machinery.

Two measures live on the type interval: the population measure (density q,
cdf Q, survival Qbar) and the welfare weight measure (density q_eta,
survival Qbar_eta).  Both are supplied as closed-form triples so hazard
ratios are exact up to rounding; the built-ins cover the uniform density
and normalized power densities c * theta^k.

The synthesis theorems consume three derived quantities implemented here:
the hazard rate q / Qbar, the survival ratio Qbar_eta / Qbar (with its
density-ratio limit at the top type), and the regime boundary
q(top) / (q_eta(top) + q(top)) that separates the layered and pooling
cases of the social weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateDensity, DegenerateSurvival
from .grids import TypeGrid
from .reports import AssumptionReport, CheckResult, run_pointwise_check

__all__ = [
    "TypeDistribution",
    "WeightMeasure",
    "uniform_measure",
    "power_measure",
    "as_weight_measure",
    "hazard_rate",
    "survival_ratio",
    "check_hazard_dominance",
    "boundary_alpha",
]

ASSUMPTION_TOL = 1e-10


@dataclass(frozen=True)
class TypeDistribution:
    """Population measure over types as a closed-form density/cdf/survival triple.

    ``support`` is the type interval the closed forms are normalized over.
    ``d_density`` is the analytic derivative of the density when available;
    the sufficient-condition checker falls back to central differences
    without it.
    """

    density: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    survival: Callable[[np.ndarray], np.ndarray]
    support: tuple
    d_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "custom"

    @property
    def theta_hi(self) -> float:
        return float(self.support[1])


@dataclass(frozen=True)
class WeightMeasure:
    """Welfare measure over types (density and survival on the same support)."""

    density: Callable[[np.ndarray], np.ndarray]
    survival: Callable[[np.ndarray], np.ndarray]
    support: tuple
    d_density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "custom"


def uniform_measure(theta_lo: float, theta_hi: float) -> TypeDistribution:
    span = theta_hi - theta_lo
    if span <= 0:
        raise ValueError("empty type interval")
    return TypeDistribution(
        density=lambda t: np.full_like(np.asarray(t, dtype=float), 1.0 / span),
        cdf=lambda t: (np.asarray(t, dtype=float) - theta_lo) / span,
        survival=lambda t: (theta_hi - np.asarray(t, dtype=float)) / span,
        support=(theta_lo, theta_hi),
        d_density=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        label="uniform",
    )


def power_measure(theta_lo: float, theta_hi: float, k: float) -> TypeDistribution:
    """Density proportional to theta^k on [theta_lo, theta_hi], normalized.

    Requires theta_lo >= 0 so the density is nonnegative; k = 1 on [0, 1]
    gives density 2*theta.
    """
    if theta_lo < 0:
        raise ValueError("power density needs a nonnegative type interval")
    if k < 0:
        raise ValueError("power exponent must be nonnegative")
    norm = (theta_hi ** (k + 1) - theta_lo ** (k + 1)) / (k + 1)

    def density(t):
        return np.asarray(t, dtype=float) ** k / norm

    def cdf(t):
        t = np.asarray(t, dtype=float)
        return (t ** (k + 1) - theta_lo ** (k + 1)) / ((k + 1) * norm)

    def survival(t):
        t = np.asarray(t, dtype=float)
        return (theta_hi ** (k + 1) - t ** (k + 1)) / ((k + 1) * norm)

    def d_density(t):
        t = np.asarray(t, dtype=float)
        if k == 0:
            return np.zeros_like(t)
        return k * t ** (k - 1) / norm

    return TypeDistribution(
        density, cdf, survival, (theta_lo, theta_hi), d_density, label=f"power(k={k:g})"
    )


def as_weight_measure(dist: TypeDistribution) -> WeightMeasure:
    """View a population-style family as a weight measure (drops the cdf)."""
    return WeightMeasure(dist.density, dist.survival, dist.support, dist.d_density, dist.label)


def hazard_rate(dist, theta: float) -> float:
    """Density over survival at ``theta``.

    Undefined at the right endpoint where the survival function vanishes;
    callers there use the density-ratio limit via :func:`survival_ratio`.
    """
    surv = float(dist.survival(theta))
    if surv <= 1e-14:
        raise DegenerateSurvival(f"survival vanishes at theta={theta}; hazard undefined")
    return float(dist.density(theta)) / surv


def survival_ratio(eta: WeightMeasure, mu: TypeDistribution, theta: float) -> float:
    """Qbar_eta / Qbar at ``theta``, extended by L'Hospital at the top type."""
    surv_mu = float(mu.survival(theta))
    if surv_mu <= 1e-14:
        q = float(mu.density(theta))
        if q <= 0:
            raise DegenerateDensity(f"population density non-positive at theta={theta}")
        return float(eta.density(theta)) / q
    return float(eta.survival(theta)) / surv_mu


def boundary_alpha(mu: TypeDistribution, eta: WeightMeasure) -> float:
    """Social-weight boundary q(top) / (q_eta(top) + q(top)) between regimes.

    Lies in (0, 1/2] whenever the top-type density ratio is at least one.
    """
    top = mu.theta_hi
    q_top = float(mu.density(top))
    if q_top <= 0:
        raise DegenerateDensity(f"population density non-positive at theta={top}")
    return q_top / (float(eta.density(top)) + q_top)


def check_hazard_dominance(
    mu: TypeDistribution, eta: WeightMeasure, grid: TypeGrid, tol: float = ASSUMPTION_TOL
) -> AssumptionReport:
    """Check that the population hazard dominates the weight hazard.

    Gates on the interior-node inequality q/Qbar >= q_eta/Qbar_eta; also
    records the two consequences used downstream: the survival ratio is
    non-decreasing across nodes, and the top-type density ratio is >= 1.
    Reports, never throws.
    """
    interior = grid.nodes[1:-1]
    haz_mu = mu.density(interior) / mu.survival(interior)
    haz_eta = eta.density(interior) / eta.survival(interior)
    points = [(float(t),) for t in interior]
    gate = run_pointwise_check("hazard_dominance", haz_mu - haz_eta, points, tol)

    ratios = np.array([survival_ratio(eta, mu, t) for t in grid.nodes])
    mono = run_pointwise_check(
        "survival_ratio_nondecreasing",
        np.diff(ratios),
        [(float(t),) for t in grid.nodes[:-1]],
        tol,
    )

    top_ratio = survival_ratio(eta, mu, grid.theta_hi)
    top = CheckResult(
        name="top_density_ratio_at_least_one",
        passed=top_ratio >= 1.0 - tol,
        margin=top_ratio - 1.0,
        worst_point=(grid.theta_hi,),
    )

    return AssumptionReport(
        kind="hazard_dominance",
        passed=gate.passed,
        checks=[gate, mono, top],
    )
