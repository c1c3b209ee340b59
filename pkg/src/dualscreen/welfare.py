"""Social welfare of a menu: the weighted sum of aggregate utilities.

Two independent evaluations are provided.  ``social_welfare`` aggregates
per-type utilities directly under the two type measures.  ``welfare_by_parts``
evaluates the integrated-by-parts closed form in which the virtual value
multiplies the marginal retention; the two agree in the continuum and serve
as mutual cross-checks on a grid.
"""

from __future__ import annotations

import numpy as np

from .errors import GridMismatch

__all__ = [
    "agent_utilities",
    "insurer_utilities",
    "social_welfare",
    "welfare_by_parts",
]


def _check(menu, scenario):
    if menu.retention.slopes.shape != (scenario.n_types, scenario.n_cells):
        raise GridMismatch("menu grids differ from scenario grids")


def agent_utilities(menu, scenario) -> np.ndarray:
    """Per-node agent utility -p - int [1 - g(F)] r."""
    _check(menu, scenario)
    a = np.einsum("il,il->i", scenario.wc_table, menu.retention.slopes)
    return -menu.premium.premia - a


def insurer_utilities(menu, scenario) -> np.ndarray:
    """Per-node insurer utility p - int [1 - g_in(F)] (1 - r)."""
    _check(menu, scenario)
    b = np.einsum("il,il->i", scenario.wb_table, 1.0 - menu.retention.slopes)
    return menu.premium.premia - b


def social_welfare(menu, alpha: float, scenario) -> float:
    """alpha-weighted sum of the agent aggregate (under the welfare measure)
    and the insurer aggregate (under the population measure)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("social weight must lie in [0, 1]")
    u = agent_utilities(menu, scenario)
    v = insurer_utilities(menu, scenario)
    return float(alpha * np.dot(scenario.eta_weights, u)
                 + (1.0 - alpha) * np.dot(scenario.mu_weights, v))


def welfare_by_parts(menu, alpha: float, scenario, j_values: np.ndarray) -> float:
    """Closed-form welfare: bottom-type terms minus the J-weighted retention mass.

    ``j_values`` is the virtual-value table on the scenario grid for this
    ``alpha``.  Valid for menus whose premia follow the IC envelope.
    """
    _check(menu, scenario)
    slopes = menu.retention.slopes
    w = scenario.loss_grid.cell_widths
    base = menu.premium.premia[0] + float(np.sum(scenario.wc_table[0] * slopes[0]))
    j_mass = np.einsum("il,l,il->i", j_values, w, slopes)
    insurer_base = scenario.wb_table.sum(axis=1)
    return float(
        (1.0 - 2.0 * alpha) * base
        - np.dot(scenario.mu_weights, j_mass)
        - (1.0 - alpha) * np.dot(scenario.mu_weights, insurer_base)
    )
