"""Full problem instances and the built-in scenario registry.

A Scenario bundles the type grid, the two type measures, the distortion
and loss families, and the loss grid, then precomputes every node table
the rest of the package consumes: distorted cdfs, their type derivatives,
weighted integrands, and discrete measure weights.  Scenarios are frozen;
all tables are written once in ``__post_init__`` and treated as read-only.

Built-ins:

* ``s1`` -- uniform population on [0, 1], welfare measure equal to it,
  agent distortion t**(1+theta), insurer identity, loss cdf l**(1+theta)
  on [0, 1].
* ``s2`` -- same as s1 but with welfare density 2*theta.
* ``s3`` -- alternative ordering demo: distortion exponent falls in type
  (1.8 - 0.6*theta) while the loss exponent rises fast (1 + 2.5*theta), so
  higher types are less risk averse but face much larger losses; the
  insurer distorts with t**0.8.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .grids import LossGrid, TypeGrid
from .measures import (
    TypeDistribution,
    WeightMeasure,
    as_weight_measure,
    boundary_alpha,
    check_hazard_dominance,
    power_measure,
    survival_ratio,
    uniform_measure,
)
from .preferences import (
    MODE_LESS_AVERSE,
    MODE_MORE_AVERSE,
    DistortionFamily,
    InsurerDistortion,
    LossFamily,
    check_preference_assumptions,
    power_distortion,
    power_insurer,
    power_loss_family,
)

__all__ = ["Scenario", "build_scenario", "BUILTIN_SCENARIOS", "DEFAULT_TYPE_COUNT", "DEFAULT_LOSS_CELLS"]

DEFAULT_TYPE_COUNT = 41
DEFAULT_LOSS_CELLS = 201


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance with precomputed node tables.

    Table shapes are (type nodes, loss cells) unless noted:

    * ``f_table``      loss cdf F
    * ``g_table``      composed distortion g(theta, F)
    * ``gin_table``    insurer distortion at F
    * ``d_table``      d/dtheta of the composition g(theta, F(theta, l))
    * ``wc_table``     cell width times (1 - g(theta, F)); agent integrand
    * ``wb_table``     cell width times (1 - g_in(F)); insurer integrand
    * ``mu_weights``   discrete population weights (trapezoid times density,
      normalized to unit mass), length = type nodes; ``eta_weights`` same
      for the welfare measure
    """

    type_grid: TypeGrid
    loss_grid: LossGrid
    mu: TypeDistribution
    eta: WeightMeasure
    distortion: DistortionFamily
    insurer: InsurerDistortion
    losses: LossFamily
    ordering_mode: str = MODE_MORE_AVERSE
    name: str = "custom"

    f_table: np.ndarray = field(init=False, repr=False)
    g_table: np.ndarray = field(init=False, repr=False)
    gin_table: np.ndarray = field(init=False, repr=False)
    d_table: np.ndarray = field(init=False, repr=False)
    df_dtheta: np.ndarray = field(init=False, repr=False)
    wc_table: np.ndarray = field(init=False, repr=False)
    wb_table: np.ndarray = field(init=False, repr=False)
    q_nodes: np.ndarray = field(init=False, repr=False)
    qbar_nodes: np.ndarray = field(init=False, repr=False)
    q_eta_nodes: np.ndarray = field(init=False, repr=False)
    qbar_eta_nodes: np.ndarray = field(init=False, repr=False)
    ratio_nodes: np.ndarray = field(init=False, repr=False)
    mu_weights: np.ndarray = field(init=False, repr=False)
    eta_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.ordering_mode not in (MODE_MORE_AVERSE, MODE_LESS_AVERSE):
            raise ConfigError(f"unknown ordering mode: {self.ordering_mode!r}")
        if abs(self.losses.loss_cap - self.loss_grid.loss_cap) > 1e-12:
            raise ConfigError("loss grid cap differs from loss family cap")
        theta = self.type_grid.nodes[:, None]
        mids = self.loss_grid.midpoints
        w = self.loss_grid.cell_widths

        f = self.losses.cdf(theta, mids)
        g = self.distortion.eval(theta, f)
        gin = self.insurer.eval(f)
        dfdt = self.losses.d_theta(theta, mids)
        d = self.distortion.d_theta(theta, f) + self.distortion.d_t(theta, f) * dfdt

        set_ = object.__setattr__
        set_(self, "f_table", f)
        set_(self, "g_table", g)
        set_(self, "gin_table", gin)
        set_(self, "df_dtheta", dfdt)
        set_(self, "d_table", d)
        set_(self, "wc_table", w * (1.0 - g))
        set_(self, "wb_table", w * (1.0 - gin))

        nodes = self.type_grid.nodes
        set_(self, "q_nodes", np.asarray(self.mu.density(nodes), dtype=float))
        set_(self, "qbar_nodes", np.asarray(self.mu.survival(nodes), dtype=float))
        set_(self, "q_eta_nodes", np.asarray(self.eta.density(nodes), dtype=float))
        set_(self, "qbar_eta_nodes", np.asarray(self.eta.survival(nodes), dtype=float))
        set_(self, "ratio_nodes", np.array([survival_ratio(self.eta, self.mu, t) for t in nodes]))

        trapz = np.full(nodes.size, self.type_grid.step)
        trapz[0] = trapz[-1] = 0.5 * self.type_grid.step
        mu_w = trapz * self.q_nodes
        eta_w = trapz * self.q_eta_nodes
        set_(self, "mu_weights", mu_w / mu_w.sum())
        set_(self, "eta_weights", eta_w / eta_w.sum())

    # -- convenience -------------------------------------------------------

    @property
    def n_types(self) -> int:
        return self.type_grid.count

    @property
    def n_cells(self) -> int:
        return self.loss_grid.cells

    def boundary_alpha(self) -> float:
        return boundary_alpha(self.mu, self.eta)

    def no_insurance_utilities(self) -> np.ndarray:
        """Per-node utility of facing the loss uninsured."""
        return -self.wc_table.sum(axis=1)

    def survival_ratio(self, theta: float) -> float:
        return survival_ratio(self.eta, self.mu, theta)

    def hazard_report(self):
        return check_hazard_dominance(self.mu, self.eta, self.type_grid)

    def preference_report(self):
        return check_preference_assumptions(
            self.distortion,
            self.insurer,
            self.losses,
            self.ordering_mode,
            self.type_grid.nodes,
            self.loss_grid,
        )

    def with_grids(self, type_count: int, loss_cells: int) -> "Scenario":
        """Same families on different grid resolutions."""
        return Scenario(
            type_grid=TypeGrid(self.type_grid.theta_lo, self.type_grid.theta_hi, type_count),
            loss_grid=LossGrid.uniform(self.loss_grid.loss_cap, loss_cells),
            mu=self.mu,
            eta=self.eta,
            distortion=self.distortion,
            insurer=self.insurer,
            losses=self.losses,
            ordering_mode=self.ordering_mode,
            name=self.name,
        )


def _builtin_s1(type_count, loss_cells):
    mu = uniform_measure(0.0, 1.0)
    return Scenario(
        type_grid=TypeGrid(0.0, 1.0, type_count),
        loss_grid=LossGrid.uniform(1.0, loss_cells),
        mu=mu,
        eta=as_weight_measure(mu),
        distortion=power_distortion(1.0, 1.0, 0.0, 1.0),
        insurer=power_insurer(1.0),
        losses=power_loss_family(1.0, 1.0, 1.0, 0.0, 1.0),
        ordering_mode=MODE_MORE_AVERSE,
        name="s1",
    )


def _builtin_s2(type_count, loss_cells):
    base = _builtin_s1(type_count, loss_cells)
    eta = as_weight_measure(power_measure(0.0, 1.0, 1.0))
    return Scenario(
        type_grid=base.type_grid,
        loss_grid=base.loss_grid,
        mu=base.mu,
        eta=eta,
        distortion=base.distortion,
        insurer=base.insurer,
        losses=base.losses,
        ordering_mode=MODE_MORE_AVERSE,
        name="s2",
    )


def _builtin_s3(type_count, loss_cells):
    mu = uniform_measure(0.0, 1.0)
    return Scenario(
        type_grid=TypeGrid(0.0, 1.0, type_count),
        loss_grid=LossGrid.uniform(1.0, loss_cells),
        mu=mu,
        eta=as_weight_measure(mu),
        distortion=power_distortion(1.8, -0.6, 0.0, 1.0),
        insurer=power_insurer(0.8),
        losses=power_loss_family(1.0, 2.5, 1.0, 0.0, 1.0),
        ordering_mode=MODE_LESS_AVERSE,
        name="s3",
    )


BUILTIN_SCENARIOS = {"s1": _builtin_s1, "s2": _builtin_s2, "s3": _builtin_s3}


def build_scenario(name: str, type_count: int = DEFAULT_TYPE_COUNT,
                   loss_cells: int = DEFAULT_LOSS_CELLS) -> Scenario:
    try:
        factory = BUILTIN_SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown built-in scenario {name!r}") from None
    return factory(type_count, loss_cells)
