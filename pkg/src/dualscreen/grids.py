"""Discretization grids for the type space and the loss axis.

The type grid carries the nodes at which contracts are defined; the loss
grid carries cells for composite midpoint quadrature.  Marginal retentions
are piecewise constant on loss cells, so a cell is the finest unit any
schedule can resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TypeGrid", "LossGrid"]


@dataclass(frozen=True)
class TypeGrid:
    """Uniform grid on the type interval, endpoints included."""

    theta_lo: float
    theta_hi: float
    count: int
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.theta_lo < self.theta_hi:
            raise ValueError("type interval must have theta_lo < theta_hi")
        if self.count < 3:
            raise ValueError("type grid needs at least 3 nodes")
        nodes = np.linspace(self.theta_lo, self.theta_hi, self.count)
        object.__setattr__(self, "nodes", nodes)

    @property
    def step(self) -> float:
        return (self.theta_hi - self.theta_lo) / (self.count - 1)

    def index_of(self, theta: float) -> int:
        """Nearest node index; raises if theta lies outside the interval."""
        if theta < self.theta_lo - 1e-12 or theta > self.theta_hi + 1e-12:
            raise ValueError(f"theta={theta} outside [{self.theta_lo}, {self.theta_hi}]")
        return int(round((theta - self.theta_lo) / self.step))


@dataclass(frozen=True)
class LossGrid:
    """Partition of [0, loss_cap] into cells for midpoint quadrature.

    ``nodes`` are the cell edges (length ``cells + 1``); integration uses
    cell midpoints so possibly-degenerate loss CDFs are never evaluated at
    the endpoints.
    """

    nodes: np.ndarray
    cell_widths: np.ndarray = field(init=False, repr=False)
    midpoints: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("loss grid needs at least one cell")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("loss grid nodes must be strictly increasing")
        if nodes[0] != 0.0:
            raise ValueError("loss grid must start at 0")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "cell_widths", np.diff(nodes))
        object.__setattr__(self, "midpoints", 0.5 * (nodes[:-1] + nodes[1:]))

    @classmethod
    def uniform(cls, loss_cap: float, cells: int) -> "LossGrid":
        if loss_cap <= 0:
            raise ValueError("loss_cap must be positive")
        if cells < 1:
            raise ValueError("need at least one loss cell")
        return cls(np.linspace(0.0, loss_cap, cells + 1))

    @property
    def loss_cap(self) -> float:
        return float(self.nodes[-1])

    @property
    def cells(self) -> int:
        return self.nodes.size - 1
