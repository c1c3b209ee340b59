"""Brute-force certification: exhaustive menu enumeration on desk-size grids.

The oracle enumerates every slope assignment from a finite alphabet on a
tiny (types x cells) grid, builds premia through the same IC envelope the
synthesizer uses, filters by the full IC and IR checks, and maximizes the
same discrete welfare.  Against this exhaustive maximum the analytic sign
rule is certified: on matched grids the two welfares must agree whenever
the synthesized slopes lie in the alphabet.

Enumeration is partitioned by assignment-index ranges across workers and
reduced deterministically (ties broken by smallest index); the inner loop
runs on the compiled kernel when built, else on the numpy fallback.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from ._kernels import BACKEND, run_enumeration
from .errors import InstanceTooLarge
from .grids import LossGrid
from .scenario import Scenario
from .welfare import social_welfare

__all__ = ["ENUMERATION_CAP", "SmallInstance", "OracleResult", "enumerate_optimum", "social_welfare"]

ENUMERATION_CAP = 2_000_000
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class SmallInstance:
    """Desk-size instance: a few type nodes, a few loss cells, a slope alphabet.

    ``scenario`` supplies the families and measures; the instance builds its
    own coarse tables at ``type_nodes`` and a uniform loss grid.
    """

    scenario: Scenario
    type_nodes: tuple
    loss_cells: int
    slope_alphabet: tuple = (0.0, 0.5, 1.0)

    def __post_init__(self):
        nodes = tuple(float(t) for t in self.type_nodes)
        if len(nodes) < 1 or any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise ValueError("type nodes must be strictly increasing and non-empty")
        if self.loss_cells < 1:
            raise ValueError("need at least one loss cell")
        alphabet = tuple(float(a) for a in self.slope_alphabet)
        if any(a < 0.0 or a > 1.0 for a in alphabet) or len(alphabet) < 2:
            raise ValueError("slope alphabet must contain >= 2 values in [0, 1]")
        object.__setattr__(self, "type_nodes", nodes)
        object.__setattr__(self, "slope_alphabet", alphabet)

    @property
    def slots(self) -> int:
        return len(self.type_nodes) * self.loss_cells

    @property
    def total_assignments(self) -> int:
        return len(self.slope_alphabet) ** self.slots

    def tables(self) -> dict:
        """Coarse node tables mirroring the Scenario precomputation."""
        sc = self.scenario
        nodes = np.asarray(self.type_nodes)
        grid = LossGrid.uniform(sc.loss_grid.loss_cap, self.loss_cells)
        mids, w = grid.midpoints, grid.cell_widths
        f = sc.losses.cdf(nodes[:, None], mids)
        g = sc.distortion.eval(nodes[:, None], f)
        gin = sc.insurer.eval(f)
        if nodes.size > 1:
            gaps = np.diff(nodes)
            trapz = np.concatenate([[gaps[0]], gaps[:-1] + gaps[1:], [gaps[-1]]]) * 0.5
        else:
            trapz = np.ones(1)
        mw = trapz * np.asarray(sc.mu.density(nodes), dtype=float)
        ew = trapz * np.asarray(sc.eta.density(nodes), dtype=float)
        return {
            "wc": np.ascontiguousarray(w * (1.0 - g)),
            "gd": np.ascontiguousarray(w * (g[1:] - g[:-1])) if nodes.size > 1
            else np.zeros((0, self.loss_cells)),
            "wb": np.ascontiguousarray(w * (1.0 - gin)),
            "alphabet": np.asarray(self.slope_alphabet, dtype=float),
            "mw": np.ascontiguousarray(mw / mw.sum()),
            "ew": np.ascontiguousarray(ew / ew.sum()),
        }

    def slopes_of(self, index: int) -> np.ndarray:
        """Decode an assignment index into a slope matrix (little-endian slots)."""
        n_letters = len(self.slope_alphabet)
        digits = []
        rem = index
        for _ in range(self.slots):
            digits.append(rem % n_letters)
            rem //= n_letters
        values = np.asarray(self.slope_alphabet, dtype=float)[digits]
        return values.reshape(len(self.type_nodes), self.loss_cells)


@dataclass
class OracleResult:
    max_welfare: float
    argmax_index: int
    argmax_slopes: np.ndarray
    feasible_count: int
    total_assignments: int
    wall_time: float
    backend: str
    workers: int

    def to_dict(self) -> dict:
        return {
            "max_welfare": float(self.max_welfare),
            "argmax_index": int(self.argmax_index),
            "argmax_slopes": self.argmax_slopes.tolist(),
            "feasible_count": int(self.feasible_count),
            "total_assignments": int(self.total_assignments),
            "wall_time": float(self.wall_time),
            "backend": self.backend,
            "workers": int(self.workers),
        }


def _run_range(args):
    tables, alpha, tol, cap_base, start, stop = args
    return run_enumeration(
        tables["wc"], tables["gd"], tables["wb"], tables["alphabet"],
        tables["mw"], tables["ew"], alpha, tol, cap_base, start, stop,
    )


def enumerate_optimum(inst: SmallInstance, alpha: float, tol: float = DEFAULT_TOL,
                      workers: int = 1) -> OracleResult:
    """Exhaustive maximum welfare over the instance's assignment space.

    Premia follow the IC envelope with the bottom type's participation cap
    as base for alpha <= 1/2 and zero base above; assignments failing the
    pairwise IC checks or either participation constraint are discarded.
    """
    total = inst.total_assignments
    if total > ENUMERATION_CAP:
        raise InstanceTooLarge(
            f"{total} assignments exceed the enumeration cap of {ENUMERATION_CAP}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    tables = inst.tables()
    cap_base = alpha <= 0.5
    t0 = time.perf_counter()

    if workers <= 1:
        parts = [_run_range((tables, alpha, tol, cap_base, 0, total))]
    else:
        bounds = np.linspace(0, total, workers + 1, dtype=np.int64)
        jobs = [
            (tables, alpha, tol, cap_base, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        with Pool(processes=workers) as pool:
            parts = pool.map(_run_range, jobs)

    best_w, best_idx, count = -np.inf, -1, 0
    for w, idx, n in parts:
        count += n
        if idx >= 0 and w > best_w:
            best_w, best_idx = w, idx

    elapsed = time.perf_counter() - t0
    slopes = inst.slopes_of(best_idx) if best_idx >= 0 else np.full(
        (len(inst.type_nodes), inst.loss_cells), np.nan
    )
    return OracleResult(
        max_welfare=float(best_w),
        argmax_index=int(best_idx),
        argmax_slopes=slopes,
        feasible_count=int(count),
        total_assignments=int(total),
        wall_time=float(elapsed),
        backend=BACKEND,
        workers=int(workers),
    )
