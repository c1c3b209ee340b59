import json

import numpy as np
import pytest

from dualscreen.errors import GridMismatch, InvalidSlope, ParseError
from dualscreen.grids import LossGrid, TypeGrid
from dualscreen.measures import as_weight_measure, uniform_measure
from dualscreen.menus import (
    Menu,
    PremiumSchedule,
    RetentionSchedule,
    check_submodular,
    max_ir_premium,
    premium_from_ic,
)
from dualscreen.preferences import (
    agent_utility,
    identity_distortion,
    no_insurance_utility,
    power_insurer,
    power_loss_family,
)
from dualscreen.scenario import Scenario, build_scenario


def type_independent_scenario(type_count=21, cells=101):
    """Identity distortion and a type-independent loss cdf."""
    mu = uniform_measure(0.0, 1.0)
    return Scenario(
        type_grid=TypeGrid(0.0, 1.0, type_count),
        loss_grid=LossGrid.uniform(1.0, cells),
        mu=mu,
        eta=as_weight_measure(mu),
        distortion=identity_distortion(0.0, 1.0),
        insurer=power_insurer(1.0),
        losses=power_loss_family(1.0, 0.0, 1.0, 0.0, 1.0),
        name="flat",
    )


def half_coverage_slopes(scenario):
    """Full retention below type 0.5, full coverage at and above."""
    slopes = np.zeros((scenario.n_types, scenario.n_cells))
    slopes[scenario.type_grid.nodes < 0.5] = 1.0
    return slopes


class TestPremiumFromIC:
    def test_full_retention_telescopes_to_zero(self, s1):
        slopes = np.ones((s1.n_types, s1.n_cells))
        schedule = premium_from_ic(RetentionSchedule(slopes, s1.type_grid, s1.loss_grid), 0.0, s1)
        assert np.max(np.abs(schedule.premia)) < 1e-13

    def test_full_coverage_keeps_base(self, s1):
        slopes = np.zeros((s1.n_types, s1.n_cells))
        schedule = premium_from_ic(RetentionSchedule(slopes, s1.type_grid, s1.loss_grid), 0.4, s1)
        assert np.all(schedule.premia == 0.4)

    def test_base_is_exact_at_bottom_type(self, s1):
        rng = np.random.default_rng(11)
        slopes = np.sort(rng.uniform(0, 1, (s1.n_types, s1.n_cells)), axis=0)[::-1]
        schedule = premium_from_ic(RetentionSchedule(slopes, s1.type_grid, s1.loss_grid), 0.123, s1)
        assert schedule.premia[0] == 0.123

    @staticmethod
    def _premium_at(scenario, slope_of_type, theta):
        nodes = scenario.type_grid.nodes
        slopes = np.clip(slope_of_type(nodes)[:, None] * np.ones(scenario.n_cells), 0.0, 1.0)
        schedule = premium_from_ic(
            RetentionSchedule(slopes, scenario.type_grid, scenario.loss_grid), 0.0, scenario
        )
        return schedule.premia[scenario.type_grid.index_of(theta)]

    def test_grid_refinement_oracle_smooth_retention(self):
        # second-order convergence: 4x refinement agrees to 1e-4 and beyond
        values = {
            tc: self._premium_at(build_scenario("s1", tc, lc), lambda t: 1.0 - t, 0.75)
            for tc, lc in ((41, 201), (161, 804))
        }
        assert values[41] == pytest.approx(values[161], abs=1e-4)

    def test_grid_refinement_oracle_step_retention(self):
        # a jump in type costs one order: refinements shrink the gap ~4x per step
        step = lambda t: (t < 0.5).astype(float)
        values = {
            tc: self._premium_at(build_scenario("s1", tc, lc), step, 0.75)
            for tc, lc in ((41, 201), (161, 804), (641, 3216))
        }
        gap_coarse = abs(values[41] - values[161])
        gap_fine = abs(values[161] - values[641])
        assert gap_coarse < 5e-3
        assert gap_fine < 0.35 * gap_coarse

    def test_type_independent_families_return_base_for_constant_slopes(self):
        sc = type_independent_scenario()
        for c in (0.0, 0.3, 1.0):
            slopes = np.full((sc.n_types, sc.n_cells), c)
            schedule = premium_from_ic(RetentionSchedule(slopes, sc.type_grid, sc.loss_grid), 0.2, sc)
            assert np.allclose(schedule.premia, 0.2, atol=1e-15)

    def test_shape_mismatch_raises(self, s1):
        slopes = np.zeros((3, 4))
        grid = TypeGrid(0.0, 1.0, 3)
        retention = RetentionSchedule(slopes, grid, LossGrid.uniform(1.0, 4))
        with pytest.raises(GridMismatch):
            premium_from_ic(retention, 0.0, s1)

    def test_envelope_consistency_on_smooth_schedule(self, s1):
        # utility increments along an envelope-priced menu track the
        # information-rent integrand when the schedule is smooth in type
        from dualscreen.welfare import agent_utilities

        nodes = s1.type_grid.nodes
        mids = s1.loss_grid.midpoints
        slopes = np.clip(0.5 * (1.0 - nodes)[:, None] + 0.4 * mids[None, :], 0.0, 1.0)
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        menu = Menu(retention, premium_from_ic(retention, 0.2, s1))
        u = agent_utilities(menu, s1)
        h = s1.type_grid.step
        fd = (u[2:] - u[:-2]) / (2.0 * h)
        rent = np.einsum("il,l,il->i", s1.d_table, s1.loss_grid.cell_widths, slopes)[1:-1]
        assert float(np.abs(fd - rent).max()) <= 1e-4


class TestMaxIRPremium:
    def test_full_retention_pays_nothing(self, s1):
        assert max_ir_premium(0.3, np.ones(s1.n_cells), s1) == 0.0

    def test_identity_full_coverage_worth_mean(self):
        sc = type_independent_scenario()
        assert max_ir_premium(0.5, np.zeros(sc.n_cells), sc) == pytest.approx(0.5, abs=1e-12)

    def test_s1_bottom_type_full_coverage(self, s1):
        # integral of (1 - l) over [0, 1]
        assert max_ir_premium(0.0, np.zeros(s1.n_cells), s1) == pytest.approx(0.5, abs=1e-12)

    def test_cap_makes_agent_indifferent(self, s1):
        rng = np.random.default_rng(5)
        r = rng.uniform(0, 1, s1.n_cells)
        for theta in (0.0, 0.4, 1.0):
            cap = max_ir_premium(theta, r, s1)
            u = agent_utility(theta, r, cap, s1.distortion, s1.losses, s1.loss_grid)
            base = no_insurance_utility(theta, s1.distortion, s1.losses, s1.loss_grid)
            assert u == pytest.approx(base, abs=1e-10)


class TestSubmodularity:
    def test_constant_slopes_pass(self, s1_small):
        slopes = np.full((s1_small.n_types, s1_small.n_cells), 0.7)
        report = check_submodular(RetentionSchedule(slopes, s1_small.type_grid, s1_small.loss_grid))
        assert report.passed and not report.violations

    def test_decreasing_slopes_pass(self, s1_small):
        slopes = np.linspace(1.0, 0.0, s1_small.n_types)[:, None] * np.ones(s1_small.n_cells)
        report = check_submodular(RetentionSchedule(slopes, s1_small.type_grid, s1_small.loss_grid))
        assert report.passed

    def test_single_rise_is_located(self, s1_small):
        slopes = np.full((s1_small.n_types, s1_small.n_cells), 0.4)
        slopes[4, 5] = 0.6
        report = check_submodular(RetentionSchedule(slopes, s1_small.type_grid, s1_small.loss_grid))
        assert not report.passed
        theta, loss, gap = report.violations[0]
        assert theta == pytest.approx(s1_small.type_grid.nodes[4])
        assert loss == pytest.approx(s1_small.loss_grid.midpoints[5])
        assert gap == pytest.approx(0.2, abs=1e-12)


class TestSchedules:
    def test_slope_bounds_enforced(self, s1_small):
        slopes = np.zeros((s1_small.n_types, s1_small.n_cells))
        slopes[0, 0] = -0.01
        with pytest.raises(InvalidSlope):
            RetentionSchedule(slopes, s1_small.type_grid, s1_small.loss_grid)

    def test_retention_is_lipschitz_cumulative(self, s1_small):
        rng = np.random.default_rng(2)
        slopes = rng.uniform(0, 1, (s1_small.n_types, s1_small.n_cells))
        ret = RetentionSchedule(slopes, s1_small.type_grid, s1_small.loss_grid)
        cum = ret.retention()
        assert np.all(cum[:, 0] == 0.0)
        steps = np.diff(cum, axis=1)
        widths = s1_small.loss_grid.cell_widths
        assert np.all(steps >= -1e-15)
        assert np.all(steps <= widths + 1e-15)

    def test_premium_requires_finite_entries(self):
        with pytest.raises(InvalidSlope):
            PremiumSchedule(np.array([0.1, np.nan, 0.2]))


class TestSerialization:
    def make_menu(self, scenario):
        rng = np.random.default_rng(7)
        slopes = np.sort(rng.uniform(0, 1, (scenario.n_types, scenario.n_cells)), axis=0)[::-1]
        retention = RetentionSchedule(slopes, scenario.type_grid, scenario.loss_grid)
        return Menu(retention, premium_from_ic(retention, 0.1, scenario))

    def test_json_round_trip_is_exact(self, s1_small, tmp_path):
        menu = self.make_menu(s1_small)
        path = tmp_path / "menu.json"
        menu.to_json(path)
        loaded = Menu.from_json(path)
        assert np.array_equal(loaded.retention.slopes, menu.retention.slopes)
        assert np.array_equal(loaded.premium.premia, menu.premium.premia)
        assert np.array_equal(loaded.loss_grid.nodes, menu.loss_grid.nodes)

    def test_csv_layout(self, s1_small, tmp_path):
        menu = self.make_menu(s1_small)
        path = tmp_path / "menu.csv"
        menu.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "theta,l,slope,retention,premium"
        assert len(lines) == 1 + s1_small.n_types * s1_small.n_cells
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == pytest.approx(s1_small.loss_grid.midpoints[0])

    def test_empty_file_raises_parse_error(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        with pytest.raises(ParseError):
            Menu.from_json(path)

    def test_missing_fields_raise_parse_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"theta_nodes": [0, 0.5, 1]}))
        with pytest.raises(ParseError):
            Menu.from_json(path)
