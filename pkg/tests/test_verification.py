import numpy as np
import pytest

from dualscreen.menus import Menu, PremiumSchedule, RetentionSchedule, max_ir_premium
from dualscreen.synthesis import optimal_premiums, synthesize
from dualscreen.verification import (
    pareto_dominance_search,
    verify_ic,
    verify_ir,
    verify_ir_implications,
    verify_optimal_properties,
)
from dualscreen.welfare import insurer_utilities


def constant_menu(scenario, slope, premium):
    n, c = scenario.n_types, scenario.n_cells
    return Menu(
        RetentionSchedule(np.full((n, c), slope), scenario.type_grid, scenario.loss_grid),
        PremiumSchedule(np.full(n, premium)),
    )


class TestVerifyIC:
    def test_single_contract_menu_has_no_violations(self, s1):
        assert verify_ic(constant_menu(s1, 0.5, 0.2), s1) == []

    def test_synthesized_menu_is_exactly_ic(self, s1):
        res = synthesize(0.25, s1)
        assert verify_ic(res.menu, s1, 1e-6) == []
        # the construction is exact, not merely within the default tolerance
        assert verify_ic(res.menu, s1, 1e-12) == []

    def test_premium_bump_makes_the_node_shunned(self, s1):
        res = synthesize(0.25, s1)
        premia = res.menu.premium.premia.copy()
        premia[20] += 0.05
        bumped = Menu(res.menu.retention, PremiumSchedule(premia))
        violations = verify_ic(bumped, s1, 1e-6)
        assert violations
        bumped_node = s1.type_grid.nodes[20]
        assert all(v.theta == pytest.approx(bumped_node) for v in violations)
        assert max(v.magnitude for v in violations) == pytest.approx(0.05, rel=0.2)


class TestVerifyIR:
    def test_zero_contract_is_tight(self, s1):
        report = verify_ir(constant_menu(s1, 1.0, 0.0), s1)
        assert report.passed
        assert report.worst_p1_margin == pytest.approx(0.0, abs=1e-12)
        assert report.p2_value == pytest.approx(0.0, abs=1e-12)

    def test_overpriced_full_coverage_fails_at_bottom(self, s1):
        cap = max_ir_premium(0.0, np.zeros(s1.n_cells), s1)
        report = verify_ir(constant_menu(s1, 0.0, cap + 0.1), s1)
        assert not report.p1_ok[0]
        assert report.p1_margins[0] == pytest.approx(-0.1, abs=1e-10)

    def test_synthesized_menu_binds_at_bottom_with_slack_above(self, s1):
        res = synthesize(0.25, s1)
        report = verify_ir(res.menu, s1)
        assert report.passed
        assert report.p1_margins[0] == pytest.approx(0.0, abs=1e-10)
        assert np.all(report.p1_margins[1:] >= -1e-10)
        assert report.shortcut_consistent

    def test_report_serializes(self, s1):
        payload = verify_ir(constant_menu(s1, 1.0, 0.0), s1).to_dict()
        assert payload["kind"] == "ir"
        assert payload["p2_ok"] is True


class TestOptimalProperties:
    def test_layered_menu_passes_all(self, s1):
        res = synthesize(0.25, s1)
        report = verify_optimal_properties(res, s1)
        failed = [c.name for c in report.checks if not c.passed]
        assert failed == []

    def test_zero_premium_regime(self, s1):
        res = synthesize(0.75, s1)
        report = verify_optimal_properties(res, s1)
        assert report.passed
        assert set(report.row_kinds) == {"full_coverage"}
        v = insurer_utilities(res.menu, s1)
        assert np.all(np.diff(v) <= 1e-12)

    def test_zero_coverage_menu_has_zero_insurer_utility(self, s1):
        slopes = np.ones((s1.n_types, s1.n_cells))
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        menu = Menu(retention, optimal_premiums(retention, s1))
        assert np.max(np.abs(insurer_utilities(menu, s1))) < 1e-12


class TestIRImplications:
    def fake_result(self, menu, regime, scenario, alpha=0.25):
        from dualscreen.synthesis import SynthesisResult, j_profile, monotonicity_report

        prof = j_profile(alpha, scenario)
        return SynthesisResult(
            menu=menu,
            regime=regime,
            alpha=alpha,
            theta_alpha=None,
            j_monotone=monotonicity_report(prof, scenario),
            ir_status=verify_ir(menu, scenario),
            welfare=0.0,
        )

    def test_zero_coverage_case(self, s1):
        slopes = np.ones((s1.n_types, s1.n_cells))
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        menu = Menu(retention, optimal_premiums(retention, s1))
        report = verify_ir_implications(self.fake_result(menu, "InsurerOnly", s1), s1)
        assert report.case == "zero_coverage"
        assert report.passed

    def test_full_coverage_inequality_with_identity_insurer(self):
        # identity insurer over a type-independent loss: the aggregate
        # distorted-loss inequality binds exactly for an IR full-coverage menu
        from tests.test_menus import type_independent_scenario

        sc = type_independent_scenario()
        slopes = np.zeros((sc.n_types, sc.n_cells))
        retention = RetentionSchedule(slopes, sc.type_grid, sc.loss_grid)
        menu = Menu(retention, optimal_premiums(retention, sc))
        assert verify_ir(menu, sc).p2_ok
        report = verify_ir_implications(self.fake_result(menu, "LayeredFull", sc), sc)
        assert report.case == "full_coverage"
        assert report.passed
        assert report.checks[0].margin == pytest.approx(0.0, abs=1e-10)
        assert report.p2_impossible is None

    def test_full_coverage_inequality_tracks_p2(self, s1):
        # for full coverage with envelope premia the inequality's slack IS the
        # insurer aggregate, so the two verdicts must agree in either direction
        slopes = np.zeros((s1.n_types, s1.n_cells))
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        menu = Menu(retention, optimal_premiums(retention, s1))
        ir = verify_ir(menu, s1)
        report = verify_ir_implications(self.fake_result(menu, "LayeredFull", s1), s1)
        assert report.passed == ir.p2_ok
        assert report.checks[0].margin == pytest.approx(ir.p2_value, abs=1e-10)

    def test_zero_premium_full_coverage_flags_p2(self, s1):
        res = synthesize(0.75, s1)
        report = verify_ir_implications(res, s1)
        assert report.p2_impossible is True

    def test_interior_lower_bound(self, s1):
        slopes = np.full((s1.n_types, s1.n_cells), 0.5)
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        menu = Menu(retention, optimal_premiums(retention, s1))
        report = verify_ir_implications(self.fake_result(menu, "LayeredFull", s1), s1)
        assert report.case == "interior"
        assert report.passed == (verify_ir(menu, s1).p2_value >= 0)


class TestDominanceSearch:
    def test_synthesized_menu_undominated_smoke(self, s1):
        res = synthesize(0.25, s1)
        report = pareto_dominance_search(res.menu, s1, 0.25, trials=300, seed=7)
        assert not report.dominated
        assert report.feasible_trials > 0

    def test_suboptimal_menu_found_dominated(self, s1):
        res = synthesize(0.25, s1)
        slopes = res.menu.retention.slopes.copy()
        slopes[-1] = 1.0
        retention = RetentionSchedule(slopes, s1.type_grid, s1.loss_grid)
        suboptimal = Menu(retention, optimal_premiums(retention, s1))
        report = pareto_dominance_search(
            suboptimal, s1, 0.25, trials=50, seed=7, seeded=[res.menu]
        )
        assert report.dominated
        assert report.dominators[0].source == "seeded:0"
        assert report.dominators[0].v_gain > 1e-6

    def test_deterministic_under_fixed_seed(self, s1_small):
        res = synthesize(0.25, s1_small)
        a = pareto_dominance_search(res.menu, s1_small, 0.25, trials=200, seed=3)
        b = pareto_dominance_search(res.menu, s1_small, 0.25, trials=200, seed=3)
        assert a.to_dict() == b.to_dict()
