import numpy as np
import pytest

from dualscreen.menus import Menu, PremiumSchedule, RetentionSchedule
from dualscreen.preferences import aggregate_insurer_utility
from dualscreen.scenario import build_scenario
from dualscreen.synthesis import j_profile, synthesize
from dualscreen.welfare import agent_utilities, insurer_utilities, social_welfare, welfare_by_parts


def constant_menu(scenario, slope, premium):
    n, c = scenario.n_types, scenario.n_cells
    return Menu(
        RetentionSchedule(np.full((n, c), slope), scenario.type_grid, scenario.loss_grid),
        PremiumSchedule(np.full(n, premium)),
    )


def test_zero_weight_reduces_to_insurer_aggregate(s1):
    menu = synthesize(0.25, s1).menu
    assert social_welfare(menu, 0.0, s1) == pytest.approx(
        aggregate_insurer_utility(menu, s1), abs=1e-14
    )


def test_full_weight_full_coverage_zero_premium_is_zero(s1):
    menu = constant_menu(s1, 0.0, 0.0)
    assert social_welfare(menu, 1.0, s1) == 0.0


def test_weighted_sum_matches_parts(s2):
    menu = synthesize(0.4, s2).menu
    u = agent_utilities(menu, s2)
    v = insurer_utilities(menu, s2)
    expected = 0.4 * float(s2.eta_weights @ u) + 0.6 * float(s2.mu_weights @ v)
    assert social_welfare(menu, 0.4, s2) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.4])
def test_by_parts_form_agrees_on_fine_grids(alpha):
    sc = build_scenario("s1", 201, 1001)
    res = synthesize(alpha, sc)
    direct = social_welfare(res.menu, alpha, sc)
    by_parts = welfare_by_parts(res.menu, alpha, sc, j_profile(alpha, sc).values)
    assert direct == pytest.approx(by_parts, abs=1e-5)


def test_result_welfare_matches_social_welfare(s2):
    res = synthesize(0.4, s2)
    assert res.welfare == pytest.approx(social_welfare(res.menu, 0.4, s2), abs=1e-15)
