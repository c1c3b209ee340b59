import math

import numpy as np
import pytest

from dualscreen.errors import InvalidSlope
from dualscreen.grids import LossGrid, TypeGrid
from dualscreen.measures import as_weight_measure, uniform_measure
from dualscreen.menus import Menu, PremiumSchedule, RetentionSchedule
from dualscreen.preferences import (
    MODE_LESS_AVERSE,
    MODE_MORE_AVERSE,
    LossFamily,
    agent_utility,
    aggregate_insurer_utility,
    check_preference_assumptions,
    identity_distortion,
    insurer_utility,
    no_insurance_utility,
    power_distortion,
    power_insurer,
    power_loss_family,
)
from dualscreen.scenario import Scenario

FINE = LossGrid.uniform(1.0, 10_000)
IDENTITY = identity_distortion(0.0, 1.0)
UNIFORM_LOSS = power_loss_family(1.0, 0.0, 1.0, 0.0, 1.0)  # F(l) = l for every type
S1_DISTORTION = power_distortion(1.0, 1.0, 0.0, 1.0)
S1_LOSS = power_loss_family(1.0, 1.0, 1.0, 0.0, 1.0)


class TestNoInsuranceUtility:
    def test_identity_reduces_to_negative_mean(self):
        # E[L] = 1/2 for the uniform loss; midpoint rule is exact on linear integrands
        value = no_insurance_utility(0.3, IDENTITY, UNIFORM_LOSS, FINE)
        assert value == pytest.approx(-0.5, abs=1e-12)

    def test_degenerate_zero_loss(self):
        zero_loss = LossFamily(
            cdf=lambda t, l: np.ones_like(np.asarray(l, dtype=float)),
            d_theta=lambda t, l: np.zeros_like(np.asarray(l, dtype=float)),
            loss_cap=1.0,
        )
        assert no_insurance_utility(0.5, IDENTITY, zero_loss, FINE) == 0.0

    def test_power_family_closed_form(self):
        # at theta = 1: g(F(l)) = l^4, so the value is -(1 - 1/5)
        value = no_insurance_utility(1.0, S1_DISTORTION, S1_LOSS, FINE)
        assert value == pytest.approx(-0.8, abs=1e-8)


class TestAgentUtility:
    def test_full_coverage_only_premium(self):
        assert agent_utility(0.4, np.zeros(FINE.cells), 0.3, S1_DISTORTION, S1_LOSS, FINE) == -0.3

    def test_full_retention_matches_no_insurance(self):
        u = agent_utility(0.7, np.ones(FINE.cells), 0.0, S1_DISTORTION, S1_LOSS, FINE)
        assert u == no_insurance_utility(0.7, S1_DISTORTION, S1_LOSS, FINE)

    def test_half_slope_closed_form(self):
        # inner integral of 1 - l^2.25 is 1 - 1/3.25
        expected = -0.1 - 0.5 * (1.0 - 1.0 / 3.25)
        u = agent_utility(0.5, np.full(FINE.cells, 0.5), 0.1, S1_DISTORTION, S1_LOSS, FINE)
        assert u == pytest.approx(expected, abs=1e-8)

    def test_translation_invariance_is_exact(self):
        r = np.linspace(0.0, 1.0, FINE.cells)
        base = agent_utility(0.5, r, 0.0, S1_DISTORTION, S1_LOSS, FINE)
        for p in (0.1, -2.5, 0.37, 1e3):
            assert agent_utility(0.5, r, p, S1_DISTORTION, S1_LOSS, FINE) == base - p

    def test_linearity_in_retention(self):
        rng = np.random.default_rng(3)
        r1 = rng.uniform(0, 1, FINE.cells)
        r2 = rng.uniform(0, 1, FINE.cells)
        for a in (0.0, 0.25, 0.9):
            mix = agent_utility(0.5, a * r1 + (1 - a) * r2, 0.2, S1_DISTORTION, S1_LOSS, FINE)
            split = a * agent_utility(0.5, r1, 0.2, S1_DISTORTION, S1_LOSS, FINE) + (
                1 - a
            ) * agent_utility(0.5, r2, 0.2, S1_DISTORTION, S1_LOSS, FINE)
            assert mix == pytest.approx(split, abs=1e-12)

    def test_rejects_invalid_slopes(self):
        bad = np.full(FINE.cells, 1.5)
        with pytest.raises(InvalidSlope):
            agent_utility(0.5, bad, 0.0, S1_DISTORTION, S1_LOSS, FINE)


class TestInsurerUtility:
    def test_zero_coverage_keeps_premium(self):
        assert insurer_utility(0.2, np.ones(FINE.cells), 0.2, power_insurer(1.0), S1_LOSS, FINE) == 0.2

    def test_zero_contract_normalization(self):
        assert insurer_utility(0.2, np.ones(FINE.cells), 0.0, power_insurer(1.0), S1_LOSS, FINE) == 0.0

    def test_full_coverage_identity_costs_mean(self):
        value = insurer_utility(0.9, np.zeros(FINE.cells), 0.6, power_insurer(1.0), UNIFORM_LOSS, FINE)
        assert value == pytest.approx(0.1, abs=1e-12)


class TestAggregateInsurerUtility:
    @staticmethod
    def scenario(type_count=201, cells=1001):
        mu = uniform_measure(0.0, 1.0)
        return Scenario(
            type_grid=TypeGrid(0.0, 1.0, type_count),
            loss_grid=LossGrid.uniform(1.0, cells),
            mu=mu,
            eta=as_weight_measure(mu),
            distortion=S1_DISTORTION,
            insurer=power_insurer(1.0),
            losses=S1_LOSS,
            name="s1-fine",
        )

    def menu(self, scenario, slope, premium):
        n, c = scenario.n_types, scenario.n_cells
        return Menu(
            RetentionSchedule(np.full((n, c), slope), scenario.type_grid, scenario.loss_grid),
            PremiumSchedule(np.full(n, premium)),
        )

    def test_zero_contract(self):
        sc = self.scenario(41, 101)
        assert aggregate_insurer_utility(self.menu(sc, 1.0, 0.0), sc) == 0.0

    def test_constant_premium_integrates_to_itself(self):
        sc = self.scenario(41, 101)
        assert aggregate_insurer_utility(self.menu(sc, 1.0, 0.2), sc) == pytest.approx(0.2, abs=1e-12)

    def test_full_coverage_closed_form(self):
        # inner integral (1+theta)/(2+theta); outer integral 1 - ln(3/2)
        sc = self.scenario()
        expected = 0.6 - (1.0 - math.log(1.5))
        assert aggregate_insurer_utility(self.menu(sc, 0.0, 0.6), sc) == pytest.approx(expected, abs=1e-6)


class TestPreferenceAssumptions:
    GRID = LossGrid.uniform(1.0, 101)
    NODES = np.linspace(0.0, 1.0, 21)

    def test_s1_families_pass_mode_one(self):
        report = check_preference_assumptions(
            S1_DISTORTION, power_insurer(1.0), S1_LOSS, MODE_MORE_AVERSE, self.NODES, self.GRID
        )
        assert report.passed

    def test_type_independent_distortion_is_boundary_case(self):
        report = check_preference_assumptions(
            IDENTITY, power_insurer(1.0), S1_LOSS, MODE_MORE_AVERSE, self.NODES, self.GRID
        )
        assert report.passed
        assert report.check("distortion_nonincreasing_in_type").margin == pytest.approx(0.0, abs=1e-15)

    def test_mode_two_requires_loss_shift_to_dominate(self):
        # distortion rises with type but the loss cdf never moves: domination fails
        rising = power_distortion(2.0, -1.0, 0.0, 1.0)
        report = check_preference_assumptions(
            rising, power_insurer(1.0), UNIFORM_LOSS, MODE_LESS_AVERSE, self.NODES, self.GRID
        )
        assert not report.passed
        assert not report.check("loss_dominates_aversion").passed
        assert report.check("distortion_nondecreasing_in_type").passed

    def test_s3_families_pass_mode_two(self, s3):
        report = check_preference_assumptions(
            s3.distortion, s3.insurer, s3.losses, MODE_LESS_AVERSE, self.NODES, self.GRID
        )
        assert report.passed


def test_insurer_dominance_on_grid(s1, s2, s3):
    for sc in (s1, s2, s3):
        assert float((sc.gin_table - sc.g_table).min()) >= -1e-12
