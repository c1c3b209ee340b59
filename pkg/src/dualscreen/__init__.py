"""Optimal incentive-efficient insurance menus under dual utility.

A library and CLI for computing menus of insurance contracts screening a
continuum of hidden types with rank-dependent (dual) preferences, and for
verifying the structural properties those menus are supposed to have:
incentive compatibility, participation on both sides, submodular retention,
regime structure in the social weight, and efficiency at the top.  An
exhaustive brute-force oracle certifies the analytic rule on desk-size
instances.
"""

from .errors import (
    AssumptionViolated,
    ConfigError,
    DegenerateDensity,
    DegenerateSurvival,
    DualScreenError,
    GridMismatch,
    InstanceTooLarge,
    InvalidSlope,
    ParseError,
)
from .grids import LossGrid, TypeGrid
from .measures import (
    TypeDistribution,
    WeightMeasure,
    as_weight_measure,
    boundary_alpha,
    check_hazard_dominance,
    hazard_rate,
    power_measure,
    survival_ratio,
    uniform_measure,
)
from .menus import (
    Menu,
    PremiumSchedule,
    RetentionSchedule,
    check_submodular,
    max_ir_premium,
    premium_from_ic,
)
from .oracle import SmallInstance, enumerate_optimum
from .preferences import (
    DistortionFamily,
    InsurerDistortion,
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
from .scenario import BUILTIN_SCENARIOS, Scenario, build_scenario
from .synthesis import (
    SynthesisResult,
    check_sufficient_conditions,
    j_eta,
    j_insurer,
    j_profile,
    optimal_premiums,
    synthesize,
    synthesize_agent_only,
    synthesize_insurer_only,
    theta_alpha,
)
from .verification import (
    pareto_dominance_search,
    verify_ic,
    verify_ir,
    verify_ir_implications,
    verify_optimal_properties,
)
from .welfare import agent_utilities, insurer_utilities, social_welfare, welfare_by_parts

__version__ = "0.1.0"
