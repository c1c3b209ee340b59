"""Command-line surface: scenario ingestion, dispatch, artifact emission.

Subcommands: ``synthesize``, ``verify``, ``oracle-compare``, ``conditions``,
``alpha-sweep``.  Configuration is a flat key-value text file with dotted
sections (``grid.type_count = 41``); see the README for the schema.  Exit
codes: 0 success, 1 config error, 2 assumption failure under ``--strict``,
3 oracle instance over the enumeration cap.  All artifacts are plain JSON
or CSV and are bit-identical across runs for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    AssumptionViolated,
    ConfigError,
    DualScreenError,
    GridMismatch,
    InstanceTooLarge,
    ParseError,
)
from .grids import LossGrid, TypeGrid
from .measures import as_weight_measure, power_measure, uniform_measure
from .menus import Menu, check_submodular
from .oracle import SmallInstance, enumerate_optimum
from .preferences import (
    MODE_LESS_AVERSE,
    MODE_MORE_AVERSE,
    power_distortion,
    power_insurer,
    power_loss_family,
)
from .scenario import (
    BUILTIN_SCENARIOS,
    DEFAULT_LOSS_CELLS,
    DEFAULT_TYPE_COUNT,
    Scenario,
    build_scenario,
)
from .synthesis import check_sufficient_conditions, synthesize
from .verification import pareto_dominance_search, verify_ic, verify_ir
from .welfare import agent_utilities

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSUMPTION = 2
EXIT_ORACLE_CAP = 3
EXIT_CHECKS_FAILED = 4


def parse_config(path) -> dict:
    """Flat ``key = value`` lines with dotted keys; ``#`` starts a comment."""
    config = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        config[key] = value
    return config


def _get(config, key, cast, default=None, required=False):
    if key not in config:
        if required:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    raw = config[key]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}: {exc}") from exc


def _float_list(raw: str) -> list:
    items = [x.strip() for x in raw.split(",") if x.strip()]
    return [float(x) for x in items]


def scenario_from_config(config: dict) -> Scenario:
    name = config.get("scenario", "custom").strip()
    type_count = _get(config, "grid.type_count", int, DEFAULT_TYPE_COUNT)
    loss_cells = _get(config, "grid.loss_cells", int, DEFAULT_LOSS_CELLS)
    if type_count < 3:
        raise ConfigError("grid.type_count must be at least 3")
    if loss_cells < 1:
        raise ConfigError("grid.loss_cells must be at least 1")
    if name in BUILTIN_SCENARIOS:
        return build_scenario(name, type_count, loss_cells)
    if name != "custom":
        raise ConfigError(f"unknown scenario {name!r}; built-ins: {sorted(BUILTIN_SCENARIOS)}")

    lo = _get(config, "type.lo", float, 0.0)
    hi = _get(config, "type.hi", float, 1.0)
    loss_cap = _get(config, "loss.cap", float, 1.0)

    def measure(prefix):
        family = config.get(f"{prefix}.family", "uniform").strip()
        if family == "uniform":
            return uniform_measure(lo, hi)
        if family == "power":
            return power_measure(lo, hi, _get(config, f"{prefix}.k", float, 1.0))
        raise ConfigError(f"unknown {prefix}.family {family!r}")

    mu = measure("mu")
    eta_family = config.get("eta.family", "mu").strip()
    eta = as_weight_measure(mu if eta_family == "mu" else measure("eta"))

    mode_raw = config.get("mode", "1").strip()
    mode = {"1": MODE_MORE_AVERSE, "2": MODE_LESS_AVERSE,
            MODE_MORE_AVERSE: MODE_MORE_AVERSE, MODE_LESS_AVERSE: MODE_LESS_AVERSE}.get(mode_raw)
    if mode is None:
        raise ConfigError(f"unknown ordering mode {mode_raw!r}")

    try:
        return Scenario(
            type_grid=TypeGrid(lo, hi, type_count),
            loss_grid=LossGrid.uniform(loss_cap, loss_cells),
            mu=mu,
            eta=eta,
            distortion=power_distortion(
                _get(config, "distortion.a", float, 1.0),
                _get(config, "distortion.b", float, 1.0),
                lo, hi,
            ),
            insurer=power_insurer(_get(config, "insurer.beta", float, 1.0)),
            losses=power_loss_family(
                _get(config, "loss.c", float, 1.0),
                _get(config, "loss.d", float, 1.0),
                loss_cap, lo, hi,
            ),
            ordering_mode=mode,
            name="custom",
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _alpha_from(config) -> float:
    alpha = _get(config, "alpha", float, required=True)
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def run_synthesize(config, out_dir: Path, strict: bool, seed: int) -> int:
    scenario = scenario_from_config(config)
    alpha = _alpha_from(config)
    tie_tol = _get(config, "tie_tol", float, 1e-9)
    result = synthesize(alpha, scenario, strict=strict, tie_tol=tie_tol)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.menu.to_csv(out_dir / "menu.csv")
    result.menu.to_json(out_dir / "menu.json")
    payload = result.to_dict()
    payload["scenario"] = scenario.name
    payload["seed"] = seed
    payload["grid"] = {"type_count": scenario.n_types, "loss_cells": scenario.n_cells}
    _write_json(out_dir / "result.json", payload)
    print(f"regime={result.regime} welfare={result.welfare:.10f} -> {out_dir}")
    return EXIT_OK


def run_verify(config, out_dir: Path, menu_path, seed: int) -> int:
    if menu_path is None:
        raise ConfigError("verify requires --menu PATH")
    scenario = scenario_from_config(config)
    menu = Menu.from_json(menu_path)
    if menu.retention.slopes.shape != (scenario.n_types, scenario.n_cells):
        raise GridMismatch(
            f"menu shape {menu.retention.slopes.shape} does not match configured grids "
            f"({scenario.n_types}, {scenario.n_cells})"
        )
    tol = _get(config, "tol.ic_ir", float, 1e-6)
    violations = verify_ic(menu, scenario, tol)
    ir = verify_ir(menu, scenario, tol)
    sub = check_submodular(menu.retention)
    u = agent_utilities(menu, scenario)
    du = np.diff(u)
    dp = np.diff(menu.premium.premia)
    properties = {
        "premium_nondecreasing": bool(np.all(dp >= -1e-12)) if dp.size else True,
        "agent_utility_nonincreasing": bool(np.all(du <= 1e-12)) if du.size else True,
        "top_type_full_coverage": bool(np.all(menu.retention.slopes[-1] == 0.0)),
        "bottom_type_margin": float(u[0] - scenario.no_insurance_utilities()[0]),
    }
    payload = {
        "ic_violations": [v.to_dict() for v in violations],
        "ic_passed": not violations,
        "ir": ir.to_dict(),
        "submodularity": sub.to_dict(),
        "properties": properties,
        "tol": tol,
        "seed": seed,
    }
    ok = not violations and ir.passed
    trials = _get(config, "dominance.trials", int, 0)
    if trials:
        alpha = _alpha_from(config)
        report = pareto_dominance_search(menu, scenario, alpha, trials, seed, tol)
        payload["dominance"] = report.to_dict()
        ok = ok and not report.dominated
    _write_json(out_dir / "verify.json", payload)
    print(f"ic={'ok' if not violations else f'{len(violations)} violations'} "
          f"ir={'ok' if ir.passed else 'fail'} -> {out_dir / 'verify.json'}")
    return EXIT_OK if ok else EXIT_CHECKS_FAILED


def run_oracle_compare(config, out_dir: Path, seed: int) -> int:
    scenario = scenario_from_config(config)
    alpha = _alpha_from(config)
    nodes = _get(config, "oracle.type_nodes", _float_list, None)
    if nodes is None:
        count = _get(config, "oracle.type_count", int, 3)
        nodes = list(np.linspace(scenario.type_grid.theta_lo, scenario.type_grid.theta_hi, count))
    cells = _get(config, "oracle.loss_cells", int, 4)
    alphabet = tuple(_get(config, "oracle.alphabet", _float_list, [0.0, 0.5, 1.0]))
    workers = _get(config, "oracle.workers", int, 1)
    tol = _get(config, "tol.ic_ir", float, 1e-6)

    inst = SmallInstance(scenario, tuple(nodes), cells, alphabet)
    oracle_result = enumerate_optimum(inst, alpha, tol=tol, workers=workers)

    if len(nodes) < 3:
        raise ConfigError("oracle-compare needs at least 3 uniform type nodes to synthesize against")
    coarse = scenario.with_grids(len(nodes), cells)
    if not np.allclose(coarse.type_grid.nodes, nodes, atol=1e-12):
        raise ConfigError(
            "oracle.type_nodes must form a uniform grid over the type interval "
            "for the synthesized-menu comparison"
        )
    syn = synthesize(alpha, coarse)
    gap = oracle_result.max_welfare - syn.welfare
    payload = {
        "alpha": alpha,
        "synthesized_welfare": syn.welfare,
        "synthesized_regime": syn.regime,
        "oracle": oracle_result.to_dict(),
        "gap": gap,
        "seed": seed,
    }
    _write_json(out_dir / "oracle_compare.json", payload)
    print(f"synthesized={syn.welfare:.8f} enumerated={oracle_result.max_welfare:.8f} "
          f"gap={gap:+.3e} feasible={oracle_result.feasible_count} "
          f"wall={oracle_result.wall_time:.2f}s backend={oracle_result.backend}")
    return EXIT_OK


def run_conditions(config, out_dir: Path, strict: bool, seed: int) -> int:
    scenario = scenario_from_config(config)
    alpha = _alpha_from(config)
    report = check_sufficient_conditions(scenario, alpha)
    hazard = scenario.hazard_report()
    prefs = scenario.preference_report()
    payload = {
        "conditions": report.to_dict(),
        "hazard_dominance": hazard.to_dict(),
        "preferences": prefs.to_dict(),
        "seed": seed,
    }
    _write_json(out_dir / "conditions.json", payload)
    print(f"sufficient={report.all_sufficient_hold} j_monotone={report.j_monotone.passed} "
          f"hazard={hazard.passed} preferences={prefs.passed}")
    if strict and not (hazard.passed and prefs.passed):
        return EXIT_ASSUMPTION
    return EXIT_OK


def run_alpha_sweep(config, out_dir: Path, strict: bool, seed: int) -> int:
    scenario = scenario_from_config(config)
    alphas = _get(config, "sweep.alphas", _float_list, None)
    if not alphas:
        raise ConfigError("alpha-sweep requires a non-empty sweep.alphas list")
    tie_tol = _get(config, "tie_tol", float, 1e-9)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for alpha in alphas:
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"sweep alpha {alpha} outside [0, 1]")
        res = synthesize(alpha, scenario, strict=strict, tie_tol=tie_tol)
        u = agent_utilities(res.menu, scenario)
        margin = float((u - scenario.no_insurance_utilities()).min())
        rows.append(
            [
                repr(float(alpha)),
                res.regime,
                "" if res.theta_alpha is None else repr(float(res.theta_alpha)),
                repr(float(res.welfare)),
                repr(float(res.ir_status.p2_value)),
                repr(margin),
            ]
        )
    path = out_dir / "alpha_sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "regime", "theta_alpha", "welfare", "aggregate_v", "min_agent_margin"])
        writer.writerows(rows)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dualscreen",
        description="Optimal incentive-efficient insurance menus under dual utility.",
    )
    parser.add_argument("command", choices=["synthesize", "verify", "oracle-compare", "conditions", "alpha-sweep"])
    parser.add_argument("--config", required=True, help="path to the key-value config file")
    parser.add_argument("--strict", action="store_true", help="fail (exit 2) on assumption violations")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--menu", default=None, help="menu JSON path (verify)")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
        seed = args.seed if args.seed is not None else _get(config, "seed", int, 0)
        out_dir = Path(args.out)
        if args.command == "synthesize":
            return run_synthesize(config, out_dir, args.strict, seed)
        if args.command == "verify":
            return run_verify(config, out_dir, args.menu, seed)
        if args.command == "oracle-compare":
            return run_oracle_compare(config, out_dir, seed)
        if args.command == "conditions":
            return run_conditions(config, out_dir, args.strict, seed)
        if args.command == "alpha-sweep":
            return run_alpha_sweep(config, out_dir, args.strict, seed)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, ParseError, GridMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolated as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except InstanceTooLarge as exc:
        print(f"oracle instance too large: {exc}", file=sys.stderr)
        return EXIT_ORACLE_CAP
    except DualScreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
