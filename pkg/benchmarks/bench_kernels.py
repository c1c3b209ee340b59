"""Benchmark the compiled enumeration kernel against the numpy fallback.

Runs the full assignment scan on two desk-size instances with each
available backend, checks that both return identical results, and prints a
timing table.  Usage: python benchmarks/bench_kernels.py
"""

import time

from dualscreen._kernels import available_backends
from dualscreen.oracle import SmallInstance
from dualscreen.scenario import build_scenario


def run_backend(fn, tables, alpha, tol, cap_base, total):
    t0 = time.perf_counter()
    out = fn(
        tables["wc"], tables["gd"], tables["wb"], tables["alphabet"],
        tables["mw"], tables["ew"], alpha, tol, cap_base, 0, total,
    )
    return out, time.perf_counter() - t0


def main():
    scenario = build_scenario("s1")
    cases = [
        ("3 types x 4 cells, alphabet {0, 1/2, 1}", SmallInstance(scenario, (0.0, 0.5, 1.0), 4), 0.25),
        ("4 types x 5 cells, alphabet {0, 1}",
         SmallInstance(scenario, (0.0, 1 / 3, 2 / 3, 1.0), 5, (0.0, 1.0)), 0.25),
    ]
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    for label, inst, alpha in cases:
        total = inst.total_assignments
        tables = inst.tables()
        print(f"\n{label}: {total} assignments")
        results = {}
        for name, fn in backends.items():
            (best_w, best_idx, count), elapsed = run_backend(fn, tables, alpha, 1e-6, True, total)
            results[name] = (best_w, best_idx, count)
            rate = total / elapsed / 1e6
            print(f"  {name:<9} {elapsed:8.3f} s  ({rate:6.2f} M assignments/s)  "
                  f"max={best_w:.8f} idx={best_idx} feasible={count}")
        values = list(results.values())
        for other in values[1:]:
            assert other[1] == values[0][1] and other[2] == values[0][2], "backend mismatch"
            assert abs(other[0] - values[0][0]) < 1e-12, "backend welfare mismatch"
        if len(values) > 1:
            print("  backends agree")


if __name__ == "__main__":
    main()
