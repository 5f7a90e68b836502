#!/usr/bin/env python3
"""Fractional-power checks: pointwise limits, the L1 anomaly, and resolvents.

Three families of runs on the catalog operators:
  pointwise    the order-s power at the origin tends to f(0), shifted by the
               equilibrium mean when the drift is stable
  l1           trace-free drift: ||F_s||_1 -> 2||f||_1 while ||F_s - f||_1
               -> ||f||_1 (no L1 convergence); positive trace: distance -> 0
  resolvent    ||lam R(lam) f||_1 stays at ||f||_1 for trace-free drift;
               the L2 series decreases strictly in lam
"""
import argparse
import sys

from kfplimits.experiments import (
    ExperimentConfig,
    emit_report,
    run_fractional_l1,
    run_fractional_pointwise,
    run_resolvent_condition,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/fractional", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-l1", action="store_true",
                    help="skip the slow L1 grid runs")
    args = ap.parse_args(argv)

    failures = 0

    def show(report, sub):
        nonlocal failures
        emit_report(report, f"{args.out}/{sub}")
        print(f"{sub:>28s}: extrapolated {report.extrapolated:10.6f} "
              f"target {report.target:8.4f} gap {report.relative_gap:7.2%} "
              f"{report.verdict}")
        failures += report.verdict != "pass"

    for op in ("heat", "ornstein_uhlenbeck"):
        cfg = ExperimentConfig(experiment="fractional_pointwise", operator=op,
                               seed=args.seed)
        show(run_fractional_pointwise(cfg), f"pointwise_{op}")

    if not args.skip_l1:
        for op in ("kolmogorov", "kolmogorov_friction"):
            cfg = ExperimentConfig(experiment="fractional_l1", operator=op,
                                   seed=args.seed)
            show(run_fractional_l1(cfg), f"l1_{op}")

    for op, p in (("kolmogorov", 1.0), ("heat", 2.0)):
        cfg = ExperimentConfig(experiment="resolvent_condition", operator=op,
                               p=p, mc_samples=100_000, seed=args.seed)
        show(run_resolvent_condition(cfg), f"resolvent_{op}_p{p:g}")
    return 2 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
