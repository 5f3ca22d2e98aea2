#!/usr/bin/env python3
"""One subspace run versus a grid of fixed-penalty runs.

Trains the endpoint pair once and a separately initialized fixed model per
penalty strength, evaluates everything on the same held-out split, and prints
both Pareto frontiers, the mean vertical gap between them, and the wall-time
ratio of one subspace run to one fixed run.

Usage: python scripts/run_frontier_compare.py [--seed 0]
"""

import argparse
import statistics
import sys
from dataclasses import replace

import fairline as fl


def show_frontier(name, frontier):
    print(f"{name} frontier ({len(frontier)} points):")
    for r in frontier:
        tag = f"alpha={r.alpha:.2f}" if r.alpha is not None else f"A={r.fairness_weight:.2f}"
        print(f"  err={r.error_rate:.4f} dp={r.dp_relaxed:.4f} ({tag})")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8000)
    ap.add_argument("--epochs", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = fl.synth_biased(args.n, 6, 0.5, 0.4, 1.0, seed=args.seed)
    train, test = fl.split(ds, 0.25, seed=args.seed)
    cfg = fl.TrainConfig(epochs=args.epochs, seed=args.seed)

    model = fl.train_subspace(train, cfg)
    sub_records = fl.alpha_sweep(model, test)

    fixed_models = fl.sweep_fixed(train, cfg)  # 0.0 plus 0.05 .. 1.0
    fixed_records = []
    for fm in fixed_models:
        pred = fl.predict_fixed(fm, test.features)
        rec = fl.evaluate_predictions(pred, test.labels, test.sensitive)
        fixed_records.append(replace(rec, fairness_weight=fm.fairness_weight))

    f_sub = fl.pareto_frontier(sub_records, "dp_relaxed")
    f_fix = fl.pareto_frontier(
        [r for r in fixed_records if r.fairness_weight > 0], "dp_relaxed")
    show_frontier("subspace (one training run)", f_sub)
    show_frontier("fixed penalties (one run per point)", f_fix)

    gap = fl.frontier_gap(f_sub, f_fix, "dp_relaxed")
    mean_fixed = statistics.mean(m.wall_time_s for m in fixed_models)
    print(f"frontier gap: {gap:.4f} (demographic-parity units)")
    print(f"one subspace run: {model.wall_time_s:.2f}s; "
          f"one fixed run: {mean_fixed:.2f}s; "
          f"all {len(fixed_models)} fixed runs: "
          f"{sum(m.wall_time_s for m in fixed_models):.2f}s")
    print(f"wall-time ratio (subspace / fixed): {model.wall_time_s / mean_fixed:.2f}")
    erm = next(r for r in fixed_records if r.fairness_weight == 0.0)
    print(f"ERM anchor: err={erm.error_rate:.4f} dp={erm.dp_relaxed:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
