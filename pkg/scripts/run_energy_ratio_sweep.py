#!/usr/bin/env python3
"""Energy-ratio sweep: sDCTFT at n=90 for delta in {0.5..0.9}, accuracy
normalized per seed to the delta=0.7 run."""

import argparse
from collections import defaultdict

from sdctft import bench
from sdctft.cli import load_sweep_config
from sdctft.training import TrainConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/energy_ratio_sweep")
    args = parser.parse_args()

    doc = load_sweep_config("energy_ratio_sweep")
    dataset = bench.generate_dataset(**doc["dataset"])
    tr = doc["train"]
    cfg = TrainConfig(epochs=tr["epochs"], learning_rate=tr["learning_rate"],
                      optimizer=tr.get("optimizer", "adam"),
                      train_head=tr.get("train_head", False))
    sweep = doc["sweep"]

    rows, _ = bench.delta_sweep(dataset, sweep["n"], sweep["deltas"], cfg, doc["seeds"],
                                alpha=sweep.get("alpha", 1.0), out_dir=args.out)

    by_delta = defaultdict(list)
    for row in rows:
        by_delta[row.delta].append(row)
    print(f"{'delta':>6s} {'mean final acc':>15s} {'mean normalized-to-0.7':>24s}")
    for delta in sorted(by_delta):
        group = by_delta[delta]
        acc = sum(r.final_accuracy for r in group) / len(group)
        norm = sum(r.normalized for r in group) / len(group)
        print(f"{delta:6.2f} {acc:15.4f} {norm:24.4f}")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
