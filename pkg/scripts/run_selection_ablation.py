#!/usr/bin/env python3
"""Informed vs random frequency selection: sDCTFT against rDCTFT at the
same budget (n=90) over 10 seeds, per the bundled config."""

import argparse

from sdctft import bench
from sdctft.cli import load_sweep_config
from sdctft.training import TrainConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/selection_ablation")
    args = parser.parse_args()

    doc = load_sweep_config("random_selection_ablation")
    dataset = bench.generate_dataset(**doc["dataset"])
    tr = doc["train"]
    cfg = TrainConfig(epochs=tr["epochs"], learning_rate=tr["learning_rate"],
                      optimizer=tr.get("optimizer", "adam"),
                      train_head=tr.get("train_head", False))
    specs = [bench.RunSpec(method=r["method"], budget=r["budget"],
                           alpha=r.get("alpha", 1.0), delta=r.get("delta"))
             for r in doc["runs"]]

    reports = bench.run_comparison(dataset, specs, cfg, doc["seeds"], out_dir=args.out)

    for method in ("sdctft", "rdctft"):
        accs = [r.final_accuracy for r in reports if r.method == method and r.ok]
        mean = sum(accs) / len(accs)
        print(f"{method}: mean final accuracy {mean:.4f} over {len(accs)} seeds "
              f"(min {min(accs):.4f}, max {max(accs):.4f})")
    print(f"artifacts in {args.out}")


if __name__ == "__main__":
    main()
