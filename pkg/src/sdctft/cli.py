"""Command-line interface: transforms, selection plans, benchmark runs,
config-driven sweeps, and the accounting table.

Exit codes: 0 success, 1 usage error (bad flags or flag combinations),
2 runtime failure (unreadable files, failed runs). Every randomized path
takes an explicit seed, so identical flags produce identical artifacts.
The default output directory can be set with the SDCTFT_OUT_DIR
environment variable; everything else is a flag.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import bench
from .selection import build_selection_plan
from .spectral import SpectralMatrix, dct2, dft2_real, idct2, idft2_real_part
from .training import TrainConfig

log = logging.getLogger("sdctft")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

OUT_DIR_ENV = "SDCTFT_OUT_DIR"
DEFAULT_OUT_DIR = "sdctft_runs"

_PLAN_WEIGHTS_STREAM = 5

_MATRIX_FMT = "%.17g"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit code 1, not 2."""

    def error(self, message):
        raise UsageError(message)


def _read_real_matrix(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except Exception as exc:
        raise RuntimeError(f"cannot read matrix from {path}: {exc}") from exc
    return data


def _read_complex_matrix(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", dtype=np.complex128, ndmin=2)
    except Exception as exc:
        raise RuntimeError(f"cannot read complex matrix from {path}: {exc}") from exc


def _write_matrix(data: np.ndarray, output: str | None) -> None:
    if output is None:
        np.savetxt(sys.stdout, data, delimiter=",", fmt=_MATRIX_FMT)
    else:
        np.savetxt(output, data, delimiter=",", fmt=_MATRIX_FMT)


def _out_dir(flag_value: str | None) -> Path:
    return Path(flag_value or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _bundled(package_dir: str, name: str):
    return resources.files("sdctft").joinpath(package_dir, name)


def cmd_transform(args) -> int:
    if args.inverse:
        if args.basis == "dct":
            F = SpectralMatrix(_read_real_matrix(args.input), "dct")
            _write_matrix(idct2(F), args.output)
        else:
            _write_matrix(idft2_real_part(_read_complex_matrix(args.input)), args.output)
    else:
        W = _read_real_matrix(args.input)
        if args.basis == "dct":
            _write_matrix(dct2(W).data, args.output)
        else:
            _write_matrix(dft2_real(W), args.output)
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.weights is not None:
        W = _read_real_matrix(args.weights)
        if W.shape != (args.rows, args.cols):
            raise RuntimeError(
                f"weights file is {W.shape[0]}x{W.shape[1]}, flags say {args.rows}x{args.cols}"
            )
    else:
        # documented fallback: a seeded standard-normal matrix
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([args.seed, _PLAN_WEIGHTS_STREAM]))
        )
        W = rng.normal(size=(args.rows, args.cols))
    plan = build_selection_plan(dct2(W), args.n, args.delta, args.seed)
    plan.validate()
    text = plan.to_json()
    if args.output is None:
        print(text)
    else:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _train_config(epochs: int, lr: float, optimizer: str, train_head: bool) -> TrainConfig:
    return TrainConfig(epochs=epochs, learning_rate=lr, optimizer=optimizer,
                       train_head=train_head)


def cmd_bench(args) -> int:
    dataset = bench.generate_dataset(args.per_class, args.noise_sigma, args.data_seed)
    spec = bench.RunSpec(method=args.method, budget=args.budget, alpha=args.alpha,
                         delta=args.delta)
    cfg = _train_config(args.epochs, args.lr, args.optimizer, args.train_head)
    seeds = [args.seed_base + i for i in range(args.seeds)]
    out = _out_dir(args.out)
    reports = bench.run_comparison(dataset, [spec], cfg, seeds, out_dir=out)
    failed = [r for r in reports if not r.ok]
    for r in failed:
        log.error("run %s seed %d failed: %s", spec.label(), r.seed, r.error)
    print(f"{len(reports) - len(failed)}/{len(reports)} runs completed; artifacts in {out}")
    return EXIT_OK if not failed else EXIT_FAILURE


def _resolve_config(name: str) -> Path:
    """A literal path, or the name of one of the bundled configs."""
    path = Path(name)
    if path.exists():
        return path
    bundled = _bundled("configs", name if name.endswith(".json") else name + ".json")
    if bundled.is_file():
        return Path(str(bundled))
    raise RuntimeError(f"config {name!r} not found (neither a file nor a bundled config)")


def load_sweep_config(name: str) -> dict:
    path = _resolve_config(name)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RuntimeError(f"config {path} is not valid JSON: {exc}") from exc
    schema = json.loads(_bundled("data", "sweep_schema.json").read_text(encoding="utf-8"))
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise RuntimeError(f"config {path} violates the sweep schema: {exc.message}") from exc
    return doc


def cmd_sweep(args) -> int:
    doc = load_sweep_config(args.config)
    dataset = bench.generate_dataset(**doc["dataset"])
    tr = doc["train"]
    cfg = _train_config(tr["epochs"], tr["learning_rate"], tr.get("optimizer", "adam"),
                        tr.get("train_head", False))
    seeds = list(doc["seeds"])
    out = _out_dir(args.out or doc.get("out_dir"))
    if doc["kind"] == "comparison":
        specs = [
            bench.RunSpec(method=run["method"], budget=run["budget"],
                          alpha=run.get("alpha", 1.0), delta=run.get("delta"))
            for run in doc["runs"]
        ]
        reports = bench.run_comparison(dataset, specs, cfg, seeds, out_dir=out)
    else:
        sweep = doc["sweep"]
        _, reports = bench.delta_sweep(dataset, sweep["n"], sweep["deltas"], cfg, seeds,
                                       alpha=sweep.get("alpha", 1.0), out_dir=out)
    failed = [r for r in reports if not r.ok]
    for r in failed:
        log.error("run %s/%s seed %d failed: %s", r.method, r.budget, r.seed, r.error)
    print(f"{len(reports) - len(failed)}/{len(reports)} runs completed; artifacts in {out}")
    return EXIT_OK if not failed else EXIT_FAILURE


def cmd_accounting(args) -> int:
    models_path = args.models or str(_bundled("data", "accounting_models.json"))
    try:
        specs = bench.load_model_specs(models_path)
    except Exception as exc:
        raise RuntimeError(f"cannot read model specs from {models_path}: {exc}") from exc
    rows = bench.accounting(specs)
    header = f"{'model':14s} {'method':7s} {'r/n':>5s} {'L':>3s} {'params':>10s} {'bytes':>10s} {'check':>8s}"
    print(header)
    for row in rows:
        if row.params_consistent is None and row.bytes_consistent is None:
            verdict = "-"
        else:
            verdict = "flagged" if row.flagged else "ok"
        print(f"{row.model_name:14s} {row.method:7s} {row.rank_or_n:5d} {row.layers:3d} "
              f"{row.params_display:>10s} {row.bytes_display:>10s} {verdict:>8s}")
    if args.output is not None:
        bench.write_accounting_csv(rows, args.output)
        print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="sdctft", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--log-level", default="info",
                        choices=["debug", "info", "warning", "error"],
                        help="logging verbosity (default: info)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="DCT/DFT a CSV matrix file (or invert)")
    p.add_argument("input", help="CSV matrix, row-major, no header")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--inverse", action="store_true", help="apply the inverse transform")
    p.add_argument("--basis", choices=["dct", "dft"], default="dct",
                   help="transform family (default: dct)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("plan", help="build and emit a selection plan as JSON")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="total number of selected indices")
    p.add_argument("--delta", type=float, default=0.7, help="energy ratio in [0, 1] (default: 0.7)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="CSV matrix to take the spectrum from "
                                     "(default: a seeded standard-normal matrix)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="train one method on the synthetic benchmark")
    p.add_argument("--method", choices=["sdctft", "rdctft", "fourierft", "lora"], required=True)
    p.add_argument("--budget", type=int, required=True,
                   help="coefficient count n (spectral methods) or rank r (lora)")
    p.add_argument("--delta", type=float, default=None, help="energy ratio (sdctft only)")
    p.add_argument("--alpha", type=float, default=1.0, help="update scaling (default: 1.0)")
    p.add_argument("--lr", type=float, default=0.01, help="learning rate (default: 0.01)")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--optimizer", choices=["sgd", "adam"], default="adam")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (default: 1)")
    p.add_argument("--seed-base", type=int, default=0, help="first seed (default: 0)")
    p.add_argument("--train-head", action="store_true",
                   help="also train the classifier head (default: frozen)")
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--noise-sigma", type=float, default=0.3)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--out", help=f"output directory (default: ${OUT_DIR_ENV} or {DEFAULT_OUT_DIR})")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="run a config-driven sweep (comparison or delta sweep)")
    p.add_argument("config", help="config JSON path, or the name of a bundled config "
                                  "(expressive_capability, random_selection_ablation, "
                                  "energy_ratio_sweep)")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("accounting", help="trainable-parameter and byte accounting table")
    p.add_argument("--models", help="model-spec JSON (default: bundled table)")
    p.add_argument("-o", "--output", help="also write the table as CSV")
    p.set_defaults(func=cmd_accounting)

    return parser


def _validate(args) -> None:
    if args.command == "plan":
        if args.rows < 1 or args.cols < 1:
            raise UsageError("--rows and --cols must be >= 1")
        if not 0.0 <= args.delta <= 1.0:
            raise UsageError("--delta must lie in [0, 1]")
        if args.n < 1 or args.n > args.rows * args.cols:
            raise UsageError(f"--n must lie in [1, rows*cols] = [1, {args.rows * args.cols}]")
    elif args.command == "bench":
        if args.method != "sdctft" and args.delta is not None:
            raise UsageError(f"--delta applies only to sdctft, not {args.method}")
        if args.delta is not None and not 0.0 <= args.delta <= 1.0:
            raise UsageError("--delta must lie in [0, 1]")
        if args.budget < 1:
            raise UsageError("--budget must be >= 1")
        if args.lr <= 0:
            raise UsageError("--lr must be > 0")
        if args.epochs < 1:
            raise UsageError("--epochs must be >= 1")
        if args.seeds < 1:
            raise UsageError("--seeds must be >= 1")
        if args.alpha <= 0:
            raise UsageError("--alpha must be > 0")
        if args.per_class < 1:
            raise UsageError("--per-class must be >= 1")
        if args.noise_sigma <= 0:
            raise UsageError("--noise-sigma must be > 0")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(message)s")
    try:
        _validate(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (RuntimeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
