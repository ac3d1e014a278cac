"""Synthetic benchmark: dataset generation, matched-budget method sweeps,
the energy-ratio sweep, and trainable-parameter / stored-byte accounting.

All randomness is seeded; a comparison re-run from the same dataset seed,
run seeds, and config reproduces its artifacts byte for byte. Within one
comparison every method sees the identical frozen base network, dataset,
and optimizer settings; only the adapter (and its scaling alpha) differs.
"""

from __future__ import annotations

import csv
import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapters import AdapterConfig, init_adapter
from .training import EpochRecord, TrainConfig, build_network, train, trainable_param_count

NUM_CLASSES = 8
CENTER_RADIUS = 3.0
ACCURACY_THRESHOLD = 0.99
BYTES_PER_PARAM = 4

_DATA_STREAM = 4


@dataclass(frozen=True)
class SyntheticDataset:
    """8-class point cloud: class centers on a circle plus Gaussian noise."""

    X: np.ndarray
    y: np.ndarray
    centers: np.ndarray
    noise_sigma: float
    per_class: int
    seed: int

    def config_dict(self) -> dict:
        return {"per_class": self.per_class, "noise_sigma": self.noise_sigma, "seed": self.seed}


def generate_dataset(per_class: int = 100, noise_sigma: float = 0.3, seed: int = 0) -> SyntheticDataset:
    """Equally spaced class centers on a radius-3 circle, isotropic noise."""
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be > 0")
    angles = 2.0 * np.pi * np.arange(NUM_CLASSES) / NUM_CLASSES
    centers = CENTER_RADIUS * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _DATA_STREAM])))
    X = np.concatenate(
        [centers[k] + noise_sigma * rng.normal(size=(per_class, 2)) for k in range(NUM_CLASSES)]
    )
    y = np.repeat(np.arange(NUM_CLASSES), per_class)
    return SyntheticDataset(
        X=X, y=y, centers=centers, noise_sigma=noise_sigma, per_class=per_class, seed=seed
    )


@dataclass(frozen=True)
class RunSpec:
    """One method at one budget inside a comparison."""

    method: str
    budget: int
    alpha: float = 1.0
    delta: float | None = None

    def adapter_config(self, seed: int) -> AdapterConfig:
        if self.method == "lora":
            return AdapterConfig(kind="lora", r=self.budget, alpha=self.alpha, seed=seed)
        if self.method == "sdctft":
            return AdapterConfig(
                kind="sdctft", n=self.budget, alpha=self.alpha, delta=self.delta, seed=seed
            )
        return AdapterConfig(kind=self.method, n=self.budget, alpha=self.alpha, seed=seed)

    def label(self) -> str:
        tag = f"{self.method}_{'r' if self.method == 'lora' else 'n'}{self.budget}"
        if self.delta is not None:
            tag += f"_d{self.delta:g}"
        return tag


@dataclass
class RunReport:
    """Outcome of one (method, budget, seed) training run."""

    method: str
    budget: int
    delta: float | None
    alpha: float
    learning_rate: float
    epochs: int
    seed: int
    records: list[EpochRecord] = field(default_factory=list)
    final_accuracy: float | None = None
    final_loss: float | None = None
    epochs_to_threshold: int | None = None
    param_count: int | None = None
    head_param_count: int | None = None
    wall_seconds: float = 0.0
    ok: bool = True
    error: str | None = None
    curve_path: str | None = None

    def summary_row(self) -> dict:
        return {
            "method": self.method,
            "budget": self.budget,
            "delta": "" if self.delta is None else self.delta,
            "seed": self.seed,
            "final_acc": "" if self.final_accuracy is None else f"{self.final_accuracy:.6f}",
            "epochs_to_99": "" if self.epochs_to_threshold is None else self.epochs_to_threshold,
            "params": "" if self.param_count is None else self.param_count,
            "seconds": f"{self.wall_seconds:.3f}",
            "ok": int(self.ok),
            "error": self.error or "",
        }


SUMMARY_COLUMNS = [
    "method", "budget", "delta", "seed", "final_acc",
    "epochs_to_99", "params", "seconds", "ok", "error",
]


def epochs_to_threshold(records: list[EpochRecord], threshold: float = ACCURACY_THRESHOLD) -> int | None:
    for rec in records:
        if rec.accuracy >= threshold:
            return rec.epoch
    return None


def write_curve_csv(records: list[EpochRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "accuracy"])
        for rec in records:
            writer.writerow([rec.epoch, f"{rec.loss:.12g}", f"{rec.accuracy:.6f}"])


def _run_single(dataset: SyntheticDataset, spec: RunSpec, train_cfg: TrainConfig,
                seed: int, hidden_dim: int, out_dir: Path | None) -> RunReport:
    report = RunReport(
        method=spec.method, budget=spec.budget, delta=spec.delta, alpha=spec.alpha,
        learning_rate=train_cfg.learning_rate, epochs=train_cfg.epochs, seed=seed,
    )
    started = time.perf_counter()
    try:
        net = build_network(seed=seed, input_dim=dataset.X.shape[1], hidden_dim=hidden_dim,
                            num_classes=NUM_CLASSES)
        net.adapter = init_adapter(net.W_hidden, spec.adapter_config(seed))
        cfg = TrainConfig(
            epochs=train_cfg.epochs, learning_rate=train_cfg.learning_rate,
            optimizer=train_cfg.optimizer, seed=seed, train_head=train_cfg.train_head,
        )
        records = train(net, dataset, cfg)
        report.records = records
        report.final_accuracy = records[-1].accuracy
        report.final_loss = records[-1].loss
        report.epochs_to_threshold = epochs_to_threshold(records)
        report.param_count = trainable_param_count(net, cfg)
        report.head_param_count = net.head_param_count if cfg.train_head else 0
    except Exception as exc:  # single-run failure must not kill the sweep
        report.ok = False
        report.error = f"{type(exc).__name__}: {exc}"
    report.wall_seconds = time.perf_counter() - started
    if out_dir is not None and report.ok:
        curves = out_dir / "curves"
        curves.mkdir(parents=True, exist_ok=True)
        curve_path = curves / f"{spec.label()}_seed{seed}.csv"
        write_curve_csv(report.records, curve_path)
        report.curve_path = str(curve_path.relative_to(out_dir))
    return report


def write_summary_csv(reports: list[RunReport], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for report in reports:
            writer.writerow(report.summary_row())


def _write_manifest(out_dir: Path, dataset: SyntheticDataset, train_cfg: TrainConfig,
                    reports: list[RunReport], extra: dict | None = None) -> None:
    doc = {
        "dataset": dataset.config_dict(),
        "train": {
            "epochs": train_cfg.epochs,
            "learning_rate": train_cfg.learning_rate,
            "optimizer": train_cfg.optimizer,
            "train_head": train_cfg.train_head,
        },
        "runs": [
            {
                "method": r.method,
                "budget": r.budget,
                "delta": r.delta,
                "alpha": r.alpha,
                "seed": r.seed,
                "final_accuracy": r.final_accuracy,
                "epochs_to_99": r.epochs_to_threshold,
                "params": r.param_count,
                "curve_csv": r.curve_path,
                "ok": r.ok,
                "error": r.error,
            }
            for r in reports
        ],
    }
    if extra:
        doc.update(extra)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def run_comparison(dataset: SyntheticDataset, specs: list[RunSpec], train_cfg: TrainConfig,
                   seeds: list[int], out_dir: str | Path | None = None,
                   hidden_dim: int = 64) -> list[RunReport]:
    """One report per (spec, seed); methods share the frozen base per seed."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    reports = []
    for seed in seeds:
        for spec in specs:
            reports.append(_run_single(dataset, spec, train_cfg, seed, hidden_dim, out))
    if out is not None:
        write_summary_csv(reports, out / "summary.csv")
        _write_manifest(out, dataset, train_cfg, reports)
    return reports


@dataclass(frozen=True)
class DeltaSweepRow:
    delta: float
    seed: int
    final_accuracy: float
    epochs_to_threshold: int | None
    normalized: float  # accuracy relative to the delta = 0.7 run of the same seed


NORMALIZATION_DELTA = 0.7

DELTA_SWEEP_COLUMNS = ["delta", "seed", "final_acc", "epochs_to_99", "normalized_to_0.7"]


def delta_sweep(dataset: SyntheticDataset, n: int, deltas: list[float], train_cfg: TrainConfig,
                seeds: list[int], alpha: float = 1.0,
                out_dir: str | Path | None = None) -> tuple[list[DeltaSweepRow], list[RunReport]]:
    """Energy-ratio sweep at fixed budget n; per-seed accuracy normalized
    to the delta = 0.7 run. 0.7 must be among the swept values."""
    if not any(math.isclose(d, NORMALIZATION_DELTA) for d in deltas):
        raise ValueError(f"delta sweep requires {NORMALIZATION_DELTA} as the normalization reference")
    specs = [RunSpec(method="sdctft", budget=n, alpha=alpha, delta=float(d)) for d in deltas]
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    reports = run_comparison(dataset, specs, train_cfg, seeds, out_dir=None)
    reference = {
        r.seed: r.final_accuracy
        for r in reports
        if math.isclose(r.delta, NORMALIZATION_DELTA) and r.ok
    }
    rows = []
    for report in reports:
        if not report.ok:
            continue
        ref = reference.get(report.seed)
        normalized = report.final_accuracy / ref if ref else float("nan")
        rows.append(DeltaSweepRow(
            delta=report.delta, seed=report.seed, final_accuracy=report.final_accuracy,
            epochs_to_threshold=report.epochs_to_threshold, normalized=normalized,
        ))
    if out is not None:
        with open(out / "delta_sweep.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(DELTA_SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([
                    f"{row.delta:g}", row.seed, f"{row.final_accuracy:.6f}",
                    "" if row.epochs_to_threshold is None else row.epochs_to_threshold,
                    f"{row.normalized:.6f}",
                ])
        write_summary_csv(reports, out / "summary.csv")
        _write_manifest(out, dataset, train_cfg, reports,
                        extra={"delta_sweep": {"n": n, "alpha": alpha, "deltas": list(deltas)}})
    return rows, reports


# ---------------------------------------------------------------------------
# parameter / byte accounting


@dataclass(frozen=True)
class AccountingRow:
    model_name: str
    method: str  # "lora" or "sdctft"
    rank_or_n: int
    layers: int
    d1: int
    d2: int
    trainable_params: int
    required_bytes: int
    params_display: str
    bytes_display: str
    reported_params: str | None = None
    reported_bytes: str | None = None
    params_consistent: bool | None = None
    bytes_consistent: bool | None = None

    @property
    def flagged(self) -> bool:
        return self.params_consistent is False or self.bytes_consistent is False


ACCOUNTING_COLUMNS = [
    "model", "method", "r_or_n", "layers", "d1", "d2",
    "trainable_params", "required_bytes", "params_display", "bytes_display",
    "reported_params", "reported_bytes", "consistent",
]


def count_params(method: str, budget: int, d1: int, d2: int, layers: int) -> int:
    """Trainable parameters over `layers` adapted matrices of shape d1 x d2."""
    if method == "lora":
        return budget * (d1 + d2) * layers
    if method in ("sdctft", "rdctft", "fourierft"):
        return budget * layers
    raise ValueError(f"unknown method {method!r}")


def format_bytes(num_bytes: int) -> str:
    """Binary KB/MB at one decimal place."""
    if num_bytes >= 1024 * 1024:
        return f"{num_bytes / (1024 * 1024):.1f}MB"
    return f"{num_bytes / 1024:.1f}KB"


def format_params(count: int) -> str:
    if count >= 10 ** 6:
        return f"{count / 10 ** 6:.2f}".rstrip("0").rstrip(".") + "M"
    if count >= 10 ** 3:
        return f"{count / 10 ** 3:.1f}".rstrip("0").rstrip(".") + "K"
    return str(count)


_QUANTITY_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*([KM]?)B?\s*$", re.IGNORECASE)


def parse_quantity(text: str, binary: bool) -> tuple[float, float]:
    """Parse '147K' / '18.8KB' style strings.

    Returns (value, unit) where unit is the magnitude of one step in the
    last displayed digit, e.g. '18.8KB' -> (18.8 * 1024, 0.1 * 1024).
    """
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse quantity {text!r}")
    digits, suffix = m.group(1), m.group(2).upper()
    base = 1024 if binary else 1000
    multiplier = {"": 1, "K": base, "M": base * base}[suffix]
    decimals = len(digits.split(".")[1]) if "." in digits else 0
    return float(digits) * multiplier, 10.0 ** (-decimals) * multiplier


def _params_match(computed: int, reported: str) -> bool:
    # exact up to the rounding of the reported rendering (one displayed unit)
    value, unit = parse_quantity(reported, binary=False)
    return abs(computed - value) <= unit


def _bytes_match(computed: int, reported: str, tolerance: float = 0.01) -> bool:
    value, _ = parse_quantity(reported, binary=True)
    return abs(computed - value) <= tolerance * value


def accounting(model_specs: list[dict]) -> list[AccountingRow]:
    """Build accounting rows from model specs.

    Each spec: {name, d1, d2, layers, entries: [{method, r|n,
    reported_params?, reported_bytes?}]}. Rows whose computed figures do
    not match the reported ones are flagged, never adjusted to match.
    """
    rows = []
    for model in model_specs:
        d1, d2, layers = int(model["d1"]), int(model["d2"]), int(model["layers"])
        for entry in model["entries"]:
            method = entry["method"]
            budget = int(entry["r"] if method == "lora" else entry["n"])
            params = count_params(method, budget, d1, d2, layers)
            num_bytes = BYTES_PER_PARAM * params
            reported_params = entry.get("reported_params")
            reported_bytes = entry.get("reported_bytes")
            rows.append(AccountingRow(
                model_name=model["name"],
                method=method,
                rank_or_n=budget,
                layers=layers,
                d1=d1,
                d2=d2,
                trainable_params=params,
                required_bytes=num_bytes,
                params_display=format_params(params),
                bytes_display=format_bytes(num_bytes),
                reported_params=reported_params,
                reported_bytes=reported_bytes,
                params_consistent=(
                    None if reported_params is None else _params_match(params, reported_params)
                ),
                bytes_consistent=(
                    None if reported_bytes is None else _bytes_match(num_bytes, reported_bytes)
                ),
            ))
    return rows


def load_model_specs(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc["models"]


def write_accounting_csv(rows: list[AccountingRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ACCOUNTING_COLUMNS)
        for row in rows:
            if row.params_consistent is None and row.bytes_consistent is None:
                verdict = ""
            else:
                verdict = "flagged" if row.flagged else "ok"
            writer.writerow([
                row.model_name, row.method, row.rank_or_n, row.layers, row.d1, row.d2,
                row.trainable_params, row.required_bytes, row.params_display,
                row.bytes_display, row.reported_params or "", row.reported_bytes or "",
                verdict,
            ])
