"""Trainable parameter-efficient adapters over a frozen weight matrix.

Four kinds share one interface:

* ``sdctft``    - sparse DCT coefficients at band-stratified, energy-informed
                  indices of the frozen weight's spectrum
* ``rdctft``    - sparse DCT coefficients at uniformly random indices
* ``fourierft`` - sparse real coefficients in the DFT domain at random indices
* ``lora``      - low-rank factors A (d1 x r) and B (r x d2)

Every adapter reconstructs a weight update ``delta_weight()`` scaled by a
single scalar alpha, applies ``forward`` as ``x @ (W + delta)``, and maps an
upstream gradient with respect to the merged weight back onto its trainable
parameters via ``grad_coeffs``. The frozen weight is never stored on, or
mutated by, an adapter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import spectral
from .selection import SelectionPlan, build_random_plan, build_selection_plan
from .spectral import BASIS_DCT, BASIS_DFT_REAL, as_weight_matrix, dct2

ADAPTER_KINDS = ("sdctft", "rdctft", "fourierft", "lora")
SPECTRAL_KINDS = ("sdctft", "rdctft", "fourierft")

DEFAULT_DELTA = 0.7

# sub-stream tags so plan sampling and parameter init never share a draw
_COEFF_STREAM = 1
_LORA_STREAM = 2


@dataclass(frozen=True)
class AdapterConfig:
    """Configuration for one adapter; only the fields its kind uses may be set."""

    kind: str
    n: int | None = None
    r: int | None = None
    alpha: float = 1.0
    delta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ADAPTER_KINDS:
            raise ValueError(f"unknown adapter kind {self.kind!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.kind == "lora":
            if self.r is None or self.r < 1:
                raise ValueError("lora requires rank r >= 1")
            if self.n is not None:
                raise ValueError("n is not a lora field")
            if self.delta is not None:
                raise ValueError("delta is not a lora field")
        else:
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.kind} requires coefficient count n >= 1")
            if self.r is not None:
                raise ValueError(f"r is not a {self.kind} field")
            if self.kind == "sdctft":
                d = self.delta if self.delta is not None else DEFAULT_DELTA
                if not 0.0 <= d <= 1.0:
                    raise ValueError("delta must lie in [0, 1]")
                object.__setattr__(self, "delta", d)
            elif self.delta is not None:
                raise ValueError(f"delta is not a {self.kind} field")

    @property
    def budget(self) -> int:
        return self.r if self.kind == "lora" else self.n

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "r": self.r,
            "alpha": self.alpha,
            "delta": self.delta,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AdapterConfig":
        return cls(
            kind=doc["kind"],
            n=doc.get("n"),
            r=doc.get("r"),
            alpha=float(doc.get("alpha", 1.0)),
            delta=doc.get("delta"),
            seed=int(doc.get("seed", 0)),
        )


def _kaiming_coeffs(n: int, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean normal draws with std sqrt(2/n), n playing the fan-in role."""
    return rng.normal(0.0, np.sqrt(2.0 / n), size=n)


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


class SpectralAdapter:
    """Sparse trainable coefficients bound to a SelectionPlan."""

    def __init__(self, plan: SelectionPlan, coeffs: np.ndarray, alpha: float, basis: str,
                 config: AdapterConfig | None = None):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or len(coeffs) != plan.n_total:
            raise ValueError(
                f"coefficient vector of length {coeffs.shape} does not match plan "
                f"n_total={plan.n_total}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        if basis not in (BASIS_DCT, BASIS_DFT_REAL):
            raise ValueError(f"unknown basis {basis!r}")
        self.plan = plan
        self.coeffs = coeffs
        self.alpha = float(alpha)
        self.basis = basis
        self.config = config
        self._indices = plan.indices
        self._us = np.array([u for u, _ in self._indices], dtype=np.intp)
        self._vs = np.array([v for _, v in self._indices], dtype=np.intp)

    @property
    def kind(self) -> str:
        return self.config.kind if self.config is not None else "spectral"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.plan.rows, self.plan.cols)

    def param_count(self) -> int:
        return len(self.coeffs)

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        return {"coeffs": self.coeffs}

    def delta_weight(self) -> np.ndarray:
        rows, cols = self.shape
        if self.basis == BASIS_DCT:
            entries = spectral.spectral_entries(self._indices, self.coeffs)
            return self.alpha * spectral.idct2_sparse(entries, rows, cols)
        S = np.zeros((rows, cols), dtype=np.complex128)
        S[self._us, self._vs] = self.coeffs
        return self.alpha * spectral.idft2_real_part(S)

    def forward(self, W: np.ndarray, x: np.ndarray) -> np.ndarray:
        return _apply_merged(W, self.delta_weight(), x)

    def grad_coeffs(self, upstream: np.ndarray) -> np.ndarray:
        """Pull an upstream d(loss)/d(merged weight) back to the coefficients.

        For the DCT basis this is alpha * dct2(upstream) gathered at the plan
        indices (forward and inverse are mutual adjoints); for the DFT basis,
        alpha * Re(unnormalized-inverse-DFT(upstream)) gathered likewise.
        """
        upstream = as_weight_matrix(upstream)
        if upstream.shape != self.shape:
            raise ValueError(f"upstream shape {upstream.shape} != weight shape {self.shape}")
        if self.basis == BASIS_DCT:
            G = dct2(upstream).data
        else:
            G = np.fft.ifft2(upstream).real
        return self.alpha * G[self._us, self._vs]

    def to_state(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config.to_dict() if self.config else None,
            "alpha": self.alpha,
            "basis": self.basis,
            "plan": self.plan.to_dict(),
            "coeffs": self.coeffs.tolist(),
        }


class LoraAdapter:
    """Low-rank update delta = alpha * A @ B with B zero-initialized."""

    def __init__(self, A: np.ndarray, B: np.ndarray, alpha: float,
                 config: AdapterConfig | None = None):
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
            raise ValueError(f"incompatible factor shapes {A.shape} and {B.shape}")
        self.A = A
        self.B = B
        self.alpha = float(alpha)
        self.config = config

    kind = "lora"

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.A.shape[0], self.B.shape[1])

    def param_count(self) -> int:
        return self.rank * (self.A.shape[0] + self.B.shape[1])

    def trainable_parameters(self) -> dict[str, np.ndarray]:
        return {"A": self.A, "B": self.B}

    def delta_weight(self) -> np.ndarray:
        return self.alpha * (self.A @ self.B)

    def forward(self, W: np.ndarray, x: np.ndarray) -> np.ndarray:
        return _apply_merged(W, self.delta_weight(), x)

    def grad_coeffs(self, upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        upstream = as_weight_matrix(upstream)
        if upstream.shape != self.shape:
            raise ValueError(f"upstream shape {upstream.shape} != weight shape {self.shape}")
        return self.alpha * (upstream @ self.B.T), self.alpha * (self.A.T @ upstream)

    def to_state(self) -> dict:
        return {
            "kind": "lora",
            "config": self.config.to_dict() if self.config else None,
            "alpha": self.alpha,
            "A": self.A.tolist(),
            "B": self.B.tolist(),
        }


Adapter = SpectralAdapter | LoraAdapter


def _apply_merged(W: np.ndarray, delta: np.ndarray, x: np.ndarray) -> np.ndarray:
    W = as_weight_matrix(W)
    if W.shape != delta.shape:
        raise ValueError(f"frozen weight shape {W.shape} != adapter shape {delta.shape}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input of length {x.shape[-1]} incompatible with d1={W.shape[0]}")
    return x @ (W + delta)


def init_sdctft(W, cfg: AdapterConfig) -> SpectralAdapter:
    """Energy-informed DCT adapter: plan built from the spectrum of W itself."""
    if cfg.kind != "sdctft":
        raise ValueError(f"expected kind 'sdctft', got {cfg.kind!r}")
    W = as_weight_matrix(W)
    F = dct2(W)
    plan = build_selection_plan(F, cfg.n, cfg.delta, cfg.seed)
    coeffs = _kaiming_coeffs(cfg.n, _stream_rng(cfg.seed, _COEFF_STREAM))
    return SpectralAdapter(plan, coeffs, cfg.alpha, BASIS_DCT, config=cfg)


def init_rdctft(W, cfg: AdapterConfig) -> SpectralAdapter:
    """DCT adapter at uniformly random indices (the informed-selection ablation)."""
    if cfg.kind != "rdctft":
        raise ValueError(f"expected kind 'rdctft', got {cfg.kind!r}")
    W = as_weight_matrix(W)
    plan = build_random_plan(W.shape[0], W.shape[1], cfg.n, cfg.seed)
    coeffs = _kaiming_coeffs(cfg.n, _stream_rng(cfg.seed, _COEFF_STREAM))
    return SpectralAdapter(plan, coeffs, cfg.alpha, BASIS_DCT, config=cfg)


def init_fourierft(W, cfg: AdapterConfig) -> SpectralAdapter:
    """Fourier-domain adapter: real coefficients at random DFT grid indices."""
    if cfg.kind != "fourierft":
        raise ValueError(f"expected kind 'fourierft', got {cfg.kind!r}")
    W = as_weight_matrix(W)
    plan = build_random_plan(W.shape[0], W.shape[1], cfg.n, cfg.seed)
    coeffs = _kaiming_coeffs(cfg.n, _stream_rng(cfg.seed, _COEFF_STREAM))
    return SpectralAdapter(plan, coeffs, cfg.alpha, BASIS_DFT_REAL, config=cfg)


def init_lora(W, cfg: AdapterConfig) -> LoraAdapter:
    """LoRA factors: A Kaiming-initialized, B zero so the initial update is zero."""
    if cfg.kind != "lora":
        raise ValueError(f"expected kind 'lora', got {cfg.kind!r}")
    W = as_weight_matrix(W)
    d1, d2 = W.shape
    rng = _stream_rng(cfg.seed, _LORA_STREAM)
    A = rng.normal(0.0, np.sqrt(2.0 / d1), size=(d1, cfg.r))
    B = np.zeros((cfg.r, d2))
    return LoraAdapter(A, B, cfg.alpha, config=cfg)


_INIT = {
    "sdctft": init_sdctft,
    "rdctft": init_rdctft,
    "fourierft": init_fourierft,
    "lora": init_lora,
}


def init_adapter(W, cfg: AdapterConfig) -> Adapter:
    return _INIT[cfg.kind](W, cfg)


def save_adapter(adapter: Adapter, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(adapter.to_state(), fh, indent=2)


def adapter_from_state(state: dict) -> Adapter:
    cfg = AdapterConfig.from_dict(state["config"]) if state.get("config") else None
    if state["kind"] == "lora":
        return LoraAdapter(np.array(state["A"]), np.array(state["B"]), state["alpha"], config=cfg)
    plan = SelectionPlan.from_dict(state["plan"])
    return SpectralAdapter(plan, np.array(state["coeffs"]), state["alpha"], state["basis"], config=cfg)


def load_adapter(path) -> Adapter:
    with open(path, encoding="utf-8") as fh:
        return adapter_from_state(json.load(fh))
