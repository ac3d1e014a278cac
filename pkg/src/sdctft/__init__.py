"""Sparse spectral adapters in the DCT domain, low-rank and Fourier baselines,
and a desk-scale benchmark harness."""

from .adapters import (
    ADAPTER_KINDS,
    AdapterConfig,
    LoraAdapter,
    SpectralAdapter,
    init_adapter,
    init_fourierft,
    init_lora,
    init_rdctft,
    init_sdctft,
    load_adapter,
    save_adapter,
)
from .selection import (
    FrequencyPartition,
    SelectionPlan,
    build_random_plan,
    build_selection_plan,
    distance,
    partition,
    rank_by_energy,
)
from .spectral import (
    BASIS_DCT,
    BASIS_DFT_REAL,
    SpectralMatrix,
    dct2,
    dft2_real,
    idct2,
    idct2_sparse,
    idft2_real_part,
)
from .training import (
    EpochRecord,
    ToyNetwork,
    TrainConfig,
    TrainingDivergedError,
    build_network,
    forward_network,
    loss_and_grads,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTER_KINDS",
    "AdapterConfig",
    "BASIS_DCT",
    "BASIS_DFT_REAL",
    "EpochRecord",
    "FrequencyPartition",
    "LoraAdapter",
    "SelectionPlan",
    "SpectralAdapter",
    "SpectralMatrix",
    "ToyNetwork",
    "TrainConfig",
    "TrainingDivergedError",
    "build_network",
    "build_random_plan",
    "build_selection_plan",
    "dct2",
    "dft2_real",
    "distance",
    "forward_network",
    "idct2",
    "idct2_sparse",
    "idft2_real_part",
    "init_adapter",
    "init_fourierft",
    "init_lora",
    "init_rdctft",
    "init_sdctft",
    "load_adapter",
    "loss_and_grads",
    "partition",
    "rank_by_energy",
    "save_adapter",
    "train",
]
