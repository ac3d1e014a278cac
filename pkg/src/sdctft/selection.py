"""Distance-based partitioning of the spectral grid into low/mid/high bands
and construction of the hybrid energy-plus-random selection plan.

The band of an index (u, v) is decided by comparing d(u, v) = sqrt(u^2 + v^2)
against d_max / 3 and 2 d_max / 3 with d_max = sqrt((M/2)^2 + (N/2)^2).
Comparisons are evaluated in exact integer arithmetic on squared distances
(36 (u^2 + v^2) vs M^2 + N^2), so ties that are exact in real arithmetic,
such as index (1, 1) on a 6x6 grid, resolve the way the defining
inequalities say rather than by a one-ULP float accident.

Randomness is PCG64 with an explicit seed; the draw algorithm (a partial
Fisher-Yates over the row-major candidate pool) is part of the contract so
plans reproduce across machines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import SpectralMatrix

BAND_NAMES = ("low", "mid", "high")

Index = tuple[int, int]


def distance(u: int, v: int) -> float:
    """Euclidean distance of frequency index (u, v) from the spectral origin."""
    if u < 0 or v < 0:
        raise ValueError("frequency indices must be non-negative")
    return math.sqrt(u * u + v * v)


def max_distance(rows: int, cols: int) -> float:
    """Nominal maximum distance sqrt((M/2)^2 + (N/2)^2) of an M x N grid."""
    return math.sqrt((rows / 2.0) ** 2 + (cols / 2.0) ** 2)


@dataclass(frozen=True)
class FrequencyPartition:
    """The three disjoint frequency bands of an M x N spectral grid.

    Bands are stored row-major. Because d_max uses M/2 and N/2 while
    indices run to M-1 and N-1, the high band covers most of the grid.
    """

    rows: int
    cols: int
    d_max: float
    low: tuple[Index, ...]
    mid: tuple[Index, ...]
    high: tuple[Index, ...]

    def band(self, name: str) -> tuple[Index, ...]:
        if name not in BAND_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def sizes(self) -> dict[str, int]:
        return {name: len(self.band(name)) for name in BAND_NAMES}


@lru_cache(maxsize=64)
def partition(rows: int, cols: int) -> FrequencyPartition:
    """Assign every index of an M x N grid to its low/mid/high band.

    low:  d <= d_max/3      <=>  36 (u^2+v^2) <= M^2+N^2
    mid:  d <= 2 d_max/3    <=>   9 (u^2+v^2) <= M^2+N^2  (and not low)
    high: the rest
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    limit = rows * rows + cols * cols
    low: list[Index] = []
    mid: list[Index] = []
    high: list[Index] = []
    for u in range(rows):
        for v in range(cols):
            d2 = u * u + v * v
            if 36 * d2 <= limit:
                low.append((u, v))
            elif 9 * d2 <= limit:
                mid.append((u, v))
            else:
                high.append((u, v))
    return FrequencyPartition(
        rows=rows,
        cols=cols,
        d_max=max_distance(rows, cols),
        low=tuple(low),
        mid=tuple(mid),
        high=tuple(high),
    )


def rank_by_energy(F: SpectralMatrix, band, k: int) -> list[Index]:
    """Top-k indices of `band` by coefficient energy F[u, v]^2.

    Output is sorted by descending energy; ties break toward the smaller
    row-major index so rankings are deterministic across platforms.
    """
    band = list(band)
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > len(band):
        raise ValueError(f"k={k} exceeds band size {len(band)}")
    if k == 0:
        return []
    data = F.data
    ranked = sorted(band, key=lambda uv: (-(data[uv[0], uv[1]] ** 2), uv))
    return ranked[:k]


@dataclass(frozen=True)
class BandSelection:
    """Selected indices of one band, split by provenance."""

    name: str
    energy: tuple[Index, ...]
    random: tuple[Index, ...]

    @property
    def n_band(self) -> int:
        return len(self.energy) + len(self.random)

    @property
    def indices(self) -> tuple[Index, ...]:
        return self.energy + self.random


@dataclass(frozen=True)
class SelectionPlan:
    """The frozen, ordered set of trainable spectral indices.

    Order is band-major (low, mid, high), energy picks before random picks;
    a coefficient vector bound to the plan follows this order.
    """

    rows: int
    cols: int
    n_total: int
    delta: float
    seed: int
    bands: tuple[BandSelection, ...]

    @property
    def indices(self) -> tuple[Index, ...]:
        out: list[Index] = []
        for band in self.bands:
            out.extend(band.indices)
        return tuple(out)

    def validate(self) -> None:
        """Raise ValueError if any structural invariant is broken."""
        seen: set[Index] = set()
        total = 0
        for band in self.bands:
            for u, v in band.indices:
                if not (0 <= u < self.rows and 0 <= v < self.cols):
                    raise ValueError(f"index ({u}, {v}) out of bounds in band {band.name}")
                if (u, v) in seen:
                    raise ValueError(f"index ({u}, {v}) selected twice")
                seen.add((u, v))
            n_band = band.n_band
            if len(band.energy) != math.floor(n_band * self.delta):
                raise ValueError(
                    f"band {band.name}: {len(band.energy)} energy picks, "
                    f"expected floor({n_band} * {self.delta})"
                )
            total += n_band
        if total != self.n_total:
            raise ValueError(f"plan holds {total} indices, declared n_total={self.n_total}")
        if self.bands and all(b.name in BAND_NAMES for b in self.bands):
            part = partition(self.rows, self.cols)
            for band in self.bands:
                members = set(part.band(band.name))
                stray = [ix for ix in band.indices if ix not in members]
                if stray:
                    raise ValueError(f"indices {stray[:3]} not in band {band.name}")

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "n_total": self.n_total,
            "delta": self.delta,
            "seed": self.seed,
            "bands": [
                {
                    "name": band.name,
                    "indices_energy": [[u, v] for u, v in band.energy],
                    "indices_random": [[u, v] for u, v in band.random],
                }
                for band in self.bands
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "SelectionPlan":
        bands = tuple(
            BandSelection(
                name=b["name"],
                energy=tuple((int(u), int(v)) for u, v in b["indices_energy"]),
                random=tuple((int(u), int(v)) for u, v in b["indices_random"]),
            )
            for b in doc["bands"]
        )
        return cls(
            rows=int(doc["rows"]),
            cols=int(doc["cols"]),
            n_total=int(doc["n_total"]),
            delta=float(doc["delta"]),
            seed=int(doc["seed"]),
            bands=bands,
        )

    @classmethod
    def from_json(cls, text: str) -> "SelectionPlan":
        return cls.from_dict(json.loads(text))


def allocate_proportionally(counts: dict[str, int], n_total: int) -> dict[str, int]:
    """Split n_total across bands proportionally to their cardinality.

    Largest-remainder rounding; remainder ties favor low, then mid, then
    high. Overflow past a band's capacity (cannot happen with exact
    arithmetic, kept as a guard) spills to the next band with room.
    """
    capacity = sum(counts.values())
    if n_total > capacity:
        raise ValueError(f"cannot allocate {n_total} picks over {capacity} indices")
    names = list(counts)
    alloc = {name: n_total * counts[name] // capacity for name in names}
    remainders = {name: n_total * counts[name] % capacity for name in names}
    leftover = n_total - sum(alloc.values())
    for name in sorted(names, key=lambda nm: (-remainders[nm], names.index(nm)))[:leftover]:
        alloc[name] += 1
    # guard: spill any overflow into the next band that still has room
    for i, name in enumerate(names):
        excess = alloc[name] - counts[name]
        if excess <= 0:
            continue
        alloc[name] = counts[name]
        for other in names[i + 1 :] + names[:i]:
            room = counts[other] - alloc[other]
            if room <= 0:
                continue
            take = min(room, excess)
            alloc[other] += take
            excess -= take
            if excess == 0:
                break
        if excess > 0:
            raise ValueError("band capacity exhausted during allocation")
    return alloc


def _sample_without_replacement(pool: list[Index], k: int, rng: np.random.Generator) -> list[Index]:
    """Uniform draw of k items via a partial Fisher-Yates shuffle."""
    if k > len(pool):
        raise ValueError(f"cannot draw {k} items from a pool of {len(pool)}")
    pool = list(pool)
    for i in range(k):
        j = int(rng.integers(i, len(pool)))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def build_selection_plan(F: SpectralMatrix, n_total: int, delta: float, seed: int) -> SelectionPlan:
    """Build the stratified energy-plus-random plan for a spectrum F.

    Per band: floor(n_band * delta) indices by energy rank, the remainder
    drawn uniformly (seeded) from the band's unselected indices.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    rows, cols = F.rows, F.cols
    if not 1 <= n_total <= rows * cols:
        raise ValueError(f"n_total must lie in [1, {rows * cols}], got {n_total}")
    part = partition(rows, cols)
    alloc = allocate_proportionally({name: len(part.band(name)) for name in BAND_NAMES}, n_total)
    rng = np.random.Generator(np.random.PCG64(seed))
    bands = []
    for name in BAND_NAMES:
        members = part.band(name)
        n_band = alloc[name]
        n_energy = math.floor(n_band * delta)
        energy_picked = rank_by_energy(F, members, n_energy)
        chosen = set(energy_picked)
        pool = [ix for ix in members if ix not in chosen]
        random_picked = _sample_without_replacement(pool, n_band - n_energy, rng)
        bands.append(BandSelection(name=name, energy=tuple(energy_picked), random=tuple(random_picked)))
    plan = SelectionPlan(
        rows=rows, cols=cols, n_total=n_total, delta=delta, seed=seed, bands=tuple(bands)
    )
    plan.validate()
    return plan


def build_random_plan(rows: int, cols: int, n_total: int, seed: int) -> SelectionPlan:
    """Uniform selection over the whole grid, ignoring bands and energy."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    if not 1 <= n_total <= rows * cols:
        raise ValueError(f"n_total must lie in [1, {rows * cols}], got {n_total}")
    rng = np.random.Generator(np.random.PCG64(seed))
    pool = [(u, v) for u in range(rows) for v in range(cols)]
    picked = _sample_without_replacement(pool, n_total, rng)
    plan = SelectionPlan(
        rows=rows,
        cols=cols,
        n_total=n_total,
        delta=0.0,
        seed=seed,
        bands=(BandSelection(name="all", energy=(), random=tuple(picked)),),
    )
    plan.validate()
    return plan
