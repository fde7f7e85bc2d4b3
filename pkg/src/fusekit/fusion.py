"""Fuse multiple homogeneous periodic datasets into one training series.

Pipeline per dataset: resample to the common (minimum) sampling
frequency when needed, z-score, slice into batches of P periods at
positive-to-negative zero crossings of feature 0, shuffle the batches
with a per-dataset seed. The shuffled batch streams are then interleaved
round-robin into a single series with a full provenance record.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .signals import (
    TimeSeries,
    apply_fir,
    design_lowpass,
    resample_fourier,
    target_fs,
    zero_crossings,
    zscore,
)

__all__ = [
    "PeriodBatch",
    "BatchProvenance",
    "FusedDataset",
    "batch_periods",
    "shuffle_batches",
    "interleave",
    "preprocess_to_target",
    "fuse",
    "derive_seed",
    "DEFAULT_NUM_TAPS",
]

# Tap count used for the anti-alias filter unless overridden (order 100).
DEFAULT_NUM_TAPS = 101


@dataclass(frozen=True)
class PeriodBatch:
    """A contiguous slice of P fundamental periods of one dataset.

    samples: (length, n_features) slice of the normalized source.
    source_span: (start, end) indices into the normalized source series;
        both ends are positive-to-negative zero crossings of feature 0.
    """

    samples: np.ndarray
    dataset_id: str
    source_span: tuple[int, int]
    n_periods: int

    def __post_init__(self) -> None:
        start, end = self.source_span
        if not end > start:
            raise ValueError(f"empty source span {self.source_span}")
        if self.samples.shape[0] != end - start:
            raise ValueError(
                f"span {self.source_span} does not match {self.samples.shape[0]} samples"
            )
        if self.n_periods < 1:
            raise ValueError("n_periods must be >= 1")

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class BatchProvenance:
    """Where one fused batch came from: source dataset, sample span there,
    and its ordinal position in the fused output."""

    dataset_id: str
    source_span: tuple[int, int]
    batch_ordinal: int


@dataclass(frozen=True)
class FusedDataset:
    """The interleaved series plus enough metadata to audit every sample."""

    series: TimeSeries
    provenance: tuple[BatchProvenance, ...]
    seed: int | None = None
    periods_per_batch: int | None = None
    surplus_batches: dict = field(default_factory=dict)

    @property
    def dataset_ids(self) -> tuple[str, ...]:
        """Participating datasets in round-robin order."""
        seen: dict[str, None] = {}
        for rec in self.provenance:
            if rec.dataset_id not in seen:
                seen[rec.dataset_id] = None
        return tuple(seen)


def batch_periods(x: TimeSeries, periods: int, dataset_id: str = "") -> list[PeriodBatch]:
    """Slice a normalized series into batches of exactly `periods` periods.

    Crossing indices c are detected on feature 0; batch k spans
    [c[k*P], c[(k+1)*P]). Samples before the first crossing and after the
    last complete batch are discarded.
    """
    if periods < 1:
        raise ValueError(f"periods must be >= 1, got {periods}")
    crossings = zero_crossings(x)
    if len(crossings) < periods + 1:
        raise ValueError(
            f"insufficient periods: found {len(crossings)} crossings, "
            f"need at least {periods + 1} for P={periods}"
        )
    n_batches = (len(crossings) - 1) // periods
    batches = []
    for k in range(n_batches):
        start = int(crossings[k * periods])
        end = int(crossings[(k + 1) * periods])
        batches.append(
            PeriodBatch(
                samples=x.data[start:end],
                dataset_id=dataset_id,
                source_span=(start, end),
                n_periods=periods,
            )
        )
    return batches


def shuffle_batches(batches: list[PeriodBatch], seed: int) -> list[PeriodBatch]:
    """Return the batches in a seeded uniform-random order.

    The same list and seed always produce the same permutation.
    """
    order = np.random.default_rng(seed).permutation(len(batches))
    return [batches[i] for i in order]


def derive_seed(master_seed: int, key: str) -> int:
    """Stable sub-seed for (master seed, key).

    Hash-based (unlike Python's salted ``hash()``) so the same pair gives
    the same seed across processes, and adding a dataset never perturbs
    another dataset's shuffle.
    """
    digest = hashlib.sha256(f"{master_seed}|{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def interleave(
    per_dataset_batches: dict[str, list[PeriodBatch]],
    fs: float,
    feature_names: tuple[str, ...] | None = None,
    seed: int | None = None,
    periods_per_batch: int | None = None,
) -> FusedDataset:
    """Round-robin concatenate one batch from each dataset per round.

    Rounds stop at the smallest per-dataset batch count; surplus batches
    are dropped and reported in ``surplus_batches``. Dataset order follows
    the mapping's insertion order.
    """
    if len(per_dataset_batches) < 2:
        raise ValueError(
            f"fusion requires at least 2 datasets, got {len(per_dataset_batches)}"
        )
    for dataset_id, batches in per_dataset_batches.items():
        if not batches:
            raise ValueError(f"dataset '{dataset_id}' has no batches")
    widths = {b.samples.shape[1] for bs in per_dataset_batches.values() for b in bs}
    if len(widths) > 1:
        raise ValueError(
            f"feature-count mismatch across datasets: {sorted(widths)}; "
            "fusion requires homogeneous schemas"
        )

    rounds = min(len(b) for b in per_dataset_batches.values())
    surplus = {
        dataset_id: len(batches) - rounds
        for dataset_id, batches in per_dataset_batches.items()
        if len(batches) > rounds
    }

    chunks = []
    provenance = []
    ordinal = 0
    for r in range(rounds):
        for dataset_id, batches in per_dataset_batches.items():
            batch = batches[r]
            chunks.append(batch.samples)
            provenance.append(
                BatchProvenance(
                    dataset_id=dataset_id,
                    source_span=batch.source_span,
                    batch_ordinal=ordinal,
                )
            )
            ordinal += 1

    series = TimeSeries(np.concatenate(chunks, axis=0), fs, feature_names or ())
    return FusedDataset(
        series=series,
        provenance=tuple(provenance),
        seed=seed,
        periods_per_batch=periods_per_batch,
        surplus_batches=surplus,
    )


def preprocess_to_target(
    x: TimeSeries, fs_target: float, num_taps: int = DEFAULT_NUM_TAPS
) -> TimeSeries:
    """Anti-alias filter + Fourier resample (when needed), then z-score.

    This is the per-dataset normalization stage of the fusion pipeline;
    batches' source spans index into its output.
    """
    if x.fs != fs_target:
        aa = design_lowpass(num_taps, (fs_target / 2.0) / x.fs)
        x = resample_fourier(apply_fir(x, aa), fs_target)
    return zscore(x)


def fuse(
    datasets: list[tuple[TimeSeries, str]],
    periods: int,
    seed: int,
    num_taps: int = DEFAULT_NUM_TAPS,
    threads: int = 1,
) -> FusedDataset:
    """Run the full fusion pipeline over two or more datasets.

    Args:
        datasets: (series, dataset_id) pairs; ids must be unique and all
            series must share a feature count.
        periods: periods per batch (P).
        seed: master shuffle seed; each dataset shuffles with a sub-seed
            derived from (seed, dataset_id).
        num_taps: anti-alias FIR length for datasets that need resampling.
        threads: per-dataset preprocessing parallelism; results are
            identical for any thread count.
    """
    if len(datasets) < 2:
        raise ValueError(f"fusion requires at least 2 datasets, got {len(datasets)}")
    ids = [dataset_id for _, dataset_id in datasets]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate dataset ids: {ids}")
    widths = {x.n_features for x, _ in datasets}
    if len(widths) > 1:
        raise ValueError(
            f"feature-count mismatch across datasets: {sorted(widths)}; "
            "fusion requires homogeneous schemas"
        )

    fs_common = target_fs([x.fs for x, _ in datasets])

    def prepare(item: tuple[TimeSeries, str]) -> tuple[str, list[PeriodBatch]]:
        x, dataset_id = item
        try:
            normalized = preprocess_to_target(x, fs_common, num_taps)
            batches = batch_periods(normalized, periods, dataset_id=dataset_id)
            return dataset_id, shuffle_batches(batches, derive_seed(seed, dataset_id))
        except ValueError as exc:
            raise ValueError(f"dataset '{dataset_id}': {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            prepared = list(pool.map(prepare, datasets))
    else:
        prepared = [prepare(item) for item in datasets]

    per_dataset = dict(prepared)
    feature_names = datasets[0][0].feature_names
    return interleave(
        per_dataset,
        fs=fs_common,
        feature_names=feature_names,
        seed=seed,
        periods_per_batch=periods,
    )
