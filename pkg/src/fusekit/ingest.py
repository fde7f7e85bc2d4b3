"""Manifest-driven dataset loading and fused-output serialization.

A dataset is described by a JSON manifest (see :class:`DatasetManifest`);
its CSV files are concatenated in manifest order after dropping a fixed
number of leading transient rows from each file. Fused outputs are
written as a CSV plus a JSON provenance sidecar that maps every batch
back to its source dataset and sample span.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .fusion import BatchProvenance, FusedDataset
from .signals import TimeSeries

__all__ = [
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "load_dataset",
    "load_dataset_with_lengths",
    "write_fused",
    "read_fused",
    "read_timeseries_csv",
    "slice_training_budget",
]

LABELS = ("healthy", "anomalous")

# Full round-trip precision: parsing the written text recovers the exact
# float64, so provenance audits can compare bit-for-bit.
_CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class DatasetManifest:
    """Declarative description of one dataset source.

    trim_head rows are dropped from the start of every file (transient
    removal); it must be smaller than the shortest file.
    """

    dataset_id: str
    fs: float
    files: tuple[str, ...]
    label: str
    feature_columns: tuple[str, ...]
    trim_head: int = 0

    def __post_init__(self) -> None:
        if not self.dataset_id:
            raise ValueError("dataset_id must be non-empty")
        if not self.fs > 0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        if not self.files:
            raise ValueError("manifest lists no files")
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got '{self.label}'")
        if not self.feature_columns:
            raise ValueError("feature_columns must be non-empty")
        if self.trim_head < 0:
            raise ValueError(f"trim_head must be >= 0, got {self.trim_head}")
        object.__setattr__(self, "files", tuple(str(f) for f in self.files))
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))


def read_manifest(path: str | Path) -> DatasetManifest:
    """Load a manifest JSON file; relative data paths resolve against it."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read manifest '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed manifest '{path}': {exc}") from exc
    required = {"dataset_id", "fs_hz", "files", "label", "feature_columns"}
    missing = required - raw.keys()
    if missing:
        raise ValueError(f"manifest '{path}' missing fields: {sorted(missing)}")
    files = tuple(
        str(p) if Path(p).is_absolute() else str(path.parent / p) for p in raw["files"]
    )
    return DatasetManifest(
        dataset_id=raw["dataset_id"],
        fs=float(raw["fs_hz"]),
        files=files,
        label=raw["label"],
        feature_columns=tuple(raw["feature_columns"]),
        trim_head=int(raw.get("trim_head", 0)),
    )


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest as JSON; file paths are stored as given."""
    payload = {
        "dataset_id": manifest.dataset_id,
        "fs_hz": manifest.fs,
        "label": manifest.label,
        "trim_head": manifest.trim_head,
        "feature_columns": list(manifest.feature_columns),
        "files": list(manifest.files),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_file(path: str, manifest: DatasetManifest) -> np.ndarray:
    try:
        # round_trip: exact float64 parsing, so written data reloads bit-for-bit
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as exc:
        raise ValueError(f"cannot read '{path}': {exc}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ValueError(f"malformed CSV '{path}': {exc}") from exc

    missing = [c for c in manifest.feature_columns if c not in frame.columns]
    if missing:
        raise ValueError(
            f"'{path}' is missing feature columns {missing}; header has "
            f"{list(frame.columns)}"
        )
    values = np.empty((len(frame), len(manifest.feature_columns)))
    for j, col in enumerate(manifest.feature_columns):
        numeric = pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=np.float64)
        bad = np.nonzero(~np.isfinite(numeric))[0]
        if bad.size:
            raise ValueError(
                f"'{path}' column '{col}' has a non-finite or non-numeric value "
                f"at data row {bad[0] + 1}"
            )
        values[:, j] = numeric

    if manifest.trim_head >= len(values):
        raise ValueError(
            f"trim_head={manifest.trim_head} leaves no rows in '{path}' "
            f"({len(values)} rows)"
        )
    return values[manifest.trim_head:]


def load_dataset_with_lengths(manifest: DatasetManifest) -> tuple[TimeSeries, list[int]]:
    """Load a dataset and report the post-trim row count of each file."""
    parts = [_load_file(path, manifest) for path in manifest.files]
    series = TimeSeries(
        np.concatenate(parts, axis=0), manifest.fs, manifest.feature_columns
    )
    return series, [len(p) for p in parts]


def load_dataset(manifest: DatasetManifest) -> TimeSeries:
    """Parse, trim, and concatenate every file named by the manifest."""
    series, _ = load_dataset_with_lengths(manifest)
    return series


def write_fused(fused: FusedDataset, path_prefix: str | Path) -> tuple[Path, Path]:
    """Write `<prefix>.csv` and `<prefix>.provenance.json`.

    The CSV holds one row per sample at full float64 precision; the
    sidecar records seed, periods per batch, target fs, tool version, and
    one record per batch in output order.
    """
    if not fused.provenance or fused.series.n_samples == 0:
        raise ValueError("nothing to write: fused dataset is empty")
    prefix = Path(path_prefix)
    csv_path = prefix.with_name(prefix.name + ".csv")
    sidecar_path = prefix.with_name(prefix.name + ".provenance.json")

    frame = pd.DataFrame(fused.series.data, columns=list(fused.series.feature_names))
    try:
        frame.to_csv(csv_path, index=False, float_format=_CSV_FLOAT_FORMAT)
        sidecar = {
            "seed": fused.seed,
            "periods_per_batch": fused.periods_per_batch,
            "target_fs_hz": fused.series.fs,
            "tool_version": __version__,
            "batches": [
                {
                    "dataset_id": rec.dataset_id,
                    "start": rec.source_span[0],
                    "end": rec.source_span[1],
                    "ordinal": rec.batch_ordinal,
                }
                for rec in fused.provenance
            ],
        }
        sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot write fused output at '{prefix}': {exc}") from exc
    return csv_path, sidecar_path


def read_fused(path_prefix: str | Path) -> FusedDataset:
    """Read back a fused CSV plus provenance sidecar."""
    prefix = Path(path_prefix)
    csv_path = prefix.with_name(prefix.name + ".csv")
    sidecar_path = prefix.with_name(prefix.name + ".provenance.json")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read provenance '{sidecar_path}': {exc}") from exc
    series = read_timeseries_csv(csv_path, fs=float(sidecar["target_fs_hz"]))
    provenance = tuple(
        BatchProvenance(
            dataset_id=rec["dataset_id"],
            source_span=(int(rec["start"]), int(rec["end"])),
            batch_ordinal=int(rec["ordinal"]),
        )
        for rec in sidecar["batches"]
    )
    return FusedDataset(
        series=series,
        provenance=provenance,
        seed=sidecar.get("seed"),
        periods_per_batch=sidecar.get("periods_per_batch"),
    )


def read_timeseries_csv(path: str | Path, fs: float) -> TimeSeries:
    """Read a plain feature CSV (header row of names, numeric rows)."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as exc:
        raise ValueError(f"cannot read '{path}': {exc}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ValueError(f"malformed CSV '{path}': {exc}") from exc
    data = frame.to_numpy(dtype=np.float64)
    return TimeSeries(data, fs, tuple(str(c) for c in frame.columns))


def slice_training_budget(
    x: TimeSeries,
    budget: int,
    seed: int,
    file_lengths: list[int] | None = None,
) -> TimeSeries:
    """Cut the series down to `budget` samples with random contiguous slices.

    With ``file_lengths`` (the per-file sample counts the series was
    concatenated from), the budget is split across files proportionally
    and one contiguous slice is taken per file at a uniformly random
    offset. Without it the whole series is treated as a single file.
    Temporal order is preserved within every slice, and the selection is
    deterministic for a fixed seed.
    """
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if budget > x.n_samples:
        raise ValueError(
            f"budget {budget} exceeds available {x.n_samples} samples"
        )
    if budget == x.n_samples:
        return x.with_data(x.data.copy())

    lengths = [x.n_samples] if file_lengths is None else list(file_lengths)
    if sum(lengths) != x.n_samples:
        raise ValueError(
            f"file_lengths sum to {sum(lengths)}, series has {x.n_samples} samples"
        )

    total = sum(lengths)
    quotas = [budget * ln // total for ln in lengths]
    # Distribute the rounding remainder to files that still have room.
    shortfall = budget - sum(quotas)
    i = 0
    while shortfall > 0:
        if quotas[i] < lengths[i]:
            quotas[i] += 1
            shortfall -= 1
        i = (i + 1) % len(lengths)

    rng = np.random.default_rng(seed)
    slices = []
    offset = 0
    for ln, quota in zip(lengths, quotas):
        if quota > 0:
            start = offset + int(rng.integers(0, ln - quota + 1))
            slices.append(x.data[start:start + quota])
        offset += ln
    return x.with_data(np.concatenate(slices, axis=0))
