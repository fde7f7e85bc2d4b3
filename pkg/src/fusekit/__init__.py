"""fusekit: fuse homogeneous periodic time-series datasets for training.

The library resamples every source to a common sampling frequency,
z-scores it, slices it into whole-period batches at zero crossings,
shuffles, and interleaves the batches round-robin into one series with
full provenance. Evaluation helpers cover residual thresholding,
precision/recall/F1, FLOPs estimates, one-way ANOVA, and PCA
diagnostics; a synthetic generator makes everything runnable without
real sensor data.
"""

__version__ = "0.1.0"

from .signals import (
    FirFilter,
    Spectrum,
    TimeSeries,
    apply_fir,
    design_lowpass,
    resample_fourier,
    spectrum,
    target_fs,
    zero_crossings,
    zscore,
)
from .fusion import (
    BatchProvenance,
    FusedDataset,
    PeriodBatch,
    batch_periods,
    fuse,
    interleave,
    preprocess_to_target,
    shuffle_batches,
)
from .ingest import (
    DatasetManifest,
    load_dataset,
    read_fused,
    read_manifest,
    read_timeseries_csv,
    slice_training_budget,
    write_fused,
    write_manifest,
)
from .synth import AnomalySpec, SynthSpec, generate
from .evaluation import (
    ANOMALOUS,
    HEALTHY,
    AnovaTable,
    FlopsEstimate,
    MetricsReport,
    PcaResult,
    ResidualSeries,
    ThresholdSet,
    anova_oneway,
    baseline_residuals,
    calibrate_thresholds,
    decide_file,
    flops_estimate,
    pca_project,
    score,
    windowed_rows,
)

__all__ = [
    "__version__",
    # signals
    "TimeSeries",
    "FirFilter",
    "Spectrum",
    "target_fs",
    "design_lowpass",
    "apply_fir",
    "resample_fourier",
    "zscore",
    "zero_crossings",
    "spectrum",
    # fusion
    "PeriodBatch",
    "BatchProvenance",
    "FusedDataset",
    "batch_periods",
    "shuffle_batches",
    "interleave",
    "preprocess_to_target",
    "fuse",
    # ingest
    "DatasetManifest",
    "read_manifest",
    "write_manifest",
    "load_dataset",
    "write_fused",
    "read_fused",
    "read_timeseries_csv",
    "slice_training_budget",
    # synth
    "SynthSpec",
    "AnomalySpec",
    "generate",
    # evaluation
    "HEALTHY",
    "ANOMALOUS",
    "ResidualSeries",
    "ThresholdSet",
    "MetricsReport",
    "AnovaTable",
    "FlopsEstimate",
    "PcaResult",
    "baseline_residuals",
    "calibrate_thresholds",
    "decide_file",
    "score",
    "flops_estimate",
    "anova_oneway",
    "pca_project",
    "windowed_rows",
]
