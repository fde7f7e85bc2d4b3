"""Anomaly-detection evaluation: residuals, thresholds, metrics, ANOVA, PCA.

The residual source is pluggable: any model can dump per-sample absolute
reconstruction errors as CSV, and :func:`baseline_residuals` provides a
seasonal-naive stand-in so the pipeline runs end to end without a
trained network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .signals import TimeSeries

__all__ = [
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

HEALTHY = "healthy"
ANOMALOUS = "anomalous"

THRESHOLD_METHODS = ("max_mae", "mean_plus_2sigma")

# Default fraction of samples that must exceed a feature threshold before
# a file is flagged; keeps isolated residual spikes from tripping it.
DEFAULT_EXCEED_FRACTION = 0.01

# Above this many degrees of freedom the incomplete-beta p-value is
# reported with a reduced-precision flag.
_PRECISE_DF_LIMIT = 1000


@dataclass(frozen=True)
class ResidualSeries:
    """Per-sample absolute reconstruction errors for one recording."""

    abs_errors: np.ndarray
    source_file: str = ""

    def __post_init__(self) -> None:
        errors = np.asarray(self.abs_errors, dtype=np.float64)
        if errors.ndim == 1:
            errors = errors[:, None]
        if errors.ndim != 2 or errors.size == 0:
            raise ValueError("abs_errors must be a non-empty (samples, features) matrix")
        if not np.all(np.isfinite(errors)) or np.any(errors < 0):
            raise ValueError("abs_errors must be finite and non-negative")
        object.__setattr__(self, "abs_errors", errors)

    @property
    def n_features(self) -> int:
        return self.abs_errors.shape[1]


@dataclass(frozen=True)
class ThresholdSet:
    """Per-feature anomaly boundaries and the method that produced them."""

    per_feature: tuple[float, ...]
    method: str

    def __post_init__(self) -> None:
        if self.method not in THRESHOLD_METHODS:
            raise ValueError(f"method must be one of {THRESHOLD_METHODS}, got '{self.method}'")
        if not self.per_feature or any(v < 0 for v in self.per_feature):
            raise ValueError("thresholds must be non-empty and non-negative")
        object.__setattr__(self, "per_feature", tuple(float(v) for v in self.per_feature))


@dataclass(frozen=True)
class MetricsReport:
    """Precision / recall / F1 over file-level decisions.

    counts is (TP, FP, TN, FN); metrics with a 0/0 ratio are reported as
    0 and named in ``undefined``.
    """

    precision: float
    recall: float
    f1: float
    counts: tuple[int, int, int, int]
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        tp, fp, tn, fn = self.counts
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
            "undefined": list(self.undefined),
        }

    def to_text(self) -> str:
        header = f"{'Precision':>10} {'Recall':>10} {'F1 score':>10}"
        row = f"{self.precision:>10.3f} {self.recall:>10.3f} {self.f1:>10.3f}"
        tp, fp, tn, fn = self.counts
        note = f"TP={tp} FP={fp} TN={tn} FN={fn}"
        if self.undefined:
            note += f"  (0/0 reported as 0: {', '.join(self.undefined)})"
        return "\n".join([header, row, note])


@dataclass(frozen=True)
class AnovaTable:
    """Classical one-way ANOVA decomposition."""

    df_between: int
    df_within: int
    ss_between: float
    ss_within: float
    ms_between: float
    ms_within: float
    f_stat: float
    p_value: float
    degenerate: bool = False
    reduced_precision: bool = False

    @property
    def df_total(self) -> int:
        return self.df_between + self.df_within

    @property
    def ss_total(self) -> float:
        return self.ss_between + self.ss_within

    def to_dict(self) -> dict:
        return {
            "between": {
                "df": self.df_between,
                "ss": self.ss_between,
                "ms": self.ms_between,
                "f_stat": self.f_stat,
                "p_value": self.p_value,
            },
            "within": {"df": self.df_within, "ss": self.ss_within, "ms": self.ms_within},
            "total": {"df": self.df_total, "ss": self.ss_total},
            "degenerate": self.degenerate,
            "reduced_precision": self.reduced_precision,
        }

    def to_text(self) -> str:
        cols = f"{'Source':<15}{'Degrees of Freedom':>20}{'Sum of Squares':>16}{'Mean Square':>13}{'F-stat':>9}  {'p-value':>11}"
        between = (
            f"{'Between Groups':<15}{self.df_between:>20d}{self.ss_between:>16.3f}"
            f"{self.ms_between:>13.3f}{self.f_stat:>9.3f}  {self.p_value:>11.3e}"
        )
        within = f"{'Within Groups':<15}{self.df_within:>20d}{self.ss_within:>16.3f}{self.ms_within:>13.3f}"
        total = f"{'Total':<15}{self.df_total:>20d}{self.ss_total:>16.3f}"
        return "\n".join([cols, between, within, total])


@dataclass(frozen=True)
class FlopsEstimate:
    """Training-cost proxy: flops = 2 * params * 3 * samples * epochs."""

    params: int
    samples: int
    epochs: int
    flops: float


@dataclass(frozen=True)
class PcaResult:
    """Top-component projection of a row matrix.

    components holds one orthonormal direction per column; the ratios give
    each component's share of the total variance, non-increasing.
    """

    projected: np.ndarray
    explained_variance_ratio: tuple[float, ...]
    components: np.ndarray


def baseline_residuals(x: TimeSeries, period_samples: int) -> ResidualSeries:
    """Seasonal-naive reconstruction errors: |x[n] - x[n - period]|.

    A perfect-period input gives (numerically) zero residuals, so fault
    signatures show up as residual bursts. Stands in for a learned
    reconstructor during pipeline bring-up.
    """
    if period_samples < 1:
        raise ValueError(f"period_samples must be >= 1, got {period_samples}")
    if period_samples >= x.n_samples:
        raise ValueError(
            f"period_samples={period_samples} must be smaller than the "
            f"{x.n_samples}-sample signal"
        )
    errors = np.abs(x.data[period_samples:] - x.data[:-period_samples])
    return ResidualSeries(abs_errors=errors)


def calibrate_thresholds(validation: ResidualSeries, method: str) -> ThresholdSet:
    """Per-feature thresholds from healthy validation residuals.

    max_mae takes each feature's largest residual; mean_plus_2sigma takes
    mean + 2 * population std, which suits noisier validation sets where
    the max may itself be an outlier.
    """
    if method not in THRESHOLD_METHODS:
        raise ValueError(f"method must be one of {THRESHOLD_METHODS}, got '{method}'")
    errors = validation.abs_errors
    if method == "max_mae":
        values = errors.max(axis=0)
    else:
        values = errors.mean(axis=0) + 2.0 * errors.std(axis=0)
    return ThresholdSet(per_feature=tuple(values), method=method)


def decide_file(
    residuals: ResidualSeries,
    thresholds: ThresholdSet,
    exceed_fraction: float = DEFAULT_EXCEED_FRACTION,
) -> str:
    """File verdict: anomalous iff any feature exceeds its threshold on
    strictly more than `exceed_fraction` of samples."""
    if residuals.n_features != len(thresholds.per_feature):
        raise ValueError(
            f"residuals have {residuals.n_features} features, thresholds "
            f"have {len(thresholds.per_feature)}"
        )
    if not 0.0 <= exceed_fraction <= 1.0:
        raise ValueError(f"exceed_fraction must be in [0, 1], got {exceed_fraction}")
    limits = np.asarray(thresholds.per_feature)
    fractions = (residuals.abs_errors > limits).mean(axis=0)
    return ANOMALOUS if bool(np.any(fractions > exceed_fraction)) else HEALTHY


def score(decisions: list[tuple[str, str]]) -> MetricsReport:
    """Precision / recall / F1 over (predicted, actual) label pairs.

    The anomalous class is the positive one. Undefined ratios (no
    predicted positives, no actual positives, or P + R = 0) are reported
    as 0 and flagged.
    """
    if not decisions:
        raise ValueError("no decisions to score")
    tp = fp = tn = fn = 0
    for predicted, actual in decisions:
        if predicted not in (HEALTHY, ANOMALOUS) or actual not in (HEALTHY, ANOMALOUS):
            raise ValueError(f"labels must be '{HEALTHY}' or '{ANOMALOUS}', got {(predicted, actual)}")
        if predicted == ANOMALOUS:
            if actual == ANOMALOUS:
                tp += 1
            else:
                fp += 1
        else:
            if actual == ANOMALOUS:
                fn += 1
            else:
                tn += 1

    undefined = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        counts=(tp, fp, tn, fn),
        undefined=tuple(undefined),
    )


def flops_estimate(params: int, samples: int, epochs: int) -> FlopsEstimate:
    """Training FLOPs proxy 2 * P * 3 * S * E (forward + backward, 3x)."""
    if params <= 0 or samples <= 0 or epochs <= 0:
        raise ValueError(
            f"params, samples, epochs must be positive, got {(params, samples, epochs)}"
        )
    flops = 2.0 * params * 3.0 * samples * epochs
    return FlopsEstimate(params=params, samples=samples, epochs=epochs, flops=flops)


def _f_sf(f_stat: float, df_num: int, df_den: int) -> float:
    """Survival function of the F distribution via the regularized
    incomplete beta function."""
    if f_stat <= 0:
        return 1.0
    x = df_den / (df_den + df_num * f_stat)
    return float(betainc(df_den / 2.0, df_num / 2.0, x))


def anova_oneway(groups: list) -> AnovaTable:
    """Classical one-way ANOVA over >= 2 groups of >= 2 values each."""
    if len(groups) < 2:
        raise ValueError(f"need at least 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    for i, arr in enumerate(arrays):
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError(f"group {i} must hold at least 2 values")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"group {i} contains non-finite values")

    n_total = sum(arr.size for arr in arrays)
    grand_mean = sum(arr.sum() for arr in arrays) / n_total
    ss_between = sum(arr.size * (arr.mean() - grand_mean) ** 2 for arr in arrays)
    ss_within = sum(((arr - arr.mean()) ** 2).sum() for arr in arrays)
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within

    degenerate = bool(ms_within == 0.0)
    if degenerate:
        f_stat = float("inf") if ms_between > 0 else 0.0
        p_value = 0.0 if ms_between > 0 else 1.0
    else:
        f_stat = ms_between / ms_within
        p_value = _f_sf(f_stat, df_between, df_within)
    return AnovaTable(
        df_between=df_between,
        df_within=df_within,
        ss_between=float(ss_between),
        ss_within=float(ss_within),
        ms_between=float(ms_between),
        ms_within=float(ms_within),
        f_stat=float(f_stat),
        p_value=p_value,
        degenerate=degenerate,
        reduced_precision=max(df_between, df_within) > _PRECISE_DF_LIMIT,
    )


def pca_project(rows: np.ndarray, n_components: int = 2) -> PcaResult:
    """Project rows onto the top principal components of their covariance.

    Rows are mean-centered internally. Requires more rows than
    components, at least `n_components` columns, and nonzero total
    variance.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D matrix")
    n, d = rows.shape
    if n <= n_components:
        raise ValueError(f"need more than {n_components} rows, got {n}")
    if d < n_components:
        raise ValueError(
            f"rank < {n_components}: data has only {d} dimensions"
        )
    centered = rows - rows.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    total = eigenvalues.sum()
    if total <= 0:
        raise ValueError("zero total variance: all rows identical")
    order = np.argsort(eigenvalues)[::-1][:n_components]
    components = eigenvectors[:, order]
    ratios = tuple(float(max(eigenvalues[i], 0.0) / total) for i in order)
    return PcaResult(
        projected=centered @ components,
        explained_variance_ratio=ratios,
        components=components,
    )


def windowed_rows(x: TimeSeries, window_len: int) -> np.ndarray:
    """Partition a series into fixed-length windows and flatten features.

    Each row is one window of shape (window_len, n_features) flattened to
    window_len * n_features values; the trailing partial window is
    dropped. This is the preprocessing used for PCA diagnostics.
    """
    if window_len < 1:
        raise ValueError(f"window_len must be >= 1, got {window_len}")
    n_windows = x.n_samples // window_len
    if n_windows < 1:
        raise ValueError(
            f"window_len={window_len} exceeds the {x.n_samples}-sample series"
        )
    trimmed = x.data[: n_windows * window_len]
    return trimmed.reshape(n_windows, window_len * x.n_features)
