"""Command-line front end: fuse / analyze / synth / eval subcommands.

All subcommands are batch operations: they read files, write files, and
print a short summary. Outputs are deterministic for a fixed config and
seed. Plotting is intentionally out of scope; `analyze` emits data files
for external plotting tools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .evaluation import (
    ResidualSeries,
    anova_oneway,
    calibrate_thresholds,
    decide_file,
    score,
)
from .fusion import DEFAULT_NUM_TAPS, derive_seed, fuse
from .ingest import (
    load_dataset_with_lengths,
    read_manifest,
    read_timeseries_csv,
    slice_training_budget,
    write_fused,
    write_manifest,
    DatasetManifest,
)
from .synth import AnomalySpec, SynthSpec, generate

_THRESHOLD_FLAGS = {"max": "max_mae", "mean2sigma": "mean_plus_2sigma"}

_FUSE_DEFAULTS = {
    "periods": 4,
    "seed": 0,
    "out": "fused",
    "budget": None,
    "budget_for": {},
    "taps": DEFAULT_NUM_TAPS,
    "manifests": [],
}

_EVAL_DEFAULTS = {
    "threshold": "max",
    "exceed_fraction": 0.01,
    "out": None,
}


def _threads() -> int:
    raw = os.environ.get("FUSEKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"FUSEKIT_THREADS must be an integer, got '{raw}'")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read config '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed config '{path}': {exc}") from exc
    if not isinstance(config, dict):
        raise ValueError(f"config '{path}' must be a JSON object")
    return config


def _merge(cli_value, config: dict, key: str, defaults: dict):
    """CLI flag beats config file beats built-in default."""
    if cli_value is not None:
        return cli_value
    if key in config:
        return config[key]
    return defaults[key]


def _parse_budget_for(pairs: list[str]) -> dict[str, int]:
    budgets = {}
    for pair in pairs:
        dataset_id, sep, value = pair.partition("=")
        if not sep or not dataset_id:
            raise ValueError(f"--budget-for expects <dataset_id>=<samples>, got '{pair}'")
        budgets[dataset_id] = int(value)
    return budgets


def cmd_fuse(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    manifests = list(args.manifest) or list(config.get("manifests", []))
    periods = int(_merge(args.periods, config, "periods", _FUSE_DEFAULTS))
    seed = int(_merge(args.seed, config, "seed", _FUSE_DEFAULTS))
    out = _merge(args.out, config, "out", _FUSE_DEFAULTS)
    budget = _merge(args.budget, config, "budget", _FUSE_DEFAULTS)
    taps = int(_merge(args.taps, config, "taps", _FUSE_DEFAULTS))
    budget_for = dict(config.get("budget_for", {}))
    if args.budget_for:
        budget_for.update(_parse_budget_for(args.budget_for))

    if len(manifests) < 2:
        raise ValueError(
            f"fuse requires at least 2 datasets, got {len(manifests)} manifest(s)"
        )

    datasets = []
    applied_budgets = {}
    for manifest_path in manifests:
        manifest = read_manifest(manifest_path)
        series, file_lengths = load_dataset_with_lengths(manifest)
        dataset_budget = budget_for.get(manifest.dataset_id, budget)
        if dataset_budget is not None:
            series = slice_training_budget(
                series,
                int(dataset_budget),
                derive_seed(seed, f"budget:{manifest.dataset_id}"),
                file_lengths=file_lengths,
            )
            applied_budgets[manifest.dataset_id] = int(dataset_budget)
        datasets.append((series, manifest.dataset_id))

    fused = fuse(datasets, periods=periods, seed=seed, num_taps=taps, threads=_threads())
    csv_path, sidecar_path = write_fused(fused, out)

    counts = {dataset_id: 0 for _, dataset_id in datasets}
    for rec in fused.provenance:
        counts[rec.dataset_id] += 1
    print(f"target fs: {fused.series.fs:g} Hz")
    print(f"periods per batch: {periods}, seed: {seed}")
    for dataset_id, count in counts.items():
        surplus = fused.surplus_batches.get(dataset_id, 0)
        print(f"  {dataset_id}: {count} batches fused, {surplus} surplus batches discarded")
    if applied_budgets:
        total = sum(applied_budgets.values())
        shares = ":".join(
            f"{round(100 * applied_budgets[dataset_id] / total)}" for dataset_id in applied_budgets
        )
        named = ", ".join(f"{k}={v}" for k, v in applied_budgets.items())
        print(f"training budgets: {named} (ratio {shares})")
    print(f"fused samples: {fused.series.n_samples}")
    print(f"wrote {csv_path} and {sidecar_path}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    input_path = Path(args.input)
    fs = args.fs
    if fs is None:
        sidecar = input_path.with_suffix(".provenance.json")
        if sidecar.exists():
            fs = float(json.loads(sidecar.read_text(encoding="utf-8"))["target_fs_hz"])
        else:
            raise ValueError("--fs is required when no provenance sidecar is present")
    series = read_timeseries_csv(input_path, fs=fs)

    lo, hi = args.band
    if lo < 0 or hi <= lo:
        raise ValueError(f"band must satisfy 0 <= low < high, got {lo}..{hi}")
    nyquist = series.fs / 2.0
    if hi > nyquist:
        print(f"warning: band clipped to Nyquist ({nyquist:g} Hz)", file=sys.stderr)
        hi = nyquist

    out = Path(args.out) if args.out else input_path.with_suffix("")

    hist_rows = []
    for j, name in enumerate(series.feature_names):
        density, edges = np.histogram(series.data[:, j], bins=args.bins, density=True)
        for left, right, value in zip(edges[:-1], edges[1:], density):
            hist_rows.append((name, left, right, value))
    hist_path = out.with_name(out.name + ".hist.csv")
    pd.DataFrame(hist_rows, columns=["feature", "bin_left", "bin_right", "density"]).to_csv(
        hist_path, index=False
    )

    n = series.n_samples
    freqs = np.fft.rfftfreq(n, d=1.0 / series.fs)
    magnitudes = 2.0 * np.abs(np.fft.rfft(series.data, axis=0)) / n
    magnitudes[0] /= 2.0  # DC is not doubled in a one-sided spectrum
    in_band = (freqs >= lo) & (freqs <= hi)
    spectrum_frame = pd.DataFrame(
        magnitudes[in_band], columns=list(series.feature_names)
    )
    spectrum_frame.insert(0, "frequency_hz", freqs[in_band])
    spectrum_path = out.with_name(out.name + ".spectrum.csv")
    spectrum_frame.to_csv(spectrum_path, index=False)

    stats = {
        "n_samples": n,
        "fs_hz": series.fs,
        "duration_s": series.duration,
        "band_hz": [lo, hi],
        "features": {
            name: {
                "mean": float(series.data[:, j].mean()),
                "std": float(series.data[:, j].std()),
                "min": float(series.data[:, j].min()),
                "max": float(series.data[:, j].max()),
                "rms": float(np.sqrt(np.mean(series.data[:, j] ** 2))),
            }
            for j, name in enumerate(series.feature_names)
        },
    }
    stats_path = out.with_name(out.name + ".stats.json")
    stats_path.write_text(json.dumps(stats, indent=2) + "\n", encoding="utf-8")

    print(f"wrote {hist_path}, {spectrum_path}, {stats_path}")
    return 0


def _spec_from_json(raw: dict) -> SynthSpec:
    anomaly = None
    if raw.get("anomaly"):
        anomaly = AnomalySpec(
            kind=raw["anomaly"]["kind"],
            start=float(raw["anomaly"]["start_s"]),
            magnitude=float(raw["anomaly"]["magnitude"]),
        )
    return SynthSpec(
        fs=float(raw["fs_hz"]),
        duration=float(raw["duration_s"]),
        fundamental=float(raw["fundamental_hz"]),
        n_features=int(raw.get("n_features", 3)),
        phase_offsets=tuple(raw["phase_offsets"]) if raw.get("phase_offsets") else None,
        harmonic_amplitudes=tuple(
            (float(h), float(a)) for h, a in raw.get("harmonics", [[1, 1.0]])
        ),
        noise_sigma=float(raw.get("noise_sigma", 0.0)),
        anomaly=anomaly,
        seed=int(raw.get("seed", 0)),
    )


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        raw = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValueError(f"cannot read spec '{args.spec_file}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed spec '{args.spec_file}': {exc}") from exc

    dataset_id = raw.get("dataset_id", "synthetic")
    label = raw.get("label", "healthy")
    n_files = int(raw.get("n_files", 1))
    if n_files < 1:
        raise ValueError(f"n_files must be >= 1, got {n_files}")
    base_spec = _spec_from_json(raw)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    file_names = []
    feature_names: tuple[str, ...] = ()
    for i in range(n_files):
        spec = base_spec if n_files == 1 else _replace_seed(base_spec, base_spec.seed + i)
        series = generate(spec)
        feature_names = series.feature_names
        name = f"{dataset_id}_{i:03d}.csv"
        pd.DataFrame(series.data, columns=list(feature_names)).to_csv(
            out_dir / name, index=False, float_format="%.17g"
        )
        file_names.append(name)

    manifest = DatasetManifest(
        dataset_id=dataset_id,
        fs=base_spec.fs,
        files=tuple(file_names),
        label=label,
        feature_columns=feature_names,
        trim_head=0,
    )
    manifest_path = out_dir / f"{dataset_id}.manifest.json"
    write_manifest(manifest, manifest_path)
    print(f"wrote {n_files} file(s) and {manifest_path}")
    return 0


def _replace_seed(spec: SynthSpec, seed: int) -> SynthSpec:
    return SynthSpec(
        fs=spec.fs,
        duration=spec.duration,
        fundamental=spec.fundamental,
        n_features=spec.n_features,
        phase_offsets=spec.phase_offsets,
        harmonic_amplitudes=spec.harmonic_amplitudes,
        noise_sigma=spec.noise_sigma,
        anomaly=spec.anomaly,
        seed=seed,
    )


def _read_residuals(path: Path) -> ResidualSeries:
    frame = pd.read_csv(path, float_precision="round_trip")
    return ResidualSeries(frame.to_numpy(dtype=np.float64), source_file=path.name)


def _eval_metrics(args: argparse.Namespace, config: dict) -> int:
    if len(args.paths) != 1:
        raise ValueError("eval expects exactly one residual directory")
    residual_dir = Path(args.paths[0])
    if not residual_dir.is_dir():
        raise ValueError(f"'{residual_dir}' is not a directory")
    if not any(residual_dir.glob("*.csv")):
        raise ValueError(f"no residual CSV files in '{residual_dir}'")
    if args.labels is None:
        raise ValueError("--labels is required")

    labels_raw = json.loads(Path(args.labels).read_text(encoding="utf-8"))
    validation_name = labels_raw.get("validation")
    if not validation_name:
        raise ValueError("labels file must name a 'validation' residual file")
    validation_path = residual_dir / validation_name
    if not validation_path.exists():
        raise ValueError(f"missing validation file '{validation_path}'")

    threshold_flag = _merge(args.threshold, config, "threshold", _EVAL_DEFAULTS)
    if threshold_flag not in _THRESHOLD_FLAGS:
        raise ValueError(f"--threshold must be one of {sorted(_THRESHOLD_FLAGS)}")
    exceed = float(_merge(args.exceed_fraction, config, "exceed_fraction", _EVAL_DEFAULTS))

    thresholds = calibrate_thresholds(
        _read_residuals(validation_path), _THRESHOLD_FLAGS[threshold_flag]
    )
    decisions = []
    for name, actual in sorted(labels_raw.get("labels", {}).items()):
        if name == validation_name:
            continue
        file_path = residual_dir / name
        if not file_path.exists():
            raise ValueError(f"labelled residual file '{file_path}' not found")
        predicted = decide_file(_read_residuals(file_path), thresholds, exceed)
        decisions.append((predicted, actual))
    if not decisions:
        raise ValueError("labels file names no test files")

    report = score(decisions)
    print(report.to_text())
    out = _merge(args.out, config, "out", _EVAL_DEFAULTS)
    if out:
        out_path = Path(str(out) + ".metrics.json")
        payload = report.to_dict()
        payload["threshold_method"] = _THRESHOLD_FLAGS[threshold_flag]
        payload["exceed_fraction"] = exceed
        payload["thresholds"] = list(thresholds.per_feature)
        out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out_path}")
    return 0


def _eval_anova(args: argparse.Namespace, config: dict) -> int:
    if len(args.paths) < 2:
        raise ValueError("--anova expects at least 2 run-report directories")
    groups = []
    for directory in args.paths:
        report_paths = sorted(Path(directory).glob("*.json"))
        if not report_paths:
            raise ValueError(f"no report JSON files in '{directory}'")
        values = []
        for report_path in report_paths:
            payload = json.loads(report_path.read_text(encoding="utf-8"))
            if "f1" not in payload:
                raise ValueError(f"report '{report_path}' has no 'f1' field")
            values.append(float(payload["f1"]))
        groups.append(values)

    table = anova_oneway(groups)
    print(table.to_text())
    out = _merge(args.out, config, "out", _EVAL_DEFAULTS)
    if out:
        out_path = Path(str(out) + ".anova.json")
        out_path.write_text(json.dumps(table.to_dict(), indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out_path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.anova:
        return _eval_anova(args, config)
    return _eval_metrics(args, config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusekit",
        description="Fuse periodic time-series datasets and evaluate anomaly detection runs.",
    )
    parser.add_argument("--version", action="version", version=f"fusekit {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    fuse_parser = commands.add_parser("fuse", help="fuse datasets listed by manifests")
    fuse_parser.add_argument("--manifest", action="append", default=[], metavar="PATH")
    fuse_parser.add_argument("--periods", type=int, default=None, metavar="P")
    fuse_parser.add_argument("--seed", type=int, default=None)
    fuse_parser.add_argument("--out", default=None, metavar="PREFIX")
    fuse_parser.add_argument("--budget", type=int, default=None, metavar="SAMPLES")
    fuse_parser.add_argument(
        "--budget-for", action="append", default=[], metavar="ID=SAMPLES"
    )
    fuse_parser.add_argument("--taps", type=int, default=None, metavar="N")
    fuse_parser.add_argument("--config", default=None, metavar="PATH")
    fuse_parser.set_defaults(handler=cmd_fuse)

    analyze_parser = commands.add_parser(
        "analyze", help="emit histogram, spectrum, and summary stats for a CSV"
    )
    analyze_parser.add_argument("input", metavar="CSV")
    analyze_parser.add_argument(
        "--band", type=float, nargs=2, default=[0.0, 500.0], metavar=("LOW", "HIGH")
    )
    analyze_parser.add_argument("--fs", type=float, default=None, metavar="HZ")
    analyze_parser.add_argument("--bins", type=int, default=100)
    analyze_parser.add_argument("--out", default=None, metavar="PREFIX")
    analyze_parser.set_defaults(handler=cmd_analyze)

    synth_parser = commands.add_parser("synth", help="generate a synthetic dataset")
    synth_parser.add_argument("spec_file", metavar="SPEC_JSON")
    synth_parser.add_argument("out_dir", metavar="OUT_DIR")
    synth_parser.set_defaults(handler=cmd_synth)

    eval_parser = commands.add_parser(
        "eval", help="score residual files against labels, or ANOVA across runs"
    )
    eval_parser.add_argument("paths", nargs="+", metavar="PATH")
    eval_parser.add_argument("--labels", default=None, metavar="JSON")
    eval_parser.add_argument(
        "--threshold", choices=sorted(_THRESHOLD_FLAGS), default=None
    )
    eval_parser.add_argument("--exceed-fraction", type=float, default=None)
    eval_parser.add_argument("--anova", action="store_true")
    eval_parser.add_argument("--out", default=None, metavar="PREFIX")
    eval_parser.add_argument("--config", default=None, metavar="PATH")
    eval_parser.set_defaults(handler=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
