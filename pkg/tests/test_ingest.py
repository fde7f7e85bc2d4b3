import json

import numpy as np
import pandas as pd
import pytest

from fusekit import (
    DatasetManifest,
    SynthSpec,
    TimeSeries,
    fuse,
    generate,
    load_dataset,
    read_fused,
    read_manifest,
    read_timeseries_csv,
    slice_training_budget,
    write_fused,
    write_manifest,
)
from fusekit.ingest import load_dataset_with_lengths


def write_csv(path, data, columns=("i_a", "i_b")):
    pd.DataFrame(np.asarray(data), columns=list(columns)).to_csv(path, index=False)


@pytest.fixture
def two_file_manifest(tmp_path):
    write_csv(tmp_path / "one.csv", np.arange(200.0).reshape(100, 2))
    write_csv(tmp_path / "two.csv", np.arange(200.0, 400.0).reshape(100, 2))
    manifest = DatasetManifest(
        dataset_id="demo",
        fs=100.0,
        files=(str(tmp_path / "one.csv"), str(tmp_path / "two.csv")),
        label="healthy",
        feature_columns=("i_a", "i_b"),
    )
    return manifest, tmp_path


class TestManifest:
    def test_round_trip(self, two_file_manifest, tmp_path):
        manifest, _ = two_file_manifest
        path = tmp_path / "demo.manifest.json"
        write_manifest(manifest, path)
        loaded = read_manifest(path)
        assert loaded == manifest

    def test_relative_paths_resolve_against_manifest(self, tmp_path):
        write_csv(tmp_path / "data.csv", np.ones((5, 2)))
        payload = {
            "dataset_id": "rel",
            "fs_hz": 10.0,
            "label": "healthy",
            "feature_columns": ["i_a", "i_b"],
            "files": ["data.csv"],
        }
        path = tmp_path / "rel.json"
        path.write_text(json.dumps(payload))
        manifest = read_manifest(path)
        assert load_dataset(manifest).n_samples == 5

    def test_missing_fields_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dataset_id": "x"}))
        with pytest.raises(ValueError, match="missing fields"):
            read_manifest(path)

    def test_invalid_label_rejected(self):
        with pytest.raises(ValueError, match="label"):
            DatasetManifest("x", 10.0, ("f.csv",), "broken", ("c",))

    def test_no_files_rejected(self):
        with pytest.raises(ValueError, match="no files"):
            DatasetManifest("x", 10.0, (), "healthy", ("c",))


class TestLoadDataset:
    def test_concatenates_in_manifest_order(self, two_file_manifest):
        manifest, _ = two_file_manifest
        series = load_dataset(manifest)
        assert series.n_samples == 200
        assert series.feature_names == ("i_a", "i_b")
        np.testing.assert_array_equal(series.data[:, 0], np.arange(0.0, 400.0, 2.0))

    def test_trim_head_drops_leading_rows(self, two_file_manifest):
        manifest, _ = two_file_manifest
        trimmed = DatasetManifest(
            manifest.dataset_id, manifest.fs, manifest.files, manifest.label,
            manifest.feature_columns, trim_head=30,
        )
        series, lengths = load_dataset_with_lengths(trimmed)
        assert lengths == [70, 70]
        assert series.n_samples == 140
        assert series.data[0, 0] == 60.0  # row 30 of file one

    def test_transient_trim_case_study_counts(self, tmp_path):
        # 1,001,000 rows, trim 200,000 -> 801,000 (checked at full scale in
        # the acceptance suite; scaled here: 10,010 - 2,000 = 8,010)
        write_csv(tmp_path / "b.csv", np.arange(10_010.0)[:, None], columns=("i_a",))
        manifest = DatasetManifest("b", 55_611.0, (str(tmp_path / "b.csv"),),
                                   "healthy", ("i_a",), trim_head=2_000)
        assert load_dataset(manifest).n_samples == 8_010

    def test_nan_cell_names_file_and_row(self, tmp_path):
        frame = pd.DataFrame({"i_a": [1.0, 2.0, np.nan, 4.0]})
        frame.to_csv(tmp_path / "bad.csv", index=False)
        manifest = DatasetManifest("x", 10.0, (str(tmp_path / "bad.csv"),),
                                   "healthy", ("i_a",))
        with pytest.raises(ValueError, match=r"bad\.csv.*i_a.*row 3"):
            load_dataset(manifest)

    def test_non_numeric_cell_rejected(self, tmp_path):
        (tmp_path / "junk.csv").write_text("i_a\n1.0\noops\n")
        manifest = DatasetManifest("x", 10.0, (str(tmp_path / "junk.csv"),),
                                   "healthy", ("i_a",))
        with pytest.raises(ValueError, match="row 2"):
            load_dataset(manifest)

    def test_missing_column_rejected(self, two_file_manifest):
        manifest, _ = two_file_manifest
        wrong = DatasetManifest(manifest.dataset_id, manifest.fs, manifest.files,
                                manifest.label, ("i_a", "i_z"))
        with pytest.raises(ValueError, match="missing feature columns.*i_z"):
            load_dataset(wrong)

    def test_missing_file_rejected(self, tmp_path):
        manifest = DatasetManifest("x", 10.0, (str(tmp_path / "ghost.csv"),),
                                   "healthy", ("i_a",))
        with pytest.raises(ValueError, match="ghost.csv"):
            load_dataset(manifest)

    def test_excessive_trim_rejected(self, two_file_manifest):
        manifest, _ = two_file_manifest
        hungry = DatasetManifest(manifest.dataset_id, manifest.fs, manifest.files,
                                 manifest.label, manifest.feature_columns,
                                 trim_head=100)
        with pytest.raises(ValueError, match="trim_head"):
            load_dataset(hungry)

    def test_length_invariant_property(self, tmp_path, rng):
        lengths = [int(v) for v in rng.integers(20, 60, size=4)]
        trim = 5
        files = []
        for i, n in enumerate(lengths):
            path = tmp_path / f"part{i}.csv"
            write_csv(path, rng.normal(size=(n, 2)))
            files.append(str(path))
        manifest = DatasetManifest("p", 10.0, tuple(files), "healthy",
                                   ("i_a", "i_b"), trim_head=trim)
        assert load_dataset(manifest).n_samples == sum(n - trim for n in lengths)


def small_fused(seed=4):
    a = generate(SynthSpec(fs=2_000.0, duration=1.0, fundamental=40.0, seed=1))
    b = generate(SynthSpec(fs=4_000.0, duration=1.0, fundamental=40.0, seed=2))
    return fuse([(a, "a"), (b, "b")], periods=2, seed=seed)


class TestWriteFused:
    def test_round_trip_is_exact(self, tmp_path):
        fused = small_fused()
        write_fused(fused, tmp_path / "out")
        loaded = read_fused(tmp_path / "out")
        # %.17g serialization round-trips float64 exactly
        np.testing.assert_array_equal(loaded.series.data, fused.series.data)
        assert loaded.series.fs == fused.series.fs
        assert loaded.provenance == fused.provenance
        assert loaded.seed == fused.seed
        assert loaded.periods_per_batch == fused.periods_per_batch

    def test_provenance_record_count(self, tmp_path):
        fused = small_fused()
        _, sidecar_path = write_fused(fused, tmp_path / "out")
        sidecar = json.loads(sidecar_path.read_text())
        assert len(sidecar["batches"]) == len(fused.provenance)
        assert set(sidecar) == {
            "seed", "periods_per_batch", "target_fs_hz", "tool_version", "batches",
        }
        assert {tuple(sorted(rec)) for rec in map(dict, sidecar["batches"])} == {
            ("dataset_id", "end", "ordinal", "start")
        }

    def test_empty_fused_rejected(self, tmp_path):
        fused = small_fused()
        empty = type(fused)(series=fused.series, provenance=())
        with pytest.raises(ValueError, match="nothing to write"):
            write_fused(empty, tmp_path / "out")

    def test_csv_readable_as_timeseries(self, tmp_path):
        fused = small_fused()
        csv_path, _ = write_fused(fused, tmp_path / "out")
        series = read_timeseries_csv(csv_path, fs=fused.series.fs)
        assert series.feature_names == fused.series.feature_names
        np.testing.assert_array_equal(series.data, fused.series.data)


class TestSliceTrainingBudget:
    def test_full_budget_is_identity(self, rng):
        x = TimeSeries(rng.normal(size=(500, 2)), 10.0)
        np.testing.assert_array_equal(
            slice_training_budget(x, 500, seed=1).data, x.data
        )

    def test_case_study_budget_count(self):
        x = TimeSeries(np.arange(4_000_000.0)[:, None], 10_000.0)
        out = slice_training_budget(x, 250_000, seed=0)
        assert out.n_samples == 250_000

    def test_deterministic(self, rng):
        x = TimeSeries(rng.normal(size=(1_000, 1)), 10.0)
        first = slice_training_budget(x, 300, seed=42)
        second = slice_training_budget(x, 300, seed=42)
        np.testing.assert_array_equal(first.data, second.data)

    def test_per_file_slices_preserve_order(self):
        x = TimeSeries(np.arange(1_000.0)[:, None], 10.0)
        lengths = [400, 350, 250]
        out = slice_training_budget(x, 500, seed=7, file_lengths=lengths)
        assert out.n_samples == 500
        values = out.data[:, 0]
        # one contiguous run per file, ordered, no duplicates
        steps = np.diff(values)
        assert np.all(steps >= 1)
        assert np.sum(steps > 1) <= len(lengths) - 1

    def test_budget_exceeding_input_rejected(self, rng):
        x = TimeSeries(rng.normal(size=(100, 1)), 10.0)
        with pytest.raises(ValueError, match="exceeds"):
            slice_training_budget(x, 101, seed=1)

    def test_subsequence_property(self, rng):
        for _ in range(50):
            n = int(rng.integers(50, 400))
            x = TimeSeries(np.arange(float(n))[:, None], 10.0)
            budget = int(rng.integers(1, n + 1))
            out = slice_training_budget(x, budget, seed=int(rng.integers(1_000)))
            values = out.data[:, 0].astype(int)
            assert out.n_samples == budget
            assert np.all(np.diff(values) >= 1)  # strictly increasing overall
