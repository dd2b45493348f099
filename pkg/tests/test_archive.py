"""Tests for the weight-archive and dataset file formats."""

import json

import numpy as np
import pytest

from htcompress.archive import (
    MANIFEST_SCHEMA,
    load_archive,
    load_dataset,
    read_matrix_csv,
    save_dataset,
    validate_manifest,
    write_archive,
    write_matrix_csv,
)
from htcompress.errors import ValidationError
from htcompress.fcnn import Network, load_network, make_blobs, save_network


class TestArchive:
    def test_round_trip_f64_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        layers = [("a", rng.standard_normal((4, 6))), ("b", rng.standard_normal((3, 4)))]
        write_archive(tmp_path / "arc", "model", layers, dtype="f64")
        archive = load_archive(tmp_path / "arc")
        assert archive.name == "model"
        assert [layer.name for layer in archive.layers] == ["a", "b"]
        for (name, original), loaded in zip(layers, archive.layers):
            np.testing.assert_array_equal(loaded.matrix, original)

    def test_round_trip_f32(self, tmp_path):
        rng = np.random.default_rng(2)
        original = rng.standard_normal((5, 5))
        write_archive(tmp_path / "arc", "m", [("w", original)], dtype="f32")
        loaded = load_archive(tmp_path / "arc").layers[0].matrix
        np.testing.assert_array_equal(loaded, original.astype(np.float32).astype(float))

    def test_manifest_matches_schema(self, tmp_path):
        write_archive(tmp_path / "arc", "m", [("w", np.eye(2))])
        manifest = json.loads((tmp_path / "arc" / "manifest.json").read_text())
        validate_manifest(manifest)  # should not raise
        assert manifest["layers"][0]["layout"] == "row-major"
        assert manifest["layers"][0]["endianness"] == "little"

    def test_rejects_bad_manifest(self):
        with pytest.raises(ValidationError):
            validate_manifest({"name": "x", "layers": [{"name": "w"}]})
        with pytest.raises(ValidationError):
            validate_manifest({"name": "x", "layers": [], "surprise": 1})

    def test_rejects_truncated_payload(self, tmp_path):
        write_archive(tmp_path / "arc", "m", [("w", np.eye(3))])
        manifest = json.loads((tmp_path / "arc" / "manifest.json").read_text())
        (tmp_path / "arc" / manifest["layers"][0]["file"]).write_bytes(b"\x00" * 8)
        with pytest.raises(ValidationError):
            load_archive(tmp_path / "arc")

    def test_layer_lookup_and_final(self, tmp_path):
        write_archive(tmp_path / "arc", "m", [("first", np.eye(2)), ("last", np.ones((2, 2)))])
        archive = load_archive(tmp_path / "arc")
        assert archive.layer("first").name == "first"
        assert archive.final_layer.name == "last"
        with pytest.raises(ValidationError):
            archive.layer("missing")

    def test_schema_permits_source_hash(self):
        manifest = {
            "name": "exported",
            "source_checkpoint_hash": "abc123",
            "layers": [
                {
                    "name": "w",
                    "rows": 1,
                    "cols": 1,
                    "dtype": "f32",
                    "file": "layer_000.bin",
                    "layout": "row-major",
                    "endianness": "little",
                }
            ],
        }
        validate_manifest(manifest)
        assert "source_checkpoint_hash" in MANIFEST_SCHEMA["properties"]


class TestMatrixCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((4, 3))
        write_matrix_csv(tmp_path / "m.csv", M)
        np.testing.assert_allclose(read_matrix_csv(tmp_path / "m.csv"), M, rtol=0, atol=0)

    def test_single_row(self, tmp_path):
        write_matrix_csv(tmp_path / "m.csv", [[1.0, 2.0, 3.0]])
        loaded = read_matrix_csv(tmp_path / "m.csv")
        assert loaded.shape == (1, 3)


class TestDataset:
    def test_round_trip(self, tmp_path):
        ds = make_blobs(40, dim=3, classes=2, seed=0)
        save_dataset(tmp_path / "data.csv", ds.inputs, ds.labels, ds.class_count)
        loaded = load_dataset(tmp_path / "data.csv")
        np.testing.assert_allclose(loaded.inputs, ds.inputs, atol=0)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        assert loaded.class_count == 2

    def test_missing_sidecar(self, tmp_path):
        ds = make_blobs(10, dim=2, classes=2, seed=1)
        save_dataset(tmp_path / "data.csv", ds.inputs, ds.labels, 2)
        (tmp_path / "data.json").unlink()
        with pytest.raises(ValidationError):
            load_dataset(tmp_path / "data.csv")

    def test_feature_dim_mismatch(self, tmp_path):
        ds = make_blobs(10, dim=2, classes=2, seed=2)
        save_dataset(tmp_path / "data.csv", ds.inputs, ds.labels, 2)
        sidecar = json.loads((tmp_path / "data.json").read_text())
        sidecar["feature_dim"] = 5
        (tmp_path / "data.json").write_text(json.dumps(sidecar))
        with pytest.raises(ValidationError):
            load_dataset(tmp_path / "data.csv")


class TestNetworkArchive:
    def test_round_trip_with_augmentation(self, tmp_path):
        rng = np.random.default_rng(4)
        net = Network((rng.standard_normal((5, 4)), rng.standard_normal((2, 5))), augment_input=True)
        save_network(tmp_path / "net", net)
        loaded = load_network(tmp_path / "net")
        assert loaded.augment_input
        for wa, wb in zip(net.weights, loaded.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_plain_archive_loads_without_augmentation(self, tmp_path):
        write_archive(tmp_path / "net", "plain", [("w", np.eye(3))])
        loaded = load_network(tmp_path / "net")
        assert not loaded.augment_input
