"""Weight-archive and dataset file formats.

An archive is a directory holding ``manifest.json`` plus one raw binary file
per layer (row-major, little-endian, f32 or f64).  The manifest is validated
against the schema shipped with the package; converters that produce archives
for this tool must emit the same schema.

Datasets are headerless CSV rows ``feature..., label`` with a JSON sidecar
``{"feature_dim": ..., "class_count": ...}``; labels are 0-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ValidationError
from .matrices import as_matrix

__all__ = [
    "MANIFEST_SCHEMA",
    "MANIFEST_NAME",
    "ArchiveLayer",
    "Archive",
    "validate_manifest",
    "write_archive",
    "load_archive",
    "write_matrix_csv",
    "read_matrix_csv",
    "save_dataset",
    "load_dataset",
]

MANIFEST_NAME = "manifest.json"

_DTYPES = {"f32": "<f4", "f64": "<f8"}

MANIFEST_SCHEMA = json.loads(
    resources.files("htcompress").joinpath("manifest_schema.json").read_text()
)


def validate_manifest(manifest: dict) -> None:
    """Raise ``ValidationError`` if the manifest does not match the shared schema."""
    try:
        jsonschema.validate(manifest, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"invalid archive manifest: {exc.message}") from exc


@dataclass(frozen=True)
class ArchiveLayer:
    name: str
    matrix: np.ndarray
    dtype: str


@dataclass(frozen=True)
class Archive:
    name: str
    layers: tuple[ArchiveLayer, ...]

    def layer(self, name: str) -> ArchiveLayer:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise ValidationError(f"archive {self.name!r} has no layer named {name!r}")

    @property
    def final_layer(self) -> ArchiveLayer:
        if not self.layers:
            raise ValidationError(f"archive {self.name!r} contains no layers")
        return self.layers[-1]


def write_archive(out_dir, name: str, layers, dtype: str = "f64") -> Path:
    """Write matrices as raw binaries plus a validated manifest; returns the directory.

    ``layers`` is a sequence of ``(layer_name, matrix)`` pairs; manifest order
    is preserved and the last entry is treated as the final dense layer.
    """
    if dtype not in _DTYPES:
        raise ValidationError(f"unsupported dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, (layer_name, matrix) in enumerate(layers):
        matrix = as_matrix(matrix)
        file_name = f"layer_{index:03d}.bin"
        (out_dir / file_name).write_bytes(np.ascontiguousarray(matrix, dtype=_DTYPES[dtype]).tobytes())
        entries.append(
            {
                "name": layer_name,
                "rows": int(matrix.shape[0]),
                "cols": int(matrix.shape[1]),
                "dtype": dtype,
                "file": file_name,
                "layout": "row-major",
                "endianness": "little",
            }
        )
    manifest = {"name": name, "layers": entries}
    validate_manifest(manifest)
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out_dir


def load_archive(directory) -> Archive:
    """Read and validate an archive directory."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ValidationError(f"no {MANIFEST_NAME} in {directory}")
    manifest = json.loads(manifest_path.read_text())
    validate_manifest(manifest)
    layers = []
    for entry in manifest["layers"]:
        raw = (directory / entry["file"]).read_bytes()
        flat = np.frombuffer(raw, dtype=_DTYPES[entry["dtype"]])
        expected = entry["rows"] * entry["cols"]
        if flat.size != expected:
            raise ValidationError(
                f"layer {entry['name']!r}: file holds {flat.size} values, manifest says {expected}"
            )
        matrix = flat.astype(float).reshape(entry["rows"], entry["cols"])
        layers.append(ArchiveLayer(name=entry["name"], matrix=matrix, dtype=entry["dtype"]))
    return Archive(name=manifest["name"], layers=tuple(layers))


def write_matrix_csv(path, matrix) -> Path:
    """Headerless CSV writer for small matrices."""
    matrix = as_matrix(matrix)
    path = Path(path)
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")
    return path


def read_matrix_csv(path) -> np.ndarray:
    """Headerless CSV reader; always returns a 2-D float64 matrix."""
    data = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    return as_matrix(data)


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def save_dataset(csv_path, inputs, labels, class_count: int) -> Path:
    """Write ``feature..., label`` rows plus the JSON sidecar."""
    csv_path = Path(csv_path)
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if inputs.ndim != 2 or labels.ndim != 1 or inputs.shape[0] != labels.size:
        raise ValidationError("inputs must be (m, b) with one label per row")
    rows = np.column_stack([inputs, labels.astype(float)])
    np.savetxt(csv_path, rows, delimiter=",", fmt="%.17g")
    sidecar = {"feature_dim": int(inputs.shape[1]), "class_count": int(class_count)}
    _sidecar_path(csv_path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path


def load_dataset(csv_path):
    """Read a dataset CSV and its sidecar; returns an ``fcnn.Dataset``."""
    from .fcnn import Dataset  # local import: fcnn depends on matrices only

    csv_path = Path(csv_path)
    sidecar_path = _sidecar_path(csv_path)
    if not sidecar_path.is_file():
        raise ValidationError(f"missing dataset sidecar {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    for key in ("feature_dim", "class_count"):
        if key not in sidecar:
            raise ValidationError(f"dataset sidecar lacks {key!r}")
    table = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    b = int(sidecar["feature_dim"])
    if table.shape[1] != b + 1:
        raise ValidationError(
            f"dataset rows have {table.shape[1]} columns, sidecar says {b} features + 1 label"
        )
    labels = table[:, -1]
    if not np.allclose(labels, np.round(labels)):
        raise ValidationError("label column must hold integers")
    return Dataset(
        inputs=table[:, :b],
        labels=np.round(labels).astype(int),
        class_count=int(sidecar["class_count"]),
    )
