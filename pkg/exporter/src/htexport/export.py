"""Convert dense checkpoint layers into weight-archive directories.

Reads framework checkpoints (torch ``state_dict`` files, or ``.npz`` numpy
archives) and writes the archive layout consumed by the htcompress tool:
``manifest.json`` plus one raw row-major little-endian binary per layer.
Only two-dimensional floating tensors are exported; anything else matching
the selector (convolution kernels, biases) is skipped with a notice.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import CheckpointError, RankError, SelectionError

__all__ = [
    "MANIFEST_SCHEMA",
    "ExportManifest",
    "load_checkpoint_tensors",
    "export",
]

MANIFEST_SCHEMA = json.loads(
    resources.files("htexport").joinpath("manifest_schema.json").read_text()
)

_DTYPES = {np.dtype(np.float32): ("f32", "<f4"), np.dtype(np.float64): ("f64", "<f8")}


@dataclass(frozen=True)
class ExportManifest:
    """What was written: the manifest dict, its path, and skip notices."""

    model_name: str
    manifest: dict
    path: Path
    skipped: tuple

    @property
    def layer_names(self) -> tuple:
        return tuple(entry["name"] for entry in self.manifest["layers"])


def _tensor_to_array(value) -> np.ndarray | None:
    """Best-effort conversion to a numpy array; None for non-tensor values."""
    if isinstance(value, np.ndarray):
        return value
    detach = getattr(value, "detach", None)
    if detach is not None:  # torch tensor without importing torch here
        try:
            return detach().cpu().numpy()
        except (RuntimeError, TypeError):
            # non-numpy-convertible dtypes (bfloat16): go through float32
            return detach().cpu().float().numpy()
    return None


def load_checkpoint_tensors(checkpoint_path) -> dict:
    """Name -> array for every tensor-like entry of the checkpoint.

    ``.npz`` archives load directly; anything else is handed to
    ``torch.load`` (a top-level ``state_dict`` key is unwrapped).
    """
    path = Path(checkpoint_path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    if path.suffix == ".npz":
        with np.load(path) as payload:
            return {name: np.asarray(payload[name]) for name in payload.files}
    try:
        import torch
    except ImportError as exc:
        raise CheckpointError(
            "reading non-npz checkpoints requires torch; install htexport[torch]"
        ) from exc
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"could not read checkpoint {path}: {exc}") from exc
    if isinstance(payload, dict) and isinstance(payload.get("state_dict"), dict):
        payload = payload["state_dict"]
    if not isinstance(payload, dict):
        raise CheckpointError(f"checkpoint {path} does not hold a tensor mapping")
    tensors = {}
    for name, value in payload.items():
        array = _tensor_to_array(value)
        if array is not None:
            tensors[name] = array
    if not tensors:
        raise CheckpointError(f"checkpoint {path} holds no tensors")
    return tensors


def _coerce_float(array: np.ndarray) -> np.ndarray | None:
    """Floating tensors only; sub-f32 precisions widen exactly to f32."""
    if array.dtype in _DTYPES:
        return array
    if array.dtype.kind == "f":  # float16 and friends
        return array.astype(np.float32)
    return None


def export(checkpoint_path, layer_selector: str, out_dir) -> ExportManifest:
    """Write every selected two-dimensional floating tensor as an archive layer.

    ``layer_selector`` is a glob over tensor names.  Values are bit-exact at
    the written dtype (f32 for float32 inputs, f64 for float64).  Raises
    ``SelectionError`` when nothing matches and ``RankError`` when matches
    exist but none is a dense (rank-2) weight matrix.
    """
    tensors = load_checkpoint_tensors(checkpoint_path)
    matched = {
        name: array
        for name, array in tensors.items()
        if fnmatch.fnmatchcase(name, layer_selector)
    }
    if not matched:
        raise SelectionError(
            f"selector {layer_selector!r} matched none of {len(tensors)} tensors"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    skipped = []
    index = 0
    for name, array in matched.items():
        coerced = _coerce_float(array)
        if coerced is None:
            skipped.append(f"{name}: non-floating dtype {array.dtype}, skipped")
            continue
        if coerced.ndim != 2:
            skipped.append(f"{name}: rank {coerced.ndim} tensor, skipped (dense layers only)")
            continue
        dtype_tag, wire = _DTYPES[coerced.dtype]
        file_name = f"layer_{index:03d}.bin"
        (out_dir / file_name).write_bytes(
            np.ascontiguousarray(coerced, dtype=wire).tobytes()
        )
        entries.append(
            {
                "name": name,
                "rows": int(coerced.shape[0]),
                "cols": int(coerced.shape[1]),
                "dtype": dtype_tag,
                "file": file_name,
                "layout": "row-major",
                "endianness": "little",
            }
        )
        index += 1
    if not entries:
        raise RankError(
            f"selector {layer_selector!r} matched only non-dense tensors: "
            + "; ".join(skipped)
        )
    digest = hashlib.sha256(Path(checkpoint_path).read_bytes()).hexdigest()
    manifest = {
        "name": Path(checkpoint_path).stem,
        "source_checkpoint_hash": digest,
        "layers": entries,
    }
    jsonschema.validate(manifest, MANIFEST_SCHEMA)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExportManifest(
        model_name=manifest["name"],
        manifest=manifest,
        path=manifest_path,
        skipped=tuple(skipped),
    )
