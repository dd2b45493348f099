"""Checkpoint-to-weight-archive converter for the htcompress toolkit."""

from .errors import CheckpointError, ExportError, RankError, SelectionError
from .export import MANIFEST_SCHEMA, ExportManifest, export, load_checkpoint_tensors

__version__ = "0.1.0"
