class ExportError(Exception):
    """Base class for exporter failures."""


class CheckpointError(ExportError):
    """Checkpoint file missing, unreadable, or in an unknown format."""


class SelectionError(ExportError):
    """Layer selector matched no tensor at all."""


class RankError(ExportError):
    """Layer selector matched only tensors that are not two-dimensional."""
