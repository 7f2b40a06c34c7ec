"""Synthetic orbit-sweep benchmark for aerial person detection."""

import json

from ._core import (
    ConfigError,
    Error,
    GeometryError,
    IoError,
    ParseError,
    SchemaError,
    UnknownFrameError,
    __version__,
    average_precision,
    frame_ids,
    generate,
    iou,
    oracle,
    report,
)
from ._core import evaluate as _evaluate


def evaluate(annotations_path, predictions_path, config_path=None, out_path=None):
    """Evaluate predictions and return the results document as a dict."""
    return json.loads(_evaluate(str(annotations_path), str(predictions_path),
                                None if config_path is None else str(config_path),
                                None if out_path is None else str(out_path)))


__all__ = [
    "ConfigError", "Error", "GeometryError", "IoError", "ParseError", "SchemaError",
    "UnknownFrameError", "__version__", "average_precision", "evaluate", "frame_ids",
    "generate", "iou", "oracle", "report",
]
