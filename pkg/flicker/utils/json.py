#!/usr/bin/env python
"""JSON utilities"""

import dataclasses
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional

import numpy as np

from flicker.utils.typing import PathLike


def encode_float(value: float) -> Any:
    """Map non-finite floats onto strings, JSON has no literal for them"""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def to_jsonable(obj: Any) -> Any:
    """Recursively convert reports into plain JSON types.

    ``json.JSONEncoder.default`` is never consulted for builtin floats, so
    infinities have to be rewritten before encoding rather than inside it.
    """
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if hasattr(obj, "_asdict"):
        return to_jsonable(obj._asdict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(value) for value in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return encode_float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


class FlickerEncoder(json.JSONEncoder):
    """Custom JSON encoder.

    Handles numpy scalars and arrays, enums and dataclasses.
    """

    def default(self, obj):  # pylint: disable=E0202
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return encode_float(obj)
        elif isinstance(obj, np.ndarray):
            return to_jsonable(obj)
        elif isinstance(obj, Enum):
            return obj.value
        elif dataclasses.is_dataclass(obj):
            return to_jsonable(obj)
        else:
            return super().default(obj)


def dumps(obj: Any) -> str:
    """Serialise deterministically: fixed indentation, no NaN literals, trailing newline"""
    return (
        json.dumps(to_jsonable(obj), cls=FlickerEncoder, indent=2, allow_nan=False)
        + "\n"
    )


def dump_json(obj: Any, path: Optional[PathLike] = None) -> str:
    """Write ``obj`` as JSON to ``path`` (or just return the text when ``path`` is None)"""
    text = dumps(obj)
    if path is not None:
        Path(path).write_text(text)
    return text
