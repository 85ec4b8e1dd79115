"""JSON and CSV emission shared by the CLI and the verification suites."""

import json
import math

import numpy as np


def jsonable(obj):
    """Recursively convert to JSON-safe values; infinities become ``"inf"``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def csv_text(rows):
    """Join pre-rendered CSV lines; the first line must be the header."""
    return "\n".join(rows) + "\n"
