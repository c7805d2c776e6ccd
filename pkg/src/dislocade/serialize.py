"""Deterministic serialization helpers for run artifacts.

Every float is written with 17 significant digits so that re-running a
configuration reproduces files byte for byte; dictionaries are emitted
with sorted keys for the same reason.  Non-finite numbers are rejected
rather than smuggled through as strings.
"""

import json

import numpy as np

from .errors import InvalidData

__all__ = ["format_float", "canonical_dumps"]


def format_float(x):
    """A float as a 17-significant-digit decimal string."""
    x = float(x)
    if not np.isfinite(x):
        raise InvalidData(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _encode(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        keys = list(obj.keys())
        if any(not isinstance(k, str) for k in keys):
            raise InvalidData("mapping keys must be strings")
        if sorted(keys) != sorted(set(keys)):
            raise InvalidData("duplicate mapping keys")
        for j, k in enumerate(sorted(keys)):
            if j:
                out.append(",")
            out.append(json.dumps(k, ensure_ascii=True))
            out.append(":")
            _encode(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for j, item in enumerate(seq):
            if j:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise InvalidData(f"cannot serialize object of type {type(obj).__name__}")


def canonical_dumps(obj):
    """JSON text with sorted keys and 17-significant-digit floats.

    The output carries no whitespace, so equal inputs produce equal bytes.
    """
    out = []
    _encode(obj, out)
    return "".join(out)
