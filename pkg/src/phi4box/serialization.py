"""Canonical JSON, a small binary field container, and CSV helpers.

JSON output is byte-stable: keys sorted, floats rendered with 17 significant
digits, no locale dependence.  The binary container stores one float64
array: magic, version, number of dimensions, shape, then raw little-endian
data.
"""

import csv
import json
import struct
import numpy as np

_MAGIC = b"FBOX"
_VERSION = 1


def _canon(obj):
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": _canon(obj.real), "im": _canon(obj.imag)}
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON text (sorted keys, fixed float formatting)."""
    return json.dumps(_canon(obj), sort_keys=True, separators=(",", ":"))


def write_json(path, obj):
    with open(path, "w") as f:
        f.write(canonical_json(obj))
        f.write("\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def write_field(path, array):
    """Write a float64 array to the self-describing binary container."""
    a = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<HH", _VERSION, a.ndim))
        f.write(struct.pack("<" + "Q" * a.ndim, *a.shape))
        f.write(a.tobytes())


def read_field(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError("not a field container")
        version, ndim = struct.unpack("<HH", f.read(4))
        if version != _VERSION:
            raise ValueError(f"unsupported container version {version}")
        shape = struct.unpack("<" + "Q" * ndim, f.read(8 * ndim))
        data = np.frombuffer(f.read(), dtype="<f8")
    return data.reshape(shape)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v
                        for v in row])
