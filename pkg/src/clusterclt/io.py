"""Field files, CSV tables and JSON manifests.

Field file layout (all little-endian)::

    bytes 0-7    magic  b"CCLTFLD\\0"
    bytes 8-11   format version (uint32)
    bytes 12-27  n1, n2, n3, k (uint32 each)
    bytes 28-31  zero padding
    bytes 32-    float64 values, row-major over (s1, s2, t, k)
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .lattice import Field

MAGIC = b"CCLTFLD\0"
FORMAT_VERSION = 1
HEADER = struct.Struct("<8sIIIII4x")


class FieldFormatError(ValueError):
    pass


def field_bytes(fld: Field) -> bytes:
    vals = np.asarray(fld.values)
    if vals.ndim != 4:
        raise FieldFormatError("field files hold (s1, s2, t, k) arrays")
    n1, n2, n3, k = vals.shape
    head = HEADER.pack(MAGIC, FORMAT_VERSION, n1, n2, n3, k)
    return head + np.ascontiguousarray(vals, dtype="<f8").tobytes()


def write_field(path, fld: Field) -> None:
    Path(path).write_bytes(field_bytes(fld))


def read_field(path) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise FieldFormatError("file shorter than the header")
    magic, version, n1, n2, n3, k = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldFormatError("bad magic; not a field file")
    if version != FORMAT_VERSION:
        raise FieldFormatError(f"unsupported field format version {version}")
    count = n1 * n2 * n3 * k
    if len(raw) != HEADER.size + 8 * count:
        raise FieldFormatError(f"expected {count} values, file size disagrees")
    vals = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(n1, n2, n3, k)
    return Field(vals.astype(float))


def field_csv(fld: Field) -> str:
    """Long-format CSV (1-based coordinates) for small lattices."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    vals = fld.values
    w.writerow(["s1", "s2", "t"] + [f"x{c}" for c in range(vals.shape[-1])])
    for idx in np.ndindex(*vals.shape[:-1]):
        w.writerow([i + 1 for i in idx] + [repr(float(x)) for x in vals[idx]])
    return buf.getvalue()


EXTREMOGRAM_COLUMNS = ["h_s", "h_t", "rho_hat", "block_sum", "delta_term", "R_num", "R_den",
                       "denominator_count"]


def extremogram_csv(est) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXTREMOGRAM_COLUMNS)
    for hs, ht in est.lags:
        w.writerow([hs, ht, repr(float(est.values[hs, ht])), repr(float(est.block_sum[hs, ht])),
                    repr(float(est.delta_term[hs, ht])), repr(float(est.R_numerator[hs, ht])),
                    repr(float(est.R_denominator)), est.denominator_count])
    return buf.getvalue()


def samples_csv(lags, samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate"] + [f"h{hs}_{ht}" for hs, ht in lags])
    for i, row in enumerate(np.asarray(samples)):
        w.writerow([i] + [repr(float(x)) for x in row])
    return buf.getvalue()


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indent, trailing newline, no timestamps."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_plain, allow_nan=True) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")


def write_json(path, obj) -> None:
    write_text(path, dumps(obj))


def manifest(subcommand: str, config: dict, seed: int, rng: str, **extra) -> dict:
    out = {"artifact_version": __version__, "subcommand": subcommand, "config": config,
           "seed": seed, "rng": rng}
    out.update(extra)
    return out
