"""Raw binary exports with text sidecars.

Every binary artifact is little-endian with an adjacent ``<stem>.txt``
sidecar describing dtype, shape and any extra metadata, so external tools
can consume the files without this package.  Volumes and image slices are
written X-fastest (column-major byte order for arrays indexed [x, y, ...]);
record tables are one fixed-width float32 row per record.
"""

from __future__ import annotations

import os

import numpy as np

_DTYPES = {"float32": "<f4", "uint8": "u1", "uint16": "<u2"}


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".txt"


def write_sidecar(path: str, fields: dict) -> None:
    lines = [f"{k}: {v}" for k, v in fields.items()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sidecar(path: str) -> dict:
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition(":")
            fields[key.strip()] = value.strip()
    return fields


def write_raw(path: str, array: np.ndarray, **extra) -> None:
    """Write an [x, y, ...] array X-fastest with its sidecar."""
    kind = array.dtype.name
    if kind not in _DTYPES:
        raise ValueError(f"unsupported dtype {array.dtype}")
    data = np.asarray(array, dtype=_DTYPES[kind])
    with open(path, "wb") as fh:
        fh.write(data.tobytes(order="F"))
    fields = {
        "dtype": kind,
        "shape": " ".join(str(s) for s in array.shape),
        "order": "x-fastest",
    }
    fields.update(extra)
    write_sidecar(sidecar_path(path), fields)


def read_raw(path: str):
    """Read a raw array back; returns (array, sidecar fields)."""
    fields = read_sidecar(sidecar_path(path))
    shape = tuple(int(s) for s in fields["shape"].split())
    data = np.fromfile(path, dtype=_DTYPES[fields["dtype"]])
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: size {data.size} does not match shape {shape}")
    return data.reshape(shape, order="F"), fields


def write_records(path: str, table: np.ndarray, columns: list[str], **extra) -> None:
    """Write an (n, k) float32 record table, one row per record."""
    table = np.asarray(table, dtype="<f4")
    if table.ndim != 2 or table.shape[1] != len(columns):
        raise ValueError("table must be (n, k) with one name per column")
    with open(path, "wb") as fh:
        fh.write(table.tobytes(order="C"))
    fields = {
        "dtype": "float32",
        "records": table.shape[0],
        "columns": " ".join(columns),
    }
    fields.update(extra)
    write_sidecar(sidecar_path(path), fields)


def read_records(path: str):
    fields = read_sidecar(sidecar_path(path))
    columns = fields["columns"].split()
    data = np.fromfile(path, dtype="<f4")
    n = int(fields["records"])
    if data.size != n * len(columns):
        raise ValueError(f"{path}: size {data.size} does not match sidecar")
    return data.reshape(n, len(columns)), columns, fields


def write_png16(path: str, image: np.ndarray, lo_pct: float = 1.0, hi_pct: float = 99.0) -> None:
    """16-bit grayscale PNG with percentile windowing.

    The [lo_pct, hi_pct] value range maps to [0, 65535]; a constant image
    maps to all zeros.  Image is indexed [x, y] and written so x runs along
    image width.
    """
    from PIL import Image

    img = np.asarray(image, dtype=float)
    lo = np.percentile(img, lo_pct)
    hi = np.percentile(img, hi_pct)
    if hi <= lo:
        scaled = np.zeros_like(img)
    else:
        scaled = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    data = (scaled * 65535.0 + 0.5).astype(np.uint16)
    # PIL expects [row, col] = [y, x]; uint16 input selects 16-bit grayscale
    Image.fromarray(data.T).save(path)
