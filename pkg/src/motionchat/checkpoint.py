"""Self-describing binary checkpoint format shared by all trainable models.

Layout: magic line, JSON header line (kind, config, extra, tensor directory),
then raw little-endian tensor payloads in directory order.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError

MAGIC = b"MCCKPT v1\n"

_DTYPES = {"<f4": "<f4", "<f8": "<f8", "<i8": "<i8", "<i4": "<i4"}


@dataclass
class Checkpoint:
    kind: str
    config: dict
    tensors: dict[str, np.ndarray]
    extra: dict = field(default_factory=dict)


def save_checkpoint(path, kind: str, config: dict, tensors: dict[str, np.ndarray],
                    extra: dict | None = None):
    """Atomic write (temp file then rename)."""
    path = Path(path)
    directory = []
    payloads = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        dt = arr.dtype.newbyteorder("<").str
        if dt not in _DTYPES:
            arr = arr.astype("<f4")
            dt = "<f4"
        blob = arr.astype(dt, copy=False).tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "dtype": dt,
                          "offset": offset, "nbytes": len(blob)})
        payloads.append(blob)
        offset += len(blob)
    header = json.dumps({"kind": kind, "config": config, "extra": extra or {},
                         "tensors": directory}, sort_keys=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(header.encode() + b"\n")
        for blob in payloads:
            f.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path, expect_kind: str | None = None) -> Checkpoint:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ParseError(f"{path}: bad checkpoint magic", position=0)
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: bad checkpoint header: {e}",
                             position=len(MAGIC)) from e
        base = f.tell()
        blob = f.read()
    tensors = {}
    for td in header["tensors"]:
        start, stop = td["offset"], td["offset"] + td["nbytes"]
        if stop > len(blob):
            raise ParseError(f"{path}: tensor {td['name']!r} overruns file",
                             position=base + start)
        tensors[td["name"]] = np.frombuffer(
            blob[start:stop], dtype=td["dtype"]).reshape(td["shape"]).copy()
    kind = header["kind"]
    if expect_kind is not None and kind != expect_kind:
        raise ParseError(f"{path}: checkpoint kind {kind!r}, expected {expect_kind!r}")
    return Checkpoint(kind=kind, config=header["config"], tensors=tensors,
                      extra=header.get("extra", {}))
