"""Named parameter storage and the binary checkpoint container.

Container layout (all integers little-endian)::

    magic      8 bytes   b"ANMTCKPT"
    version    uint32    currently 1
    precision  uint8     4 (float32) or 8 (float64)
    header_len uint32
    header     header_len bytes of UTF-8 JSON (free-form metadata: config, seed, ...)
    count      uint32    number of tensor records
    records    count times, sorted by name:
                 name_len uint16, name (UTF-8)
                 ndim     uint8,  dims (uint32 each)
                 values   prod(dims) raw little-endian floats of the stored precision

The same record format is used for attention dumps, one record per sentence.
"""
from __future__ import annotations

import io
import json
import os
import struct
from collections import OrderedDict
from typing import Iterator, Mapping, Optional

import numpy as np

from .autodiff import Tensor, default_dtype

MAGIC = b"ANMTCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


class ParameterStore:
    """Ordered mapping from dotted parameter names to trainable tensors.

    Iteration order is sorted by name, so it does not depend on construction
    order.
    """

    def __init__(self, tensors: Optional[Mapping[str, Tensor]] = None):
        self._tensors: dict[str, Tensor] = {}
        for name, t in (tensors or {}).items():
            self.add(name, t)

    def add(self, name: str, value) -> Tensor:
        if name in self._tensors:
            raise KeyError(f"duplicate parameter name {name!r}")
        t = value if isinstance(value, Tensor) else Tensor(np.asarray(value))
        t.requires_grad = True
        t.name = name
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tensors))

    def items(self):
        return [(k, self._tensors[k]) for k in self]

    def names(self) -> list[str]:
        return list(self)

    def zero_grad(self) -> None:
        for t in self._tensors.values():
            t.grad = None

    def grads(self) -> "OrderedDict[str, np.ndarray]":
        """Gradients by name; parameters the loss never reached get zeros."""
        return OrderedDict((k, t.grad if t.grad is not None else np.zeros_like(t.data))
                           for k, t in self.items())

    def arrays(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, t.data) for k, t in self.items())

    def copy(self) -> "ParameterStore":
        return ParameterStore({k: Tensor(t.data.copy()) for k, t in self.items()})

    def astype(self, dtype) -> "ParameterStore":
        return ParameterStore({k: Tensor(t.data.astype(dtype)) for k, t in self.items()})

    def num_values(self) -> int:
        return sum(t.data.size for t in self._tensors.values())

    def subset(self, prefix: str) -> "ParameterStore":
        return ParameterStore({k: t for k, t in self.items() if k.startswith(prefix)})


class Initializer:
    """Seeded Glorot-uniform weights, zero biases, unit gains."""

    def __init__(self, seed: int, dtype=None):
        self.rng = np.random.default_rng(seed)
        self.dtype = np.dtype(dtype or default_dtype())

    def glorot(self, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
        s = np.sqrt(6.0 / (fan_in + fan_out))
        shape = shape or (fan_in, fan_out)
        return self.rng.uniform(-s, s, size=shape).astype(self.dtype)

    def uniform(self, scale: float, shape) -> np.ndarray:
        return self.rng.uniform(-scale, scale, size=shape).astype(self.dtype)

    def zeros(self, *shape) -> np.ndarray:
        return np.zeros(shape, dtype=self.dtype)

    def ones(self, *shape) -> np.ndarray:
        return np.ones(shape, dtype=self.dtype)


# ---------------------------------------------------------------- container IO

def _precision_of(arrays: Mapping[str, np.ndarray]) -> int:
    kinds = {a.dtype.itemsize for a in arrays.values()} or {4}
    if len(kinds) != 1 or kinds - {4, 8}:
        raise CheckpointError(f"mixed or unsupported precisions: {sorted(kinds)}")
    return kinds.pop()


def dumps(arrays: Mapping[str, np.ndarray], header: Optional[dict] = None) -> bytes:
    arrays = {k: np.asarray(v) for k, v in arrays.items()}
    prec = _precision_of(arrays)
    dtype = np.dtype("<f4" if prec == 4 else "<f8")
    head = json.dumps(header or {}, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IBI", FORMAT_VERSION, prec, len(head)))
    buf.write(head)
    buf.write(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        a = arrays[name]
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<B", a.ndim))
        buf.write(struct.pack(f"<{a.ndim}I", *a.shape))
        buf.write(np.ascontiguousarray(a, dtype=dtype).tobytes())
    return buf.getvalue()


def loads(blob: bytes) -> tuple[dict, "OrderedDict[str, np.ndarray]"]:
    try:
        return _loads(memoryview(blob))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"corrupt or truncated checkpoint: {exc}") from exc


def _loads(view: memoryview) -> tuple[dict, "OrderedDict[str, np.ndarray]"]:
    if bytes(view[:8]) != MAGIC:
        raise CheckpointError("not a checkpoint container (bad magic bytes)")
    version, prec, hlen = struct.unpack_from("<IBI", view, 8)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported container version {version}")
    if prec not in (4, 8):
        raise CheckpointError(f"unsupported precision tag {prec}")
    dtype = np.dtype("<f4" if prec == 4 else "<f8")
    pos = 8 + struct.calcsize("<IBI")
    header = json.loads(bytes(view[pos:pos + hlen]).decode("utf-8"))
    pos += hlen
    (count,) = struct.unpack_from("<I", view, pos)
    pos += 4
    out: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", view, pos)
        pos += 2
        name = bytes(view[pos:pos + nlen]).decode("utf-8")
        pos += nlen
        (ndim,) = struct.unpack_from("<B", view, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", view, pos)
        pos += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        out[name] = np.frombuffer(view, dtype=dtype, count=n, offset=pos).reshape(shape).astype(dtype.newbyteorder("="))
        pos += n * prec
    if pos != len(view):
        raise CheckpointError("trailing bytes after last record")
    return header, out


def save(path: str, arrays: Mapping[str, np.ndarray], header: Optional[dict] = None) -> None:
    blob = dumps(arrays, header)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load(path: str) -> tuple[dict, "OrderedDict[str, np.ndarray]"]:
    with open(path, "rb") as fh:
        return loads(fh.read())


def store_from_arrays(arrays: Mapping[str, np.ndarray]) -> ParameterStore:
    return ParameterStore({k: Tensor(np.array(v)) for k, v in arrays.items()})
