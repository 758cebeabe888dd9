"""Flat binary container for named float32 tensors.

Layout (little-endian throughout):
    magic   4 bytes  b"IKRW"
    version u32      currently 1
    count   u32      number of tensors
    then per tensor:
        name_len u16, name utf-8 bytes
        rank     u8
        extents  rank * u32
        data     float32, C order

Tensors are kept as float32 in memory so save/load round-trips are bit exact.
"""

import struct

import numpy as np

MAGIC = b"IKRW"
VERSION = 1


class WeightStore:
    """Ordered name -> float32 ndarray mapping with no duplicate names."""

    def __init__(self):
        self._tensors = {}

    def put(self, name, array):
        if not isinstance(name, str) or not name:
            raise ValueError("tensor name must be a non-empty string")
        if len(name.encode("utf-8")) > 0xFFFF:
            raise ValueError("tensor name too long")
        if name in self._tensors:
            raise ValueError(f"duplicate tensor name {name!r}")
        rank = np.asarray(array).ndim
        if rank < 1 or rank > 0xFF:
            raise ValueError(f"unsupported tensor rank {rank}")
        a = np.ascontiguousarray(array, dtype=np.float32)
        self._tensors[name] = a

    def get(self, name):
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"weight tensor {name!r} not found") from None

    def __getitem__(self, name):
        return self.get(name)

    def __contains__(self, name):
        return name in self._tensors

    def __len__(self):
        return len(self._tensors)

    def names(self):
        return list(self._tensors)

    def items(self):
        return self._tensors.items()


def save_weights(path, store):
    """Serialize a WeightStore to `path`."""
    parts = [MAGIC, struct.pack("<II", VERSION, len(store))]
    for name, tensor in store.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(tensor.astype("<f4", copy=False).tobytes(order="C"))
    blob = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(blob)


class WeightFormatError(ValueError):
    """Raised for bad magic, truncation, or duplicate names on load."""


class _Reader:
    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.blob):
            raise WeightFormatError("truncated weight file")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(path):
    """Read a WeightStore from `path`, validating the framing."""
    with open(path, "rb") as fh:
        blob = fh.read()
    rd = _Reader(blob)
    if rd.take(4) != MAGIC:
        raise WeightFormatError("bad magic, not a weight file")
    version, count = rd.unpack("<II")
    if version != VERSION:
        raise WeightFormatError(f"unsupported weight file version {version}")
    store = WeightStore()
    for _ in range(count):
        (name_len,) = rd.unpack("<H")
        name = rd.take(name_len).decode("utf-8")
        (rank,) = rd.unpack("<B")
        if rank < 1:
            raise WeightFormatError(f"tensor {name!r} has rank 0")
        shape = rd.unpack(f"<{rank}I")
        n_items = 1
        for e in shape:
            n_items *= e
        data = np.frombuffer(rd.take(4 * n_items), dtype="<f4")
        if name in store:
            raise WeightFormatError(f"duplicate tensor name {name!r}")
        store.put(name, data.reshape(shape))
    if rd.pos != len(blob):
        raise WeightFormatError("trailing bytes after last tensor")
    return store
