"""Named-tensor weight archives and their on-disk binary format.

Layout (little-endian):

    magic "FLWT" | version u32 = 1 | entry_count u32 |
    per entry: name_len u16 | name UTF-8 | ndim u8 | dims u32 x ndim |
               values f32 x prod(dims)

Loading rejects bad magic, unknown versions, truncated or oversized files,
and non-finite values. Save/load round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidInput

MAGIC = b"FLWT"
VERSION = 1


@dataclass(frozen=True, eq=False)
class WeightEntry:
    name: str
    shape: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if not self.name:
            raise InvalidInput("weight entry name must be non-empty")
        vals = np.ascontiguousarray(self.values, dtype=np.float32)
        if vals.shape != tuple(self.shape):
            vals = vals.reshape(self.shape)
        if not np.all(np.isfinite(vals)):
            raise InvalidInput(f"entry {self.name!r} contains non-finite values")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))

    def __eq__(self, other):
        if not isinstance(other, WeightEntry):
            return NotImplemented
        return (
            self.name == other.name
            and self.shape == other.shape
            and self.values.tobytes() == other.values.tobytes()
        )


@dataclass(frozen=True, eq=False)
class WeightArchive:
    entries: tuple[WeightEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise InvalidInput("duplicate entry names in weight archive")
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, WeightArchive):
            return NotImplemented
        return self.entries == other.entries

    def __len__(self):
        return len(self.entries)

    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {e.name: e.values for e in self.entries}

    def get(self, name: str) -> np.ndarray:
        for e in self.entries:
            if e.name == name:
                return e.values
        raise KeyError(name)


def save_weights(archive: WeightArchive, path) -> None:
    parts = [MAGIC, struct.pack("<II", VERSION, len(archive.entries))]
    for e in archive.entries:
        name_b = e.name.encode("utf-8")
        if len(name_b) > 0xFFFF:
            raise InvalidInput(f"entry name too long: {e.name!r}")
        if len(e.shape) > 0xFF:
            raise InvalidInput(f"entry rank too large: {e.name!r}")
        parts.append(struct.pack("<H", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<B", len(e.shape)))
        parts.append(struct.pack(f"<{len(e.shape)}I", *e.shape))
        parts.append(np.ascontiguousarray(e.values, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated archive: wanted {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(path) -> WeightArchive:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic, not a weight archive")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise FormatError(f"unsupported archive version {version}")
    (count,) = r.unpack("<I")
    entries = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        try:
            name = r.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"entry name is not valid UTF-8: {exc}") from exc
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        n_values = 1
        for d in shape:
            n_values *= d
        raw = r.take(4 * n_values)
        values = np.frombuffer(raw, dtype="<f4").reshape(shape)
        if not np.all(np.isfinite(values)):
            raise FormatError(f"entry {name!r} contains non-finite values")
        try:
            entries.append(WeightEntry(name, shape, values))
        except InvalidInput as exc:
            raise FormatError(str(exc)) from exc
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after last entry")
    try:
        return WeightArchive(tuple(entries))
    except InvalidInput as exc:
        raise FormatError(str(exc)) from exc
