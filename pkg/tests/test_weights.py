import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floodlense.errors import FormatError, InvalidInput
from floodlense.segmentation import UNetConfig, random_weights
from floodlense.weights import (
    WeightArchive,
    WeightEntry,
    load_weights,
    save_weights,
)


def small_archive(seed=0):
    rng = np.random.default_rng(seed)
    entries = [
        WeightEntry("a.weight", (3, 3, 2, 4), rng.normal(size=(3, 3, 2, 4))),
        WeightEntry("a.bias", (4,), rng.normal(size=(4,))),
        WeightEntry("b", (1,), np.array([0.5])),
    ]
    return WeightArchive(tuple(entries))


class TestEntryAndArchive:
    def test_entry_stores_float32_immutable(self):
        e = WeightEntry("w", (2, 2), np.ones((2, 2)))
        assert e.values.dtype == np.float32
        with pytest.raises(ValueError):
            e.values[0, 0] = 2.0

    def test_entry_rejects_non_finite(self):
        with pytest.raises(InvalidInput):
            WeightEntry("w", (2,), np.array([1.0, np.nan]))
        with pytest.raises(InvalidInput):
            WeightEntry("w", (2,), np.array([1.0, np.inf]))

    def test_entry_rejects_empty_name(self):
        with pytest.raises(InvalidInput):
            WeightEntry("", (1,), np.zeros(1))

    def test_archive_rejects_duplicate_names(self):
        e = WeightEntry("w", (1,), np.zeros(1))
        with pytest.raises(InvalidInput):
            WeightArchive((e, e))

    def test_lookup(self):
        arch = small_archive()
        assert arch.names() == ("a.weight", "a.bias", "b")
        assert arch.get("b")[0] == np.float32(0.5)
        with pytest.raises(KeyError):
            arch.get("missing")


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        arch = small_archive()
        path = tmp_path / "w.flwt"
        save_weights(arch, path)
        loaded = load_weights(path)
        assert loaded == arch
        for name in arch.names():
            assert loaded.get(name).tobytes() == arch.get(name).tobytes()

    def test_save_is_deterministic(self, tmp_path):
        arch = small_archive()
        save_weights(arch, tmp_path / "a.flwt")
        save_weights(arch, tmp_path / "b.flwt")
        assert (tmp_path / "a.flwt").read_bytes() == (tmp_path / "b.flwt").read_bytes()

    def test_full_unet_archive(self, tmp_path):
        arch = random_weights(UNetConfig(levels=2, base_channels=2), seed=7)
        path = tmp_path / "u.flwt"
        save_weights(arch, path)
        assert load_weights(path) == arch

    @given(
        n_entries=st.integers(1, 4),
        seed=st.integers(0, 2**16),
    )
    @settings(max_examples=30, deadline=None)
    def test_random_archives_round_trip(self, tmp_path_factory, n_entries, seed):
        rng = np.random.default_rng(seed)
        entries = []
        for i in range(n_entries):
            ndim = int(rng.integers(1, 4))
            shape = tuple(int(d) for d in rng.integers(1, 5, size=ndim))
            entries.append(
                WeightEntry(f"e{i}", shape, rng.normal(size=shape).astype(np.float32))
            )
        arch = WeightArchive(tuple(entries))
        path = tmp_path_factory.mktemp("wt") / "r.flwt"
        save_weights(arch, path)
        assert load_weights(path) == arch


class TestCorruption:
    @pytest.fixture
    def good_bytes(self, tmp_path):
        path = tmp_path / "good.flwt"
        save_weights(small_archive(), path)
        return path.read_bytes()

    def _load(self, tmp_path, data: bytes):
        path = tmp_path / "bad.flwt"
        path.write_bytes(data)
        return load_weights(path)

    def test_bad_magic(self, tmp_path, good_bytes):
        with pytest.raises(FormatError):
            self._load(tmp_path, b"NOPE" + good_bytes[4:])

    def test_unsupported_version(self, tmp_path, good_bytes):
        data = good_bytes[:4] + struct.pack("<I", 99) + good_bytes[8:]
        with pytest.raises(FormatError):
            self._load(tmp_path, data)

    def test_truncated(self, tmp_path, good_bytes):
        with pytest.raises(FormatError):
            self._load(tmp_path, good_bytes[: len(good_bytes) // 2])

    def test_trailing_garbage(self, tmp_path, good_bytes):
        with pytest.raises(FormatError):
            self._load(tmp_path, good_bytes + b"\x00\x01\x02")

    def test_non_finite_payload(self, tmp_path):
        arch = WeightArchive((WeightEntry("w", (1,), np.array([1.0])),))
        path = tmp_path / "w.flwt"
        save_weights(arch, path)
        data = bytearray(path.read_bytes())
        data[-4:] = struct.pack("<f", float("nan"))
        with pytest.raises(FormatError):
            self._load(tmp_path, bytes(data))

    def test_empty_file(self, tmp_path):
        with pytest.raises(FormatError):
            self._load(tmp_path, b"")

    def test_bad_utf8_name(self, tmp_path):
        body = struct.pack("<H", 2) + b"\xff\xfe" + struct.pack("<B", 1)
        body += struct.pack("<I", 1) + struct.pack("<f", 0.0)
        data = b"FLWT" + struct.pack("<II", 1, 1) + body
        with pytest.raises(FormatError):
            self._load(tmp_path, data)
