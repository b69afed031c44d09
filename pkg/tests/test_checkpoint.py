import struct

import numpy as np
import pytest

from treecomp.checkpoint import MAGIC, read_checkpoint, write_checkpoint
from treecomp.errors import DataError, IoError


def test_roundtrip(tmp_path, rng):
    tensors = {"params/a": rng.normal(size=(3, 4)), "params/b": rng.normal(size=5), "x": np.zeros((0, 2))}
    path = tmp_path / "m.ckpt"
    write_checkpoint(path, {"epoch": 3, "name": "é"}, tensors)
    manifest, back = read_checkpoint(path)
    assert manifest["epoch"] == 3 and manifest["name"] == "é"
    assert list(back) == list(tensors)
    for k in tensors:
        assert back[k].shape == tensors[k].shape
        assert np.array_equal(back[k], tensors[k])


def test_layout(tmp_path):
    path = tmp_path / "m.ckpt"
    write_checkpoint(path, {}, {"v": np.array([1.5])})
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    (n,) = struct.unpack("<Q", raw[8:16])
    assert raw[16 + n :] == struct.pack("<d", 1.5)


def test_corrupt(tmp_path):
    path = tmp_path / "m.ckpt"
    path.write_bytes(b"garbage")
    with pytest.raises(DataError):
        read_checkpoint(path)
    write_checkpoint(path, {}, {"v": np.ones(4)})
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(DataError):
        read_checkpoint(path)
    with pytest.raises(IoError):
        read_checkpoint(tmp_path / "missing")
