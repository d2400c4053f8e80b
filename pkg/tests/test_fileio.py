import struct

import numpy as np
import pytest

from brcd import fileio
from brcd.codes import CodeMatrix
from brcd.errors import FormatError

from conftest import random_pm1


def test_codes_layout(tmp_path):
    cm = CodeMatrix.from_pm1([[1, -1, -1, -1, -1, -1, -1, -1, 1, -1], [-1] * 10])
    path = tmp_path / "c.cod"
    fileio.write_codes(path, cm)
    raw = path.read_bytes()
    assert raw[:8] == b"BRCDCOD1"
    assert struct.unpack("<II", raw[8:16]) == (2, 10)
    assert raw[16:] == bytes([0b00000001, 0b00000001, 0, 0])


@pytest.mark.parametrize("b", [1, 8, 13, 64, 257])
def test_codes_round_trip(tmp_path, rng, b):
    cm = CodeMatrix.from_pm1(random_pm1(rng, 17, b))
    fileio.write_codes(tmp_path / "c.cod", cm)
    assert fileio.read_codes(tmp_path / "c.cod") == cm


def test_codes_id_offset(tmp_path, rng):
    cm = CodeMatrix.from_pm1(random_pm1(rng, 3, 9))
    fileio.write_codes(tmp_path / "c.cod", cm)
    assert fileio.read_codes(tmp_path / "c.cod", id_offset=100).ids.tolist() == [100, 101, 102]


def test_embeddings_round_trip(tmp_path, rng):
    x = rng.normal(size=(6, 5)).astype(np.float32)
    fileio.write_embeddings(tmp_path / "e.emb", x)
    raw = (tmp_path / "e.emb").read_bytes()
    assert raw[:8] == b"BRCDEMB1" and struct.unpack("<II", raw[8:16]) == (6, 5)
    assert struct.unpack("<f", raw[16:20])[0] == x[0, 0]
    assert np.array_equal(fileio.read_embeddings(tmp_path / "e.emb"), x)


def test_labels_round_trip(tmp_path):
    fileio.write_labels(tmp_path / "l.lab", [3, 0, 7])
    raw = (tmp_path / "l.lab").read_bytes()
    assert raw == b"BRCDLAB1" + struct.pack("<IIII", 3, 3, 0, 7)
    assert fileio.read_labels(tmp_path / "l.lab").tolist() == [3, 0, 7]


def test_bad_magic(tmp_path):
    fileio.write_labels(tmp_path / "l.lab", [1])
    with pytest.raises(FormatError, match="bad magic"):
        fileio.read_codes(tmp_path / "l.lab")


def test_truncated(tmp_path, rng):
    fileio.write_codes(tmp_path / "c.cod", CodeMatrix.from_pm1(random_pm1(rng, 4, 16)))
    data = (tmp_path / "c.cod").read_bytes()
    (tmp_path / "c.cod").write_bytes(data[:-1])
    with pytest.raises(FormatError):
        fileio.read_codes(tmp_path / "c.cod")


@pytest.mark.parametrize("arch", ["linear", "mlp"])
def test_student_round_trip(tmp_path, rng, arch):
    params = {"W1": rng.normal(size=(4, 6)), "c1": rng.normal(size=4)}
    if arch == "mlp":
        params.update(W2=rng.normal(size=(3, 4)), c2=rng.normal(size=3))
    fileio.write_student(tmp_path / "s.stu", arch, params)
    assert (tmp_path / "s.stu").read_bytes()[:8] == b"BRCDSTU1"
    got_arch, got = fileio.read_student(tmp_path / "s.stu")
    assert got_arch == arch
    for k, v in params.items():
        np.testing.assert_array_equal(got[k], v.astype(np.float32))
