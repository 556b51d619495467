import numpy as np
import pytest
from PIL import Image

from comixup import tensorio
from comixup.errors import (
    BadMagic,
    EmptyDirectory,
    HeaderParse,
    LengthMismatch,
    MixedDimensions,
)


def test_minimal_f32_container():
    payload = np.float32([3.25]).tobytes()
    blob = b"CMTX" + (49).to_bytes(4, "little")
    header = b'{"dtype":"f32","shape":[1,1],"order":"C","endian":"LE"}'
    blob = b"CMTX" + len(header).to_bytes(4, "little") + header + payload
    cont = tensorio.read_container(blob)
    assert cont.dtype == "f32"
    assert cont.shape == (1, 1)
    assert cont.to_array()[0, 0] == np.float32(3.25)


def test_length_mismatch():
    header = b'{"dtype":"f32","shape":[2,3],"order":"C","endian":"LE"}'
    blob = b"CMTX" + len(header).to_bytes(4, "little") + header + b"\x00" * 20
    with pytest.raises(LengthMismatch):
        tensorio.read_container(blob)  # 2x3 f32 needs 24 bytes


def test_bad_magic_and_header():
    with pytest.raises(BadMagic):
        tensorio.read_container(b"NOPE" + b"\x00" * 16)
    header = b'{"dtype":"f99","shape":[1],"order":"C","endian":"LE"}'
    with pytest.raises(HeaderParse):
        tensorio.read_container(b"CMTX" + len(header).to_bytes(4, "little") + header)
    garbage = b"not json at all!!"
    with pytest.raises(HeaderParse):
        tensorio.read_container(b"CMTX" + len(garbage).to_bytes(4, "little") + garbage)
    zero_dim = b'{"dtype":"f32","shape":[0,2],"order":"C","endian":"LE"}'
    with pytest.raises(HeaderParse):
        tensorio.read_container(b"CMTX" + len(zero_dim).to_bytes(4, "little") + zero_dim)


def test_round_trip_random_tensors():
    rng = np.random.default_rng(20240301)
    for _ in range(50):
        ndim = rng.integers(1, 5)
        shape = tuple(int(s) for s in rng.integers(1, 6, size=ndim))
        if rng.random() < 0.5:
            arr = rng.standard_normal(shape).astype(np.float32)
        else:
            arr = rng.integers(0, 256, size=shape).astype(np.uint8)
        blob = tensorio.write_container(tensorio.container_from_array(arr))
        cont = tensorio.read_container(blob)
        np.testing.assert_array_equal(cont.to_array(), arr)
        # byte-for-byte write(read(b)) == b
        assert tensorio.write_container(cont) == blob


def test_write_is_canonical():
    arr = np.arange(12, dtype=np.float32).reshape(3, 4)
    one = tensorio.write_container(tensorio.container_from_array(arr))
    two = tensorio.write_container(tensorio.container_from_array(arr.copy()))
    assert one == two


def test_save_load_file(tmp_path):
    arr = np.linspace(0, 1, 24, dtype=np.float32).reshape(2, 3, 4)
    path = tmp_path / "t.cmtx"
    tensorio.save_array(str(path), arr)
    np.testing.assert_array_equal(tensorio.load_array(str(path)), arr)


def _write_png(path, arr_hw3):
    Image.fromarray(arr_hw3, mode="RGB").save(path)


def test_load_image_batch(tmp_path):
    rng = np.random.default_rng(7)
    a = rng.integers(0, 256, size=(8, 8, 3)).astype(np.uint8)
    b = np.zeros((8, 8, 3), dtype=np.uint8)
    _write_png(tmp_path / "b_second.png", a)
    _write_png(tmp_path / "a_first.png", b)
    batch = tensorio.load_image_batch(str(tmp_path))
    assert batch.shape == (2, 3, 8, 8)
    # lexicographic: the all-black image comes first
    np.testing.assert_array_equal(batch[0], np.zeros((3, 8, 8)))
    np.testing.assert_allclose(batch[1], a.transpose(2, 0, 1) / 255.0)


def test_load_image_batch_mixed_dimensions(tmp_path):
    _write_png(tmp_path / "a.png", np.zeros((8, 8, 3), dtype=np.uint8))
    _write_png(tmp_path / "b.png", np.zeros((4, 8, 3), dtype=np.uint8))
    with pytest.raises(MixedDimensions):
        tensorio.load_image_batch(str(tmp_path))


def test_load_image_batch_empty(tmp_path):
    with pytest.raises(EmptyDirectory):
        tensorio.load_image_batch(str(tmp_path))
