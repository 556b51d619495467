"""Bit-exact tensor container (CMTX) and PNG batch ingestion.

CMTX layout: 4-byte magic ``CMTX`` | u32 little-endian header length |
UTF-8 JSON header | raw row-major payload.  The header is written with
fixed key order and no whitespace so identical tensors always serialize
to identical bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    BadMagic,
    DecodeError,
    EmptyDirectory,
    HeaderParse,
    LengthMismatch,
    MixedDimensions,
)

MAGIC = b"CMTX"

_DTYPES = {
    "f32": np.dtype("<f4"),
    "u8": np.dtype("u1"),
}
_DTYPE_NAMES = {v: k for k, v in _DTYPES.items()}


@dataclass
class TensorContainer:
    dtype: str
    shape: tuple
    payload: bytes

    def to_array(self) -> np.ndarray:
        arr = np.frombuffer(self.payload, dtype=_DTYPES[self.dtype])
        return arr.reshape(self.shape).copy()


def container_from_array(arr: np.ndarray) -> TensorContainer:
    if arr.dtype == np.uint8:
        data = np.ascontiguousarray(arr)
        name = "u8"
    else:
        data = np.ascontiguousarray(arr, dtype="<f4")
        name = "f32"
    if data.ndim == 0 or any(s <= 0 for s in data.shape):
        raise LengthMismatch(f"invalid tensor shape {data.shape}")
    return TensorContainer(name, tuple(int(s) for s in data.shape), data.tobytes())


def write_container(container: TensorContainer) -> bytes:
    """Canonical serialization: same tensor -> same bytes."""
    header = '{"dtype":"%s","shape":[%s],"order":"C","endian":"LE"}' % (
        container.dtype,
        ",".join(str(s) for s in container.shape),
    )
    hbytes = header.encode("utf-8")
    return MAGIC + len(hbytes).to_bytes(4, "little") + hbytes + container.payload


def read_container(blob: bytes) -> TensorContainer:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise BadMagic("not a CMTX container")
    hlen = int.from_bytes(blob[4:8], "little")
    if len(blob) < 8 + hlen:
        raise HeaderParse("truncated header")
    try:
        header = json.loads(blob[8 : 8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderParse(f"bad header: {exc}") from exc
    for key in ("dtype", "shape", "order", "endian"):
        if key not in header:
            raise HeaderParse(f"missing header field {key!r}")
    if header["dtype"] not in _DTYPES:
        raise HeaderParse(f"unsupported dtype {header['dtype']!r}")
    if header["order"] != "C" or header["endian"] != "LE":
        raise HeaderParse("only C-order little-endian payloads are supported")
    shape = header["shape"]
    if (
        not isinstance(shape, list)
        or len(shape) == 0
        or any(not isinstance(s, int) or s <= 0 for s in shape)
    ):
        raise HeaderParse(f"bad shape {shape!r}")
    payload = blob[8 + hlen :]
    expected = _DTYPES[header["dtype"]].itemsize * int(np.prod(shape))
    if len(payload) != expected:
        raise LengthMismatch(
            f"payload holds {len(payload)} bytes, shape {shape} needs {expected}"
        )
    return TensorContainer(header["dtype"], tuple(shape), payload)


def save_array(path: str, arr: np.ndarray) -> None:
    blob = write_container(container_from_array(arr))
    with open(path, "wb") as fh:
        fh.write(blob)


def load_array(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return read_container(fh.read()).to_array()


def load_image_batch(directory: str) -> np.ndarray:
    """Read every PNG in `directory` (lexicographic order) into m x C x H x W floats in [0, 1]."""
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".png"))
    if not names:
        raise EmptyDirectory(f"no PNG files in {directory}")
    planes = []
    dims = None
    for name in names:
        path = os.path.join(directory, name)
        try:
            with Image.open(path) as img:
                if img.mode not in ("L", "RGB"):
                    img = img.convert("RGB")
                arr = np.asarray(img, dtype=np.float32) / 255.0
        except (UnidentifiedImageError, OSError) as exc:
            raise DecodeError(f"{name}: {exc}") from exc
        if arr.ndim == 2:
            arr = arr[None]  # grayscale -> 1 x H x W
        else:
            arr = arr.transpose(2, 0, 1)
        if dims is None:
            dims = arr.shape
        elif arr.shape != dims:
            raise MixedDimensions(f"{name} has shape {arr.shape}, expected {dims}")
        planes.append(arr)
    return np.stack(planes)


def save_image(path: str, chw: np.ndarray) -> None:
    """Write one C x H x W float image in [0, 1] as PNG."""
    arr = np.clip(chw, 0.0, 1.0)
    arr = np.round(arr * 255.0).astype(np.uint8)
    if arr.shape[0] == 1:
        img = Image.fromarray(arr[0], mode="L")
    else:
        img = Image.fromarray(arr.transpose(1, 2, 0), mode="RGB")
    img.save(path, format="PNG")
