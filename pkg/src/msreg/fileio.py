"""File formats for pipeline artifacts.

Disparity travels as PFM (single-channel float32, bottom-up rows,
negative scale = little-endian), the format stereo datasets ship ground
truth in.  Images are 16-bit single-channel PNG, masks 8-bit PNG with
0/255, structured records JSON with sorted keys so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "read_pfm",
    "write_pfm",
    "read_gray16",
    "write_gray16",
    "read_mask",
    "write_mask",
    "read_rgb",
    "read_json",
    "write_json",
]


def read_pfm(path) -> np.ndarray:
    """Read a single-channel PFM file into a float64 (height, width) array."""
    with open(path, "rb") as fh:
        header = fh.readline().rstrip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            channels = 3
        else:
            raise ValueError(f"{path}: not a PFM file (header {header!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().rstrip())
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        data = np.fromfile(fh, dtype=dtype, count=count)
        if data.size != count:
            raise ValueError(f"{path}: truncated PFM payload")
    if channels == 3:
        data = data.reshape(height, width, 3)[:, :, 0]
    else:
        data = data.reshape(height, width)
    # rows are stored bottom-to-top
    return np.flipud(data).astype(np.float64)


def write_pfm(path, data: np.ndarray) -> None:
    """Write a 2-D array as little-endian single-channel PFM."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("PFM writer expects a 2-D array")
    height, width = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        np.flipud(arr).astype("<f4").tofile(fh)


def quantize16(data: np.ndarray) -> np.ndarray:
    """[0, 1] float raster to the uint16 code values a PNG stores."""
    return np.round(np.clip(data, 0.0, 1.0) * 65535.0).astype(np.uint16)


def read_gray16(path) -> np.ndarray:
    """Read a single-channel PNG (8 or 16 bit) as floats in [0, 1]."""
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(img, dtype=np.float64)
            peak = 65535.0
        elif img.mode == "L":
            arr = np.asarray(img, dtype=np.float64)
            peak = 255.0
        else:
            raise ValueError(f"{path}: expected single-channel image, got mode {img.mode}")
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected single-channel image")
    if arr.max(initial=0.0) > peak:
        raise ValueError(f"{path}: sample values exceed the declared bit depth")
    return arr / peak


def write_gray16(path, data: np.ndarray) -> None:
    """Write a [0, 1] float raster as 16-bit single-channel PNG."""
    arr = quantize16(np.asarray(data, dtype=np.float64))
    Image.fromarray(arr).save(path, format="PNG")


def read_mask(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return arr > 127


def write_mask(path, mask: np.ndarray) -> None:
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_rgb(path) -> np.ndarray:
    """Read any Pillow-supported image as an RGB float array in [0, 1]."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
