"""Minimal binary netpbm (P5/P6) reader and writer.

Shared by the image writer and the mask interchange; kept to maxval 255,
which is the only depth the pipeline emits or accepts.
"""
from __future__ import annotations

import numpy as np

from .errors import ImageFormatError


def _read_header(data: bytes, magic: bytes, path: str) -> tuple[int, int, int]:
    """Parse `<magic> W H maxval` allowing comments, return (W, H, offset)."""
    if not data.startswith(magic):
        raise ImageFormatError(f"{path}: bad magic, expected {magic.decode()}")
    pos = len(magic)
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise ImageFormatError(f"{path}: truncated header")
        c = data[pos : pos + 1]
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            token = data[pos:end]
            if not token.isdigit():
                raise ImageFormatError(f"{path}: non-numeric header field {token!r}")
            fields.append(int(token))
            pos = end
    pos += 1  # single whitespace byte after maxval, then raster
    width, height, maxval = fields
    if maxval != 255:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval}, expected 255")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    return width, height, pos


def read_pgm(path: str) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) into a (H, W) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, offset = _read_header(data, b"P5", str(path))
    raster = data[offset : offset + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(f"{path}: raster size mismatch, "
                               f"expected {width * height} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width)


def write_pgm(path: str, pixels: np.ndarray) -> None:
    """Write a (H, W) uint8 array as binary PGM (P5, maxval 255)."""
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def read_ppm(path: str) -> np.ndarray:
    """Read a binary PPM (P6, maxval 255) into a (H, W, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    width, height, offset = _read_header(data, b"P6", str(path))
    raster = data[offset : offset + width * height * 3]
    if len(raster) != width * height * 3:
        raise ImageFormatError(f"{path}: raster size mismatch, "
                               f"expected {width * height * 3} bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path: str, pixels: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as binary PPM (P6, maxval 255)."""
    height, width, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())
