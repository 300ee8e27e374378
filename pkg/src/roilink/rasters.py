"""Raster file formats: PFM heatmaps and PGM binary maps.

PFM follows the portable-float-map convention: header ``Pf``, dims line,
scale line (negative scale = little-endian), then float32 rows stored
bottom-to-top. Values are clamped to [0, 1] on load.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import FrameDims
from .saliency import BinaryMap, Heatmap


class RasterFormatError(ValueError):
    pass


def write_pfm(path: str | Path, heatmap: Heatmap) -> None:
    with open(path, "wb") as f:
        f.write(f"Pf\n{heatmap.dims.width} {heatmap.dims.height}\n-1.0\n".encode("ascii"))
        f.write(np.flipud(heatmap.values.astype("<f4")).tobytes())


def read_pfm(path: str | Path) -> Heatmap:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic == b"PF":
            raise RasterFormatError(f"{path}: color PFM not supported, expected grayscale 'Pf'")
        if magic != b"Pf":
            raise RasterFormatError(f"{path}: not a PFM file (magic {magic!r})")
        try:
            width, height = (int(t) for t in f.readline().split())
            scale = float(f.readline().strip())
        except ValueError as exc:
            raise RasterFormatError(f"{path}: malformed PFM header") from exc
        dtype = "<f4" if scale < 0 else ">f4"
        data = f.read(4 * width * height)
        if len(data) != 4 * width * height:
            raise RasterFormatError(f"{path}: truncated PFM payload")
    values = np.frombuffer(data, dtype=dtype).reshape(height, width).astype(np.float32)
    values = np.clip(np.nan_to_num(np.flipud(values), nan=0.0), 0.0, 1.0)
    return Heatmap(FrameDims(width, height), values)


def write_pgm(path: str | Path, binary: BinaryMap) -> None:
    with open(path, "wb") as f:
        f.write(f"P5\n{binary.dims.width} {binary.dims.height}\n255\n".encode("ascii"))
        f.write((binary.bits * np.uint8(255)).tobytes())


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise RasterFormatError("truncated PGM header")
        tokens.append(data[start:i])
        i += 1  # consume exactly one whitespace byte after the token
    return tokens, i


def read_pgm(path: str | Path) -> BinaryMap:
    """Read a PGM as a binary map.

    With maxval 1 any nonzero pixel reads as 1; with larger maxvals a pixel
    reads as 1 iff value >= (maxval + 1) // 2 (so >= 128 for maxval 255).
    """
    data = Path(path).read_bytes()
    try:
        (magic, w_tok, h_tok, max_tok), offset = _pgm_tokens(data, 4)
    except RasterFormatError as exc:
        raise RasterFormatError(f"{path}: {exc}") from None
    if magic not in (b"P2", b"P5"):
        raise RasterFormatError(f"{path}: not a PGM file (magic {magic!r})")
    width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    if maxval < 1 or maxval > 255:
        raise RasterFormatError(f"{path}: unsupported PGM maxval {maxval}")
    if magic == b"P5":
        raw = data[offset : offset + width * height]
        if len(raw) != width * height:
            raise RasterFormatError(f"{path}: truncated PGM payload")
        values = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    else:
        fields = data[offset:].split()
        if len(fields) < width * height:
            raise RasterFormatError(f"{path}: truncated PGM payload")
        values = np.array([int(t) for t in fields[: width * height]], dtype=np.uint8)
        values = values.reshape(height, width)
    cut = 1 if maxval == 1 else (maxval + 1) // 2
    return BinaryMap(FrameDims(width, height), (values >= cut).astype(np.uint8))
