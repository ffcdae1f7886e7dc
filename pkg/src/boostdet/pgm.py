"""Binary PGM (P5, maxval 255) reading and writing.

The reader is strict: anything off-grammar raises PgmError with the byte
offset where parsing gave up.
"""

from __future__ import annotations

import numpy as np

from .imaging import GrayImage


class PgmError(ValueError):
    """Malformed PGM payload; the message carries the byte offset."""


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmError(f"unexpected end of header at byte {pos}")
    start = pos
    while pos < n and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(data, pos)
    try:
        return int(token), pos
    except ValueError:
        raise PgmError(f"expected integer {what} near byte {pos}, got {token!r}") from None


def parse_pgm(data: bytes) -> GrayImage:
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise PgmError(f"unsupported format {magic!r} at byte 0, only binary P5 is accepted")
    width, pos = _int_token(data, pos, "width")
    height, pos = _int_token(data, pos, "height")
    maxval, pos = _int_token(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PgmError(f"invalid image extents {width}x{height} (header ends at byte {pos})")
    if maxval != 255:
        raise PgmError(f"maxval must be 255, got {maxval} (header ends at byte {pos})")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PgmError(f"expected single whitespace after maxval at byte {pos}")
    pos += 1
    expected = width * height
    payload = data[pos:pos + expected]
    if len(payload) != expected:
        raise PgmError(
            f"truncated pixel payload at byte {pos + len(payload)}: "
            f"expected {expected} bytes, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(width=width, height=height, pixels=pixels.copy())


def load_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return parse_pgm(data)
    except PgmError as exc:
        raise PgmError(f"{path}: {exc}") from None


def save_pgm(img: GrayImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(img.pixels.tobytes())
