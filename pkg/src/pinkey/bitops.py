"""Small helpers for bit vectors stored as uint8 numpy arrays."""

from __future__ import annotations

import numpy as np


def as_bits(x) -> np.ndarray:
    """Coerce to a flat uint8 array of 0/1 values."""
    arr = np.asarray(x, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit vector contains values other than 0/1")
    return arr


def bits_to_int(bits) -> int:
    """Big-endian bit vector to a Python int (empty vector -> 0)."""
    arr = as_bits(bits)
    value = 0
    for b in arr.tolist():
        value = (value << 1) | b
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Python int to a big-endian bit vector of the given width."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)],
                    dtype=np.uint8)


def bits_to_hex(bits) -> str:
    """Hex encoding of a bit vector, zero-padded on the right to a byte."""
    arr = as_bits(bits)
    if arr.size == 0:
        return ""
    return np.packbits(arr).tobytes().hex()
