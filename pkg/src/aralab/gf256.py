"""Arithmetic over GF(2^8) with the 0x11D reduction polynomial.

Addition is XOR; multiplication runs through log/antilog tables built
once at import, plus a dense 256x256 product table so vector-scalar
products reduce to a single fancy-index. Includes incremental Gaussian
elimination primitives used by the coded-transport decoder.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "GF_POLY",
    "gf_mul",
    "gf_inv",
    "gf_mul_vec",
    "gf_rank",
    "random_full_rank_probability",
]

GF_POLY = 0x11D

_EXP = np.zeros(512, dtype=np.uint8)
_LOG = np.zeros(256, dtype=np.int32)


def _build_tables() -> None:
    x = 1
    for i in range(255):
        _EXP[i] = x
        _LOG[x] = i
        x <<= 1
        if x & 0x100:
            x ^= GF_POLY
    _EXP[255:510] = _EXP[0:255]
    _LOG[0] = -1  # sentinel, never indexed on the multiply path


_build_tables()

# Dense product table: MUL[a, b] = a * b in GF(256).
_la = _LOG[:, None]
_lb = _LOG[None, :]
MUL = _EXP[(_la + _lb) % 255].astype(np.uint8)
MUL[0, :] = 0
MUL[:, 0] = 0
del _la, _lb


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return int(_EXP[255 - _LOG[a]])


def gf_mul_vec(vec: np.ndarray, scalar: int) -> np.ndarray:
    """Elementwise scalar product of a uint8 vector."""
    return MUL[scalar][vec]


def gf_rank(matrix: np.ndarray) -> int:
    """Rank of a uint8 matrix over GF(256)."""
    m = np.array(matrix, dtype=np.uint8, copy=True)
    rows, cols = m.shape
    rank = 0
    for col in range(cols):
        pivot = None
        for r in range(rank, rows):
            if m[r, col]:
                pivot = r
                break
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        m[rank] = gf_mul_vec(m[rank], gf_inv(int(m[rank, col])))
        for r in range(rows):
            if r != rank and m[r, col]:
                m[r] ^= gf_mul_vec(m[rank], int(m[r, col]))
        rank += 1
        if rank == rows:
            break
    return rank


def random_full_rank_probability(k: int, q: int = 256) -> float:
    """P(a random k x k matrix over GF(q) is invertible)."""
    p = 1.0
    for i in range(1, k + 1):
        p *= 1.0 - q ** (-i)
    return p
