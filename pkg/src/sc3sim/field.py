"""Modular linear algebra over a prime field F_q on int64 numpy arrays.

Entries are canonical residues in [0, q). For q <= 2**31 products fit in
int64, and dot products with large coefficients are split into 16-bit limbs
so that partial sums stay below 2**63. Larger moduli fall back to Python
integers in object arrays.
"""

from __future__ import annotations

import numpy as np

_LIMB = 16
_LIMB_MASK = (1 << _LIMB) - 1
_FAST_Q = 1 << 31
_I64 = 1 << 63
# rows per partial sum so that sum(2**16 * 2**31) stays under 2**63
_CHUNK = 1 << 15


def fast_path(q: int) -> bool:
    return q <= _FAST_Q


def as_residues(a, q: int) -> np.ndarray:
    """Reduce an integer array (any sign) to canonical residues mod q."""
    if fast_path(q):
        return np.mod(np.asarray(a, dtype=np.int64), q)
    a = np.asarray(a, dtype=object)
    return np.array([int(v) % q for v in a.ravel()], dtype=object).reshape(a.shape)


def _limb_vecmat(c: np.ndarray, m: np.ndarray, q: int) -> np.ndarray:
    out = np.zeros(m.shape[1], dtype=np.int64)
    for start in range(0, c.shape[0], _CHUNK):
        cc = c[start : start + _CHUNK]
        mm = m[start : start + _CHUNK]
        lo = (cc & _LIMB_MASK) @ mm
        hi = (cc >> _LIMB) @ mm
        out = (out + ((hi % q) << _LIMB) % q + lo % q) % q
    return out


def vecmat(c, m, q: int) -> np.ndarray:
    """Return (c @ m) mod q for a coefficient vector c (any sign) and a (k, n) residue matrix."""
    if not fast_path(q):
        c = np.array([int(v) % q for v in c], dtype=object)
        return np.mod(c @ np.asarray(m, dtype=object), q)
    c = np.asarray(c, dtype=np.int64)
    m = np.asarray(m, dtype=np.int64)
    cmax = int(np.abs(c).max()) if c.size else 0
    if c.shape[0] * cmax * q < _I64:
        # small coefficients (e.g. +-1): the plain product cannot overflow
        return (c @ m) % q
    return _limb_vecmat(c % q, m, q)


def matvec(m, v, q: int) -> np.ndarray:
    """Return (m @ v) mod q."""
    return vecmat(v, np.asarray(m).T, q)


def dot(a, b, q: int) -> int:
    """Return (a . b) mod q as a Python int."""
    return int(vecmat(a, np.asarray(b)[:, None], q)[0])


def inverse(a: int, q: int) -> int:
    return pow(int(a), -1, q)


def uniform_residues(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """n draws uniform on [0, q)."""
    if q < (1 << 62):
        out = rng.integers(0, q, size=n, dtype=np.int64)
        return out if fast_path(q) else out.astype(object)
    # wide moduli: 64 spare bits make the modulo bias negligible
    width = (q.bit_length() + 64 + 7) // 8
    return np.array([int.from_bytes(rng.bytes(width), "little") % q for _ in range(n)], dtype=object)
