"""Rateless (LT-style) coding of matrix rows over F_q and an incremental decoder."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from . import field as ff


class InsufficientRank(ValueError):
    """The received combination vectors do not span all R rows."""


class InconsistentSystem(ValueError):
    """Full rank, but some received value contradicts the others."""


def robust_soliton(k: int, c: float = 0.03, delta: float = 0.5) -> np.ndarray:
    """Robust soliton pmf over degrees 0..k (index 0 carries no mass)."""
    rho = np.zeros(k + 1)
    rho[1] = 1.0 / k
    d = np.arange(2, k + 1)
    rho[2:] = 1.0 / (d * (d - 1.0))
    tau = np.zeros(k + 1)
    spread = c * math.log(k / delta) * math.sqrt(k)
    pivot = int(round(k / spread)) if spread > 0 else k
    pivot = min(max(pivot, 1), k)
    i = np.arange(1, pivot)
    tau[1:pivot] = spread / (i * k)
    tau[pivot] = spread * math.log(spread / delta) / k if spread > delta else 0.0
    mu = rho + np.clip(tau, 0.0, None)
    return mu / mu.sum()


@dataclass(frozen=True)
class DegreeDist:
    """Degree distribution for the encoder.

    kind "robust" is the robust soliton with tuning (c, delta); kind "dense"
    draws every coefficient as an independent fair bit.
    """

    kind: str = "robust"
    c: float = 0.03
    delta: float = 0.5

    def __post_init__(self):
        if self.kind not in ("robust", "dense"):
            raise ValueError(f"unknown degree distribution {self.kind!r}")


@dataclass(frozen=True)
class CodedPacket:
    id: int
    gamma: np.ndarray  # (R,) uint8, 0/1
    payload: np.ndarray  # (C,) int64, residues mod q

    @property
    def degree(self) -> int:
        return int(self.gamma.sum())


def combine_rows(A: np.ndarray, gamma: np.ndarray, q: int) -> np.ndarray:
    """Component-wise (sum_i gamma_i * A_i) mod q."""
    rows = np.flatnonzero(gamma)
    if ff.fast_path(q):
        # each row < 2**31, so up to 2**32 rows can be summed in int64
        return A[rows].sum(axis=0, dtype=np.int64) % q
    return np.mod(A[rows].astype(object).sum(axis=0), q)


class Encoder:
    """Unbounded stream of coded packets for a fixed data matrix."""

    def __init__(self, A: np.ndarray, q: int, rng: np.random.Generator,
                 dist: DegreeDist = DegreeDist()):
        A = np.asarray(A)
        if A.ndim != 2 or A.size == 0:
            raise ValueError("A must be a nonempty 2-D matrix")
        self.A = A
        self.q = q
        self.rng = rng
        self.dist = dist
        self.R = A.shape[0]
        self._pmf = robust_soliton(self.R, dist.c, dist.delta) if dist.kind == "robust" else None
        self._next_id = 0

    def next_gamma(self) -> np.ndarray:
        gamma = np.zeros(self.R, dtype=np.uint8)
        if self._pmf is None:
            while not gamma.any():
                gamma = self.rng.integers(0, 2, self.R, dtype=np.uint8)
            return gamma
        degree = int(self.rng.choice(self.R + 1, p=self._pmf))
        gamma[self.rng.choice(self.R, size=degree, replace=False)] = 1
        return gamma

    def encode_next(self, gamma: np.ndarray | None = None) -> CodedPacket:
        if gamma is None:
            gamma = self.next_gamma()
        gamma = np.asarray(gamma, dtype=np.uint8)
        if gamma.shape != (self.R,) or not gamma.any():
            raise ValueError("gamma must be a nonzero length-R binary vector")
        pkt = CodedPacket(self._next_id, gamma, combine_rows(self.A, gamma, self.q))
        self._next_id += 1
        return pkt


def compute(packet: CodedPacket | np.ndarray, x: np.ndarray, q: int) -> int:
    """Worker-side product of a packet payload with x, mod q."""
    payload = packet.payload if isinstance(packet, CodedPacket) else np.asarray(packet)
    x = np.asarray(x)
    if payload.shape != x.shape:
        raise ValueError(f"dimension mismatch: payload {payload.shape}, x {x.shape}")
    return ff.dot(payload, x, q)


@numba.njit(cache=True)
def _insert_row(basis, pivot_row, pivots, k, row, q):
    """Reduce `row` against the RREF basis and append it if innovative.

    Returns the new pivot column, -1 for a redundant consistent row and -2
    for a redundant row whose value disagrees. Requires q <= 2**31.
    """
    n = row.shape[0]
    R = pivot_row.shape[0]
    for c in range(R):
        if row[c] != 0:
            o = pivot_row[c]
            if o >= 0:
                f = row[c]
                b = basis[o]
                for j in range(n):
                    if b[j] != 0:
                        row[j] = (row[j] - f * b[j]) % q
    p = -1
    for c in range(R):
        if row[c] != 0:
            p = c
            break
    if p < 0:
        return -1 if row[n - 1] == 0 else -2
    a = row[p]
    e = q - 2
    inv = 1
    while e:
        if e & 1:
            inv = inv * a % q
        a = a * a % q
        e >>= 1
    for j in range(n):
        row[j] = row[j] * inv % q
    for i in range(k):
        f = basis[i, p]
        if f != 0:
            for j in range(n):
                if row[j] != 0:
                    basis[i, j] = (basis[i, j] - f * row[j]) % q
    basis[k, :] = row
    pivot_row[p] = k
    pivots[k] = p
    return p


@dataclass
class Decoder:
    """Incremental Gaussian elimination over F_q.

    The basis is kept in reduced row-echelon form with the received value as
    an augmented last column, so each new row costs one sparse reduction plus
    one column clear.
    """

    R: int
    q: int
    basis: np.ndarray = field(init=False)
    pivots: list = field(init=False, default_factory=list)
    received: int = field(init=False, default=0)
    inconsistent: int = field(init=False, default=0)
    full_rank_at: int | None = field(init=False, default=None)

    def __post_init__(self):
        self._jit = ff.fast_path(self.q)
        self.basis = np.zeros((self.R, self.R + 1), dtype=np.int64 if self._jit else object)
        self._pivot_row = np.full(self.R, -1, dtype=np.int64)
        self._pivots = np.zeros(self.R, dtype=np.int64)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def complete(self) -> bool:
        return self.rank == self.R

    def _insert_generic(self, row: np.ndarray) -> int:
        # slow path for q > 2**31, same contract as _insert_row
        q, R, k = self.q, self.R, self.rank
        owners = self._pivot_row[np.flatnonzero(row[:R])]
        owners = owners[owners >= 0]
        if owners.size:
            coef = row[self._pivots[owners]]
            row = (row - ff.vecmat(coef, self.basis[owners], q)) % q
        nz = np.flatnonzero(row[:R])
        if nz.size == 0:
            return -1 if row[R] == 0 else -2
        p = int(nz[0])
        row = row * ff.inverse(row[p], q) % q
        col = self.basis[:k, p]
        hit = np.flatnonzero(col)
        if hit.size:
            self.basis[hit] = (self.basis[hit] - np.outer(col[hit], row)) % q
        self.basis[k] = row
        self._pivot_row[p] = k
        self._pivots[k] = p
        return p

    def add(self, gamma: Sequence[int], value: int) -> bool:
        """Insert one (gamma, value) equation; return True if it raised the rank."""
        gamma = np.asarray(gamma)
        if gamma.shape != (self.R,):
            raise ValueError(f"gamma must have length {self.R}")
        self.received += 1
        row = np.zeros(self.R + 1, dtype=self.basis.dtype)
        row[: self.R] = gamma
        row[self.R] = int(value) % self.q
        if self._jit:
            p = _insert_row(self.basis, self._pivot_row, self._pivots, self.rank, row, self.q)
        else:
            p = self._insert_generic(row)
        if p == -2:
            self.inconsistent += 1
        if p < 0:
            return False
        self.pivots.append(int(p))
        if self.complete and self.full_rank_at is None:
            self.full_rank_at = self.received
        return True

    def solution(self) -> np.ndarray:
        """The unique v with gamma . v = value for every received row."""
        if not self.complete:
            raise InsufficientRank(f"rank {self.rank} < {self.R}")
        if self.inconsistent:
            raise InconsistentSystem(f"{self.inconsistent} received rows contradict the basis")
        out = np.zeros(self.R, dtype=self.basis.dtype)
        out[self._pivots] = self.basis[: self.R, self.R]
        return out


def decode(results: Iterable[tuple[Sequence[int], int]], R: int, q: int) -> np.ndarray:
    """Solve for the R unknowns from (gamma, value) pairs over F_q."""
    dec = Decoder(R, q)
    for gamma, value in results:
        dec.add(gamma, value)
    return dec.solution()


def realized_overhead(gammas: Iterable[np.ndarray], R: int, q: int) -> float:
    """(packets needed to reach rank R) / R - 1 for a stream of gammas."""
    dec = Decoder(R, q)
    for gamma in gammas:
        dec.add(gamma, 0)
        if dec.complete:
            return dec.received / R - 1.0
    raise InsufficientRank(f"stream ended at rank {dec.rank} < {R}")
