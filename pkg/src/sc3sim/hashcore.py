"""Homomorphic hash h(a) = g**(a mod q) mod r over an order-q subgroup of F_r*."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from sympy import isprime

DEFAULT_Q_BITS = 31
DEFAULT_R_BITS = 62


class SearchExhausted(RuntimeError):
    """No valid (q, r, b) triple was found within the iteration budget."""


@dataclass(frozen=True)
class HashParams:
    q: int
    r: int
    g: int
    b: int

    def __post_init__(self):
        if (self.r - 1) % self.q:
            raise ValueError(f"q={self.q} does not divide r-1={self.r - 1}")
        if not 2 <= self.g < self.r or pow(self.g, self.q, self.r) != 1:
            raise ValueError(f"g={self.g} does not generate an order-q subgroup mod r={self.r}")

    @classmethod
    def from_qrb(cls, q: int, r: int, b: int) -> "HashParams":
        """Build params from explicit q, r and seed base b (g = b**((r-1)/q) mod r)."""
        if not (isprime(q) and isprime(r)):
            raise ValueError("q and r must be prime")
        if (r - 1) % q:
            raise ValueError(f"q={q} does not divide r-1={r - 1}")
        g = pow(b, (r - 1) // q, r)
        if g == 1:
            raise ValueError(f"b={b} yields the trivial generator")
        return cls(q=q, r=r, g=g, b=b)

    @property
    def q_bits(self) -> int:
        return self.q.bit_length()

    @property
    def r_bits(self) -> int:
        return self.r.bit_length()


def _random_prime(bits: int, rng: random.Random, budget: int) -> int:
    lo, hi = 1 << (bits - 1), (1 << bits) - 1
    for _ in range(budget):
        cand = rng.randint(lo, hi)
        if isprime(cand):
            return cand
    raise SearchExhausted(f"no {bits}-bit prime found in {budget} draws")


def gen_params(q_bits: int = DEFAULT_Q_BITS, r_bits: int = DEFAULT_R_BITS, seed: int = 0,
               budget: int = 100_000) -> HashParams:
    """Sample hash parameters: a random q_bits-bit prime q, then a prime r = k*q + 1.

    r has exactly r_bits bits. Deterministic for a fixed seed. Raises
    SearchExhausted when the bit sizes leave no room for a valid r.
    """
    if not r_bits > q_bits >= 2:
        raise ValueError("need r_bits > q_bits >= 2")
    rng = random.Random(seed)
    r_lo, r_hi = 1 << (r_bits - 1), (1 << r_bits) - 1
    for _ in range(budget):
        q = _random_prime(q_bits, rng, budget)
        k_lo = -(-(r_lo - 1) // q)
        k_hi = (r_hi - 1) // q
        if k_lo > k_hi:
            continue
        for _ in range(max(64, 4 * r_bits)):
            k = rng.randint(k_lo, k_hi)
            r = k * q + 1
            if isprime(r):
                break
        else:
            continue
        for _ in range(64):
            b = rng.randint(2, r - 1)
            g = pow(b, (r - 1) // q, r)
            if g != 1:
                return HashParams(q=q, r=r, g=g, b=b)
    raise SearchExhausted(f"no parameters for q_bits={q_bits}, r_bits={r_bits} in {budget} tries")


def params_for_q(q: int, r_bits: int | None = None, seed: int = 0) -> HashParams:
    """Hash parameters around a fixed prime q (used for small-q experiments)."""
    if not isprime(q):
        raise ValueError(f"q={q} is not prime")
    rng = random.Random(seed)
    if r_bits is None:
        r_bits = max(2 * q.bit_length(), q.bit_length() + 2)
    r_lo, r_hi = 1 << (r_bits - 1), (1 << r_bits) - 1
    k_lo, k_hi = max(1, -(-(r_lo - 1) // q)), (r_hi - 1) // q
    if k_lo > k_hi:
        raise SearchExhausted(f"no {r_bits}-bit r with q | r-1 for q={q}")
    for _ in range(100_000):
        r = rng.randint(k_lo, k_hi) * q + 1
        if isprime(r):
            break
    else:
        raise SearchExhausted(f"no prime r found for q={q}")
    while True:
        b = rng.randint(2, r - 1)
        if pow(b, (r - 1) // q, r) != 1:
            return HashParams.from_qrb(q, r, b)


def hash_value(a: int, params: HashParams) -> int:
    """Digest of an integer of any sign: g**(a mod q) mod r."""
    return int(gmpy2.powmod(params.g, int(a) % params.q, params.r))


def hash_combine(digests: Sequence[int], exponents: Sequence[int], params: HashParams) -> int:
    """Product of d_j**(e_j mod q) mod r; equals the digest of sum(e_j * a_j)."""
    if len(digests) != len(exponents):
        raise ValueError(f"length mismatch: {len(digests)} digests, {len(exponents)} exponents")
    if not digests:
        raise ValueError("need at least one digest")
    q, r = params.q, params.r
    if isinstance(exponents, np.ndarray):
        exponents = exponents.tolist()
    acc = gmpy2.mpz(1)
    for d, e in zip(digests, exponents):
        e %= q
        if e:
            acc = acc * gmpy2.powmod(d, e, r) % r
    return int(acc)


def hash_vector(values: Sequence[int], params: HashParams) -> list[int]:
    """Digest of every entry, e.g. the master's h(x_j) table."""
    return [hash_value(int(v), params) for v in values]
