"""Malicious-worker corruption models.

Offsets are added to computed results mod q. Structured patterns share one
offset magnitude delta per call; the Bernoulli patterns decide per packet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("none", "sym-general", "triple", "random", "bernoulli-sym", "paired")


class PatternInvalid(ValueError):
    pass


@dataclass(frozen=True)
class AttackPattern:
    """What a malicious worker does to its results.

    kind:
      none           results untouched
      sym-general    +delta on n_corrupt/2 random positions, -delta on another n_corrupt/2
      triple         +delta, +delta, -2*delta on three random positions
      random         each result independently gets a fresh nonzero offset w.p. rho_c
      bernoulli-sym  each result gets +delta or -delta (fair sign, one delta per worker) w.p. rho_c
      paired         corruptions come in consecutive (+delta, -delta) pairs, rho_c of results overall
    """

    kind: str = "none"
    n_corrupt: int = 2
    rho_c: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PatternInvalid(f"unknown attack pattern {self.kind!r}")
        if not 0.0 <= self.rho_c <= 1.0:
            raise PatternInvalid(f"rho_c={self.rho_c} outside [0, 1]")
        if self.kind == "sym-general" and (self.n_corrupt < 2 or self.n_corrupt % 2):
            raise PatternInvalid(f"symmetric attack needs an even count >= 2, got {self.n_corrupt}")

    def check_batch(self, size: int) -> None:
        need = {"sym-general": self.n_corrupt, "triple": 3}.get(self.kind, 0)
        if need > size:
            raise PatternInvalid(f"{self.kind} needs {need} packets, batch has {size}")


def symmetric_offsets(n: int, delta: int, q: int) -> np.ndarray:
    """n/2 copies of delta followed by n/2 copies of -delta, as residues."""
    half = n // 2
    return np.array([delta % q] * half + [(-delta) % q] * half, dtype=np.int64)


def corrupt_batch(values, pattern: AttackPattern, q: int, rng: np.random.Generator,
                  delta: int | None = None) -> tuple[np.ndarray, set[int]]:
    """Apply `pattern` to a batch of results; return (new values, corrupted positions).

    For the structured patterns `delta` can be pinned; otherwise it is drawn
    uniformly from [1, q-1].
    """
    values = np.mod(np.asarray(values, dtype=np.int64), q)
    z = values.shape[0]
    pattern.check_batch(z)
    offsets = np.zeros(z, dtype=np.int64)
    if pattern.kind == "none":
        return values, set()
    if delta is None:
        delta = int(rng.integers(1, q))
    if pattern.kind == "sym-general":
        pos = rng.choice(z, size=pattern.n_corrupt, replace=False)
        offsets[pos] = symmetric_offsets(pattern.n_corrupt, delta, q)
    elif pattern.kind == "triple":
        pos = rng.choice(z, size=3, replace=False)
        offsets[pos] = [delta % q, delta % q, (-2 * delta) % q]
    else:
        hit = rng.random(z) < pattern.rho_c
        k = int(hit.sum())
        if pattern.kind == "random":
            offsets[hit] = rng.integers(1, q, size=k)
        else:
            signs = rng.integers(0, 2, size=k)
            offsets[hit] = np.where(signs == 1, delta % q, (-delta) % q)
    corrupted = {int(i) for i in np.flatnonzero(offsets % q)}
    return (values + offsets) % q, corrupted


class WorkerAdversary:
    """Per-result corruption inside a simulated malicious worker.

    Decisions are taken when a result is produced, never retroactively; the
    batch patterns make no sense one packet at a time, so only "none",
    "random", "bernoulli-sym" and "paired" are accepted here.
    """

    def __init__(self, pattern: AttackPattern, q: int, rng: np.random.Generator):
        if pattern.kind not in ("none", "random", "bernoulli-sym", "paired"):
            raise PatternInvalid(f"{pattern.kind!r} cannot be applied per packet")
        self.pattern = pattern
        self.q = q
        self.rng = rng
        self.delta = int(rng.integers(1, q))
        self._owe = False
        # pair starts at rate s give a corrupted fraction 2s / (1 + s) = rho_c
        self._start = pattern.rho_c / (2.0 - pattern.rho_c) if pattern.rho_c < 1 else 1.0

    @property
    def active(self) -> bool:
        """Whether this worker ever corrupts anything."""
        return self.pattern.kind != "none" and self.pattern.rho_c > 0.0

    def apply(self, value: int) -> tuple[int, bool]:
        p = self.pattern
        if p.kind == "paired":
            if self._owe:
                self._owe = False
                return (value - self.delta) % self.q, True
            if p.rho_c > 0.0 and self.rng.random() < self._start:
                self._owe = True
                return (value + self.delta) % self.q, True
            return value, False
        if p.kind == "none" or p.rho_c == 0.0 or self.rng.random() >= p.rho_c:
            return value, False
        if p.kind == "random":
            off = int(self.rng.integers(1, self.q))
        else:
            off = self.delta if self.rng.random() < 0.5 else self.q - self.delta
        return (value + off) % self.q, True
