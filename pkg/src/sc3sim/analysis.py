"""Closed-form detection probabilities and completion-delay bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom


class NoHonestWorkers(ValueError):
    pass


def lw_miss_symmetric(n_corrupt: float) -> float:
    """Chance that LW misses a balanced +-delta attack on n_corrupt results.

    C(n, n/2) / 2**n, continued to real n through the log-gamma function.
    """
    if n_corrupt < 0:
        raise ValueError("corrupted count must be nonnegative")
    n = float(n_corrupt)
    return math.exp(gammaln(n + 1) - n * math.log(2.0) - 2.0 * gammaln(n / 2 + 1))


def p_detect_lw_symmetric(n_corrupt: int) -> float:
    if n_corrupt < 2 or n_corrupt % 2:
        raise ValueError(f"symmetric attack needs an even count >= 2, got {n_corrupt}")
    return 1.0 - lw_miss_symmetric(n_corrupt)


def p_detect_hw(q: int) -> float:
    if q < 2:
        raise ValueError("q must be >= 2")
    return 1.0 - 1.0 / q


def p_detect_multiround_lw(rounds: int) -> float:
    """Worst-case (single symmetric pair) detection after independent LW rounds."""
    return 1.0 - 0.5 ** rounds


def lw_miss_random(k: int, q: int) -> float:
    """Chance LW misses k independent uniform nonzero offsets.

    Each c_i * delta_i is again uniform on the nonzero residues; the number of
    k-tuples of nonzero residues summing to 0 is ((q-1)^k + (q-1)(-1)^k) / q.
    """
    if k == 0:
        return 1.0
    return (1.0 + (-1) ** k / (q - 1.0) ** (k - 1)) / q


def miss_probability(pattern: str, check: str, q: int, z_tilde: int = 2) -> float:
    """Single-round miss chance for a batch pattern with z_tilde corruptions.

    pattern is "sym-general" (balanced +-delta; requires z_tilde < q so the
    integer cancellation argument holds mod q), "triple" or "random" (fresh
    offsets). check is "lw" or "hw"; HW sees any nonzero offset vector as a
    nonzero linear form in uniform coefficients, so it misses with 1/q.
    """
    if check == "hw":
        return 1.0 / q if z_tilde > 0 else 1.0
    if check != "lw":
        raise ValueError(f"unknown check {check!r}")
    if pattern == "sym-general":
        return lw_miss_symmetric(z_tilde)
    if pattern == "triple":
        return 0.25
    if pattern == "random":
        return lw_miss_random(z_tilde, q)
    raise ValueError(f"unknown pattern {pattern!r}")


def p_detect_pattern(pattern: str, check: str, q: int, z_tilde: int = 2, rounds: int = 1,
                     z: int | None = None, rho_c: float | None = None) -> float:
    """Detection probability of `rounds` independent checks of one batch.

    With pattern "random" and rho_c given, the corrupted count is
    Binomial(z, rho_c) and z_tilde is ignored.
    """
    if pattern == "random" and rho_c is not None:
        k = np.arange(z + 1)
        w = binom.pmf(k, z, rho_c)
        return float(sum(wk * (1.0 - miss_probability("random", check, q, int(kk)) ** rounds)
                         for kk, wk in zip(k, w)))
    return 1.0 - miss_probability(pattern, check, q, z_tilde) ** rounds


@dataclass(frozen=True)
class FleetSpec:
    """Per-worker mean compute times and roles, plus task size and corruption rate."""

    means: tuple
    malicious: tuple
    R: int
    eps: int
    rho_c: float

    def __post_init__(self):
        if len(self.means) != len(self.malicious) or not self.means:
            raise ValueError("means and malicious flags must be nonempty and aligned")
        if min(self.means) <= 0:
            raise ValueError("mean compute times must be positive")
        if not 0.0 <= self.rho_c <= 1.0:
            raise ValueError("rho_c outside [0, 1]")

    @classmethod
    def build(cls, means, malicious, R: int, eps: int, rho_c: float) -> "FleetSpec":
        return cls(tuple(float(m) for m in means), tuple(bool(b) for b in malicious), R, eps, rho_c)

    @property
    def total(self) -> int:
        return self.R + self.eps

    @property
    def rates(self) -> np.ndarray:
        return 1.0 / np.asarray(self.means)

    @property
    def mal_mask(self) -> np.ndarray:
        return np.asarray(self.malicious, dtype=bool)

    def honest_rate(self) -> float:
        rate = float(self.rates[~self.mal_mask].sum())
        if rate == 0.0:
            raise NoHonestWorkers("fleet has no honest workers")
        return rate

    def total_rate(self) -> float:
        return float(self.rates.sum())


def packet_shares(fleet: FleetSpec) -> np.ndarray:
    """Expected first-period packet count of every worker, proportional to its rate."""
    return fleet.total * fleet.rates / fleet.total_rate()


def packet_share(fleet: FleetSpec, n: int) -> float:
    return float(packet_shares(fleet)[n])


def first_period(fleet: FleetSpec) -> float:
    """Time to collect R + eps results from the whole fleet."""
    return fleet.total / fleet.total_rate()


def phase1_detect(fleet: FleetSpec, clamp: bool = False) -> np.ndarray:
    """Per-worker LW detection probability with z_n * rho_c corrupted results.

    With clamp, workers expected to corrupt fewer than two results get 0.
    """
    corrupt = packet_shares(fleet) * fleet.rho_c
    p = np.array([1.0 - lw_miss_symmetric(c) for c in corrupt])
    if clamp:
        p[corrupt < 2.0] = 0.0
    return p


def unverified_bound(fleet: FleetSpec, clamp: bool = False) -> float:
    """Expected first-period results that fail to get verified."""
    mal = fleet.mal_mask
    if not mal.any():
        return 0.0
    z = packet_shares(fleet)[mal]
    p = phase1_detect(fleet, clamp)[mal]
    return float(np.sum(z * (p + fleet.rho_c * (1.0 - p))))


def upper_bound_sc3(fleet: FleetSpec, clamp: bool = False) -> float:
    return first_period(fleet) + unverified_bound(fleet, clamp) / fleet.honest_rate()


def t_hw_only(fleet: FleetSpec) -> float:
    return fleet.total / fleet.honest_rate()


def gap_lower_bound(fleet: FleetSpec, clamp: bool = False) -> float:
    """Lower bound on T_HW-only - E[T_SC3]."""
    honest = fleet.honest_rate()
    mal = fleet.mal_mask
    if not mal.any():
        return 0.0
    p = phase1_detect(fleet, clamp)[mal]
    s = float(np.sum((1.0 - p) * fleet.rates[mal]))
    return fleet.total * (1.0 - fleet.rho_c) * s / (fleet.total_rate() * honest)
