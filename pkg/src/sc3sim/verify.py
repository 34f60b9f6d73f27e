"""Integrity checks on batches of worker results via the homomorphic hash.

A check draws coefficients c_i and compares
    alpha = h(sum_i c_i * y_i)                       (from the reported values)
    beta  = prod_j h(x_j) ** (sum_i c_i * p_ij)      (from the master's own data)
which agree for honest results. LW draws c_i from {-1, +1}; HW draws them
from [0, q-1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import field as ff
from .hashcore import HashParams, hash_combine, hash_value


@dataclass(frozen=True)
class CheckBatch:
    """Results reported by one worker, with the packet payloads they claim to be."""

    worker_id: int
    ids: tuple
    payloads: np.ndarray  # (Z, C) residues
    values: np.ndarray  # (Z,) reported results
    x_digests: Sequence[int]  # h(x_j), length C

    def __post_init__(self):
        z = len(self.ids)
        if z == 0:
            raise ValueError("empty batch")
        if self.payloads.shape[0] != z or self.values.shape[0] != z:
            raise ValueError("ids, payloads and values disagree in length")
        if self.payloads.shape[1] != len(self.x_digests):
            raise ValueError("payload width differs from number of x digests")

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, index: Sequence[int]) -> "CheckBatch":
        index = list(index)
        return CheckBatch(self.worker_id, tuple(self.ids[i] for i in index),
                          self.payloads[index], self.values[index], self.x_digests)


@dataclass(frozen=True)
class CheckOutcome:
    detected: bool
    alpha: int
    beta: int
    rounds_used: int = 1


def lw_coefficients(z: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(np.array([-1, 1], dtype=np.int64), size=z)


def hw_coefficients(z: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return ff.uniform_residues(z, q, rng)


def alpha_beta(batch: CheckBatch, coeffs, params: HashParams) -> tuple[int, int]:
    """Digest of the combined reported values, and the digest the master expects."""
    q = params.q
    alpha = hash_value(ff.dot(coeffs, batch.values, q), params)
    exps = ff.vecmat(coeffs, batch.payloads, q)
    beta = hash_combine(batch.x_digests, exps, params)
    return alpha, beta


def _check(batch: CheckBatch, coeffs, params: HashParams) -> CheckOutcome:
    alpha, beta = alpha_beta(batch, coeffs, params)
    return CheckOutcome(alpha != beta, alpha, beta, 1)


def lw_check(batch: CheckBatch, params: HashParams, rng: np.random.Generator) -> CheckOutcome:
    return _check(batch, lw_coefficients(len(batch), rng), params)


def hw_check(batch: CheckBatch, params: HashParams, rng: np.random.Generator) -> CheckOutcome:
    return _check(batch, hw_coefficients(len(batch), params.q, rng), params)


def multiround_lw(batch: CheckBatch, rounds: int, params: HashParams,
                  rng: np.random.Generator) -> CheckOutcome:
    """Repeat the LW check with fresh coefficients, stopping at the first detection."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    q = params.q
    coeffs = lw_coefficients(rounds * len(batch), rng).reshape(rounds, len(batch))
    # all rounds' exponents in one product; the hashing is what stops early
    sums = ff.matvec(coeffs, batch.values, q)
    exps = ff.as_residues(coeffs @ batch.payloads, q).tolist()
    sums = sums.tolist()
    alpha = beta = 1
    for k in range(rounds):
        alpha = hash_value(sums[k], params)
        beta = hash_combine(batch.x_digests, exps[k], params)
        if alpha != beta:
            return CheckOutcome(True, alpha, beta, k + 1)
    return CheckOutcome(False, alpha, beta, rounds)


@dataclass(frozen=True)
class CostModel:
    """Relative cost of one multiplication mod r and mod q."""

    unit_cost_r: float
    unit_cost_phi: float

    @classmethod
    def schoolbook(cls, params: HashParams) -> "CostModel":
        return cls(float(params.r_bits ** 2), float(params.q_bits ** 2))

    @property
    def ratio(self) -> float:
        return self.unit_cost_r / self.unit_cost_phi


@dataclass(frozen=True)
class Checker:
    kind: str  # "lw" (multi-round) or "hw"
    rounds: int = 1


def lw_rounds(q: int) -> int:
    return math.ceil(math.log2(q))


def lw_threshold(cost: CostModel, q: int) -> float:
    """Batch size from which multi-round LW is cheaper than one HW check."""
    return cost.ratio * math.log2(q) ** 2


def choose_checker(batch_size: int, cost: CostModel, params: HashParams) -> Checker:
    if cost.unit_cost_r <= 0 or cost.unit_cost_phi <= 0:
        raise ValueError("unit costs must be positive")
    if batch_size >= lw_threshold(cost, params.q):
        return Checker("lw", lw_rounds(params.q))
    return Checker("hw")


def run_checker(checker: Checker, batch: CheckBatch, params: HashParams,
                rng: np.random.Generator) -> CheckOutcome:
    if checker.kind == "lw":
        return multiround_lw(batch, checker.rounds, params, rng)
    return hw_check(batch, params, rng)


def strong_check(batch: CheckBatch, params: HashParams, rng: np.random.Generator,
                 cost: CostModel | None = None) -> CheckOutcome:
    """The second-phase check: whichever of multi-round LW / HW is cheaper for this size."""
    cost = cost or CostModel.schoolbook(params)
    return run_checker(choose_checker(len(batch), cost, params), batch, params, rng)


class Verdict(enum.Enum):
    DISCARD_ALL = "discard_all"
    ALL_VERIFIED = "all_verified"
    NEEDS_RECOVERY = "needs_recovery"


def detect_two_phase(batch: CheckBatch, params: HashParams, rng: np.random.Generator,
                     cost: CostModel | None = None) -> Verdict:
    """Cheap LW screen (a hit discards the batch), then the stronger check."""
    if lw_check(batch, params, rng).detected:
        return Verdict.DISCARD_ALL
    if strong_check(batch, params, rng, cost).detected:
        return Verdict.NEEDS_RECOVERY
    return Verdict.ALL_VERIFIED


@dataclass
class RecoveryOutcome:
    verified_ids: set = field(default_factory=set)
    corrupted_ids: set = field(default_factory=set)
    checks_performed: int = 0


def recover(batch: CheckBatch, params: HashParams, rng: np.random.Generator,
            cost: CostModel | None = None) -> RecoveryOutcome:
    """Binary search for the corrupted results in a batch that failed the strong check.

    Each half is re-checked independently; halves that pass are verified
    wholesale, failing singletons are declared corrupted.
    """
    cost = cost or CostModel.schoolbook(params)
    out = RecoveryOutcome()
    if len(batch) == 1:
        pending = [list(range(1))]
    else:
        pending = list(_halves(list(range(len(batch)))))[::-1]
    while pending:
        idx = pending.pop()
        sub = batch.subset(idx)
        out.checks_performed += 1
        if not strong_check(sub, params, rng, cost).detected:
            out.verified_ids.update(sub.ids)
        elif len(idx) == 1:
            out.corrupted_ids.update(sub.ids)
        else:
            pending.extend(list(_halves(idx))[::-1])
    return out


def _halves(idx: list) -> tuple[list, list]:
    mid = (len(idx) + 1) // 2
    return idx[:mid], idx[mid:]
