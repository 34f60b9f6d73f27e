"""Discrete-event simulation of coded matrix-vector offloading to workers.

One master streams fountain-coded rows of A to N workers following the
C3P pipelining rule and collects the computed products. Three policies
decide which results reach the decoder:

  sc3          periodic two-phase hash checks with binary-search recovery
  hw_only      one HW check per worker batch; a hit bans the worker and
               throws away everything it ever delivered. Deliveries of a
               worker that corrupts are never admitted, i.e. detection is
               taken to its eventual outcome, so only honest capacity counts
  hw_only_detect
               the same checks without that shortcut: a corrupting worker's
               clean batches count until HW actually catches it
  lower_bound  no checks at all (unsecured C3P)

A run is single-threaded and a pure function of (scenario, seed).
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import fountain
from .adversary import AttackPattern, WorkerAdversary
from .fountain import CodedPacket, DegreeDist, Decoder, Encoder
from .hashcore import HashParams, hash_vector
from .verify import (CheckBatch, CostModel, Verdict, detect_two_phase, hw_check,
                     recover)

MODES = ("sc3", "hw_only", "hw_only_detect", "lower_bound")

# rng stream tags; each stream is seeded from (seed, tag, worker id)
_DELAY, _ATTACK, _ENCODER, _CHECKS, _TASK = range(5)


class AllWorkersRemoved(RuntimeError):
    """Every worker was banned before the task could be decoded."""


class SimulationStalled(RuntimeError):
    """The event queue drained before the decoder reached full rank."""


class EventKind(enum.IntEnum):
    # value order breaks ties between events at the same instant
    PACKET_ARRIVE_AT_WORKER = 0
    COMPUTE_DONE = 1
    RESULT_ARRIVE_AT_MASTER = 2
    DISPATCH_TIMER = 3
    PERIOD_BOUNDARY = 4


@dataclass(frozen=True)
class WorkerProfile:
    id: int
    malicious: bool = False
    pattern: AttackPattern = AttackPattern()
    compute_shift: float = 0.0
    compute_rate: float = 1.0
    uplink_delay: float = 0.0
    downlink_delay: float = 0.0

    def __post_init__(self):
        if self.compute_shift < 0 or not self.compute_rate > 0:
            raise ValueError(f"worker {self.id}: need shift >= 0 and rate > 0")
        if self.uplink_delay < 0 or self.downlink_delay < 0:
            raise ValueError(f"worker {self.id}: negative transmission delay")

    @property
    def mean_compute(self) -> float:
        return self.compute_shift + 1.0 / self.compute_rate

    @classmethod
    def from_mean(cls, id: int, mean: float, shift_frac: float, **kw) -> "WorkerProfile":
        """Shifted exponential whose shift is `shift_frac` of the mean."""
        shift = shift_frac * mean
        tail = mean - shift
        return cls(id, compute_shift=shift, compute_rate=math.inf if tail == 0 else 1.0 / tail, **kw)


def sample_compute_delay(profile: WorkerProfile, rng: np.random.Generator) -> float:
    """Shifted-exponential compute time."""
    if math.isinf(profile.compute_rate):
        return profile.compute_shift
    return profile.compute_shift + rng.exponential(1.0 / profile.compute_rate)


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs besides the seed."""

    R: int
    C: int
    workers: tuple
    params: HashParams
    eps: int
    dist: DegreeDist = DegreeDist()
    cost: CostModel | None = None

    def __post_init__(self):
        if self.R < 1 or self.C < 1 or not self.workers:
            raise ValueError("need R, C, N >= 1")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")

    @property
    def n_honest(self) -> int:
        return sum(not w.malicious for w in self.workers)


def make_task(R: int, C: int, q: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """The data matrix A and input vector x for a seed."""
    rng = np.random.default_rng([seed, _TASK])
    return rng.integers(0, q, size=(R, C), dtype=np.int64), rng.integers(0, q, size=C, dtype=np.int64)


@dataclass
class RunResult:
    algorithm: str
    seed: int
    completion_time: float
    packets_sent: int
    packets_verified: int
    packets_discarded: int
    packets_in_flight: int
    workers_removed: int
    realized_overhead: float
    residual_corruption: int
    periods: int
    checks: int
    first_period_unverified: int = 0
    output: np.ndarray | None = field(default=None, repr=False)
    decode_error: str | None = None


@dataclass
class WorkerState:
    profile: WorkerProfile
    delay_rng: np.random.Generator
    adversary: WorkerAdversary | None
    active: bool = True
    busy: bool = False
    queue: deque = field(default_factory=deque)
    sent: int = 0
    last_sent_id: int = -1
    last_sent_time: float = 0.0
    last_result_id: int = -1
    last_result_time: float = math.nan
    timer_token: int = 0
    samples: list = field(default_factory=list)

    @property
    def corrupts(self) -> bool:
        return self.adversary is not None and self.adversary.active

    @property
    def estimate(self) -> float | None:
        """Running mean of the compute times reported with each result."""
        return sum(self.samples) / len(self.samples) if self.samples else None

    def next_dispatch_time(self, now: float) -> float:
        """When the next packet may go out under the pipelining rule.

        Right away for a fresh worker; otherwise the earlier of (last send +
        estimated compute time) and the return of the last packet's result.
        Before any result has come back there is no estimate, so the worker
        holds exactly one outstanding packet.
        """
        if self.sent == 0:
            return now
        back = self.last_result_time if self.last_result_id == self.last_sent_id else math.inf
        est = self.estimate
        timer = self.last_sent_time + est if est is not None else math.inf
        return min(back, timer)


def next_dispatch_time(state: "Simulation", worker_id: int) -> float:
    return state.workers[worker_id].next_dispatch_time(state.now)


@dataclass
class _Result:
    packet_id: int
    worker_id: int
    value: int
    corrupted: bool


class Simulation:
    """One replication of one policy.

    Attributes of interest after `run()`: `workers` (per-worker state with the
    logged compute samples), `trace` when built with trace=True.
    """

    def __init__(self, scenario: Scenario, seed: int, mode: str = "sc3", trace: bool = False):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if mode != "lower_bound" and scenario.n_honest == 0:
            raise ValueError("secured policies need at least one honest worker")
        self.sc = scenario
        self.seed = seed
        self.mode = mode
        self.q = scenario.params.q
        self.cost = scenario.cost or CostModel.schoolbook(scenario.params)
        self.A, self.x = make_task(scenario.R, scenario.C, self.q, seed)
        self.x_digests = hash_vector(self.x, scenario.params)
        self.encoder = Encoder(self.A, self.q, np.random.default_rng([seed, _ENCODER]), scenario.dist)
        self.check_rng = np.random.default_rng([seed, _CHECKS])
        self.workers = [
            WorkerState(
                p,
                np.random.default_rng([seed, _DELAY, p.id]),
                WorkerAdversary(p.pattern, self.q, np.random.default_rng([seed, _ATTACK, p.id]))
                if p.malicious else None,
            )
            for p in scenario.workers
        ]
        self.decoder = Decoder(scenario.R, self.q)
        self.packets: dict[int, CodedPacket] = {}
        self.pending: list[list[_Result]] = [[] for _ in self.workers]
        self.accepted: list[list[_Result]] = [[] for _ in self.workers]
        self.trace: list | None = [] if trace else None
        self.now = 0.0
        self._heap: list = []
        self._seq = 0
        self.target = scenario.R + scenario.eps
        self.verified = 0
        self.discarded = 0
        self.removed = 0
        self.residual = 0
        self.period_count = 0
        self.threshold = self.target
        self.periods = 0
        self.checks = 0
        self.first_period_unverified = 0
        self.outstanding = 0
        self.boundary_pending = False
        self.done = False

    # -- event plumbing -------------------------------------------------

    def _push(self, time: float, kind: EventKind, worker_id: int = -1, packet_id: int = -1,
              payload=None) -> None:
        heapq.heappush(self._heap, (time, int(kind), worker_id, packet_id, self._seq, self.now, payload))
        self._seq += 1

    def run(self) -> RunResult:
        for w in self.workers:
            self._dispatch(w)
        while self._heap and not self.done:
            time, kind, wid, pid, _, sched, payload = heapq.heappop(self._heap)
            if time < self.now:
                raise AssertionError("event scheduled in the past")
            self.now = time
            if self.trace is not None:
                self.trace.append((time, EventKind(kind), wid, pid, sched))
            self._handle(EventKind(kind), wid, pid, payload)
        if not self.done:
            raise SimulationStalled(f"event queue empty at rank {self.decoder.rank}/{self.sc.R}")
        return self._result()

    def _handle(self, kind: EventKind, wid: int, pid: int, payload) -> None:
        w = self.workers[wid] if wid >= 0 else None
        if kind is EventKind.PACKET_ARRIVE_AT_WORKER:
            if not w.active:
                self._drop(1)
                return
            w.queue.append(pid)
            if not w.busy:
                self._start_compute(w)
        elif kind is EventKind.COMPUTE_DONE:
            w.busy = False
            if not w.active:
                self._drop(1)
                return
            self._push(self.now + w.profile.uplink_delay, EventKind.RESULT_ARRIVE_AT_MASTER,
                       wid, pid, payload)
            if w.queue:
                self._start_compute(w)
        elif kind is EventKind.RESULT_ARRIVE_AT_MASTER:
            self._on_result(w, pid, payload)
        elif kind is EventKind.DISPATCH_TIMER:
            if w.active and payload == w.timer_token:
                self._dispatch(w)
        elif kind is EventKind.PERIOD_BOUNDARY:
            self.boundary_pending = False
            self._boundary()

    # -- worker side ----------------------------------------------------

    def _start_compute(self, w: WorkerState) -> None:
        pid = w.queue.popleft()
        w.busy = True
        took = sample_compute_delay(w.profile, w.delay_rng)
        value = fountain.compute(self.packets[pid], self.x, self.q)
        corrupted = False
        if w.adversary is not None:
            value, corrupted = w.adversary.apply(value)
        self._push(self.now + took, EventKind.COMPUTE_DONE, w.profile.id, pid, (value, corrupted, took))

    # -- master side ----------------------------------------------------

    def _dispatch(self, w: WorkerState) -> None:
        pkt = self.encoder.encode_next()
        self.packets[pkt.id] = pkt
        w.sent += 1
        w.last_sent_id = pkt.id
        w.last_sent_time = self.now
        w.timer_token += 1
        self.outstanding += 1
        self._push(self.now + w.profile.downlink_delay, EventKind.PACKET_ARRIVE_AT_WORKER,
                   w.profile.id, pkt.id)
        est = w.estimate
        if est is not None:
            self._push(self.now + est, EventKind.DISPATCH_TIMER, w.profile.id, pkt.id, w.timer_token)

    def _on_result(self, w: WorkerState, pid: int, payload) -> None:
        value, corrupted, took = payload
        if not w.active:
            self._drop(1)
            return
        self.outstanding -= 1
        w.samples.append(took)
        w.last_result_id = pid
        w.last_result_time = self.now
        self.pending[w.profile.id].append(_Result(pid, w.profile.id, value, corrupted))
        self.period_count += 1
        if pid == w.last_sent_id:
            self._dispatch(w)
        if self.period_count >= self.threshold and not self.boundary_pending:
            self.boundary_pending = True
            self._push(self.now, EventKind.PERIOD_BOUNDARY)

    def _batch(self, results: list[_Result]) -> CheckBatch:
        return CheckBatch(
            results[0].worker_id,
            tuple(r.packet_id for r in results),
            np.stack([self.packets[r.packet_id].payload for r in results]),
            np.array([r.value for r in results], dtype=np.int64),
            self.x_digests,
        )

    def _accept(self, results: list[_Result]) -> None:
        for r in results:
            self.decoder.add(self.packets[r.packet_id].gamma, r.value)
            self.accepted[r.worker_id].append(r)
            self.verified += 1
            self.residual += r.corrupted

    def _drop(self, n: int) -> None:
        # packets lost with a banned worker count as discarded
        self.outstanding -= n
        self.discarded += n

    def _ban(self, w: WorkerState) -> None:
        w.active = False
        self._drop(len(w.queue))
        w.queue.clear()
        self.removed += 1
        if not any(x.active for x in self.workers):
            raise AllWorkersRemoved(f"no workers left at t={self.now:.3f}")

    def _boundary(self) -> None:
        self.periods += 1
        v0, seen = self.verified, 0
        try:
            seen = self._check_period()
        finally:
            if self.periods == 1:
                self.first_period_unverified = seen - (self.verified - v0)
        if not self.done:
            self.period_count = 0
            self.threshold = max(self.target - self.verified, self.sc.R - self.decoder.rank, 1)

    def _check_period(self) -> int:
        """Check every active worker's batch in id order; returns results examined."""
        params = self.sc.params
        seen = 0
        for w in self.workers:
            if not w.active:
                continue
            batch = self.pending[w.profile.id]
            if not batch:
                continue
            self.pending[w.profile.id] = []
            seen += len(batch)
            if self.mode == "lower_bound":
                self._accept(batch)
            elif self.mode.startswith("hw_only"):
                self.checks += 1
                if hw_check(self._batch(batch), params, self.check_rng).detected:
                    self._revoke(w, batch)
                elif self.mode == "hw_only" and w.corrupts:
                    # bound to be caught and wiped later
                    self.discarded += len(batch)
                else:
                    self._accept(batch)
            else:
                self._sc3_check(w, batch)
            if self.decoder.complete:
                self.done = True
                break
        return seen

    def _sc3_check(self, w: WorkerState, batch: list[_Result]) -> None:
        params = self.sc.params
        cb = self._batch(batch)
        verdict = detect_two_phase(cb, params, self.check_rng, self.cost)
        self.checks += 2 if verdict is not Verdict.DISCARD_ALL else 1
        if verdict is Verdict.DISCARD_ALL:
            self.discarded += len(batch)
            self._ban(w)
        elif verdict is Verdict.ALL_VERIFIED:
            self._accept(batch)
        else:
            rec = recover(cb, params, self.check_rng, self.cost)
            self.checks += rec.checks_performed
            self._accept([r for r in batch if r.packet_id in rec.verified_ids])
            self.discarded += len(rec.corrupted_ids)

    def _revoke(self, w: WorkerState, batch: list[_Result]) -> None:
        """HW-only: drop this batch and everything the worker delivered before."""
        old = self.accepted[w.profile.id]
        self.accepted[w.profile.id] = []
        self.discarded += len(batch) + len(old)
        self._ban(w)
        if old:
            self.verified -= len(old)
            self.residual -= sum(r.corrupted for r in old)
            kept = sorted((r for rs in self.accepted for r in rs), key=lambda r: r.packet_id)
            self.decoder = Decoder(self.sc.R, self.q)
            for r in kept:
                self.decoder.add(self.packets[r.packet_id].gamma, r.value)

    def _result(self) -> RunResult:
        in_flight = sum(len(p) for p in self.pending) + self.outstanding
        sent = sum(w.sent for w in self.workers)
        output, err = None, None
        try:
            output = self.decoder.solution()
        except fountain.InconsistentSystem as exc:
            err = str(exc)
        rank_at = self.decoder.full_rank_at
        return RunResult(
            algorithm=self.mode,
            seed=self.seed,
            completion_time=self.now,
            packets_sent=sent,
            packets_verified=self.verified,
            packets_discarded=self.discarded,
            packets_in_flight=in_flight,
            workers_removed=self.removed,
            realized_overhead=rank_at / self.sc.R - 1.0,
            residual_corruption=self.residual,
            periods=self.periods,
            checks=self.checks,
            first_period_unverified=self.first_period_unverified,
            output=output,
            decode_error=err,
        )


def simulate(scenario: Scenario, seed: int, mode: str) -> RunResult:
    return Simulation(scenario, seed, mode).run()


def simulate_sc3(scenario: Scenario, seed: int) -> RunResult:
    return simulate(scenario, seed, "sc3")


def simulate_hw_only(scenario: Scenario, seed: int) -> RunResult:
    return simulate(scenario, seed, "hw_only")


def simulate_lower_bound(scenario: Scenario, seed: int) -> RunResult:
    return simulate(scenario, seed, "lower_bound")
