"""Replication orchestration: configs in, CSV rows out."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache

import numpy as np
from scipy import stats

from . import analysis
from .adversary import AttackPattern, corrupt_batch
from .config import ExperimentConfig, SweepSpec
from .engine import (AllWorkersRemoved, Scenario, SimulationStalled, WorkerProfile,
                     make_task, simulate)
from .field import matvec, uniform_residues
from .hashcore import HashParams, gen_params, hash_vector, params_for_q
from .verify import CheckBatch, hw_check, lw_check, lw_rounds, multiround_lw

COLUMNS = ("sweep_value", "algorithm", "replication", "seed", "completion_time",
           "packets_verified", "packets_discarded", "workers_removed",
           "residual_corruption", "realized_overhead")
BOUND_COLUMNS = ("upper_bound_sc3", "t_hw_only", "gap_lower_bound", "unverified_bound")
GAP_COLUMNS = ("gap", "gap_ci95", "gap_lower_bound")
_METRICS = COLUMNS[4:]


class InvariantViolation(RuntimeError):
    pass


@lru_cache(maxsize=None)
def hash_params(q_bits: int, r_bits: int, seed: int) -> HashParams:
    return gen_params(q_bits, r_bits, seed=seed)


def run_seed(config: ExperimentConfig, replication: int) -> int:
    return config.base_seed + replication


def draw_fleet(config: ExperimentConfig, replication: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-worker mean compute times and the malicious mask for a replication.

    Each worker's uniform draw comes from its own (base_seed, replication,
    worker) stream and the malicious set is a prefix of one seeded
    permutation, so changing n_m or a mean range moves nothing else.
    """
    n = config.n
    order = np.random.default_rng([config.base_seed, replication]).permutation(n)
    mal = np.zeros(n, dtype=bool)
    mal[order[:config.n_m]] = True
    u = np.array([np.random.default_rng([config.base_seed, replication, w]).random() for w in range(n)])
    lo = np.where(mal, config.malicious_range[0], config.honest_mean[0])
    hi = np.where(mal, config.malicious_range[1], config.honest_mean[1])
    return lo + u * (hi - lo), mal


def fleet_spec(config: ExperimentConfig, replication: int) -> analysis.FleetSpec:
    means, mal = draw_fleet(config, replication)
    return analysis.FleetSpec.build(means, mal, config.r, config.eps, config.rho_c)


def build_scenario(config: ExperimentConfig, replication: int) -> Scenario:
    means, mal = draw_fleet(config, replication)
    attack = config.pattern()
    workers = tuple(
        WorkerProfile.from_mean(
            w, float(means[w]), config.shift_frac,
            malicious=bool(mal[w]),
            pattern=attack if mal[w] else AttackPattern(),
            uplink_delay=config.uplink_delay,
            downlink_delay=config.downlink_delay,
        )
        for w in range(config.n)
    )
    params = hash_params(config.q_bits, config.r_bits, config.base_seed)
    return Scenario(config.r, config.c, workers, params, config.eps)


def expected_output(scenario: Scenario, seed: int) -> np.ndarray:
    A, x = make_task(scenario.R, scenario.C, scenario.params.q, seed)
    return matvec(A, x, scenario.params.q)


def run_one(config: ExperimentConfig, algorithm: str, replication: int) -> dict:
    """Simulate one (algorithm, replication) and return its CSV row."""
    scenario = build_scenario(config, replication)
    seed = run_seed(config, replication)
    try:
        res = simulate(scenario, seed, algorithm)
    except (AssertionError, SimulationStalled, AllWorkersRemoved) as exc:
        raise InvariantViolation(f"{algorithm} replication {replication}: {exc}") from exc
    if res.packets_sent != res.packets_verified + res.packets_discarded + res.packets_in_flight:
        raise InvariantViolation(f"{algorithm} replication {replication}: packet counts do not add up")
    return {
        "algorithm": algorithm,
        "replication": replication,
        "seed": seed,
        "completion_time": res.completion_time,
        "packets_verified": res.packets_verified,
        "packets_discarded": res.packets_discarded,
        "workers_removed": res.workers_removed,
        "residual_corruption": res.residual_corruption,
        "realized_overhead": res.realized_overhead,
    }


def _run_task(task):
    return run_one(*task)


def mean_ci(values) -> tuple[float, float]:
    """Sample mean and the half-width of its 95% t interval (nan for one sample)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()), math.nan
    half = stats.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return float(v.mean()), float(half)


def bounds(config: ExperimentConfig) -> dict:
    """Closed-form bounds averaged over the replication fleets."""
    fleets = [fleet_spec(config, i) for i in range(config.replications)]
    return {
        "upper_bound_sc3": float(np.mean([analysis.upper_bound_sc3(f) for f in fleets])),
        "t_hw_only": float(np.mean([analysis.t_hw_only(f) for f in fleets])),
        "gap_lower_bound": float(np.mean([analysis.gap_lower_bound(f) for f in fleets])),
        "unverified_bound": float(np.mean([analysis.unverified_bound(f) for f in fleets])),
    }


def _simulate_all(tasks, jobs: int) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks))


def _summaries(rows: list[dict]) -> list[dict]:
    out = []
    for alg in dict.fromkeys(r["algorithm"] for r in rows):
        mine = [r for r in rows if r["algorithm"] == alg]
        mean = {"algorithm": alg, "replication": "mean", "seed": ""}
        ci = {"algorithm": alg, "replication": "ci95", "seed": ""}
        for m in _METRICS:
            mean[m], ci[m] = mean_ci([r[m] for r in mine])
        out += [mean, ci]
    return out


def run(config: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Per-replication rows then mean/ci95 rows for every selected algorithm.

    Rows come out in (algorithm, replication) order however the work is
    spread over processes.
    """
    sims = [a for a in config.algorithms if a != "bounds"]
    tasks = [(config, a, i) for a in sims for i in range(config.replications)]
    rows = _simulate_all(tasks, jobs)
    rows += _summaries(rows)
    if "bounds" in config.algorithms:
        rows.append({"algorithm": "bounds", "replication": "mean", "seed": "", **bounds(config)})
    return rows


def paired_gap(rows: list[dict]) -> tuple[float, float] | None:
    """Mean and CI of per-replication hw_only - sc3 differences (shared seeds)."""
    times = {}
    for r in rows:
        if isinstance(r["replication"], int):
            times.setdefault(r["algorithm"], {})[r["replication"]] = r["completion_time"]
    if "hw_only" not in times or "sc3" not in times:
        return None
    reps = sorted(set(times["hw_only"]) & set(times["sc3"]))
    return mean_ci([times["hw_only"][i] - times["sc3"][i] for i in reps])


def sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    """`run` at every sweep value, tagged with the value, plus gap columns."""
    out = []
    for label, config in spec.points():
        rows = run(config, jobs)
        gap = paired_gap(rows)
        extra = {}
        if gap is not None:
            extra = {"gap": gap[0], "gap_ci95": gap[1],
                     "gap_lower_bound": bounds(config)["gap_lower_bound"]}
        for r in rows:
            r["sweep_value"] = label
            r.update(extra)
        out += rows
    return out


def columns_for(rows: list[dict]) -> list[str]:
    cols = list(COLUMNS)
    for extra in (GAP_COLUMNS, BOUND_COLUMNS):
        for c in extra:
            if c not in cols and any(c in r for r in rows):
                cols.append(c)
    return cols


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(rows: list[dict], stream, columns=None) -> None:
    columns = list(columns or columns_for(rows))
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])


MC_PATTERNS = ("sym-pair", "sym-general", "triple", "random")
MC_CHECKS = ("lw", "hw", "mr")


def mc_detect(pattern: str, trials: int, seed: int = 0, z: int = 8, z_tilde: int = 2,
              q: int = 2**31 - 1, check: str = "lw", rounds: int | None = None,
              rho_c: float = 0.3, cols: int = 4) -> dict:
    """Monte Carlo detection rate of one attack pattern against one checker.

    Every trial draws a fresh honest batch of z results, corrupts it and runs
    the check once. "random" corrupts each result with probability rho_c,
    so some trials carry no corruption at all; the closed form accounts for
    that.
    """
    if pattern not in MC_PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    if check not in MC_CHECKS:
        raise ValueError(f"unknown check {check!r}")
    if pattern == "sym-pair":
        z_tilde = 2
    elif pattern == "triple":
        z_tilde = 3
    kind = "sym-general" if pattern == "sym-pair" else pattern
    attack = AttackPattern(kind, n_corrupt=z_tilde if kind == "sym-general" else 2, rho_c=rho_c)
    attack.check_batch(z)
    rounds = rounds or (lw_rounds(q) if check == "mr" else 1)
    params = params_for_q(q, seed=seed)
    rng = np.random.default_rng([seed, 1])
    hits = 0
    for _ in range(trials):
        payloads = uniform_residues(z * cols, q, rng).reshape(z, cols)
        x = uniform_residues(cols, q, rng)
        honest = matvec(payloads, x, q)
        values, _ = corrupt_batch(honest, attack, q, rng)
        batch = CheckBatch(0, tuple(range(z)), payloads, values, hash_vector(x, params))
        if check == "lw":
            out = lw_check(batch, params, rng)
        elif check == "hw":
            out = hw_check(batch, params, rng)
        else:
            out = multiround_lw(batch, rounds, params, rng)
        hits += out.detected
    p = hits / trials
    base = "hw" if check == "hw" else "lw"
    analytic = analysis.p_detect_pattern(
        kind, base, q, z_tilde, rounds=1 if check == "hw" else rounds,
        z=z, rho_c=rho_c if kind == "random" else None)
    return {
        "pattern": pattern,
        "Z": z,
        "Z_tilde": z_tilde if kind != "random" else "",
        "q": q,
        "empirical": p,
        "analytic": analytic,
        "ci95": 1.96 * math.sqrt(max(p * (1 - p), 1e-300) / trials),
    }
