"""Experiment configuration: flat key=value files with hard errors on typos."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .adversary import AttackPattern, PatternInvalid

ALGORITHMS = ("sc3", "hw_only", "hw_only_detect", "lower_bound", "bounds")
ENGINE_PATTERNS = ("none", "random", "bernoulli-sym", "paired")


class ConfigError(ValueError):
    """Bad key, bad value or inconsistent combination of values."""


def _range(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    if not sep:
        v = float(text)
        return v, v
    return float(lo), float(hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment point.

    Worker means are drawn uniformly from `honest_mean` (and from
    `malicious_mean` for malicious workers, falling back to `honest_mean`);
    each compute time is a shifted exponential whose shift is `shift_frac` of
    the worker's mean. `eps` is ceil(epsilon_frac * r).
    """

    r: int = 200
    c: int = 200
    n: int = 30
    n_m: int = 10
    q_bits: int = 31
    r_bits: int = 62
    rho_c: float = 0.3
    attack_pattern: str = "paired"
    honest_mean: tuple[float, float] = (1.0, 6.0)
    malicious_mean: tuple[float, float] | None = None
    shift_frac: float = 0.2
    uplink_delay: float = 0.0
    downlink_delay: float = 0.0
    epsilon_frac: float = 0.05
    replications: int = 10
    base_seed: int = 0
    algorithms: tuple[str, ...] = ("sc3", "hw_only", "lower_bound")

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(key, why):
            raise ConfigError(f"{key}: {why}")

        for key in ("r", "c", "n", "replications"):
            if getattr(self, key) < 1:
                bad(key, "must be >= 1")
        if not 0 <= self.n_m <= self.n:
            bad("n_m", f"must lie in [0, n={self.n}]")
        if not 2 <= self.q_bits < self.r_bits:
            bad("q_bits", "need 2 <= q_bits < r_bits")
        if not 0.0 <= self.rho_c <= 1.0:
            bad("rho_c", "must lie in [0, 1]")
        if self.attack_pattern not in ENGINE_PATTERNS:
            bad("attack_pattern", f"expected one of {', '.join(ENGINE_PATTERNS)}")
        for key in ("honest_mean", "malicious_mean"):
            rng = getattr(self, key)
            if rng is not None and not 0 < rng[0] <= rng[1]:
                bad(key, "need 0 < lo <= hi")
        if not 0.0 <= self.shift_frac <= 1.0:
            bad("shift_frac", "must lie in [0, 1]")
        if self.uplink_delay < 0 or self.downlink_delay < 0:
            bad("uplink_delay/downlink_delay", "must be >= 0")
        if self.epsilon_frac < 0:
            bad("epsilon_frac", "must be >= 0")
        if not self.algorithms:
            bad("algorithms", "select at least one")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                bad("algorithms", f"unknown algorithm {a!r}")
        if self.n_m == self.n and any(a != "lower_bound" for a in self.algorithms):
            bad("n_m", "secured policies and bounds need at least one honest worker")

    @property
    def eps(self) -> int:
        # rounding first keeps 0.05 * 200 at 10 rather than 11
        return math.ceil(round(self.epsilon_frac * self.r, 9))

    @property
    def malicious_range(self) -> tuple[float, float]:
        return self.malicious_mean or self.honest_mean

    def pattern(self) -> AttackPattern:
        try:
            return AttackPattern(self.attack_pattern, rho_c=self.rho_c)
        except PatternInvalid as exc:
            raise ConfigError(f"attack_pattern: {exc}") from None

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_overrides(self, pairs: dict[str, str]) -> "ExperimentConfig":
        return self.replace(**{k: parse_value(k, v) for k, v in pairs.items()})

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


KEYS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def parse_value(key: str, text: str):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}")
    text = text.strip()
    try:
        if key in ("honest_mean", "malicious_mean"):
            if key == "malicious_mean" and text in ("", "none"):
                return None
            return _range(text)
        if key == "algorithms":
            return tuple(a.strip() for a in text.split(",") if a.strip())
        if key in ("attack_pattern",):
            return text
        if key in ("rho_c", "shift_frac", "uplink_delay", "downlink_delay", "epsilon_frac"):
            return float(text)
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r}") from None


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple) and v and isinstance(v[0], str):
        return ",".join(v)
    if isinstance(v, tuple):
        return f"{v[0]:g}:{v[1]:g}"
    return str(v)


def parse_pairs(text: str, source: str = "<config>") -> dict[str, str]:
    """key = value lines; '#' starts a comment."""
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{no}: expected key = value")
        if key not in KEYS:
            raise ConfigError(f"{source}:{no}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None,
                **fixed) -> ExperimentConfig:
    pairs = parse_pairs(Path(path).read_text(), str(path)) if path else {}
    pairs.update(overrides or {})
    values = {k: parse_value(k, v) for k, v in pairs.items()}
    values.update(fixed)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[str, ...]
    base: ExperimentConfig = field(default_factory=ExperimentConfig)

    def __post_init__(self):
        if self.param not in KEYS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")

    def points(self):
        """(label, config) for each sweep value, validated up front."""
        return [(v, self.base.with_overrides({self.param: v})) for v in self.values]
