"""Secure coded cooperative computation: hashing, fountain codes, checks and simulation."""

from .adversary import AttackPattern, corrupt_batch
from .analysis import FleetSpec, gap_lower_bound, t_hw_only, upper_bound_sc3
from .config import ExperimentConfig, SweepSpec, load_config
from .engine import Scenario, WorkerProfile, simulate
from .fountain import Decoder, Encoder, decode
from .hashcore import HashParams, gen_params, hash_combine, hash_value
from .verify import detect_two_phase, hw_check, lw_check, multiround_lw, recover

__version__ = "0.1.0"
