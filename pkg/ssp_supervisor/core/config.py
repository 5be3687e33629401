# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

from dataclasses import dataclass
from pathlib import Path

from ssp_supervisor.core.analysis import DEFAULT_MONITOR_ROUNDS, DEFAULT_SIPHON_CAP
from ssp_supervisor.core.exceptions import UsageError
from ssp_supervisor.core.liveness_enforcement import DEFAULT_CHECK_SET_SIZE
from ssp_supervisor.core.petri_core import DEFAULT_NODE_BUDGET
from ssp_supervisor.core.semiflows import DEFAULT_BASIS_CAP

POLICIES = ("random", "exhaustive")
SCRIPT_PREFIX = "script:"


@dataclass
class PipelineConfig:
    input_path: Path = None
    node_budget: int = DEFAULT_NODE_BUDGET
    seed: int = 0
    policy: str = "random"
    steps: int = 100
    reduce: bool = False
    output_dir: Path = None
    basis_cap: int = DEFAULT_BASIS_CAP
    siphon_cap: int = DEFAULT_SIPHON_CAP
    monitor_rounds: int = DEFAULT_MONITOR_ROUNDS
    check_set_size: int = DEFAULT_CHECK_SET_SIZE

    @property
    def script_path(self):
        if self.policy.startswith(SCRIPT_PREFIX):
            return Path(self.policy[len(SCRIPT_PREFIX):])
        return None

    def validate(self):
        if self.node_budget < 1:
            raise UsageError(f"--budget must be at least 1, got {self.node_budget}")
        if self.steps < 0:
            raise UsageError(f"--steps must be nonnegative, got {self.steps}")
        if not -(2**63) <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 bits")
        if self.policy not in POLICIES and not (self.script_path and str(self.script_path)):
            raise UsageError(f"--policy must be random, exhaustive or script:<file>, got {self.policy}")
        for name in ("basis_cap", "siphon_cap", "monitor_rounds", "check_set_size"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be at least 1")
        return self
