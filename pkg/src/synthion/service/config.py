"""Optional synthion.toml configuration."""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..synthesis import SynthConfig
from ..synthesis.explore import SteConfig
from ..synthesis.conditions import AbduceConfig


def load_config(path: Optional[str] = None) -> SynthConfig:
    """synthion.toml from the given path, the cwd, or defaults."""
    cfg = SynthConfig()
    candidates = [path] if path else ["synthion.toml"]
    data = None
    for cand in candidates:
        if cand and Path(cand).exists():
            with open(cand, "rb") as fh:
                data = tomllib.load(fh)
            break
    if data is None:
        return cfg
    budgets = data.get("budgets", {})
    cfg.budget_seconds = float(budgets.get("synthesis_seconds", cfg.budget_seconds))
    cfg.solver_time = float(budgets.get("solver_seconds", cfg.solver_time))
    cfg.validation_time = float(budgets.get("validation_seconds", cfg.validation_time))
    costs = data.get("costs", {})
    cfg.ste_cost = int(costs.get("term_exploration", cfg.ste_cost))
    cfg.abduce_cost = int(costs.get("abduction", cfg.abduce_cost))
    ste = data.get("term_exploration", {})
    cfg.ste = SteConfig(
        max_depth=int(ste.get("max_depth", cfg.ste.max_depth)),
        per_depth_budget=float(ste.get("per_depth_seconds", cfg.ste.per_depth_budget)),
        pool_size=int(ste.get("input_pool", cfg.ste.pool_size)),
        candidate_cap=int(ste.get("candidate_cap", cfg.ste.candidate_cap)),
    )
    abd = data.get("abduction", {})
    cfg.abduce = AbduceConfig(
        initial_batch=int(abd.get("initial_batch", cfg.abduce.initial_batch)),
        branch_batch=int(abd.get("branch_batch", cfg.abduce.branch_batch)),
        time_budget=float(abd.get("seconds", cfg.abduce.time_budget)),
    )
    return cfg


def solver_command() -> Optional[str]:
    """External SMT-LIB bridge command, when configured."""
    return os.environ.get("SYNTHION_SOLVER_CMD")
