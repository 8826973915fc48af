"""Probabilistic weighted constraint-satisfaction engine for hidden-role
inference in social deduction games."""

from .model import (
    Alignment,
    Constraint,
    ConstraintClass,
    ConstraintKind,
    ConstraintSet,
    EngineError,
    GameConfig,
    GameKind,
    ModelError,
    Posterior,
    Preset,
    RoleSpec,
    SolverSettings,
    View,
    ViewKind,
    World,
    validate_config,
    world_violations,
)
from .solver import (
    IgReport,
    InfeasibleError,
    ScoredWorldSet,
    SolverError,
    apply_hard,
    entropy_bits,
    enumerate_worlds,
    info_gain,
    mcmc_posterior,
    posterior,
    score_world,
    score_worlds,
    soft_hard_gap,
)

__version__ = "0.1.0"
