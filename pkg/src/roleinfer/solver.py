"""Exact enumeration engine: pruning, scoring, posteriors, info gain.

The engine enumerates every assignment of players to roles consistent with
the role multiset, filters by hard constraints (evidence, phenomenon, view
knowledge), scores the survivors with the weighted soft-constraint rule

    S(a) = (prod over satisfied assertions of lam*w_A)
           * (1 + sum over satisfied hypotheses of lam*w_h)

and normalizes the scores into a posterior over worlds, from which player
by role marginals, the MAP world, and the distribution entropy follow.
Hypothesis weights are either manual or derived from information gain: the
entropy drop of the hard-filtered (plus soft assertions) distribution when
conditioned on the hypothesis holding.

Worlds are held as numpy arrays of role indices, rows in canonical order:
players in config order, roles tried in config order at each depth. All
operations are pure; normalization always sums in canonical world order so
results are bit-reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .model import (
    Alignment,
    Constraint,
    ConstraintClass,
    ConstraintKind,
    ConstraintSet,
    EngineError,
    GameConfig,
    Posterior,
    Preset,
    SolverSettings,
    View,
    World,
    resolve_set_label,
    world_violations,
)


class SolverError(EngineError):
    pass


class InfeasibleError(SolverError):
    """No world satisfies the hard constraints; carries the first constraint
    whose incremental addition emptied the set."""

    def __init__(self, constraint: Optional[Constraint], message: str = ""):
        super().__init__(
            "INFEASIBLE",
            message or "hard constraints admit no world",
            detail=constraint,
        )
        self.constraint = constraint


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _assignments_for_counts(counts: tuple[int, ...]) -> np.ndarray:
    """All distinct role-index sequences for the given multiset, in canonical
    (lexicographic by role index) order. Shape (M, n); read-only."""
    memo: dict[tuple[int, ...], np.ndarray] = {}

    def build(state: tuple[int, ...]) -> np.ndarray:
        remaining = sum(state)
        if remaining == 0:
            return np.empty((1, 0), dtype=np.int8)
        cached = memo.get(state)
        if cached is not None:
            return cached
        blocks = []
        for ri, c in enumerate(state):
            if c == 0:
                continue
            sub = build(state[:ri] + (c - 1,) + state[ri + 1:])
            head = np.full((sub.shape[0], 1), ri, dtype=np.int8)
            blocks.append(np.hstack([head, sub]))
        out = np.vstack(blocks)
        memo[state] = out
        return out

    result = build(counts)
    result.flags.writeable = False
    return result


def _table(config: GameConfig) -> np.ndarray:
    if len(config.roles) > 120:
        raise SolverError("CONFIG_INVALID", "too many roles to enumerate")
    return _assignments_for_counts(tuple(r.count for r in config.roles))


def world_count(config: GameConfig) -> int:
    return _table(config).shape[0]


def _world_from_row(config: GameConfig, row: np.ndarray) -> World:
    names = config.role_names
    return World(tuple(zip(config.players, (names[j] for j in row))))


def enumerate_worlds(config: GameConfig) -> list[World]:
    """Every distinct assignment respecting the role multiset, canonical order."""
    if not isinstance(config, GameConfig):
        raise SolverError("CONFIG_INVALID", "expected a GameConfig")
    table = _table(config)
    return [_world_from_row(config, row) for row in table]


# ---------------------------------------------------------------------------
# Constraint satisfaction (single vectorized path)
# ---------------------------------------------------------------------------

def _alignment_mask(config: GameConfig, alignment: Alignment) -> np.ndarray:
    return np.array([r.alignment is alignment for r in config.roles])


def constraint_mask(table: np.ndarray, config: GameConfig, c: Constraint) -> np.ndarray:
    """Boolean satisfaction vector of constraint c over the given world rows."""
    kind = c.kind
    if kind in (ConstraintKind.ROLE_IS, ConstraintKind.ASSERT_ROLE_IS):
        who = c.player if kind is ConstraintKind.ROLE_IS else c.speaker
        return table[:, config.player_index(who)] == config.role_index(c.role)
    if kind is ConstraintKind.ROLE_NOT:
        return table[:, config.player_index(c.player)] != config.role_index(c.role)
    if kind is ConstraintKind.ROLE_IN:
        col = table[:, config.player_index(c.player)]
        allowed = np.array(sorted(config.role_index(r) for r in c.roles), dtype=np.int8)
        return np.isin(col, allowed)
    if kind is ConstraintKind.EVIL_AT_LEAST:
        evil = _alignment_mask(config, Alignment.EVIL)
        cols = [config.player_index(p) for p in c.team]
        return evil[table[:, cols]].sum(axis=1) >= c.min_count
    if kind in (ConstraintKind.ASSERT_TEAM_GOOD, ConstraintKind.HYPO_TEAM_GOOD):
        good = _alignment_mask(config, Alignment.GOOD)
        cols = [config.player_index(p) for p in c.team]
        return good[table[:, cols]].all(axis=1)
    if kind is ConstraintKind.HYPO_TEAM_EVIL:
        evil = _alignment_mask(config, Alignment.EVIL)
        cols = [config.player_index(p) for p in c.team]
        return evil[table[:, cols]].any(axis=1)
    if kind in (ConstraintKind.ASSERT_ROLE_IN, ConstraintKind.HYPO_ROLE_IN):
        col = table[:, config.player_index(c.target)]
        allowed = np.array(
            sorted(config.role_index(r) for r in resolve_set_label(config, c.set_label)),
            dtype=np.int8,
        )
        return np.isin(col, allowed)
    raise SolverError("UNKNOWN_KIND", f"no satisfaction rule for {kind}")


def satisfies(config: GameConfig, world: World, c: Constraint) -> bool:
    row = np.array(
        [[config.role_index(world.role_of(p)) for p in config.players]], dtype=np.int8
    )
    return bool(constraint_mask(row, config, c)[0])


def _rows_for_worlds(config: GameConfig, worlds: Sequence[World]) -> np.ndarray:
    rows = np.empty((len(worlds), len(config.players)), dtype=np.int8)
    for i, w in enumerate(worlds):
        codes = world_violations(config, w)
        if codes:
            raise SolverError("CONFIG_INVALID", f"world {i} invalid: {', '.join(codes)}")
        rows[i] = [config.role_index(w.role_of(p)) for p in config.players]
    return rows


def apply_hard(
    config: GameConfig, worlds: Sequence[World], hard: Iterable[Constraint]
) -> list[World]:
    """Exactly the sub-list of worlds satisfying every hard constraint."""
    hard = list(hard)
    for c in hard:
        if c.constraint_class not in (ConstraintClass.EVIDENCE, ConstraintClass.PHENOMENON):
            raise SolverError("BAD_ARGS", f"{c.kind.value} is not a hard constraint")
    if not worlds:
        return []
    rows = _rows_for_worlds(config, worlds)
    keep = np.ones(len(worlds), dtype=bool)
    for c in hard:
        keep &= constraint_mask(rows, config, c)
    return [w for w, k in zip(worlds, keep) if k]


def _filter_hard(
    table: np.ndarray, config: GameConfig, hard: Sequence[Constraint]
) -> np.ndarray:
    """Row indices surviving all hard constraints, applied one at a time so the
    first constraint that empties the set can be reported."""
    idx = np.arange(table.shape[0])
    for c in hard:
        mask = constraint_mask(table[idx], config, c)
        idx = idx[mask]
        if idx.size == 0:
            raise InfeasibleError(c, f"{c.kind.value} (round {c.round_index}) emptied the world set")
    return idx


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoredWorldSet:
    """A feasible world list with its soft-constraint scores, pre-normalization."""

    config: GameConfig
    worlds: tuple[World, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "worlds", tuple(self.worlds))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.worlds) != len(self.scores):
            raise SolverError("BAD_ARGS", "worlds and scores must align")
        if any(s < 1.0 for s in self.scores):
            raise SolverError("BAD_ARGS", "scores never drop below the empty-product floor of 1")


def score_worlds(
    config: GameConfig,
    worlds: Sequence[World],
    assertions: Sequence[Constraint],
    hypotheses: Sequence[Constraint],
    settings: SolverSettings,
) -> ScoredWorldSet:
    """Score every world in one pass (weights must already be resolved)."""
    if not worlds:
        return ScoredWorldSet(config, (), ())
    rows = _rows_for_worlds(config, worlds)
    scores = _scores_for(rows, config, assertions, hypotheses, settings)
    return ScoredWorldSet(config, tuple(worlds), tuple(scores))


def _scores_for(
    table: np.ndarray,
    config: GameConfig,
    assertions: Sequence[Constraint],
    hypotheses: Sequence[Constraint],
    settings: SolverSettings,
) -> np.ndarray:
    lam = settings.global_scale
    w_assert = lam * settings.assertion_weight
    scores = np.ones(table.shape[0])
    for a in assertions:
        scores[constraint_mask(table, config, a)] *= w_assert
    bonus = np.zeros(table.shape[0])
    for h in hypotheses:
        if h.weight is None:
            raise SolverError(
                "UNRESOLVED_WEIGHT",
                f"hypothesis {h.kind.value} still carries auto_weight; resolve it first",
            )
        bonus[constraint_mask(table, config, h)] += lam * h.weight
    return scores * (1.0 + bonus)


def score_world(
    config: GameConfig,
    world: World,
    assertions: Sequence[Constraint],
    hypotheses: Sequence[Constraint],
    settings: SolverSettings,
) -> float:
    """Soft-constraint score of a single world (always >= 1)."""
    rows = _rows_for_worlds(config, [world])
    return float(_scores_for(rows, config, assertions, hypotheses, settings)[0])


def entropy_bits(probabilities: Sequence[float]) -> float:
    """Base-2 entropy of a distribution; zero entries contribute zero."""
    p = np.asarray(probabilities, dtype=float)
    if p.size and (p < 0).any():
        raise SolverError("NOT_NORMALIZED", "probabilities must be nonnegative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise SolverError("NOT_NORMALIZED", f"probabilities sum to {total}")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _entropy_of(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


# ---------------------------------------------------------------------------
# Preset gating and hypothesis weight resolution
# ---------------------------------------------------------------------------

_PRESETS_WITH_ASSERTIONS = (Preset.ASSERT, Preset.HYP_IG, Preset.HYP_M, Preset.TURN_IG)
_PRESETS_WITH_HYPOTHESES = (Preset.HYP_IG, Preset.HYP_M, Preset.TURN_IG)
_IG_PRESETS = (Preset.HYP_IG, Preset.TURN_IG)


def select_active(
    constraints: ConstraintSet, settings: SolverSettings, current_round: Optional[int] = None
) -> tuple[tuple[Constraint, ...], tuple[Constraint, ...], tuple[Constraint, ...]]:
    """(hard, assertions, hypotheses) entering the solve under the preset.

    Hard constraints always accumulate. Assertions participate from the
    ASSERT preset up, carried forward across rounds. Hypotheses participate
    in the HYP_* presets; TURN_IG restricts them to the current round.
    """
    if current_round is None:
        current_round = max((c.round_index for c in constraints.all_constraints()), default=0)
    constraints = constraints.restricted_to_rounds(current_round)
    hard = constraints.hard()
    assertions = (
        constraints.assertions if settings.preset in _PRESETS_WITH_ASSERTIONS else ()
    )
    if settings.preset not in _PRESETS_WITH_HYPOTHESES:
        hypotheses: tuple[Constraint, ...] = ()
    elif settings.preset is Preset.TURN_IG:
        hypotheses = tuple(
            h for h in constraints.hypotheses if h.round_index == current_round
        )
    else:
        hypotheses = constraints.hypotheses
    return hard, assertions, hypotheses


def _manual_weight(h: Constraint, settings: SolverSettings) -> float:
    if h.weight is not None:
        return h.weight
    return settings.manual_weight_for(h.kind)


def _conditional_entropy(prior: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    """(probability mass of mask, entropy of prior conditioned on mask)."""
    if mask.all():
        return 1.0, _entropy_of(prior)
    sub = prior[mask]
    s = float(sub.sum())
    if s <= 0.0:
        return 0.0, 0.0
    return s, _entropy_of(sub / s)


def _resolve_hypotheses(
    sub: np.ndarray,
    config: GameConfig,
    hypotheses: Sequence[Constraint],
    assertions: Sequence[Constraint],
    settings: SolverSettings,
) -> list[Constraint]:
    """Return copies of the hypotheses with concrete weights.

    Manual presets take the explicit weight (or the settings default for the
    kind); info-gain presets weight each hypothesis by the entropy reduction
    it induces on the assertion-weighted prior, computed independently per
    hypothesis so the result does not depend on hypothesis order.
    """
    if not hypotheses:
        return []
    if settings.preset in _IG_PRESETS:
        prior = _scores_for(sub, config, assertions, [], settings)
        prior = prior / prior.sum()
        h_prior = _entropy_of(prior)
        resolved = []
        for h in hypotheses:
            mass, h_cond = _conditional_entropy(prior, constraint_mask(sub, config, h))
            ig = h_prior - h_cond if mass > 0.0 else 0.0
            weight = settings.ig_scale * max(ig, 0.0) if mass > 0.0 else 0.0
            resolved.append(replace(h, weight=weight, auto_weight=False))
        return resolved
    return [
        replace(h, weight=_manual_weight(h, settings), auto_weight=False)
        for h in hypotheses
    ]


# ---------------------------------------------------------------------------
# Posterior
# ---------------------------------------------------------------------------

def _marginals_from(
    probabilities: np.ndarray, sub: np.ndarray, n_players: int, n_roles: int
) -> np.ndarray:
    marg = np.zeros((n_players, n_roles))
    cols = np.arange(n_players)[None, :]
    np.add.at(marg, (cols, sub.astype(np.intp)), probabilities[:, None])
    return marg


def posterior(
    config: GameConfig,
    constraints: ConstraintSet,
    settings: SolverSettings,
    view: Optional[View] = None,
    current_round: Optional[int] = None,
) -> Posterior:
    """Full solve: prune by hard constraints, score, normalize, summarize.

    View knowledge is applied before the accumulated hard constraints.
    Raises InfeasibleError naming the earliest constraint (view first, then
    rounds in order, evidence before phenomenon) that emptied the set.
    """
    table = _table(config)
    hard, assertions, hypotheses = select_active(constraints, settings, current_round)
    view_knowledge = view.knowledge if view is not None else ()
    idx = _filter_hard(table, config, tuple(view_knowledge) + hard)
    sub = table[idx]

    resolved = _resolve_hypotheses(sub, config, hypotheses, assertions, settings)
    scores = _scores_for(sub, config, assertions, resolved, settings)
    probabilities = scores / scores.sum()

    n, m = len(config.players), len(config.roles)
    marginals = _marginals_from(probabilities, sub, n, m)
    map_index = int(np.argmax(probabilities))
    return Posterior(
        config=config,
        assignments=sub,
        scores=scores,
        probabilities=probabilities,
        marginals=marginals,
        map_world=_world_from_row(config, sub[map_index]),
        entropy_bits=_entropy_of(probabilities),
        feasible_count=int(sub.shape[0]),
    )


# ---------------------------------------------------------------------------
# Information gain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IgReport:
    """Outcome of weighting one hypothesis by information gain."""

    hypothesis: Constraint
    prior_entropy_bits: float
    posterior_entropy_bits: float
    ig_bits: float
    applied_weight: float
    vacuous: bool = False


def info_gain(
    h: Constraint,
    config: GameConfig,
    context: ConstraintSet,
    settings: SolverSettings,
    view: Optional[View] = None,
    current_round: Optional[int] = None,
) -> IgReport:
    """Entropy reduction from conditioning the context's distribution on h.

    The prior conditions on the context's hard constraints (plus view) and
    applies preset-active assertions softly; hypotheses in the context are
    excluded. Conditioning on h is hard: restrict to satisfying worlds and
    renormalize. The applied weight is lam * ig_scale * max(ig, 0); if no
    prior-feasible world satisfies h the report is vacuous with weight 0.
    """
    if h.constraint_class is not ConstraintClass.HYPOTHESIS:
        raise SolverError("BAD_ARGS", "info gain is defined for hypotheses")
    table = _table(config)
    hard, assertions, _ = select_active(context, settings, current_round)
    view_knowledge = view.knowledge if view is not None else ()
    try:
        idx = _filter_hard(table, config, tuple(view_knowledge) + hard)
    except InfeasibleError as err:
        raise SolverError("INFEASIBLE_CONTEXT", str(err), detail=err.constraint) from None
    sub = table[idx]
    prior = _scores_for(sub, config, assertions, [], settings)
    prior = prior / prior.sum()
    prior_h = _entropy_of(prior)

    mass, cond_h = _conditional_entropy(prior, constraint_mask(sub, config, h))
    if mass <= 0.0:
        return IgReport(h, prior_h, prior_h, 0.0, 0.0, vacuous=True)
    ig = prior_h - cond_h
    applied = settings.global_scale * settings.ig_scale * max(ig, 0.0)
    return IgReport(h, prior_h, cond_h, ig, applied)


# ---------------------------------------------------------------------------
# Soft vs hard assertion gap
# ---------------------------------------------------------------------------

def soft_hard_gap(
    config: GameConfig,
    truthful_assertions: Sequence[Constraint],
    hypotheses: Sequence[Constraint],
    settings: SolverSettings,
) -> tuple[float, float]:
    """Max |Pr_soft - Pr_hard| over all worlds, and the bound 1/(lam*w_A).

    Pr_soft scores assertions softly over the whole world space; Pr_hard
    enforces them as filters (probability 0 outside the all-satisfying set).
    Hypotheses are weighted identically on both sides.
    """
    table = _table(config)
    resolved = [
        replace(h, weight=_manual_weight(h, settings), auto_weight=False)
        for h in hypotheses
    ]
    soft_scores = _scores_for(table, config, truthful_assertions, resolved, settings)
    pr_soft = soft_scores / soft_scores.sum()

    all_mask = np.ones(table.shape[0], dtype=bool)
    for a in truthful_assertions:
        all_mask &= constraint_mask(table, config, a)
    if not all_mask.any():
        raise InfeasibleError(None, "no world satisfies every assertion")
    hard_scores = _scores_for(table, config, [], resolved, settings)
    pr_hard = np.zeros(table.shape[0])
    pr_hard[all_mask] = hard_scores[all_mask] / hard_scores[all_mask].sum()

    gap = float(np.abs(pr_soft - pr_hard).max())
    bound = 1.0 / (settings.global_scale * settings.assertion_weight)
    return gap, bound


# ---------------------------------------------------------------------------
# Optional sampling backend
# ---------------------------------------------------------------------------

def mcmc_posterior(
    config: GameConfig,
    constraints: ConstraintSet,
    settings: SolverSettings,
    samples: int,
    seed: int,
    view: Optional[View] = None,
    current_round: Optional[int] = None,
    burn_in: int = 1000,
    start_budget: int = 20000,
) -> Posterior:
    """Approximate posterior via Metropolis-Hastings over feasible worlds.

    Proposals swap the roles of two uniformly chosen players; proposals
    violating a hard constraint are rejected, otherwise accepted with
    probability min(1, S(a')/S(a)). Marginals come from empirical sample
    frequencies; the MAP is the highest-scoring sampled world. Deterministic
    for a fixed seed.
    """
    if samples < 1:
        raise SolverError("BAD_ARGS", "samples must be positive")
    rng = random.Random(seed)
    hard, assertions, hypotheses = select_active(constraints, settings, current_round)
    hard = (tuple(view.knowledge) if view is not None else ()) + hard
    n = len(config.players)

    # IG weights need the exact hard-filtered prior; manual weights do not,
    # so in that case the sampler stays enumeration-free.
    feasible_idx = None
    if settings.preset in _IG_PRESETS and hypotheses:
        table = _table(config)
        feasible_idx = _filter_hard(table, config, hard)
        resolved = _resolve_hypotheses(table[feasible_idx], config, hypotheses, assertions, settings)
    else:
        resolved = [
            replace(h, weight=_manual_weight(h, settings), auto_weight=False)
            for h in hypotheses
        ]

    def feasible(row: np.ndarray) -> bool:
        rows = row[None, :]
        return all(bool(constraint_mask(rows, config, c)[0]) for c in hard)

    base = np.repeat(
        np.arange(len(config.roles), dtype=np.int8),
        [r.count for r in config.roles],
    )
    current = None
    for _ in range(start_budget):
        candidate = base.copy()
        rng.shuffle(candidate)
        if feasible(candidate):
            current = candidate
            break
    if current is None:
        if feasible_idx is not None:
            current = _table(config)[feasible_idx[0]].copy()
        else:
            raise SolverError("NO_INITIAL_WORLD", "no feasible start found within budget")

    score_memo: dict[bytes, float] = {}

    def score_of(row: np.ndarray) -> float:
        key = row.tobytes()
        cached = score_memo.get(key)
        if cached is None:
            cached = float(_scores_for(row[None, :], config, assertions, resolved, settings)[0])
            score_memo[key] = cached
        return cached

    feasible_memo: dict[bytes, bool] = {}

    def feasible_of(row: np.ndarray) -> bool:
        key = row.tobytes()
        cached = feasible_memo.get(key)
        if cached is None:
            cached = feasible(row)
            feasible_memo[key] = cached
        return cached

    counts: dict[bytes, int] = {}
    best_key: Optional[bytes] = None
    best_score = -1.0
    current_score = score_of(current)
    total_steps = burn_in + samples
    for step in range(total_steps):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        if current[i] != current[j]:
            proposal = current.copy()
            proposal[i], proposal[j] = proposal[j], proposal[i]
            if feasible_of(proposal):
                prop_score = score_of(proposal)
                if prop_score >= current_score or rng.random() < prop_score / current_score:
                    current = proposal
                    current_score = prop_score
        if step >= burn_in:
            key = current.tobytes()
            counts[key] = counts.get(key, 0) + 1
            if current_score > best_score:
                best_score = current_score
                best_key = key

    keys = sorted(counts)
    sub = np.frombuffer(b"".join(keys), dtype=np.int8).reshape(len(keys), n).copy()
    probabilities = np.array([counts[k] for k in keys], dtype=float) / samples
    scores = np.array([score_memo[k] for k in keys])
    marginals = _marginals_from(probabilities, sub, n, len(config.roles))
    map_row = np.frombuffer(best_key, dtype=np.int8)
    return Posterior(
        config=config,
        assignments=sub,
        scores=scores,
        probabilities=probabilities,
        marginals=marginals,
        map_world=_world_from_row(config, map_row),
        entropy_bits=_entropy_of(probabilities),
        feasible_count=len(keys),
        approximate=True,
    )
